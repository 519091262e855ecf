//! Latent-variable time-varying graphical lasso.
//!
//! Given time-stamped multivariate observations, [`solver::fit`] estimates a
//! sequence of sparse precision matrices `Θ_i` together with low-rank latent
//! contributions `L_i` so that `Θ_i − L_i` models the observed covariance at
//! each time point, while consecutive `Θ_i` and `L_i` are kept close by a
//! configurable temporal penalty.

pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod linalg;
pub mod model;
pub mod proximal;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::SymmetricMatrix;
pub use model::{
    empirical_covariances, CovarianceSequence, GroundTruth, Hyperparameters, NetworkEstimate,
    PenaltyKind, StoppingRule, TimeSeriesDataset,
};
pub use solver::{fit, fit_with_state, ConvergenceReport, Mode, SolverState};
