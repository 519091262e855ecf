//! ADMM solver for the latent-variable time-varying graphical lasso.
//!
//! The problem is split with auxiliary blocks
//! `R_i = Θ_i − L_i`, `(Z1_i, Z2_i) = (Θ_i, Θ_{i+1})` and
//! `(W1_i, W2_i) = (L_i, L_{i+1})`, each paired with a scaled dual `U`.
//! One iteration updates R, Θ, L, Z, W and then the duals, in that order;
//! the per-time updates inside each phase are independent and run on the
//! rayon pool, while the phases themselves are strict barriers.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize_unchecked, SymmetricMatrix};
use crate::model::{
    check_sequence, CovarianceSequence, Hyperparameters, NetworkEstimate, StoppingRule,
};
use crate::proximal::{self, PairProxInput};

/// Scaled dual variables. `u0` has `T` blocks, the others `T − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    /// Consensus `R = Θ − L`.
    pub u0: Vec<DMatrix<f64>>,
    /// `Z1 = P1 Θ`.
    pub u1: Vec<DMatrix<f64>>,
    /// `Z2 = P2 Θ`.
    pub u2: Vec<DMatrix<f64>>,
    /// `W1 = P1 L`.
    pub u3: Vec<DMatrix<f64>>,
    /// `W2 = P2 L`.
    pub u4: Vec<DMatrix<f64>>,
}

impl DualVariables {
    fn zeros(d: usize, t: usize) -> Self {
        let z = || DMatrix::zeros(d, d);
        DualVariables {
            u0: (0..t).map(|_| z()).collect(),
            u1: (1..t).map(|_| z()).collect(),
            u2: (1..t).map(|_| z()).collect(),
            u3: (1..t).map(|_| z()).collect(),
            u4: (1..t).map(|_| z()).collect(),
        }
    }

    fn all(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.u0
            .iter()
            .chain(&self.u1)
            .chain(&self.u2)
            .chain(&self.u3)
            .chain(&self.u4)
    }
}

/// Full primal/dual iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub r: Vec<SymmetricMatrix>,
    pub theta: Vec<SymmetricMatrix>,
    pub lowrank: Vec<SymmetricMatrix>,
    pub z1: Vec<SymmetricMatrix>,
    pub z2: Vec<SymmetricMatrix>,
    pub w1: Vec<SymmetricMatrix>,
    pub w2: Vec<SymmetricMatrix>,
    pub dual: DualVariables,
    pub iteration: usize,
}

impl SolverState {
    /// `Θ = R = I`, `L = 0`, `Z`/`W` copies of the matching slices, `U = 0`.
    pub fn initial(d: usize, t: usize) -> Self {
        assert!(d >= 1 && t >= 1, "need d >= 1 and T >= 1");
        let eye = SymmetricMatrix::identity(d);
        let zero = SymmetricMatrix::zeros(d);
        SolverState {
            r: vec![eye.clone(); t],
            theta: vec![eye.clone(); t],
            lowrank: vec![zero.clone(); t],
            z1: vec![eye.clone(); t - 1],
            z2: vec![eye; t - 1],
            w1: vec![zero.clone(); t - 1],
            w2: vec![zero; t - 1],
            dual: DualVariables::zeros(d, t),
            iteration: 0,
        }
    }

    pub fn time_points(&self) -> usize {
        self.theta.len()
    }

    pub fn dim(&self) -> usize {
        self.theta[0].dim()
    }

    fn validate(&self, d: usize, t: usize) -> Result<()> {
        let full = [&self.r, &self.theta, &self.lowrank];
        let pairs = [&self.z1, &self.z2, &self.w1, &self.w2];
        let u_pairs = [&self.dual.u1, &self.dual.u2, &self.dual.u3, &self.dual.u4];
        let ok = full
            .iter()
            .all(|s| s.len() == t && s.iter().all(|m| m.dim() == d))
            && pairs
                .iter()
                .all(|s| s.len() == t - 1 && s.iter().all(|m| m.dim() == d))
            && self.dual.u0.len() == t
            && u_pairs.iter().all(|s| s.len() == t - 1)
            && self.dual.all().all(|m| m.nrows() == d && m.ncols() == d);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "initial solver state does not match T = {t}, d = {d}"
            )))
        }
    }
}

/// Residuals and thresholds of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `‖r‖²`, sum of squared consensus violations.
    pub primal_sq: f64,
    /// `‖s‖²`, ρ times the squared change of the auxiliary blocks.
    pub dual_sq: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub converged: bool,
}

/// Degenerate configurations of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Latent component and temporal coupling both active.
    Ltgl,
    /// No latent component, temporal coupling active.
    TvglLike,
    /// Latent component active, no temporal coupling.
    LvglassoLike,
    /// Neither: independent graphical lasso per time point.
    GlLike,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Ltgl => "LTGL",
            Mode::TvglLike => "TVGL-like",
            Mode::LvglassoLike => "LVGLASSO-like",
            Mode::GlLike => "GL-like",
        }
    }
}

/// Classifies `hp`; `tau = +inf` is the latent-off sentinel.
pub fn mode_of(hp: &Hyperparameters) -> Mode {
    let coupled = hp.beta > 0.0 || hp.eta > 0.0;
    match (hp.latent_disabled(), coupled) {
        (false, true) => Mode::Ltgl,
        (true, true) => Mode::TvglLike,
        (false, false) => Mode::LvglassoLike,
        (true, false) => Mode::GlLike,
    }
}

fn offdiag_l1(m: &SymmetricMatrix) -> f64 {
    let d = m.dim();
    let mut acc = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                acc += m[(i, j)].abs();
            }
        }
    }
    acc
}

/// Value of the penalized negative log-likelihood at `(Θ, L)`.
pub fn objective(
    covs: &CovarianceSequence,
    theta: &[SymmetricMatrix],
    lowrank: &[SymmetricMatrix],
    hp: &Hyperparameters,
) -> Result<f64> {
    let t = covs.time_points();
    if theta.len() != t || lowrank.len() != t {
        return Err(Error::Shape(format!(
            "objective needs {t} matrices per sequence, got {} and {}",
            theta.len(),
            lowrank.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..t {
        let s = &covs.matrices()[i];
        let marginal = theta[i].sub(&lowrank[i]);
        let log_det = linalg::log_det_pd(&marginal).map_err(|_| {
            Error::NotPositiveDefinite(format!("Θ_{i} − L_{i} in objective evaluation"))
        })?;
        let trace_l = lowrank[i].trace();
        let latent = if hp.tau == 0.0 || trace_l == 0.0 {
            0.0
        } else {
            hp.tau * trace_l
        };
        total += -log_det
            + linalg::trace_of_product(s, &marginal)
            + hp.alpha * offdiag_l1(&theta[i])
            + latent;
    }
    for i in 0..t.saturating_sub(1) {
        if hp.beta > 0.0 {
            total += hp.beta
                * hp.psi
                    .evaluate(&(theta[i + 1].as_matrix() - theta[i].as_matrix()));
        }
        if hp.eta > 0.0 {
            total += hp.eta
                * hp.phi
                    .evaluate(&(lowrank[i + 1].as_matrix() - lowrank[i].as_matrix()));
        }
    }
    Ok(total)
}

/// Number of quadratic terms touching time `i`: one, plus one per neighbour.
fn neighbour_weight(i: usize, t: usize) -> f64 {
    1.0 + f64::from(u8::from(i + 1 < t)) + f64::from(u8::from(i > 0))
}

/// `R_i = prox_logdet(S_i, Θ_i − L_i − U0_i, ρ)` for every `i`.
pub fn r_update(
    state: &SolverState,
    covs: &CovarianceSequence,
    hp: &Hyperparameters,
) -> Result<Vec<SymmetricMatrix>> {
    (0..state.time_points())
        .into_par_iter()
        .map(|i| {
            let a = state.theta[i].as_matrix() - state.lowrank[i].as_matrix() - &state.dual.u0[i];
            proximal::prox_logdet(&covs.matrices()[i], &a, hp.rho)
        })
        .collect()
}

/// Off-diagonal soft thresholding of the averaged consensus targets.
/// Reads the current `state.r`, which the caller has already advanced.
pub fn theta_update(state: &SolverState, hp: &Hyperparameters) -> Vec<SymmetricMatrix> {
    let t = state.time_points();
    (0..t)
        .into_par_iter()
        .map(|i| {
            let mut b = state.lowrank[i].as_matrix() + state.r[i].as_matrix() + &state.dual.u0[i];
            if i + 1 < t {
                b += state.z1[i].as_matrix() - &state.dual.u1[i];
            }
            if i > 0 {
                b += state.z2[i - 1].as_matrix() - &state.dual.u2[i - 1];
            }
            let weight = neighbour_weight(i, t);
            b /= weight;
            let zeta = hp.alpha / (hp.rho * weight);
            proximal::soft_threshold_offdiag(&symmetrize_unchecked(&b), zeta)
        })
        .collect()
}

/// Trace-penalized PSD projection of the averaged targets for `L`.
pub fn l_update(state: &SolverState, hp: &Hyperparameters) -> Result<Vec<SymmetricMatrix>> {
    let t = state.time_points();
    (0..t)
        .into_par_iter()
        .map(|i| {
            let mut c = state.theta[i].as_matrix() - state.r[i].as_matrix() - &state.dual.u0[i];
            if i + 1 < t {
                c += state.w1[i].as_matrix() - &state.dual.u3[i];
            }
            if i > 0 {
                c += state.w2[i - 1].as_matrix() - &state.dual.u4[i - 1];
            }
            let weight = neighbour_weight(i, t);
            c /= weight;
            proximal::prox_trace_psd(&c, hp.tau / (hp.rho * weight))
        })
        .collect()
}

pub type BlockPairs = Vec<(SymmetricMatrix, SymmetricMatrix)>;

/// Coupled prox on consecutive pairs: `Z` from Θ with Ψ, `W` from L with Φ.
pub fn zw_update(state: &SolverState, hp: &Hyperparameters) -> (BlockPairs, BlockPairs) {
    let t = state.time_points();
    let pair = |seq: &[SymmetricMatrix],
                first_dual: &[DMatrix<f64>],
                second_dual: &[DMatrix<f64>],
                weight: f64,
                kind,
                i: usize| {
        let first = symmetrize_unchecked(&(seq[i].as_matrix() + &first_dual[i]));
        let second = symmetrize_unchecked(&(seq[i + 1].as_matrix() + &second_dual[i]));
        proximal::prox_pair(&PairProxInput {
            first: &first,
            second: &second,
            weight,
            kind,
        })
    };
    let z = (0..t.saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            pair(
                &state.theta,
                &state.dual.u1,
                &state.dual.u2,
                hp.beta / hp.rho,
                hp.psi,
                i,
            )
        })
        .collect();
    let w = (0..t.saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            pair(
                &state.lowrank,
                &state.dual.u3,
                &state.dual.u4,
                hp.eta / hp.rho,
                hp.phi,
                i,
            )
        })
        .collect();
    (z, w)
}

/// Adds each constraint residual to its scaled dual.
pub fn dual_update(state: &SolverState) -> DualVariables {
    let u = &state.dual;
    let t = state.time_points();
    DualVariables {
        u0: (0..t)
            .map(|i| {
                &u.u0[i] + state.r[i].as_matrix() - state.theta[i].as_matrix()
                    + state.lowrank[i].as_matrix()
            })
            .collect(),
        u1: (0..t - 1)
            .map(|i| &u.u1[i] + state.theta[i].as_matrix() - state.z1[i].as_matrix())
            .collect(),
        u2: (0..t - 1)
            .map(|i| &u.u2[i] + state.theta[i + 1].as_matrix() - state.z2[i].as_matrix())
            .collect(),
        u3: (0..t - 1)
            .map(|i| &u.u3[i] + state.lowrank[i].as_matrix() - state.w1[i].as_matrix())
            .collect(),
        u4: (0..t - 1)
            .map(|i| &u.u4[i] + state.lowrank[i + 1].as_matrix() - state.w2[i].as_matrix())
            .collect(),
    }
}

fn sq_dist(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).norm_squared()
}

fn sq_norms(seq: &[SymmetricMatrix]) -> f64 {
    seq.iter().map(|m| m.frobenius_sq()).sum()
}

/// Primal/dual residuals of `state` relative to the previous iterate.
///
/// With [`StoppingRule::Squared`] the squared residual sums are compared
/// against thresholds built from squared norms. With
/// [`StoppingRule::Unsquared`] the norms `√primal_sq` and `ρ·‖Δ‖` are compared
/// against `c + ε_rel·max(√D1, √D2)` and `c + ε_rel·ρ·‖U‖`.
pub fn check_convergence(
    state: &SolverState,
    prev: &SolverState,
    hp: &Hyperparameters,
) -> ConvergenceReport {
    let t = state.time_points();
    let d = state.dim() as f64;

    let mut primal_sq = 0.0;
    for i in 0..t {
        let gap =
            state.r[i].as_matrix() - state.theta[i].as_matrix() + state.lowrank[i].as_matrix();
        primal_sq += gap.norm_squared();
    }
    for i in 0..t - 1 {
        primal_sq += sq_dist(&state.theta[i], &state.z1[i]);
        primal_sq += sq_dist(&state.theta[i + 1], &state.z2[i]);
        primal_sq += sq_dist(&state.lowrank[i], &state.w1[i]);
        primal_sq += sq_dist(&state.lowrank[i + 1], &state.w2[i]);
    }

    let mut change_sq = 0.0;
    for (cur, old) in [
        (&state.r, &prev.r),
        (&state.z1, &prev.z1),
        (&state.z2, &prev.z2),
        (&state.w1, &prev.w1),
        (&state.w2, &prev.w2),
    ] {
        change_sq += cur.iter().zip(old).map(|(a, b)| sq_dist(a, b)).sum::<f64>();
    }
    let dual_sq = hp.rho * change_sq;

    let c = hp.eps_abs * d * ((5 * t - 4) as f64).sqrt();
    let d1 = sq_norms(&state.r)
        + sq_norms(&state.z1)
        + sq_norms(&state.z2)
        + sq_norms(&state.w1)
        + sq_norms(&state.w2);
    let d2 = state
        .theta
        .iter()
        .zip(&state.lowrank)
        .map(|(th, l)| sq_dist(th, l))
        .sum::<f64>()
        + sq_norms(&state.theta[1..])
        + sq_norms(&state.theta[..t - 1])
        + sq_norms(&state.lowrank[1..])
        + sq_norms(&state.lowrank[..t - 1]);
    let dual_norm_sq: f64 = state.dual.all().map(|u| u.norm_squared()).sum();

    let (eps_pri, eps_dual, converged) = match hp.stopping {
        StoppingRule::Squared => {
            let eps_pri = c + hp.eps_rel * d1.max(d2);
            let eps_dual = c + hp.eps_rel * hp.rho * dual_norm_sq;
            (
                eps_pri,
                eps_dual,
                primal_sq <= eps_pri && dual_sq <= eps_dual,
            )
        }
        StoppingRule::Unsquared => {
            let eps_pri = c + hp.eps_rel * d1.sqrt().max(d2.sqrt());
            let eps_dual = c + hp.eps_rel * hp.rho * dual_norm_sq.sqrt();
            let ok = primal_sq.sqrt() <= eps_pri && hp.rho * change_sq.sqrt() <= eps_dual;
            (eps_pri, eps_dual, ok)
        }
    };
    ConvergenceReport {
        primal_sq,
        dual_sq,
        eps_pri,
        eps_dual,
        converged,
    }
}

fn ensure_finite<'a>(
    step: &'static str,
    iteration: usize,
    mut blocks: impl Iterator<Item = &'a DMatrix<f64>>,
) -> Result<()> {
    if blocks.all(|m| m.iter().all(|v| v.is_finite())) {
        Ok(())
    } else {
        Err(Error::NonFinite { step, iteration })
    }
}

/// Largest violation of `Θ_i − L_i ≻ 0` that is repaired by shifting the
/// diagonal of `Θ_i` instead of flagging the run as not converged.
pub const FEASIBILITY_REPAIR_TOL: f64 = 1e-8;

/// Runs the solver from `init` (or the default start) until the stopping
/// rule holds or `max_iter` iterations have run.
pub fn fit(
    covs: &CovarianceSequence,
    hp: &Hyperparameters,
    init: Option<SolverState>,
) -> Result<NetworkEstimate> {
    fit_with_state(covs, hp, init).map(|(estimate, _)| estimate)
}

/// Like [`fit`], also returning the final iterate for warm starts.
pub fn fit_with_state(
    covs: &CovarianceSequence,
    hp: &Hyperparameters,
    init: Option<SolverState>,
) -> Result<(NetworkEstimate, SolverState)> {
    hp.validate()?;
    let d = check_sequence(covs.matrices(), "covariance")?;
    let t = covs.time_points();
    let mut state = match init {
        Some(s) => {
            s.validate(d, t)?;
            s
        }
        None => SolverState::initial(d, t),
    };

    let mut history = Vec::new();
    let mut converged = false;
    for k in 1..=hp.max_iter {
        let prev = state.clone();

        state.r = r_update(&state, covs, hp)?;
        ensure_finite("R", k, state.r.iter().map(|m| m.as_matrix()))?;

        state.theta = theta_update(&state, hp);
        ensure_finite("theta", k, state.theta.iter().map(|m| m.as_matrix()))?;

        state.lowrank = l_update(&state, hp)?;
        ensure_finite("L", k, state.lowrank.iter().map(|m| m.as_matrix()))?;

        let (z, w) = zw_update(&state, hp);
        (state.z1, state.z2) = z.into_iter().unzip();
        (state.w1, state.w2) = w.into_iter().unzip();
        ensure_finite(
            "Z",
            k,
            state.z1.iter().chain(&state.z2).map(|m| m.as_matrix()),
        )?;
        ensure_finite(
            "W",
            k,
            state.w1.iter().chain(&state.w2).map(|m| m.as_matrix()),
        )?;

        state.dual = dual_update(&state);
        ensure_finite("U", k, state.dual.all())?;
        state.iteration += 1;

        let report = check_convergence(&state, &prev, hp);
        history.push(report);
        if report.converged {
            converged = true;
            break;
        }
    }

    let mut theta_seq = state.theta.clone();
    let lowrank_seq = state.lowrank.clone();
    let mut feasible = true;
    for i in 0..t {
        let marginal = theta_seq[i].sub(&lowrank_seq[i]);
        if linalg::is_positive_definite(&marginal) {
            continue;
        }
        let min_eig = linalg::min_eigenvalue(&marginal)?;
        if min_eig > -FEASIBILITY_REPAIR_TOL {
            theta_seq[i] = theta_seq[i].shift_diagonal(FEASIBILITY_REPAIR_TOL - min_eig);
        } else {
            feasible = false;
        }
    }
    let objective_value = if feasible {
        objective(covs, &theta_seq, &lowrank_seq, hp)?
    } else {
        f64::NAN
    };

    let estimate = NetworkEstimate {
        theta_seq,
        lowrank_seq,
        iterations: history.len(),
        converged: converged && feasible,
        residual_history: history,
        objective_value,
    };
    Ok((estimate, state))
}
