//! Domain types shared by the solver, the generators and the evaluation code.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize_unchecked, SymmetricMatrix};
use crate::solver::ConvergenceReport;

/// `T` blocks of observations over `d` shared variables.
///
/// Block `i` is an `n_i × d` matrix, rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    blocks: Vec<DMatrix<f64>>,
    variable_names: Vec<String>,
    time_labels: Vec<String>,
}

impl TimeSeriesDataset {
    pub fn new(
        blocks: Vec<DMatrix<f64>>,
        variable_names: Vec<String>,
        time_labels: Vec<String>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidData(
                "dataset needs at least one time block".into(),
            ));
        }
        let d = variable_names.len();
        if d == 0 {
            return Err(Error::InvalidData(
                "dataset needs at least one variable".into(),
            ));
        }
        let distinct: HashSet<&String> = variable_names.iter().collect();
        if distinct.len() != d {
            return Err(Error::InvalidData("variable names must be distinct".into()));
        }
        if time_labels.len() != blocks.len() {
            return Err(Error::InvalidData(format!(
                "{} time labels for {} blocks",
                time_labels.len(),
                blocks.len()
            )));
        }
        let distinct: HashSet<&String> = time_labels.iter().collect();
        if distinct.len() != time_labels.len() {
            return Err(Error::InvalidData("time labels must be distinct".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.ncols() != d {
                return Err(Error::InvalidData(format!(
                    "block {i} has {} columns, expected {d}",
                    b.ncols()
                )));
            }
            if b.nrows() == 0 {
                return Err(Error::InvalidData(format!("block {i} has no samples")));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "block {i} contains non-finite values"
                )));
            }
        }
        Ok(TimeSeriesDataset {
            blocks,
            variable_names,
            time_labels,
        })
    }

    /// Dataset with generated labels `var_1..var_d` and `1..T`.
    pub fn from_blocks(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = blocks.first().map(|b| b.ncols()).unwrap_or(0);
        let names = (1..=d).map(|j| format!("var_{j}")).collect();
        let labels = (1..=blocks.len()).map(|i| i.to_string()).collect();
        Self::new(blocks, names, labels)
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn dim(&self) -> usize {
        self.variable_names.len()
    }

    pub fn time_points(&self) -> usize {
        self.blocks.len()
    }

    /// Copy with every block's columns shifted to zero mean.
    pub fn centered(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut c = b.clone();
                for mut col in c.column_iter_mut() {
                    let mean = col.mean();
                    col.add_scalar_mut(-mean);
                }
                c
            })
            .collect();
        TimeSeriesDataset {
            blocks,
            variable_names: self.variable_names.clone(),
            time_labels: self.time_labels.clone(),
        }
    }

    /// Copy keeping only the given rows of each block (`rows[i]` for block `i`).
    pub fn select_rows(&self, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() != self.blocks.len() {
            return Err(Error::Shape(format!(
                "{} row selections for {} blocks",
                rows.len(),
                self.blocks.len()
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(rows)
            .map(|(b, r)| b.select_rows(r.iter()))
            .collect();
        Self::new(
            blocks,
            self.variable_names.clone(),
            self.time_labels.clone(),
        )
    }
}

/// Per-time empirical covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSequence {
    matrices: Vec<SymmetricMatrix>,
}

impl CovarianceSequence {
    /// Validates shape agreement and positive semidefiniteness
    /// (min eigenvalue ≥ −1e-8 · max(1, max eigenvalue)).
    pub fn new(matrices: Vec<SymmetricMatrix>) -> Result<Self> {
        check_sequence(&matrices, "covariance")?;
        for (i, m) in matrices.iter().enumerate() {
            let e = linalg::sym_eig(m)?;
            if e.min_eigenvalue() < -1e-8 * e.max_eigenvalue().max(1.0) {
                return Err(Error::InvalidData(format!(
                    "covariance {i} is not positive semidefinite (min eigenvalue {:e})",
                    e.min_eigenvalue()
                )));
            }
        }
        Ok(CovarianceSequence { matrices })
    }

    pub fn matrices(&self) -> &[SymmetricMatrix] {
        &self.matrices
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn time_points(&self) -> usize {
        self.matrices.len()
    }

    pub fn max_trace(&self) -> f64 {
        self.matrices.iter().map(|m| m.trace()).fold(0.0, f64::max)
    }
}

pub(crate) fn check_sequence(seq: &[SymmetricMatrix], what: &str) -> Result<usize> {
    let first = seq
        .first()
        .ok_or_else(|| Error::Shape(format!("{what} sequence is empty")))?;
    let d = first.dim();
    if let Some(i) = seq.iter().position(|m| m.dim() != d) {
        return Err(Error::Shape(format!(
            "{what} matrix {i} has dimension {}, expected {d}",
            seq[i].dim()
        )));
    }
    Ok(d)
}

/// `S_i = (1/n_i) X_iᵀ X_i` for every block. No centering is applied here;
/// call [`TimeSeriesDataset::centered`] first when the data is not zero-mean.
pub fn empirical_covariances(data: &TimeSeriesDataset) -> CovarianceSequence {
    let matrices = data
        .blocks()
        .iter()
        .map(|x| {
            let n = x.nrows() as f64;
            symmetrize_unchecked(&(x.transpose() * x / n))
        })
        .collect();
    CovarianceSequence { matrices }
}

/// Penalty applied to consecutive differences `X_{i+1} − X_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PenaltyKind {
    /// `Σ_ij |x_ij|`
    #[serde(rename = "l1")]
    ElementwiseL1,
    /// `Σ_j ‖x_j‖₂` over columns
    #[serde(rename = "l2")]
    GroupL2,
    /// `Σ_ij x_ij²`
    #[serde(rename = "laplacian")]
    LaplacianSq,
    /// `Σ_r max_j |x_rj|` over rows
    #[serde(rename = "linf")]
    LInfRow,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::ElementwiseL1,
        PenaltyKind::GroupL2,
        PenaltyKind::LaplacianSq,
        PenaltyKind::LInfRow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::ElementwiseL1 => "l1",
            PenaltyKind::GroupL2 => "l2",
            PenaltyKind::LaplacianSq => "laplacian",
            PenaltyKind::LInfRow => "linf",
        }
    }

    /// Value of the penalty at `x`.
    pub fn evaluate(self, x: &DMatrix<f64>) -> f64 {
        match self {
            PenaltyKind::ElementwiseL1 => x.iter().map(|v| v.abs()).sum(),
            PenaltyKind::GroupL2 => x.column_iter().map(|c| c.norm()).sum(),
            PenaltyKind::LaplacianSq => x.norm_squared(),
            PenaltyKind::LInfRow => x.row_iter().map(|r| r.amax()).sum(),
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(PenaltyKind::ElementwiseL1),
            "l2" => Ok(PenaltyKind::GroupL2),
            "laplacian" => Ok(PenaltyKind::LaplacianSq),
            "linf" => Ok(PenaltyKind::LInfRow),
            other => Err(Error::param(
                "penalty",
                format!("unknown penalty `{other}` (expected l1, l2, laplacian or linf)"),
            )),
        }
    }
}

/// How residuals are compared against the tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingRule {
    /// Squared residual sums against the thresholds built from squared norms.
    #[default]
    Squared,
    /// Conventional comparison of residual norms against norm-based thresholds.
    Unsquared,
}

/// Model weights and solver settings.
///
/// `tau = +inf` disables the latent component entirely (every `L_i` stays 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub tau: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho: f64,
    pub psi: PenaltyKind,
    pub phi: PenaltyKind,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub stopping: StoppingRule,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 0.01,
            tau: 1.0,
            beta: 1.0,
            eta: 1.0,
            rho: 1.0,
            psi: PenaltyKind::LaplacianSq,
            phi: PenaltyKind::LaplacianSq,
            eps_abs: 1e-5,
            eps_rel: 1e-4,
            max_iter: 1000,
            stopping: StoppingRule::Squared,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        }
        fn nonnegative(name: &'static str, v: f64) -> Result<()> {
            if v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be nonnegative, got {v}")))
            }
        }
        positive("alpha", self.alpha)?;
        positive("rho", self.rho)?;
        nonnegative("tau", self.tau)?;
        nonnegative("beta", self.beta)?;
        nonnegative("eta", self.eta)?;
        positive("eps_abs", self.eps_abs)?;
        positive("eps_rel", self.eps_rel)?;
        if !self.alpha.is_finite() || !self.rho.is_finite() {
            return Err(Error::param("alpha", "alpha and rho must be finite"));
        }
        if !self.beta.is_finite() || !self.eta.is_finite() {
            return Err(Error::param("beta", "beta and eta must be finite"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    /// Same settings with the latent component switched off.
    pub fn without_latent(self) -> Self {
        Hyperparameters {
            tau: f64::INFINITY,
            ..self
        }
    }

    /// Same settings with both temporal couplings switched off.
    pub fn without_coupling(self) -> Self {
        Hyperparameters {
            beta: 0.0,
            eta: 0.0,
            ..self
        }
    }

    pub fn latent_disabled(&self) -> bool {
        self.tau.is_infinite()
    }
}

/// Ratio between a finite `tau` and `max_i tr(S_i)` above which the trace
/// prox clips every eigenvalue, so `L` stays at zero.
pub const LATENT_SENTINEL_FACTOR: f64 = 1e6;

/// Finite `tau` that forces `L = 0` for the given covariances.
pub fn latent_sentinel_tau(covs: &CovarianceSequence) -> f64 {
    LATENT_SENTINEL_FACTOR * covs.max_trace().max(1.0)
}

/// Output of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEstimate {
    pub theta_seq: Vec<SymmetricMatrix>,
    pub lowrank_seq: Vec<SymmetricMatrix>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<ConvergenceReport>,
    pub objective_value: f64,
}

impl NetworkEstimate {
    pub fn time_points(&self) -> usize {
        self.theta_seq.len()
    }

    pub fn dim(&self) -> usize {
        self.theta_seq[0].dim()
    }

    /// `Θ_i − L_i` for every time point.
    pub fn marginal_precisions(&self) -> Vec<SymmetricMatrix> {
        self.theta_seq
            .iter()
            .zip(&self.lowrank_seq)
            .map(|(t, l)| t.sub(l))
            .collect()
    }

    /// Checks the shape, PSD and PD invariants of the estimate.
    pub fn check_invariants(&self) -> Result<()> {
        let d = check_sequence(&self.theta_seq, "theta")?;
        let dl = check_sequence(&self.lowrank_seq, "low-rank")?;
        if d != dl || self.theta_seq.len() != self.lowrank_seq.len() {
            return Err(Error::Shape("theta and low-rank sequences disagree".into()));
        }
        for (i, l) in self.lowrank_seq.iter().enumerate() {
            let e = linalg::sym_eig(l)?;
            if e.min_eigenvalue() < -1e-8 * e.max_eigenvalue().max(1.0) {
                return Err(Error::NotPositiveDefinite(format!(
                    "L_{i} has eigenvalue {:e}",
                    e.min_eigenvalue()
                )));
            }
        }
        for (i, m) in self.marginal_precisions().iter().enumerate() {
            if linalg::min_eigenvalue(m)? <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!("Θ_{i} − L_{i}")));
            }
        }
        Ok(())
    }
}

/// Generator-side truth: `L_i = K_i K_iᵀ` with loadings `K_i` of shape `d × H`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta_seq: Vec<SymmetricMatrix>,
    pub lowrank_seq: Vec<SymmetricMatrix>,
    pub latent_count: usize,
    pub loading_seq: Vec<DMatrix<f64>>,
}

impl GroundTruth {
    pub fn time_points(&self) -> usize {
        self.theta_seq.len()
    }

    pub fn dim(&self) -> usize {
        self.theta_seq[0].dim()
    }

    pub fn marginal_precisions(&self) -> Vec<SymmetricMatrix> {
        self.theta_seq
            .iter()
            .zip(&self.lowrank_seq)
            .map(|(t, l)| t.sub(l))
            .collect()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let d = check_sequence(&self.theta_seq, "theta")?;
        let dl = check_sequence(&self.lowrank_seq, "low-rank")?;
        let t = self.theta_seq.len();
        if d != dl || self.lowrank_seq.len() != t || self.loading_seq.len() != t {
            return Err(Error::Shape("ground-truth sequences disagree".into()));
        }
        for (i, (k, l)) in self.loading_seq.iter().zip(&self.lowrank_seq).enumerate() {
            if k.nrows() != d || k.ncols() != self.latent_count {
                return Err(Error::Shape(format!(
                    "loading {i} is {}x{}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            let gap = (k * k.transpose() - l.as_matrix()).amax();
            if gap > 1e-10 {
                return Err(Error::InvalidData(format!(
                    "L_{i} differs from K Kᵀ by {gap:e}"
                )));
            }
        }
        for (i, m) in self.marginal_precisions().iter().enumerate() {
            if !linalg::is_positive_definite(m) {
                return Err(Error::NotPositiveDefinite(format!("Θ_{i} − L_{i}")));
            }
        }
        Ok(())
    }
}
