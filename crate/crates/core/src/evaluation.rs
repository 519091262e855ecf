//! Scores against ground truth, temporal deviation and Monte Carlo
//! cross-validated hyperparameter selection.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricMatrix};
use crate::model::{
    check_sequence, empirical_covariances, CovarianceSequence, Hyperparameters, NetworkEstimate,
    TimeSeriesDataset,
};
use crate::solver;

/// Default magnitude above which an off-diagonal entry counts as an edge.
pub const EDGE_TOL: f64 = 1e-10;
/// Default relative eigenvalue cutoff for numerical rank.
pub const RANK_TOL_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_pair(truth: &[SymmetricMatrix], est: &[SymmetricMatrix]) -> Result<usize> {
    let d = check_sequence(truth, "truth")?;
    let de = check_sequence(est, "estimate")?;
    if d != de || truth.len() != est.len() {
        return Err(Error::Shape(format!(
            "truth is {} x {d}x{d}, estimate is {} x {de}x{de}",
            truth.len(),
            est.len()
        )));
    }
    Ok(d)
}

/// Edge confusion counts over the strict upper triangles of all time points.
pub fn confusion(
    truth: &[SymmetricMatrix],
    est: &[SymmetricMatrix],
    edge_tol: f64,
) -> Result<ConfusionCounts> {
    let d = check_pair(truth, est)?;
    let mut c = ConfusionCounts::default();
    for (t, e) in truth.iter().zip(est) {
        for j in 0..d {
            for i in 0..j {
                let actual = t[(i, j)].abs() > edge_tol;
                let predicted = e[(i, j)].abs() > edge_tol;
                match (actual, predicted) {
                    (true, true) => c.tp += 1,
                    (false, true) => c.fp += 1,
                    (false, false) => c.tn += 1,
                    (true, false) => c.fn_ += 1,
                }
            }
        }
    }
    Ok(c)
}

pub fn precision(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    }
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    }
}

/// Harmonic mean of precision and recall; 0 when there are no true positives.
/// With no edges in either truth or estimate the recovery is perfect and the
/// score is 1.
pub fn f1(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        return if c.fp == 0 && c.fn_ == 0 { 1.0 } else { 0.0 };
    }
    let p = precision(c);
    let r = recall(c);
    2.0 * p * r / (p + r)
}

pub fn accuracy(c: &ConfusionCounts) -> f64 {
    if c.total() == 0 {
        return 1.0;
    }
    (c.tp + c.tn) as f64 / c.total() as f64
}

/// Mean absolute difference of numerical ranks.
pub fn mre(
    truth_l: &[SymmetricMatrix],
    est_l: &[SymmetricMatrix],
    rank_tol_rel: f64,
) -> Result<f64> {
    check_pair(truth_l, est_l)?;
    let mut acc = 0.0;
    for (t, e) in truth_l.iter().zip(est_l) {
        let rt = linalg::sym_eig(t)?.numerical_rank(rank_tol_rel) as f64;
        let re = linalg::sym_eig(e)?.numerical_rank(rank_tol_rel) as f64;
        acc += (rt - re).abs();
    }
    Ok(acc / truth_l.len() as f64)
}

/// `2/(T d(d−1)) · Σ_i ‖triu(Θ_i − Θ̃_i)‖_F` over strict upper triangles.
pub fn mse(truth: &[SymmetricMatrix], est: &[SymmetricMatrix]) -> Result<f64> {
    let d = check_pair(truth, est)?;
    if d < 2 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (t, e) in truth.iter().zip(est) {
        let mut sq = 0.0;
        for j in 0..d {
            for i in 0..j {
                let diff = t[(i, j)] - e[(i, j)];
                sq += diff * diff;
            }
        }
        acc += sq.sqrt();
    }
    Ok(2.0 * acc / (truth.len() * d * (d - 1)) as f64)
}

/// `‖X_{i+1} − X_i‖_F` for consecutive entries.
pub fn temporal_deviation(seq: &[SymmetricMatrix]) -> Result<Vec<f64>> {
    check_sequence(seq, "deviation input")?;
    if seq.len() < 2 {
        return Err(Error::Shape(
            "temporal deviation needs at least two time points".into(),
        ));
    }
    Ok(seq
        .windows(2)
        .map(|w| (w[1].as_matrix() - w[0].as_matrix()).norm())
        .collect())
}

/// Summary scores of an estimate against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub f1: f64,
    pub accuracy: f64,
    pub mre: f64,
    pub mse: f64,
    pub counts: ConfusionCounts,
}

pub fn score(
    truth_theta: &[SymmetricMatrix],
    truth_l: &[SymmetricMatrix],
    est_theta: &[SymmetricMatrix],
    est_l: &[SymmetricMatrix],
) -> Result<Scores> {
    let counts = confusion(truth_theta, est_theta, EDGE_TOL)?;
    Ok(Scores {
        f1: f1(&counts),
        accuracy: accuracy(&counts),
        mre: mre(truth_l, est_l, RANK_TOL_REL)?,
        mse: mse(truth_theta, est_theta)?,
        counts,
    })
}

/// Monte Carlo cross-validation plan: each repeat holds out `round(n_i/ν)`
/// rows of every block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MccvPlan {
    pub nu: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Column-center learning and validation blocks before computing covariances.
    pub center: bool,
}

impl Default for MccvPlan {
    fn default() -> Self {
        MccvPlan {
            nu: 4,
            repeats: 10,
            seed: 0,
            center: false,
        }
    }
}

impl MccvPlan {
    pub fn validate(&self) -> Result<()> {
        if self.nu < 2 {
            return Err(Error::param("nu", "validation fraction 1/nu needs nu >= 2"));
        }
        if self.repeats == 0 {
            return Err(Error::param("repeats", "need at least one repeat"));
        }
        Ok(())
    }

    /// Validation rows for a block of `n` samples, rounded half up.
    pub fn validation_size(&self, n: usize) -> usize {
        ((2 * n + self.nu) / (2 * self.nu)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub learning: TimeSeriesDataset,
    pub validation: TimeSeriesDataset,
}

/// Learning rows and validation rows of one block.
pub type IndexSplit = (Vec<usize>, Vec<usize>);

/// Row indices `(learning, validation)` for every block of every repeat.
pub fn mccv_indices(block_sizes: &[usize], plan: &MccvPlan) -> Result<Vec<Vec<IndexSplit>>> {
    plan.validate()?;
    if let Some(i) = block_sizes.iter().position(|&n| n < 2) {
        return Err(Error::InvalidData(format!(
            "block {i} has {} samples; cross-validation needs at least 2",
            block_sizes[i]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Vec::with_capacity(plan.repeats);
    for _ in 0..plan.repeats {
        let mut per_block = Vec::with_capacity(block_sizes.len());
        for &n in block_sizes {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut rng);
            let v = plan.validation_size(n).min(n - 1);
            let mut validation = rows[..v].to_vec();
            let mut learning = rows[v..].to_vec();
            validation.sort_unstable();
            learning.sort_unstable();
            per_block.push((learning, validation));
        }
        out.push(per_block);
    }
    Ok(out)
}

pub fn mccv_split(data: &TimeSeriesDataset, plan: &MccvPlan) -> Result<Vec<Split>> {
    let sizes: Vec<usize> = data.blocks().iter().map(|b| b.nrows()).collect();
    mccv_indices(&sizes, plan)?
        .into_iter()
        .map(|per_block| {
            let (learn, val): (Vec<_>, Vec<_>) = per_block.into_iter().unzip();
            Ok(Split {
                learning: data.select_rows(&learn)?,
                validation: data.select_rows(&val)?,
            })
        })
        .collect()
}

/// `Σ_i log det(Θ_i − L_i) − tr(S_i (Θ_i − L_i))`; `−∞` if any `Θ_i − L_i`
/// is not positive definite.
pub fn holdout_loglik(s_val: &CovarianceSequence, est: &NetworkEstimate) -> Result<f64> {
    if s_val.time_points() != est.time_points() || s_val.dim() != est.dim() {
        return Err(Error::Shape(
            "validation covariances do not match the estimate".into(),
        ));
    }
    let mut total = 0.0;
    for (s, m) in s_val.matrices().iter().zip(est.marginal_precisions()) {
        match linalg::log_det_pd(&m) {
            Ok(ld) => total += ld - linalg::trace_of_product(s, &m),
            Err(_) => return Ok(f64::NEG_INFINITY),
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub params: Hyperparameters,
    /// Mean held-out log-likelihood over repeats (`−∞` if any fit failed).
    pub mean_loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: Hyperparameters,
    /// One row per grid entry, in grid order.
    pub table: Vec<CandidateScore>,
}

/// Total order used to break score ties: larger α, then larger τ, then the
/// remaining fields so that the choice never depends on grid order.
fn tie_break(a: &Hyperparameters, b: &Hyperparameters) -> Ordering {
    a.alpha
        .total_cmp(&b.alpha)
        .then(a.tau.total_cmp(&b.tau))
        .then(a.beta.total_cmp(&b.beta))
        .then(a.eta.total_cmp(&b.eta))
        .then(a.psi.cmp(&b.psi))
        .then(a.phi.cmp(&b.phi))
        .then(b.rho.total_cmp(&a.rho))
        .then(b.max_iter.cmp(&a.max_iter))
        .then(b.eps_abs.total_cmp(&a.eps_abs))
        .then(b.eps_rel.total_cmp(&a.eps_rel))
}

fn covariances(data: &TimeSeriesDataset, center: bool) -> CovarianceSequence {
    if center {
        empirical_covariances(&data.centered())
    } else {
        empirical_covariances(data)
    }
}

/// Fits every candidate on every learning split and picks the one with the
/// highest mean held-out log-likelihood.
pub fn select_hyperparams(
    data: &TimeSeriesDataset,
    grid: &[Hyperparameters],
    plan: &MccvPlan,
) -> Result<Selection> {
    if grid.is_empty() {
        return Err(Error::param("grid", "need at least one candidate"));
    }
    for hp in grid {
        hp.validate()?;
    }
    let splits: Vec<(CovarianceSequence, CovarianceSequence)> = mccv_split(data, plan)?
        .iter()
        .map(|s| {
            (
                covariances(&s.learning, plan.center),
                covariances(&s.validation, plan.center),
            )
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..splits.len()).map(move |s| (c, s)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let (learn, val) = &splits[s];
            match solver::fit(learn, &grid[c], None) {
                Ok(est) => holdout_loglik(val, &est).unwrap_or(f64::NEG_INFINITY),
                Err(_) => f64::NEG_INFINITY,
            }
        })
        .collect();

    let table: Vec<CandidateScore> = grid
        .iter()
        .enumerate()
        .map(|(c, hp)| {
            let row = &scores[c * splits.len()..(c + 1) * splits.len()];
            let mean = if row.iter().any(|v| !v.is_finite()) {
                f64::NEG_INFINITY
            } else {
                row.iter().sum::<f64>() / row.len() as f64
            };
            CandidateScore {
                params: *hp,
                mean_loglik: mean,
            }
        })
        .collect();

    let best = table
        .iter()
        .filter(|c| c.mean_loglik.is_finite())
        .max_by(|a, b| {
            a.mean_loglik
                .total_cmp(&b.mean_loglik)
                .then_with(|| tie_break(&a.params, &b.params))
        })
        .ok_or(Error::NoFeasibleCandidate(grid.len()))?
        .params;
    Ok(Selection { best, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{self, GeneratorConfig};
    use nalgebra::DMatrix;
    use rand::Rng;

    fn sym(d: usize, v: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_row_slice(d, v).unwrap()
    }

    fn random_sparse(rng: &mut ChaCha8Rng, d: usize) -> SymmetricMatrix {
        let mut m = DMatrix::identity(d, d);
        for j in 0..d {
            for i in 0..j {
                if rng.random_bool(0.4) {
                    let v = rng.random_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        SymmetricMatrix::new(m).unwrap()
    }

    #[test]
    fn confusion_perfect_and_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth: Vec<_> = (0..3).map(|_| random_sparse(&mut rng, 5)).collect();
        let c = confusion(&truth, &truth, EDGE_TOL).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert_eq!(c.total(), 3 * 10);

        let empty = vec![SymmetricMatrix::identity(5); 3];
        let k: u64 = truth
            .iter()
            .map(|m| {
                (0..5)
                    .flat_map(|j| (0..j).map(move |i| (i, j)))
                    .filter(|&(i, j)| m[(i, j)] != 0.0)
                    .count() as u64
            })
            .sum();
        let c = confusion(&truth, &empty, EDGE_TOL).unwrap();
        assert_eq!((c.tp, c.fn_), (0, k));
    }

    #[test]
    fn confusion_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth: Vec<_> = (0..4).map(|_| random_sparse(&mut rng, 6)).collect();
        let est: Vec<_> = (0..4).map(|_| random_sparse(&mut rng, 6)).collect();
        let c = confusion(&truth, &est, EDGE_TOL).unwrap();
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for t in 0..4 {
            for i in 0..6 {
                for j in (i + 1)..6 {
                    let a = truth[t][(i, j)] != 0.0;
                    let b = est[t][(i, j)] != 0.0;
                    match (a, b) {
                        (true, true) => tp += 1,
                        (false, true) => fp += 1,
                        (false, false) => tn += 1,
                        (true, false) => fn_ += 1,
                    }
                }
            }
        }
        assert_eq!(c, ConfusionCounts { tp, fp, tn, fn_ });
    }

    #[test]
    fn confusion_rejects_shape_mismatch() {
        let a = vec![SymmetricMatrix::identity(3)];
        let b = vec![SymmetricMatrix::identity(4)];
        assert!(confusion(&a, &b, EDGE_TOL).is_err());
        assert!(confusion(&a, &[a[0].clone(), a[0].clone()], EDGE_TOL).is_err());
    }

    #[test]
    fn f1_and_accuracy_values() {
        let c = ConfusionCounts {
            tp: 2,
            fp: 1,
            tn: 0,
            fn_: 1,
        };
        assert!((precision(&c) - 2.0 / 3.0).abs() < 1e-15);
        assert!((recall(&c) - 2.0 / 3.0).abs() < 1e-15);
        assert!((f1(&c) - 2.0 / 3.0).abs() < 1e-15);

        let perfect = ConfusionCounts {
            tp: 4,
            fp: 0,
            tn: 6,
            fn_: 0,
        };
        assert_eq!(f1(&perfect), 1.0);
        assert_eq!(accuracy(&perfect), 1.0);

        let miss = ConfusionCounts {
            tp: 0,
            fp: 2,
            tn: 3,
            fn_: 1,
        };
        assert_eq!(f1(&miss), 0.0);
        assert_eq!(accuracy(&miss), 0.5);
    }

    #[test]
    fn mre_values() {
        let l = |ranks: &[f64]| SymmetricMatrix::from_diagonal(ranks);
        let truth = vec![l(&[1.0, 1.0, 1.0, 0.0, 0.0]), l(&[2.0, 1.0, 1.0, 0.0, 0.0])];
        assert_eq!(mre(&truth, &truth, RANK_TOL_REL).unwrap(), 0.0);
        let est = vec![l(&[1.0, 1.0, 0.0, 0.0, 0.0]), l(&[2.0, 1.0, 1.0, 3.0, 0.0])];
        assert_eq!(mre(&truth, &est, RANK_TOL_REL).unwrap(), 1.0);
    }

    #[test]
    fn mse_values() {
        let a = sym(2, &[1.0, 0.2, 0.2, 1.0]);
        let b = sym(2, &[1.0, 0.3, 0.3, 1.0]);
        assert_eq!(
            mse(std::slice::from_ref(&a), std::slice::from_ref(&a)).unwrap(),
            0.0
        );
        assert!((mse(&[a], &[b]).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mse_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<_> = (0..3).map(|_| random_sparse(&mut rng, 5)).collect();
        let est: Vec<_> = (0..3).map(|_| random_sparse(&mut rng, 5)).collect();
        let mut acc = 0.0;
        for t in 0..3 {
            let mut s = 0.0;
            for i in 0..5 {
                for j in (i + 1)..5 {
                    s += (truth[t][(i, j)] - est[t][(i, j)]).powi(2);
                }
            }
            acc += s.sqrt();
        }
        let expected = 2.0 / (3.0 * 5.0 * 4.0) * acc;
        assert!((mse(&truth, &est).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn deviation_values() {
        let a = SymmetricMatrix::identity(3);
        assert_eq!(
            temporal_deviation(&[a.clone(), a.clone(), a.clone()]).unwrap(),
            vec![0.0, 0.0]
        );
        let mut m = a.as_matrix().clone();
        m[(0, 2)] = 0.25;
        m[(2, 0)] = 0.25;
        let b = SymmetricMatrix::new(m).unwrap();
        let dev = temporal_deviation(&[a.clone(), b]).unwrap();
        assert!((dev[0] - 2f64.sqrt() * 0.25).abs() < 1e-15);
        assert!(temporal_deviation(&[a]).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let blocks = vec![DMatrix::from_fn(10, 2, |i, j| (i * 2 + j) as f64); 3];
        let data = TimeSeriesDataset::from_blocks(blocks).unwrap();
        let plan = MccvPlan {
            nu: 5,
            repeats: 4,
            seed: 9,
            center: false,
        };
        let splits = mccv_split(&data, &plan).unwrap();
        assert_eq!(splits.len(), 4);
        for s in &splits {
            for (l, v) in s.learning.blocks().iter().zip(s.validation.blocks()) {
                assert_eq!((l.nrows(), v.nrows()), (8, 2));
                // Row i holds values (2i, 2i+1), so the first column identifies it.
                let mut ids: Vec<i64> = l
                    .column(0)
                    .iter()
                    .chain(v.column(0).iter())
                    .map(|x| *x as i64)
                    .collect();
                ids.sort_unstable();
                assert_eq!(ids, (0..10).map(|i| 2 * i).collect::<Vec<_>>());
            }
        }
        assert_eq!(splits, mccv_split(&data, &plan).unwrap());
    }

    #[test]
    fn split_rejects_tiny_blocks() {
        let data = TimeSeriesDataset::from_blocks(vec![DMatrix::zeros(1, 2)]).unwrap();
        assert!(mccv_split(&data, &MccvPlan::default()).is_err());
        assert_eq!(
            MccvPlan {
                nu: 4,
                ..Default::default()
            }
            .validation_size(10),
            3
        );
        assert_eq!(
            MccvPlan {
                nu: 4,
                ..Default::default()
            }
            .validation_size(2),
            1
        );
    }

    #[test]
    fn holdout_values() {
        let est = NetworkEstimate {
            theta_seq: vec![SymmetricMatrix::identity(2)],
            lowrank_seq: vec![SymmetricMatrix::zeros(2)],
            iterations: 0,
            converged: true,
            residual_history: vec![],
            objective_value: 0.0,
        };
        let s = CovarianceSequence::new(vec![SymmetricMatrix::identity(2)]).unwrap();
        assert_eq!(holdout_loglik(&s, &est).unwrap(), -2.0);

        let bad = NetworkEstimate {
            lowrank_seq: vec![SymmetricMatrix::identity(2).scale(2.0)],
            ..est
        };
        assert_eq!(holdout_loglik(&s, &bad).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn fitted_model_beats_identity_on_holdout() {
        let cfg = GeneratorConfig {
            d: 8,
            latent: 1,
            time_points: 3,
            n: 120,
            seed: 3,
            ..Default::default()
        };
        let (_, data) = datagen::generate_dataset(&cfg).unwrap();
        let split = &mccv_split(
            &data,
            &MccvPlan {
                repeats: 1,
                ..Default::default()
            },
        )
        .unwrap()[0];
        let learn = empirical_covariances(&split.learning);
        let val = empirical_covariances(&split.validation);
        let est = solver::fit(
            &learn,
            &Hyperparameters {
                alpha: 0.05,
                tau: 0.5,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let identity = NetworkEstimate {
            theta_seq: vec![SymmetricMatrix::identity(8); 3],
            lowrank_seq: vec![SymmetricMatrix::zeros(8); 3],
            ..est.clone()
        };
        assert!(holdout_loglik(&val, &est).unwrap() > holdout_loglik(&val, &identity).unwrap());
    }

    #[test]
    fn selection_single_and_duplicates() {
        let cfg = GeneratorConfig {
            d: 6,
            latent: 1,
            time_points: 2,
            n: 40,
            seed: 5,
            ..Default::default()
        };
        let (_, data) = datagen::generate_dataset(&cfg).unwrap();
        let plan = MccvPlan {
            repeats: 2,
            ..Default::default()
        };
        let one = Hyperparameters {
            alpha: 0.1,
            ..Default::default()
        };
        let sel = select_hyperparams(&data, &[one], &plan).unwrap();
        assert_eq!(sel.best, one);

        let other = Hyperparameters {
            alpha: 0.3,
            ..Default::default()
        };
        let forward = select_hyperparams(&data, &[one, other, one], &plan).unwrap();
        let backward = select_hyperparams(&data, &[other, one, one], &plan).unwrap();
        assert_eq!(forward.best, backward.best);
        assert_eq!(forward.table[0].mean_loglik, forward.table[2].mean_loglik);

        assert!(select_hyperparams(&data, &[], &plan).is_err());
    }

    #[test]
    fn tie_break_prefers_sparser_then_lower_rank() {
        let a = Hyperparameters {
            alpha: 0.1,
            tau: 1.0,
            ..Default::default()
        };
        let b = Hyperparameters {
            alpha: 0.2,
            tau: 0.5,
            ..Default::default()
        };
        let c = Hyperparameters {
            alpha: 0.2,
            tau: 0.7,
            ..Default::default()
        };
        assert_eq!(tie_break(&b, &a), Ordering::Greater);
        assert_eq!(tie_break(&c, &b), Ordering::Greater);
    }
}
