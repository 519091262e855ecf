//! Synthetic sparse-plus-low-rank ground truth and Gaussian samples.
//!
//! Two evolution protocols are provided:
//!
//! * [`Perturbation::P2`]: every step adds a bounded-Frobenius perturbation
//!   to the existing support of `Θ` and a small random matrix to the
//!   loadings, so the rank of `L` stays at `H`.
//! * [`Perturbation::P1`]: every step flips the state of one randomly chosen
//!   edge of `Θ`; `L` is held fixed unless `evolve_latent_p1` is set.
//!
//! `Θ_i − L_i` is kept positive definite by inflating the diagonal of `Θ_i`.

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize_unchecked, SymmetricMatrix};
use crate::model::{GroundTruth, TimeSeriesDataset};

/// Smallest eigenvalue of `Θ − L` targeted by diagonal inflation.
pub const MIN_MARGIN: f64 = 0.1;
/// Magnitude range of generated edge weights (sign drawn separately).
pub const EDGE_WEIGHT_RANGE: (f64, f64) = (0.2, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    P2,
    P1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub d: usize,
    #[serde(rename = "H")]
    pub latent: usize,
    #[serde(rename = "T")]
    pub time_points: usize,
    pub n: usize,
    pub kind: Perturbation,
    /// Frobenius bound on consecutive `Θ` differences (p2).
    pub epsilon: f64,
    /// Edge probability of the initial `Θ`.
    pub sparsity: f64,
    pub seed: u64,
    /// Upper end of the uniform loading entries.
    pub loading_scale: f64,
    /// Divide loading entries by `√H`.
    pub scale_loadings_by_latent: bool,
    /// Draw loading entries from `[−scale, scale]` instead of `[0, scale]`.
    pub signed_loadings: bool,
    /// Frobenius norm of each loading perturbation, as a fraction of `epsilon`.
    pub loading_step: f64,
    /// Also perturb the loadings under p1.
    pub evolve_latent_p1: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            d: 10,
            latent: 2,
            time_points: 5,
            n: 100,
            kind: Perturbation::P2,
            epsilon: 0.3,
            sparsity: 0.2,
            seed: 0,
            loading_scale: 0.3,
            scale_loadings_by_latent: true,
            signed_loadings: false,
            loading_step: 0.2,
            evolve_latent_p1: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::param("d", "need at least 2 observed variables"));
        }
        if self.latent >= self.d {
            return Err(Error::param(
                "H",
                format!("latent count {} must be below d = {}", self.latent, self.d),
            ));
        }
        if self.time_points == 0 {
            return Err(Error::param("T", "need at least one time point"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "need at least one sample per time point"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be finite and nonnegative"));
        }
        if !(self.sparsity > 0.0 && self.sparsity < 1.0) {
            return Err(Error::param(
                "sparsity",
                "edge probability must lie in (0, 1)",
            ));
        }
        if !(self.loading_scale >= 0.0 && self.loading_step >= 0.0) {
            return Err(Error::param(
                "loading_scale",
                "loading parameters must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Ground truth at a single time point.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSlice {
    pub theta: SymmetricMatrix,
    pub lowrank: SymmetricMatrix,
    /// `d × H`, with `lowrank = loading · loadingᵀ`.
    pub loading: DMatrix<f64>,
}

fn gram(k: &DMatrix<f64>) -> SymmetricMatrix {
    if k.ncols() == 0 {
        return SymmetricMatrix::zeros(k.nrows());
    }
    symmetrize_unchecked(&(k * k.transpose()))
}

fn edge_weight(rng: &mut ChaCha8Rng) -> f64 {
    let magnitude = rng.random_range(EDGE_WEIGHT_RANGE.0..=EDGE_WEIGHT_RANGE.1);
    if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Inflates the diagonal of `theta` until `theta − lowrank` has smallest
/// eigenvalue at least [`MIN_MARGIN`]. Returns the (possibly) shifted matrix.
pub fn repair_diagonal(
    theta: &SymmetricMatrix,
    lowrank: &SymmetricMatrix,
) -> Result<SymmetricMatrix> {
    let mut out = theta.clone();
    let min_eig = linalg::min_eigenvalue(&out.sub(lowrank))?;
    if min_eig >= MIN_MARGIN {
        return Ok(out);
    }
    out = out.shift_diagonal(MIN_MARGIN - min_eig);
    // Rounding can leave the margin a hair short. The nudge must exceed the
    // ulp of the diagonal or the shift is a no-op.
    let diag_max = out.as_matrix().diagonal().amax().max(1.0);
    let mut nudge = 4.0 * f64::EPSILON * diag_max;
    loop {
        let min_eig = linalg::min_eigenvalue(&out.sub(lowrank))?;
        if min_eig >= MIN_MARGIN {
            return Ok(out);
        }
        out = out.shift_diagonal(MIN_MARGIN - min_eig + nudge);
        nudge *= 2.0;
    }
}

/// First slice: sparse `Θ₁`, dense small loadings, `L₁ = K Kᵀ`.
pub fn generate_initial(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<TruthSlice> {
    cfg.validate()?;
    let d = cfg.d;
    let mut theta = DMatrix::identity(d, d);
    for j in 0..d {
        for i in (j + 1)..d {
            if rng.random_bool(cfg.sparsity) {
                let w = edge_weight(rng);
                theta[(i, j)] = w;
                theta[(j, i)] = w;
            }
        }
    }
    let upper = if cfg.scale_loadings_by_latent && cfg.latent > 0 {
        cfg.loading_scale / (cfg.latent as f64).sqrt()
    } else {
        cfg.loading_scale
    };
    let lower = if cfg.signed_loadings { -upper } else { 0.0 };
    let loading = DMatrix::from_fn(d, cfg.latent, |_, _| rng.random_range(lower..=upper));
    let lowrank = gram(&loading);
    let theta = repair_diagonal(&SymmetricMatrix::new(theta)?, &lowrank)?;
    Ok(TruthSlice {
        theta,
        lowrank,
        loading,
    })
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn rescale_to(m: DMatrix<f64>, norm: f64) -> DMatrix<f64> {
    let current = m.norm();
    if current == 0.0 || norm == 0.0 {
        DMatrix::zeros(m.nrows(), m.ncols())
    } else {
        m * (norm / current)
    }
}

/// Bounded perturbation on the support of `Θ` plus a small loading drift.
pub fn evolve_p2(
    prev: &TruthSlice,
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TruthSlice> {
    let d = prev.theta.dim();
    let eps = cfg.epsilon;
    if eps == 0.0 {
        return Ok(prev.clone());
    }
    let on_support: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j..d).map(move |i| (i, j)))
        .filter(|&(i, j)| i == j || prev.theta[(i, j)] != 0.0)
        .collect();
    // Target slightly inside the bound so rounding in Θ + Δ cannot push the
    // realized step past ε.
    let bound = eps * (1.0 - 1e-9);
    let sigma = eps / (on_support.len() as f64).sqrt();
    let mut raw = DMatrix::zeros(d, d);
    for &(i, j) in &on_support {
        let v: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
        raw[(i, j)] = v;
        raw[(j, i)] = v;
    }
    if raw.norm() > bound {
        raw = rescale_to(raw, bound);
    }
    let drift = rescale_to(
        gaussian_matrix(rng, d, prev.loading.ncols()),
        cfg.loading_step * eps,
    );

    let mut scale = 1.0;
    for _ in 0..64 {
        let loading = &prev.loading + &drift * scale;
        let lowrank = gram(&loading);
        let mut delta = &raw * scale;
        let candidate = symmetrize_unchecked(&(prev.theta.as_matrix() + &delta));
        let min_eig = linalg::min_eigenvalue(&candidate.sub(&lowrank))?;
        if min_eig < MIN_MARGIN {
            for k in 0..d {
                delta[(k, k)] += MIN_MARGIN - min_eig;
            }
            if delta.norm() > bound {
                delta = rescale_to(delta, bound);
            }
        }
        let theta = symmetrize_unchecked(&(prev.theta.as_matrix() + &delta));
        if linalg::min_eigenvalue(&theta.sub(&lowrank))? > 0.0 {
            return Ok(TruthSlice {
                theta,
                lowrank,
                loading,
            });
        }
        scale *= 0.5;
    }
    Ok(prev.clone())
}

/// Toggles edge `(i, j)`: a present edge is removed, an absent one set to `weight`.
pub fn flip_edge(theta: &SymmetricMatrix, i: usize, j: usize, weight: f64) -> SymmetricMatrix {
    assert!(i != j, "diagonal entries are not edges");
    let mut m = theta.as_matrix().clone();
    let next = if m[(i, j)] != 0.0 { 0.0 } else { weight };
    m[(i, j)] = next;
    m[(j, i)] = next;
    SymmetricMatrix::new(m).expect("symmetric update")
}

/// Flips one uniformly chosen edge and repairs positive definiteness.
pub fn evolve_p1(
    prev: &TruthSlice,
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TruthSlice> {
    let d = prev.theta.dim();
    if d < 2 {
        return Err(Error::param("d", "edge flips need at least 2 variables"));
    }
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |i| (i, j)))
        .collect();
    let &(i, j) = pairs.choose(rng).expect("at least one pair");
    let weight = edge_weight(rng);
    let mut theta = flip_edge(&prev.theta, i, j, weight);

    let (loading, lowrank) = if cfg.evolve_latent_p1 && cfg.epsilon > 0.0 {
        let drift = rescale_to(
            gaussian_matrix(rng, d, prev.loading.ncols()),
            cfg.loading_step * cfg.epsilon,
        );
        let k = &prev.loading + drift;
        let l = gram(&k);
        (k, l)
    } else {
        (prev.loading.clone(), prev.lowrank.clone())
    };
    theta = repair_diagonal(&theta, &lowrank)?;
    Ok(TruthSlice {
        theta,
        lowrank,
        loading,
    })
}

/// Full ground-truth chain of `cfg.time_points` slices.
pub fn generate(cfg: &GeneratorConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut slices = vec![generate_initial(cfg, &mut rng)?];
    for _ in 1..cfg.time_points {
        let prev = slices.last().expect("nonempty");
        let next = match cfg.kind {
            Perturbation::P2 => evolve_p2(prev, cfg, &mut rng)?,
            Perturbation::P1 => evolve_p1(prev, cfg, &mut rng)?,
        };
        slices.push(next);
    }
    let mut truth = GroundTruth {
        theta_seq: Vec::with_capacity(slices.len()),
        lowrank_seq: Vec::with_capacity(slices.len()),
        latent_count: cfg.latent,
        loading_seq: Vec::with_capacity(slices.len()),
    };
    for s in slices {
        truth.theta_seq.push(s.theta);
        truth.lowrank_seq.push(s.lowrank);
        truth.loading_seq.push(s.loading);
    }
    Ok(truth)
}

/// `n` zero-mean Gaussian draws per time point with covariance `(Θ_i − L_i)⁻¹`.
///
/// Block `i` uses its own ChaCha stream derived from `seed`, so blocks are
/// sampled independently and in parallel.
pub fn sample_dataset(truth: &GroundTruth, n: usize, seed: u64) -> Result<TimeSeriesDataset> {
    if n == 0 {
        return Err(Error::param("n", "need at least one sample per time point"));
    }
    let d = truth.dim();
    let blocks = truth
        .marginal_precisions()
        .par_iter()
        .enumerate()
        .map(|(i, precision)| {
            let eig = linalg::sym_eig(precision)?;
            if eig.min_eigenvalue() <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!(
                    "Θ_{i} − L_{i} has eigenvalue {:e}; cannot sample",
                    eig.min_eigenvalue()
                )));
            }
            let root = eig.reconstruct_with(|e| 1.0 / e.sqrt());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z = gaussian_matrix(&mut rng, n, d);
            Ok(z * root.as_matrix())
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeriesDataset::from_blocks(blocks)
}

/// Generates the truth and samples `cfg.n` observations per time point.
pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<(GroundTruth, TimeSeriesDataset)> {
    let truth = generate(cfg)?;
    let data = sample_dataset(&truth, cfg.n, cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    Ok((truth, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::empirical_covariances;

    fn rank(m: &SymmetricMatrix) -> usize {
        linalg::sym_eig(m).unwrap().numerical_rank(1e-8)
    }

    fn support_diff(a: &SymmetricMatrix, b: &SymmetricMatrix) -> usize {
        let d = a.dim();
        let mut count = 0;
        for i in 0..d {
            for j in 0..d {
                if i != j && ((a[(i, j)] != 0.0) != (b[(i, j)] != 0.0)) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn initial_without_latents() {
        let cfg = GeneratorConfig {
            latent: 0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = generate_initial(&cfg, &mut rng).unwrap();
        assert!(s.lowrank.iter().all(|&v| v == 0.0));
        assert_eq!(rank(&s.lowrank), 0);
    }

    #[test]
    fn initial_rank_and_margin() {
        for seed in 0..10 {
            let cfg = GeneratorConfig {
                d: 12,
                latent: 3,
                seed,
                ..Default::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = generate_initial(&cfg, &mut rng).unwrap();
            assert_eq!(rank(&s.lowrank), 3);
            let m = linalg::min_eigenvalue(&s.theta.sub(&s.lowrank)).unwrap();
            assert!(m >= MIN_MARGIN, "seed {seed}: {m}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig {
            seed: 99,
            ..Default::default()
        };
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn p2_zero_epsilon_is_static() {
        let cfg = GeneratorConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = generate_initial(&cfg, &mut rng).unwrap();
        assert_eq!(evolve_p2(&s, &cfg, &mut rng).unwrap(), s);
    }

    #[test]
    fn p2_chain_contracts() {
        let cfg = GeneratorConfig {
            d: 15,
            latent: 3,
            time_points: 11,
            epsilon: 0.4,
            ..Default::default()
        };
        let truth = generate(&cfg).unwrap();
        truth.check_invariants().unwrap();
        for i in 1..truth.time_points() {
            let step = (truth.theta_seq[i].as_matrix() - truth.theta_seq[i - 1].as_matrix()).norm();
            assert!(step <= cfg.epsilon);
            assert_eq!(
                support_diff(&truth.theta_seq[i], &truth.theta_seq[i - 1]),
                0
            );
            assert_eq!(rank(&truth.lowrank_seq[i]), 3);
        }
    }

    #[test]
    fn p1_single_edge_candidate() {
        let theta = SymmetricMatrix::from_row_slice(2, &[1.0, 0.3, 0.3, 1.0]).unwrap();
        let slice = TruthSlice {
            theta,
            lowrank: SymmetricMatrix::zeros(2),
            loading: DMatrix::zeros(2, 0),
        };
        let cfg = GeneratorConfig {
            d: 2,
            latent: 0,
            kind: Perturbation::P1,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = evolve_p1(&slice, &cfg, &mut rng).unwrap();
        assert_eq!(next.theta[(0, 1)], 0.0);
        assert_eq!(next.theta[(1, 0)], 0.0);
    }

    #[test]
    fn double_flip_restores_support() {
        let theta = SymmetricMatrix::identity(4);
        let once = flip_edge(&theta, 2, 0, 0.4);
        assert_eq!(once[(0, 2)], 0.4);
        let twice = flip_edge(&once, 2, 0, 0.4);
        assert_eq!(twice, theta);
    }

    #[test]
    fn p1_chain_flips_one_edge_per_step() {
        let cfg = GeneratorConfig {
            d: 8,
            latent: 2,
            time_points: 51,
            kind: Perturbation::P1,
            ..Default::default()
        };
        let truth = generate(&cfg).unwrap();
        truth.check_invariants().unwrap();
        for i in 1..truth.time_points() {
            assert_eq!(
                support_diff(&truth.theta_seq[i], &truth.theta_seq[i - 1]),
                2
            );
            assert_eq!(truth.lowrank_seq[i], truth.lowrank_seq[0]);
        }
    }

    #[test]
    fn sampling_shapes_and_moments() {
        let truth = GroundTruth {
            theta_seq: vec![SymmetricMatrix::identity(3)],
            lowrank_seq: vec![SymmetricMatrix::zeros(3)],
            latent_count: 0,
            loading_seq: vec![DMatrix::zeros(3, 0)],
        };
        let one = sample_dataset(&truth, 1, 5).unwrap();
        assert_eq!(one.blocks()[0].shape(), (1, 3));

        let big = sample_dataset(&truth, 100_000, 5).unwrap();
        let covs = empirical_covariances(&big);
        let s = &covs.matrices()[0];
        let gap = (s.as_matrix() - DMatrix::<f64>::identity(3, 3)).amax();
        assert!(gap < 0.05, "sample covariance off by {gap}");

        assert_eq!(
            sample_dataset(&truth, 10, 8).unwrap(),
            sample_dataset(&truth, 10, 8).unwrap()
        );
    }

    #[test]
    fn sampling_rejects_indefinite_truth() {
        let truth = GroundTruth {
            theta_seq: vec![SymmetricMatrix::from_diagonal(&[1.0, -1.0])],
            lowrank_seq: vec![SymmetricMatrix::zeros(2)],
            latent_count: 0,
            loading_seq: vec![DMatrix::zeros(2, 0)],
        };
        assert!(matches!(
            sample_dataset(&truth, 5, 0),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = GeneratorConfig {
            d: 5,
            latent: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let toml_cfg: GeneratorConfig =
            toml::from_str("d = 6\nH = 1\nT = 3\nkind = \"p1\"").unwrap();
        assert_eq!(toml_cfg.kind, Perturbation::P1);
        assert!(toml::from_str::<GeneratorConfig>("h = 2").is_err());
    }

    #[test]
    fn repair_terminates_when_shift_hits_rounding() {
        // This chain once needed a shift below the ulp of the diagonal.
        let cfg = GeneratorConfig {
            d: 20,
            latent: 3,
            time_points: 30,
            kind: Perturbation::P1,
            seed: 1,
            ..Default::default()
        };
        let truth = generate(&cfg).unwrap();
        for m in truth.marginal_precisions() {
            assert!(linalg::min_eigenvalue(&m).unwrap() >= MIN_MARGIN);
        }
    }
}
