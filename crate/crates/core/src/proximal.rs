//! Closed-form proximal operators for the ADMM subproblems.
//!
//! Conventions: `prox_{λf}(v) = argmin_x λ f(x) + ½‖x − v‖²_F`.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{self, symmetrize_unchecked, SymmetricMatrix};
use crate::model::PenaltyKind;

/// Minimizer of `tr(S R) − log det R + (ρ/2)‖R − A‖²_F` over symmetric `R`.
///
/// Stationarity reads `S − ρ·sym(A) = R⁻¹ − ρR`, so with the eigenpairs
/// `(e_k, v_k)` of the left-hand side each eigenvalue of `R` is the positive
/// root of `1/r − ρr = e_k`.
pub fn prox_logdet(s: &SymmetricMatrix, a: &DMatrix<f64>, rho: f64) -> Result<SymmetricMatrix> {
    let rhs = symmetrize_unchecked(&(s.as_matrix() - symmetrize_unchecked(a).as_matrix() * rho));
    let eig = linalg::sym_eig(&rhs)?;
    Ok(eig.reconstruct_with(|e| {
        let root = (e * e + 4.0 * rho).sqrt();
        // Avoid cancellation in −e + √(e² + 4ρ) for large positive e.
        if e > 0.0 {
            2.0 / (e + root)
        } else {
            (root - e) / (2.0 * rho)
        }
    }))
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Soft-thresholds the off-diagonal entries by `zeta`; the diagonal is copied.
pub fn soft_threshold_offdiag(b: &SymmetricMatrix, zeta: f64) -> SymmetricMatrix {
    let d = b.dim();
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            b[(i, j)]
        } else {
            soft(b[(i, j)], zeta)
        }
    });
    // Entrywise map of an exactly symmetric matrix stays exactly symmetric.
    SymmetricMatrix::new(m).expect("soft thresholding preserves symmetry")
}

/// Minimizer of `threshold·tr(L) + ½‖L − C‖²_F` over PSD `L`.
pub fn prox_trace_psd(c: &DMatrix<f64>, threshold: f64) -> Result<SymmetricMatrix> {
    let sym = symmetrize_unchecked(c);
    if threshold.is_infinite() {
        return Ok(SymmetricMatrix::zeros(sym.dim()));
    }
    let eig = linalg::sym_eig(&sym)?;
    Ok(eig.reconstruct_with(|e| (e - threshold).max(0.0)))
}

/// Euclidean projection of `v` onto `{x : ‖x‖₁ ≤ radius}` (sort-and-threshold).
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));

    // Largest k with u_k > (Σ_{j≤k} u_j − radius) / k.
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// `argmin_X λ·Ψ(X) + ½‖X − D‖²_F` for the penalty `kind`.
///
/// The result is not symmetrized: column (group) and row (max-norm) penalties
/// break symmetry for general `D`.
pub fn prox_penalty(d: &DMatrix<f64>, lambda: f64, kind: PenaltyKind) -> DMatrix<f64> {
    if lambda == 0.0 {
        return d.clone();
    }
    match kind {
        PenaltyKind::ElementwiseL1 => d.map(|v| soft(v, lambda)),
        PenaltyKind::LaplacianSq => d / (1.0 + 2.0 * lambda),
        PenaltyKind::GroupL2 => {
            let mut out = d.clone();
            for mut col in out.column_iter_mut() {
                let norm = col.norm();
                let scale = if norm > lambda {
                    1.0 - lambda / norm
                } else {
                    0.0
                };
                col *= scale;
            }
            out
        }
        PenaltyKind::LInfRow => {
            let mut out = d.clone();
            for mut row in out.row_iter_mut() {
                let values: Vec<f64> = row.iter().copied().collect();
                let proj = project_l1_ball(&values, lambda);
                for (x, p) in row.iter_mut().zip(proj) {
                    *x -= p;
                }
            }
            out
        }
    }
}

/// Arguments of the coupled prox over a pair of consecutive blocks.
#[derive(Debug, Clone, Copy)]
pub struct PairProxInput<'a> {
    pub first: &'a SymmetricMatrix,
    pub second: &'a SymmetricMatrix,
    /// `β/ρ` or `η/ρ`.
    pub weight: f64,
    pub kind: PenaltyKind,
}

/// Minimizer of `weight·Ψ(Z₂ − Z₁) + ½‖Z₁ − first‖² + ½‖Z₂ − second‖²`.
///
/// In sum/difference coordinates the objective separates; the difference
/// solves `prox_{2·weight·Ψ}(second − first)` and the sum is kept. Both
/// outputs are re-symmetrized.
pub fn prox_pair(input: &PairProxInput<'_>) -> (SymmetricMatrix, SymmetricMatrix) {
    let PairProxInput {
        first,
        second,
        weight,
        kind,
    } = *input;
    assert_eq!(
        first.dim(),
        second.dim(),
        "pair blocks must share a dimension"
    );
    if weight == 0.0 {
        return (first.clone(), second.clone());
    }
    let sum = first.as_matrix() + second.as_matrix();
    let diff = prox_penalty(
        &(second.as_matrix() - first.as_matrix()),
        2.0 * weight,
        kind,
    );
    let z1 = (&sum - &diff) / 2.0;
    let z2 = (&sum + &diff) / 2.0;
    (symmetrize_unchecked(&z1), symmetrize_unchecked(&z2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetrize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym(d: usize, v: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_row_slice(d, v).unwrap()
    }

    fn random_sym(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> SymmetricMatrix {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-scale..scale));
        symmetrize(&a).unwrap()
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize, symmetric: bool) -> DMatrix<f64> {
        let mut p = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        if symmetric {
            p = symmetrize(&p).unwrap().into_matrix();
        }
        let n = p.norm();
        p / n
    }

    #[test]
    fn logdet_scalar_cases() {
        let r = prox_logdet(&sym(1, &[1.0]), &DMatrix::zeros(1, 1), 1.0).unwrap();
        assert!((r[(0, 0)] - (5.0_f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!((r[(0, 0)] - 0.6180339887).abs() < 1e-10);

        let r = prox_logdet(&sym(1, &[0.0]), &DMatrix::zeros(1, 1), 1.0).unwrap();
        assert_eq!(r[(0, 0)], 1.0);
    }

    #[test]
    fn logdet_stationarity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rho = 2.0;
        for _ in 0..10 {
            let x = DMatrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
            let s = symmetrize(&(x.transpose() * &x)).unwrap();
            let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let r = prox_logdet(&s, &a, rho).unwrap();
            // Substitute back: R⁻¹ − ρR against S − ρ·sym(A).
            let inv = r.as_matrix().clone().try_inverse().unwrap();
            let lhs = inv - r.as_matrix() * rho;
            let a_sym = (&a + a.transpose()) / 2.0;
            let rhs = s.as_matrix() - a_sym * rho;
            assert!((lhs - rhs).amax() < 1e-8);
            assert!(linalg::min_eigenvalue(&r).unwrap() > 0.0);
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let b = sym(2, &[1.0, 0.5, 0.5, 1.0]);
        let out = soft_threshold_offdiag(&b, 0.2);
        assert!((out[(0, 1)] - 0.3).abs() < 1e-15);
        assert_eq!(out[(0, 0)], 1.0);
        assert_eq!(soft_threshold_offdiag(&b, 0.0), b);
        let full = soft_threshold_offdiag(&b, 0.5);
        assert_eq!(full, sym(2, &[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn trace_psd_examples() {
        let c = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
        let l = prox_trace_psd(&c, 1.0).unwrap();
        assert!((l[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(l[(1, 1)].abs() < 1e-15);
        assert!(l[(0, 1)].abs() < 1e-15);

        let neg = DMatrix::from_row_slice(2, 2, &[-2.0, 0.5, 0.5, -1.0]);
        let l = prox_trace_psd(&neg, 0.0).unwrap();
        assert!(l.iter().all(|&v| v == 0.0));

        assert!(prox_trace_psd(&c, f64::INFINITY)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let g = (5.0_f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a) <= f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        (lo + hi) / 2.0
    }

    #[test]
    fn trace_psd_matches_per_eigenvalue_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c = random_sym(&mut rng, 5, 2.0);
        let threshold = 0.4;
        let eig = linalg::sym_eig(&c).unwrap();
        // Per-eigenvalue scalar problem: min_{x ≥ 0} threshold·x + ½(x − e)².
        let oracle = eig.reconstruct_with(|e| {
            golden_section(
                |x| threshold * x + 0.5 * (x - e).powi(2),
                0.0,
                e.abs() + 1.0,
            )
        });
        let l = prox_trace_psd(&c, threshold).unwrap();
        assert!((l.as_matrix() - oracle.as_matrix()).amax() < 1e-7);
    }

    #[test]
    fn trace_psd_rank_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let c = random_sym(&mut rng, 6, 1.0);
            let threshold = 0.3;
            let above = linalg::sym_eig(&c)
                .unwrap()
                .eigenvalues
                .iter()
                .filter(|&&e| e > threshold)
                .count();
            let l = prox_trace_psd(&c, threshold).unwrap();
            let e = linalg::sym_eig(&l).unwrap();
            assert!(e.min_eigenvalue() >= -1e-12);
            assert!(e.numerical_rank(1e-8) <= above);
        }
    }

    #[test]
    fn penalty_scalar_examples() {
        let d = DMatrix::from_element(1, 1, 2.0);
        assert_eq!(
            prox_penalty(&d, 1.0, PenaltyKind::ElementwiseL1)[(0, 0)],
            1.0
        );
        let d = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(prox_penalty(&d, 0.5, PenaltyKind::LaplacianSq)[(0, 0)], 0.5);
    }

    #[test]
    fn linf_row_example() {
        let d = DMatrix::from_row_slice(1, 2, &[3.0, 1.0]);
        let out = prox_penalty(&d, 1.0, PenaltyKind::LInfRow);
        assert!((out[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((out[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linf_row_matches_grid_search() {
        // min_x λ·max|x_k| + ½‖x − v‖² on a refined 2-D grid.
        let v = [3.0, 1.0];
        let lambda = 1.0;
        let f = |x: f64, y: f64| {
            lambda * x.abs().max(y.abs()) + 0.5 * ((x - v[0]).powi(2) + (y - v[1]).powi(2))
        };
        let (mut cx, mut cy, mut h) = (0.0, 0.0, 1.0);
        for _ in 0..60 {
            let mut best = (f64::INFINITY, cx, cy);
            for i in -20..=20 {
                for j in -20..=20 {
                    let (x, y) = (cx + i as f64 * h, cy + j as f64 * h);
                    let val = f(x, y);
                    if val < best.0 {
                        best = (val, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            h *= 0.5;
        }
        assert!((cx - 2.0).abs() < 1e-6 && (cy - 1.0).abs() < 1e-6);
    }

    #[test]
    fn l1_ball_examples() {
        let p = project_l1_ball(&[3.0, 1.0], 1.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(project_l1_ball(&[0.0, 0.0, 0.0], 1.0), vec![0.0; 3]);
        assert_eq!(project_l1_ball(&[1.0, -2.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn l1_ball_matches_grid_refinement() {
        let v = [3.0, 1.0];
        let radius = 1.0;
        let (mut cx, mut cy, mut h) = (0.0, 0.0, 0.25);
        for _ in 0..60 {
            let mut best = (f64::INFINITY, cx, cy);
            for i in -20..=20 {
                for j in -20..=20 {
                    let (x, y) = (cx + i as f64 * h, cy + j as f64 * h);
                    if x.abs() + y.abs() > radius + 1e-15 {
                        continue;
                    }
                    let val = (x - v[0]).powi(2) + (y - v[1]).powi(2);
                    if val < best.0 {
                        best = (val, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            h *= 0.5;
        }
        let p = project_l1_ball(&v, radius);
        assert!((p[0] - cx).abs() < 1e-6 && (p[1] - cy).abs() < 1e-6);
    }

    #[test]
    fn group_zeroes_small_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let d = random_sym(&mut rng, 4, 1.0).into_matrix();
            let lambda = 0.9;
            let out = prox_penalty(&d, lambda, PenaltyKind::GroupL2);
            for (c_in, c_out) in d.column_iter().zip(out.column_iter()) {
                let zeroed = c_out.iter().all(|&v| v == 0.0);
                assert_eq!(zeroed, c_in.norm() <= lambda);
            }
        }
    }

    #[test]
    fn penalty_zero_lambda_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let d = random_sym(&mut rng, 3, 1.0).into_matrix();
        for kind in PenaltyKind::ALL {
            assert_eq!(prox_penalty(&d, 0.0, kind), d);
        }
    }

    #[test]
    fn penalty_variational_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for kind in PenaltyKind::ALL {
            for _ in 0..5 {
                let d = random_sym(&mut rng, 3, 2.0).into_matrix();
                let lambda = rng.random_range(0.0..1.5);
                let x = prox_penalty(&d, lambda, kind);
                let obj =
                    |m: &DMatrix<f64>| lambda * kind.evaluate(m) + 0.5 * (m - &d).norm_squared();
                let base = obj(&x);
                for _ in 0..100 {
                    let p = random_unit(&mut rng, 3, false);
                    assert!(base <= obj(&(&x + p * 1e-4)) + 1e-10, "{kind}");
                }
            }
        }
    }

    #[test]
    fn pair_scalar_example() {
        let first = sym(1, &[0.0]);
        let second = sym(1, &[1.0]);
        let (z1, z2) = prox_pair(&PairProxInput {
            first: &first,
            second: &second,
            weight: 0.25,
            kind: PenaltyKind::ElementwiseL1,
        });
        // ∂/∂z1: z1 − λ = 0, ∂/∂z2: z2 − 1 + λ = 0 with λ = 0.25.
        assert!((z1[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((z2[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pair_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = random_sym(&mut rng, 3, 1.0);
        let b = random_sym(&mut rng, 3, 1.0);
        for kind in PenaltyKind::ALL {
            let input = PairProxInput {
                first: &a,
                second: &b,
                weight: 0.0,
                kind,
            };
            assert_eq!(prox_pair(&input), (a.clone(), b.clone()));
            let same = PairProxInput {
                first: &a,
                second: &a,
                weight: 0.7,
                kind,
            };
            assert_eq!(prox_pair(&same), (a.clone(), a.clone()));
        }
    }

    #[test]
    fn pair_preserves_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for kind in PenaltyKind::ALL {
            for _ in 0..10 {
                let a = random_sym(&mut rng, 4, 1.0);
                let b = random_sym(&mut rng, 4, 1.0);
                let (z1, z2) = prox_pair(&PairProxInput {
                    first: &a,
                    second: &b,
                    weight: rng.random_range(0.0..1.0),
                    kind,
                });
                let gap = (z1.as_matrix() + z2.as_matrix() - a.as_matrix() - b.as_matrix()).amax();
                assert!(gap < 1e-12);
            }
        }
    }
}
