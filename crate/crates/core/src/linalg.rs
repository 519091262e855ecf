//! Dense symmetric-matrix primitives used by every solver step.
//!
//! [`SymmetricMatrix`] is a thin newtype over `nalgebra::DMatrix<f64>` whose
//! constructor guarantees exact (bitwise) symmetry. Eigendecompositions are
//! returned with eigenvalues sorted in descending order, so numerical-rank
//! counting only has to scan a prefix.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Square matrix with `m[(i, j)] == m[(j, i)]` holding exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Wraps `m` after checking that it is square, non-empty and exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        let d = m.nrows();
        for j in 0..d {
            for i in (j + 1)..d {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::Shape(format!(
                        "entry ({i},{j}) = {} differs from ({j},{i}) = {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(SymmetricMatrix(m))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        SymmetricMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        SymmetricMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "dimension must be positive");
        SymmetricMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds a matrix from a row-major slice of `dim * dim` values.
    pub fn from_row_slice(dim: usize, values: &[f64]) -> Result<Self> {
        if dim == 0 || values.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} values for a {dim}x{dim} matrix, got {}",
                dim * dim,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, factor: f64) -> Self {
        SymmetricMatrix(&self.0 * factor)
    }

    pub fn add(&self, other: &SymmetricMatrix) -> Self {
        SymmetricMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> Self {
        SymmetricMatrix(&self.0 - &other.0)
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shift_diagonal(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        SymmetricMatrix(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.norm_squared()
    }
}

impl Deref for SymmetricMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl From<SymmetricMatrix> for DMatrix<f64> {
    fn from(m: SymmetricMatrix) -> Self {
        m.0
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::Shape("matrix must have dimension >= 1".into()));
    }
    Ok(())
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> Result<SymmetricMatrix> {
    check_square(a)?;
    Ok(symmetrize_unchecked(a))
}

pub(crate) fn symmetrize_unchecked(a: &DMatrix<f64>) -> SymmetricMatrix {
    let d = a.nrows();
    SymmetricMatrix(DMatrix::from_fn(d, d, |i, j| (a[(i, j)] + a[(j, i)]) / 2.0))
}

/// Spectral decomposition `basis · diag(eigenvalues) · basisᵀ`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Sorted in descending order.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns, column `k` paired with `eigenvalues[k]`.
    pub basis: DMatrix<f64>,
}

impl EigenDecomposition {
    /// `V · diag(f(e_k)) · Vᵀ`, symmetrized to remove rounding asymmetry.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let mut scaled = self.basis.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[k]);
        }
        let m = scaled * self.basis.transpose();
        symmetrize_unchecked(&m)
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(|e| e)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Number of eigenvalues above `tol_rel * max(1, largest eigenvalue)`.
    pub fn numerical_rank(&self, tol_rel: f64) -> usize {
        let cutoff = tol_rel * self.max_eigenvalue().max(1.0);
        self.eigenvalues.iter().take_while(|&&e| e > cutoff).count()
    }
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
pub fn sym_eig(m: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let d = m.dim();
    let max_abs = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if !m.is_finite() {
        return Err(Error::EigenFailure { dim: d, max_abs });
    }
    if d == 1 {
        return Ok(EigenDecomposition {
            eigenvalues: DVector::from_element(1, m[(0, 0)]),
            basis: DMatrix::identity(1, 1),
        });
    }
    let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, 1000 * d.max(30))
        .ok_or(Error::EigenFailure { dim: d, max_abs })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&k| eig.eigenvalues[k]));
    let basis = DMatrix::from_fn(d, d, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(EigenDecomposition { eigenvalues, basis })
}

pub fn min_eigenvalue(m: &SymmetricMatrix) -> Result<f64> {
    Ok(sym_eig(m)?.min_eigenvalue())
}

pub fn is_positive_definite(m: &SymmetricMatrix) -> bool {
    m.is_finite() && m.as_matrix().clone().cholesky().is_some()
}

/// Natural log of the determinant of a positive-definite matrix.
pub fn log_det_pd(m: &SymmetricMatrix) -> Result<f64> {
    let chol = m
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// `tr(A · B)` for same-shape matrices without forming the product.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
