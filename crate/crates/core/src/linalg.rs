//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues in `[-PSD_CLAMP, 0]` are treated as zero.
pub const PSD_CLAMP: f64 = 1e-12;

/// Symmetric PSD square root through an eigendecomposition.
pub fn sym_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < -PSD_CLAMP {
            return Err(Error::IndefiniteLambda { eigenvalue: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `m ⊗ 𝟙₂𝟙₂ᵀ`
pub fn kron_ones2(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(2 * m.nrows(), 2 * m.ncols(), |i, j| m[(i / 2, j / 2)])
}

/// Repeats every entry twice: `v ⊗ 𝟙₂`.
pub fn repeat2(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(2 * v.len(), |k, _| v[k / 2])
}

pub fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

/// 2-norm condition number from the singular values; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Inverse of a small matrix, refusing condition numbers above `limit`.
pub fn inverse_checked(m: &DMatrix<f64>, limit: f64, what: &str) -> Result<DMatrix<f64>> {
    let cond = condition_number(m);
    if !(cond <= limit) {
        return Err(Error::Singular(format!("{what} has condition number {cond:e}")));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is not invertible")))
}

/// Solves a symmetric positive-definite system by Cholesky.
pub fn spd_solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.cholesky().map(|c| c.solve(rhs))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
