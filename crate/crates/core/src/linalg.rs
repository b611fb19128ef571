//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `V diag(lambda^p) V^T` from a symmetric eigendecomposition. Fails when an
/// eigenvalue is not positive.
pub fn symmetric_power(m: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let eig = symmetrized(m).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let v = eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= eig.eigenvalues[k].powf(p);
    }
    Ok(scaled * v.transpose())
}

pub fn matrix_power(m: &DMatrix<f64>, k: u32) -> DMatrix<f64> {
    let mut out = m.clone();
    for _ in 1..k {
        out = &out * m;
    }
    out
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite)
}

pub fn spd_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let c = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(c.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
}
