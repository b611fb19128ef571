//! Dense matrix assembly for every operator kind.
//!
//! The restricted operator uses the lattice fractional Laplacian on `hZ`:
//!
//! ```text
//!   (L u)_i = h^{-2s} sum_{k != 0} K_k (u_i - u_{i+k}),
//!   K_k = c_{1,s} Gamma(|k| - s) / Gamma(|k| + 1 + s),
//!   sum_{k != 0} K_k = Gamma(1 + 2s) / Gamma(1 + s)^2,
//! ```
//!
//! with `u = 0` on lattice nodes outside `(a, b)`. Pairing `k` with `-k` removes
//! the principal value, and the closed-form total weight accounts for the
//! whole exterior, so the interior matrix is a symmetric Toeplitz matrix.
//! The censored operator subtracts `diag(L_RFL chi)` where `chi` is the
//! lattice indicator of the closed interval `[a, b]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg;
use crate::operator::{OperatorKind, OperatorSpec};

/// `c_{1,s} = 4^s Gamma(1/2 + s) s / (sqrt(pi) Gamma(1 - s))`.
pub fn rfl_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(0.5 + s) * s / (std::f64::consts::PI.sqrt() * gamma(1.0 - s))
}

/// Lattice weights `K_1, ..., K_m` (unit spacing).
pub fn lattice_weights(s: f64, m: usize) -> Vec<f64> {
    let c = rfl_constant(s);
    let mut w = Vec::with_capacity(m);
    if m == 0 {
        return w;
    }
    // K_1 from log-gamma, then K_{k+1} = K_k (k - s) / (k + 1 + s)
    let mut k1 = c * (ln_gamma(1.0 - s) - ln_gamma(2.0 + s)).exp();
    w.push(k1);
    for k in 1..m {
        let kf = k as f64;
        k1 *= (kf - s) / (kf + 1.0 + s);
        w.push(k1);
    }
    w
}

/// Total lattice weight `sum_{k != 0} K_k = Gamma(1 + 2s) / Gamma(1 + s)^2`.
pub fn lattice_diagonal(s: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 * s) - 2.0 * ln_gamma(1.0 + s)).exp()
}

/// Value of `(-Delta)^s (1 - x^2)_+^s` inside `(-1, 1)`:
/// `4^s Gamma(1 + s) Gamma(1/2 + s) / sqrt(pi)`.
pub fn getoor_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s) / std::f64::consts::PI.sqrt()
}

/// Weights coupling interior rows to the two boundary nodes `x_0 = a` and
/// `x_{n+1} = b`, used to apply an operator to data that does not vanish on
/// the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCoupling {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BoundaryCoupling {
    fn scaled_add(&mut self, other: &BoundaryCoupling) {
        for (a, b) in self.left.iter_mut().zip(&other.left) {
            *a += b;
        }
        for (a, b) in self.right.iter_mut().zip(&other.right) {
            *a += b;
        }
    }
}

/// Discrete operator on the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    spec: OperatorSpec,
    grid: Arc<Grid>,
    entries: DMatrix<f64>,
    coupling: Option<BoundaryCoupling>,
}

impl OperatorMatrix {
    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        check_len(self.dim(), u.len())?;
        let v = &self.entries * DVector::from_column_slice(u.values());
        GridFunction::new(self.grid.clone(), v.as_slice().to_vec())
    }

    /// Applies the operator to the function equal to `u` inside, `left` and
    /// `right` on the boundary nodes, and zero beyond (when applicable).
    /// Only kinds defined by a singular integral carry boundary couplings.
    pub fn apply_closed(&self, u: &GridFunction, left: f64, right: f64) -> Result<GridFunction> {
        let coupling = self.coupling.as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} has no boundary coupling (not a singular-integral operator)",
                self.spec.kind()
            ))
        })?;
        let mut v = self.apply(u)?.into_values();
        for (i, vi) in v.iter_mut().enumerate() {
            *vi += coupling.left[i] * left + coupling.right[i] * right;
        }
        GridFunction::new(self.grid.clone(), v)
    }

    pub fn boundary_coupling(&self) -> Option<&BoundaryCoupling> {
        self.coupling.as_ref()
    }

    /// `||L - L^T||_F / ||L||_F`.
    pub fn symmetry_error(&self) -> f64 {
        linalg::relative_asymmetry(&self.entries)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.entries.clone().cholesky().is_some()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = linalg::symmetrized(&self.entries);
        sym.symmetric_eigenvalues().min()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, got })
    }
}

fn rfl_parts(grid: &Grid, s: f64) -> (DMatrix<f64>, BoundaryCoupling) {
    let n = grid.len();
    let scale = grid.h().powf(-2.0 * s);
    let w: Vec<f64> = lattice_weights(s, n + 1).iter().map(|k| k * scale).collect();
    let diag = lattice_diagonal(s) * scale;
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else {
            -w[i.abs_diff(j) - 1]
        }
    });
    // 0-based interior node i sits i + 1 steps from a and n - i steps from b
    let coupling = BoundaryCoupling {
        left: (0..n).map(|i| -w[i]).collect(),
        right: (0..n).map(|i| -w[n - 1 - i]).collect(),
    };
    (entries, coupling)
}

/// Restricted fractional Laplacian, `s` in `(0, 1)`.
pub fn build_rfl(grid: &Arc<Grid>, s: f64) -> Result<OperatorMatrix> {
    let spec = OperatorSpec::rfl(s)?;
    let (entries, coupling) = rfl_parts(grid, s);
    Ok(OperatorMatrix {
        spec,
        grid: grid.clone(),
        entries,
        coupling: Some(coupling),
    })
}

/// `tridiag(-1, 2, -1) / h^2`.
pub fn dirichlet_laplacian(grid: &Grid) -> DMatrix<f64> {
    let n = grid.len();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 * inv_h2,
        1 => -inv_h2,
        _ => 0.0,
    })
}

/// Analytic eigenpairs of [`dirichlet_laplacian`]:
/// `lambda_k = 4/h^2 sin^2(k pi / (2(n+1)))`, `v_k(i) = sqrt(2/(n+1)) sin(i k pi / (n+1))`.
/// The eigenvector matrix is symmetric and orthogonal.
pub fn dirichlet_eigenpairs(grid: &Grid) -> (Vec<f64>, DMatrix<f64>) {
    let n = grid.len();
    let np1 = (n + 1) as f64;
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let lambdas = (1..=n)
        .map(|k| {
            let t = (k as f64 * std::f64::consts::PI / (2.0 * np1)).sin();
            4.0 * inv_h2 * t * t
        })
        .collect();
    let norm = (2.0 / np1).sqrt();
    let v = DMatrix::from_fn(n, n, |i, k| {
        // reduce (i+1)(k+1) mod 2(n+1) before taking the sine
        let m = ((i + 1) * (k + 1)) % (2 * (n + 1));
        norm * (m as f64 * std::f64::consts::PI / np1).sin()
    });
    (lambdas, v)
}

/// `max_k ||A v_k - lambda_k v_k||_inf / lambda_max`, using the tridiagonal
/// structure of `A` (O(n^2)).
pub fn dirichlet_eigen_residual(grid: &Grid, lambdas: &[f64], v: &DMatrix<f64>) -> f64 {
    let n = grid.len();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            let left = if i > 0 { v[(i - 1, k)] } else { 0.0 };
            let right = if i + 1 < n { v[(i + 1, k)] } else { 0.0 };
            let av = inv_h2 * (2.0 * v[(i, k)] - left - right);
            worst = worst.max((av - lambdas[k] * v[(i, k)]).abs());
        }
    }
    worst / lmax
}

fn spectral_power(lambdas: &[f64], v: &DMatrix<f64>, power: f64) -> DMatrix<f64> {
    let mut scaled = v.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= lambdas[k].powf(power);
    }
    scaled * v.transpose()
}

/// Spectral fractional Laplacian, `V Lambda^s V^T` in the sine basis.
/// `s = 1` reproduces the Dirichlet Laplacian (allowed here for checks).
pub fn build_sfl(grid: &Arc<Grid>, s: f64) -> Result<OperatorMatrix> {
    if !(s > 0.0 && s <= 1.0) {
        return invalid(format!("SFL requires s in (0, 1], got {s}"));
    }
    let spec = if s < 1.0 {
        OperatorSpec::sfl(s)?
    } else {
        // the classical Laplacian is recorded as SPECTRAL_OF_RFL(1, 1)
        OperatorSpec::new(OperatorKind::SpectralOfRfl {
            sigma1: 1.0,
            sigma2: 1.0,
        })?
    };
    let entries = sfl_entries(grid, s)?;
    Ok(OperatorMatrix {
        spec,
        grid: grid.clone(),
        entries,
        coupling: None,
    })
}

fn sfl_entries(grid: &Grid, s: f64) -> Result<DMatrix<f64>> {
    let (lambdas, v) = dirichlet_eigenpairs(grid);
    let residual = dirichlet_eigen_residual(grid, &lambdas, &v);
    if residual > 1e-10 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual,
        });
    }
    if s == 1.0 {
        return Ok(dirichlet_laplacian(grid));
    }
    Ok(spectral_power(&lambdas, &v, s))
}

/// Censored fractional Laplacian, `s` in `(1/2, 1)`:
/// `L_RFL - diag(L_RFL chi_[a,b])`. Off-diagonal entries and boundary
/// couplings coincide with the restricted ones, and the operator annihilates
/// the constant function on the closed interval.
pub fn build_cfl(grid: &Arc<Grid>, s: f64) -> Result<OperatorMatrix> {
    let spec = OperatorSpec::cfl(s)?;
    let (mut entries, coupling) = rfl_parts(grid, s);
    let n = grid.len();
    for i in 0..n {
        let row_sum: f64 = entries.row(i).iter().sum::<f64>() + coupling.left[i] + coupling.right[i];
        entries[(i, i)] -= row_sum;
    }
    Ok(OperatorMatrix {
        spec,
        grid: grid.clone(),
        entries,
        coupling: Some(coupling),
    })
}

/// Dispatches on the operator kind.
pub fn build_operator(spec: &OperatorSpec, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    match spec.kind() {
        OperatorKind::Rfl { s } => build_rfl(grid, s),
        OperatorKind::Sfl { s } => build_sfl(grid, s),
        OperatorKind::Cfl { s } => build_cfl(grid, s),
        OperatorKind::RflSum { s1, s2 } => {
            let (mut e1, mut c1) = rfl_parts(grid, s1);
            let (e2, c2) = rfl_parts(grid, s2);
            e1 += e2;
            c1.scaled_add(&c2);
            Ok(OperatorMatrix {
                spec: *spec,
                grid: grid.clone(),
                entries: e1,
                coupling: Some(c1),
            })
        }
        OperatorKind::SpectralOfRfl { sigma1, sigma2 } => {
            let entries = if sigma1 == 1.0 {
                // base operator is the Dirichlet Laplacian: this is SFL(sigma2)
                sfl_entries(grid, sigma2)?
            } else if sigma2 == 1.0 {
                rfl_parts(grid, sigma1).0
            } else {
                let base = rfl_parts(grid, sigma1).0;
                linalg::symmetric_power(&base, sigma2)?
            };
            Ok(OperatorMatrix {
                spec: *spec,
                grid: grid.clone(),
                entries,
                coupling: None,
            })
        }
        OperatorKind::ComposedRfl { s_total, k } => {
            let base = rfl_parts(grid, s_total / k as f64).0;
            let entries = linalg::matrix_power(&base, k);
            Ok(OperatorMatrix {
                spec: *spec,
                grid: grid.clone(),
                entries,
                coupling: None,
            })
        }
    }
}
