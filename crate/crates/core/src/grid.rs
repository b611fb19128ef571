//! Uniform interior grids on an interval and functions sampled on them.
//!
//! Functions live on the interior nodes only; the value outside the open
//! interval is implicitly zero wherever an operator needs it.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Uniform mesh of `(a, b)` with `n_interior` interior nodes `x_i = a + i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(a: f64, b: f64, n_interior: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return invalid(format!("interval ({a}, {b}) must satisfy a < b"));
        }
        if n_interior == 0 {
            return invalid("n_interior must be positive");
        }
        let h = (b - a) / (n_interior + 1) as f64;
        let nodes = (1..=n_interior).map(|i| a + i as f64 * h).collect();
        Ok(Self {
            a,
            b,
            n: n_interior,
            h,
            nodes,
        })
    }

    /// The default domain `(-1, 1)`.
    pub fn symmetric(n_interior: usize) -> Result<Self> {
        Self::new(-1.0, 1.0, n_interior)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Distance of node `i` (0-based) to the boundary, computed from the
    /// integer index so that mirrored nodes give bitwise-equal values.
    pub fn delta_at(&self, i: usize) -> f64 {
        let k = (i + 1).min(self.n - i);
        k as f64 * self.h
    }

    /// Index of the node closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = ((x - self.a) / self.h).round() as i64 - 1;
        k.clamp(0, self.n as i64 - 1) as usize
    }
}

/// Values at the interior nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nodal quadrature `sum_i u_i w_i h`.
    pub fn weighted_integral(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let h = self.grid.h();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * weight(i) * h)
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.weighted_integral(|_| 1.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| f(u, v))
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Distance to the boundary at every interior node.
pub fn delta(grid: &Arc<Grid>) -> GridFunction {
    let values = (0..grid.len()).map(|i| grid.delta_at(i)).collect();
    GridFunction::from_parts_unchecked(grid.clone(), values)
}

/// `delta^beta`, optionally truncated from above at `cap`.
pub fn power_data(grid: &Arc<Grid>, beta: f64, cap: Option<f64>) -> Result<GridFunction> {
    if let Some(c) = cap {
        if !(c > 0.0) {
            return invalid(format!("cap must be positive, got {c}"));
        }
    }
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let v = grid.delta_at(i).powf(beta);
            match cap {
                Some(c) => v.min(c),
                None => v,
            }
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// Cap for `delta^beta` data that binds only on the `layer` nodes nearest
/// each endpoint. `None` for `beta >= 0` (nothing to cap).
pub fn layer_cap(grid: &Grid, beta: f64, layer: usize) -> Option<f64> {
    (beta < 0.0).then(|| (layer.max(1) as f64 * grid.h()).powf(beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(a, b, n).unwrap())
    }

    #[test]
    fn spacing_and_nodes() {
        let g = Grid::new(-1.0, 1.0, 9).unwrap();
        assert_eq!(g.h(), 0.2);
        assert!((g.h() * 10.0 - 2.0).abs() < 1e-15);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes().iter().all(|&x| x > -1.0 && x < 1.0));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1.0, 1.0, 4).is_err());
        assert!(Grid::new(0.0, 1.0, 0).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 3).is_err());
    }

    #[test]
    fn delta_examples() {
        let g = grid(-1.0, 1.0, 19);
        let d = delta(&g);
        // x = 0 is node 9, x = 0.9 is node 18
        assert!((g.nodes()[9]).abs() < 1e-15);
        assert!((d.values()[9] - 1.0).abs() < 1e-15);
        assert!((g.nodes()[18] - 0.9).abs() < 1e-12);
        assert!((d.values()[18] - 0.1).abs() < 1e-12);

        let g = grid(0.0, 2.0, 3);
        assert_eq!(g.nodes()[0], 0.5);
        assert_eq!(delta(&g).values()[0], 0.5);
    }

    #[test]
    fn delta_is_exactly_symmetric() {
        for n in [10, 11, 128, 255] {
            let g = grid(-1.0, 1.0, n);
            let d = delta(&g);
            let v = d.values();
            assert!(v.iter().all(|&x| x > 0.0));
            for i in 0..n {
                assert_eq!(v[i], v[n - 1 - i]);
            }
        }
    }

    #[test]
    fn power_data_examples() {
        let g = grid(-1.0, 1.0, 39);
        let one = power_data(&g, 0.0, None).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));

        // node 0 has delta = 0.05; 0.05^-1 = 20 capped at 10
        let p = power_data(&g, -1.0, Some(10.0)).unwrap();
        assert!((g.delta_at(0) - 0.05).abs() < 1e-15);
        assert_eq!(p.values()[0], 10.0);

        let q = power_data(&g, 0.75, None).unwrap();
        assert!((q.values()[19] - 1.0).abs() < 1e-15);

        assert!(power_data(&g, -1.0, Some(0.0)).is_err());
    }

    #[test]
    fn layer_cap_binds_on_layer_only() {
        let g = grid(-1.0, 1.0, 99);
        let cap = layer_cap(&g, -1.2, 2).unwrap();
        let p = power_data(&g, -1.2, Some(cap)).unwrap();
        for i in 2..97 {
            assert_eq!(p.values()[i], g.delta_at(i).powf(-1.2));
        }
        assert_eq!(p.values()[0], cap);
        assert!(layer_cap(&g, 0.5, 2).is_none());
    }

    #[test]
    fn grid_function_validates() {
        let g = grid(0.0, 1.0, 3);
        assert!(GridFunction::new(g.clone(), vec![1.0, 2.0]).is_err());
        assert_eq!(
            GridFunction::new(g.clone(), vec![1.0, f64::INFINITY, 0.0]),
            Err(Error::NonFinite(1))
        );
        let u = GridFunction::new(g, vec![1.0, 2.0, 3.0]).unwrap();
        assert!((u.integral() - 6.0 * 0.25).abs() < 1e-15);
    }
}
