//! Boundary (Martin) kernels from Green columns, the large solution `u*`,
//! concentrating data sequences and boundary-trace checks.
//!
//! The boundary of an interval is the two-point set `{a, b}` with counting
//! measure, so boundary integrals are two-term sums and `|boundary| = 2`.

use std::sync::Arc;

use crate::boundary::{extrapolate_to_boundary, extrapolation_stencil, regime, Regime, Side};
use crate::error::{invalid, Error, Result};
use crate::green::GreenMatrix;
use crate::grid::{Grid, GridFunction};
use crate::operator::OperatorSpec;

/// Measure of the boundary of an interval.
pub const BOUNDARY_MEASURE: f64 = 2.0;

/// Fraction of columns allowed an unresolved extrapolation.
pub const MAX_UNRESOLVED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct MartinDiagnostics {
    /// Per-column relative spread between the two- and three-node
    /// extrapolations at `a`.
    pub left_spread: Vec<f64>,
    pub right_spread: Vec<f64>,
    /// Share of columns (both ends) with spread above 50%.
    pub unresolved_fraction: f64,
}

/// `D_gamma G(z, .)` for `z = a` (left) and `z = b` (right).
#[derive(Debug, Clone)]
pub struct MartinKernel {
    spec: OperatorSpec,
    grid: Arc<Grid>,
    left: GridFunction,
    right: GridFunction,
    diagnostics: MartinDiagnostics,
}

impl MartinKernel {
    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn left(&self) -> &GridFunction {
        &self.left
    }

    pub fn right(&self) -> &GridFunction {
        &self.right
    }

    pub fn diagnostics(&self) -> &MartinDiagnostics {
        &self.diagnostics
    }

    /// `u* = D_gamma G(a, .) + D_gamma G(b, .)`.
    pub fn u_star(&self) -> GridFunction {
        self.solve(1.0, 1.0)
    }

    /// `h_left D_gamma G(a, .) + h_right D_gamma G(b, .)`.
    pub fn solve(&self, h_left: f64, h_right: f64) -> GridFunction {
        let v = self
            .left
            .values()
            .iter()
            .zip(self.right.values())
            .map(|(l, r)| h_left * l + h_right * r)
            .collect();
        GridFunction::from_parts_unchecked(self.grid.clone(), v)
    }

    /// `sum_j D_gamma G(z, y_j) f_j h`, the boundary derivative of `G(f)`.
    pub fn dual(&self, f: &GridFunction, side: Side) -> Result<f64> {
        let k = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
            Side::Combined => return invalid("dual pairing needs a single endpoint"),
        };
        if f.len() != k.len() {
            return Err(Error::ShapeMismatch {
                expected: k.len(),
                got: f.len(),
            });
        }
        let h = self.grid.h();
        Ok(k.values().iter().zip(f.values()).map(|(a, b)| a * b * h).sum())
    }

    /// Extremes over `y` of `left(y) |a - y|^{1-2s+2gamma} / delta(y)^gamma`.
    pub fn shape_bounds(&self) -> (f64, f64) {
        let (s, gamma) = (self.spec.s(), self.spec.gamma());
        let g = &self.grid;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (i, v) in self.left.values().iter().enumerate() {
            let dist = (i + 1) as f64 * g.h();
            let r = v * dist.powf(1.0 - 2.0 * s + 2.0 * gamma) / g.delta_at(i).powf(gamma);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

/// Extrapolates each Green column divided by `delta^gamma` to both endpoints.
pub fn martin_kernel(g: &GreenMatrix) -> Result<MartinKernel> {
    let grid = g.grid().clone();
    let gamma = g.spec().gamma();
    let n = grid.len();
    let k = g.kernel();
    let mut sides = Vec::with_capacity(2);
    for side in [Side::Left, Side::Right] {
        let st = extrapolation_stencil(&grid, side)?;
        let w = st.map(|i| {
            let d = grid.delta_at(i);
            (d, d.powf(gamma))
        });
        let mut values = Vec::with_capacity(n);
        let mut spread = Vec::with_capacity(n);
        for j in 0..n {
            let samples = [0, 1, 2].map(|m| (w[m].0, k[(st[m], j)] / w[m].1));
            let e = extrapolate_to_boundary(samples);
            values.push(e.value);
            spread.push(e.spread);
        }
        sides.push((values, spread));
    }
    let (right, right_spread) = sides.pop().expect("two sides");
    let (left, left_spread) = sides.pop().expect("two sides");
    let bad = left_spread
        .iter()
        .chain(&right_spread)
        .filter(|&&s| !(s <= 0.5))
        .count();
    let unresolved_fraction = bad as f64 / (2 * n) as f64;
    if unresolved_fraction > MAX_UNRESOLVED_FRACTION {
        return Err(Error::UnresolvedBoundaryLayer(format!(
            "{:.1}% of columns have extrapolation spread above 50%; refine the grid",
            100.0 * unresolved_fraction
        )));
    }
    let left = GridFunction::new(grid.clone(), left)?;
    let right = GridFunction::new(grid.clone(), right)?;
    Ok(MartinKernel {
        spec: *g.spec(),
        grid,
        left,
        right,
        diagnostics: MartinDiagnostics {
            left_spread,
            right_spread,
            unresolved_fraction,
        },
    })
}

/// Normalisation of the concentrating data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concentration {
    /// `(j/2)^{1+gamma}` on the strip.
    PowerOfJ,
    /// `|boundary| / (|A_j| delta^gamma)` on the strip, with `|A_j|` the
    /// discrete strip length; the weighted mass is then exactly 2.
    Exact,
}

/// Nodes of `A_j = {1/j < delta < 2/j}`.
pub fn strip_nodes(grid: &Grid, j: u32) -> Vec<usize> {
    let (lo, hi) = (1.0 / j as f64, 2.0 / j as f64);
    (0..grid.len())
        .filter(|&i| {
            let d = grid.delta_at(i);
            d > lo && d < hi
        })
        .collect()
}

/// Data concentrating on the boundary strip `A_j`.
pub fn concentration_sequence(
    grid: &Arc<Grid>,
    gamma: f64,
    j: u32,
    form: Concentration,
) -> Result<GridFunction> {
    if j == 0 || 2.0 / j as f64 >= 0.5 * grid.width() {
        return invalid(format!("strip 2/j must be below the half-width, got j = {j}"));
    }
    let nodes = strip_nodes(grid, j);
    let n = grid.len();
    let per_side = nodes.iter().filter(|&&i| 2 * i + 1 < n).count();
    if per_side < 2 || nodes.len() - per_side < 2 {
        return invalid(format!(
            "strip for j = {j} holds fewer than 2 nodes per side at h = {}",
            grid.h()
        ));
    }
    let mut v = vec![0.0; n];
    let measure = nodes.len() as f64 * grid.h();
    for &i in &nodes {
        v[i] = match form {
            Concentration::PowerOfJ => (0.5 * j as f64).powf(1.0 + gamma),
            Concentration::Exact => BOUNDARY_MEASURE / (measure * grid.delta_at(i).powf(gamma)),
        };
    }
    GridFunction::new(grid.clone(), v)
}

/// Nodes of the compact set `{delta > 0.25}` used to compare iterates.
pub fn interior_compact(grid: &Grid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.delta_at(i) > 0.25).collect()
}

fn max_on(u: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| u[i].abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct MartinLimit {
    pub j_list: Vec<u32>,
    pub iterates: Vec<GridFunction>,
    pub u_star: GridFunction,
    /// `max |u_{j_{k+1}} - u_{j_k}|` on the compact.
    pub cauchy: Vec<f64>,
    pub cauchy_decreasing: bool,
    /// `max |u_{j_max} - u*| / max |u*|` on the compact.
    pub relative_difference: f64,
}

/// Solves with concentrating data along `j_list` and compares the last
/// iterate with `u*` on `{delta > 0.25}`.
pub fn martin_limit(
    g: &GreenMatrix,
    martin: &MartinKernel,
    j_list: &[u32],
    form: Concentration,
) -> Result<MartinLimit> {
    if j_list.is_empty() {
        return invalid("j list is empty");
    }
    let grid = g.grid();
    let gamma = g.spec().gamma();
    let compact = interior_compact(grid);
    if compact.is_empty() {
        return invalid("the compact {delta > 0.25} holds no nodes");
    }
    let iterates = j_list
        .iter()
        .map(|&j| g.solve(&concentration_sequence(grid, gamma, j, form)?))
        .collect::<Result<Vec<_>>>()?;
    let cauchy: Vec<f64> = iterates
        .windows(2)
        .map(|w| {
            let d: Vec<f64> = w[1]
                .values()
                .iter()
                .zip(w[0].values())
                .map(|(p, q)| p - q)
                .collect();
            max_on(&d, &compact)
        })
        .collect();
    let cauchy_decreasing = cauchy.windows(2).all(|w| w[1] < w[0]);
    let u_star = martin.u_star();
    let last = iterates.last().expect("non-empty");
    let diff: Vec<f64> = last
        .values()
        .iter()
        .zip(u_star.values())
        .map(|(p, q)| p - q)
        .collect();
    let relative_difference = max_on(&diff, &compact) / max_on(u_star.values(), &compact);
    Ok(MartinLimit {
        j_list: j_list.to_vec(),
        iterates,
        u_star,
        cauchy,
        cauchy_decreasing,
        relative_difference,
    })
}

/// Boundary limits of `u / u*` at the two endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseTrace {
    pub left_limit: f64,
    pub right_limit: f64,
    pub left_error: f64,
    pub right_error: f64,
}

/// Test functions for the averaged trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    One,
    Coordinate,
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Coordinate => x,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::One => "1",
            TestFunction::Coordinate => "x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedTrace {
    pub eta: f64,
    pub phi: TestFunction,
    /// Mean of `(u/u*) phi` over `{delta < eta}` times `|boundary|`, so that
    /// `u = u*`, `phi = 1` gives exactly 2.
    pub value: f64,
    /// `h(a) phi(a) + h(b) phi(b)`.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    /// Present only when `gamma > s - 1/2`.
    pub pointwise: Option<PointwiseTrace>,
    pub averaged: Vec<AveragedTrace>,
}

fn ratio(u: &GridFunction, u_star: &GridFunction) -> Result<Vec<f64>> {
    if u.len() != u_star.len() {
        return Err(Error::ShapeMismatch {
            expected: u_star.len(),
            got: u.len(),
        });
    }
    u.values()
        .iter()
        .zip(u_star.values())
        .enumerate()
        .map(|(i, (p, q))| {
            if *q > 0.0 && q.is_finite() {
                Ok(p / q)
            } else {
                Err(Error::NonPositive { index: i, value: *q })
            }
        })
        .collect()
}

/// Boundary behaviour of `u / u*` against the data `h = (h_left, h_right)`.
pub fn check_martin_trace(
    u: &GridFunction,
    u_star: &GridFunction,
    h: (f64, f64),
    spec: &OperatorSpec,
    etas: &[f64],
) -> Result<TraceReport> {
    let grid = u.grid();
    let r = ratio(u, u_star)?;
    let pointwise = if regime(spec.gamma(), spec.s()) == Regime::Above {
        let limit = |side| -> Result<f64> {
            let st = extrapolation_stencil(grid, side)?;
            Ok(extrapolate_to_boundary(st.map(|i| (grid.delta_at(i), r[i]))).value)
        };
        let (l, rr) = (limit(Side::Left)?, limit(Side::Right)?);
        Some(PointwiseTrace {
            left_limit: l,
            right_limit: rr,
            left_error: (l - h.0).abs(),
            right_error: (rr - h.1).abs(),
        })
    } else {
        None
    };
    let mut averaged = Vec::new();
    for &eta in etas {
        if !(eta >= 3.0 * grid.h()) {
            return invalid(format!("eta = {eta} must be at least 3h"));
        }
        for phi in [TestFunction::One, TestFunction::Coordinate] {
            let strip: Vec<usize> = (0..grid.len()).filter(|&i| grid.delta_at(i) < eta).collect();
            let sum: f64 = strip.iter().map(|&i| r[i] * phi.eval(grid.nodes()[i])).sum();
            averaged.push(AveragedTrace {
                eta,
                phi,
                // the discrete strip length stands in for 2 eta
                value: BOUNDARY_MEASURE * sum / strip.len() as f64,
                expected: h.0 * phi.eval(grid.a()) + h.1 * phi.eval(grid.b()),
            });
        }
    }
    Ok(TraceReport {
        pointwise,
        averaged,
    })
}

/// `|A_j|^{-1} sum_{A_j} (u / delta^gamma) H h`, with `H` equal to
/// `h_left` on the left half and `h_right` on the right half.
pub fn strip_average(u: &GridFunction, gamma: f64, j: u32, h: (f64, f64)) -> Result<f64> {
    let grid = u.grid();
    let nodes = strip_nodes(grid, j);
    if nodes.is_empty() {
        return Err(Error::EmptyStrip(2.0 / j as f64));
    }
    let n = grid.len();
    let sum: f64 = nodes
        .iter()
        .map(|&i| {
            let hz = if 2 * i + 1 < n { h.0 } else { h.1 };
            u.values()[i] / grid.delta_at(i).powf(gamma) * hz
        })
        .sum();
    Ok(sum / nodes.len() as f64)
}
