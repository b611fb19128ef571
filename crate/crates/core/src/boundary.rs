//! Boundary rates: the exponent predictor, the sharp profile near the
//! boundary, log-log rate fits, gamma-normal derivatives and averaged traces.

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::operator::admissible;

/// `|beta - (gamma - 2s)|` below this counts as the borderline (log) case.
pub const LOG_TIE: f64 = 1e-12;

/// Predicted boundary exponent of `G(delta^beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPrediction {
    pub admissible: bool,
    pub alpha: Option<f64>,
    pub log_flag: bool,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        invalid(format!("{name} must lie in (0, 1], got {v}"))
    }
}

fn check_params(beta: f64, gamma: f64, s: f64) -> Result<()> {
    check_unit("gamma", gamma)?;
    check_unit("s", s)?;
    if !beta.is_finite() {
        return invalid(format!("beta must be finite, got {beta}"));
    }
    Ok(())
}

/// Exponent `alpha` with `G(delta^beta) ~ delta^alpha`, log-corrected on the
/// borderline `beta = gamma - 2s`.
pub fn predict_alpha(beta: f64, gamma: f64, s: f64) -> Result<AlphaPrediction> {
    check_params(beta, gamma, s)?;
    if !admissible(beta, gamma) {
        return Ok(AlphaPrediction {
            admissible: false,
            alpha: None,
            log_flag: false,
        });
    }
    let edge = gamma - 2.0 * s;
    let (alpha, log_flag) = if (beta - edge).abs() < LOG_TIE {
        (gamma, true)
    } else if beta < edge {
        (beta + 2.0 * s, false)
    } else {
        (gamma, false)
    };
    Ok(AlphaPrediction {
        admissible: true,
        alpha: Some(alpha),
        log_flag,
    })
}

/// Which of the three regimes `gamma` sits in relative to `s - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Below,
    Critical,
    Above,
}

pub fn regime(gamma: f64, s: f64) -> Regime {
    let d = gamma - (s - 0.5);
    if d.abs() < LOG_TIE {
        Regime::Critical
    } else if d < 0.0 {
        Regime::Below
    } else {
        Regime::Above
    }
}

/// Boundary exponent of the large solution `u*`: `(2s - gamma - 1) ^ gamma`.
pub fn predict_u_star_rate(gamma: f64, s: f64) -> Result<AlphaPrediction> {
    check_unit("gamma", gamma)?;
    check_unit("s", s)?;
    Ok(AlphaPrediction {
        admissible: true,
        alpha: Some((2.0 * s - gamma - 1.0).min(gamma)),
        log_flag: regime(gamma, s) == Regime::Critical,
    })
}

fn check_profile(beta: f64, gamma: f64, s: f64, eta: f64, delta: f64) -> Result<()> {
    check_params(beta, gamma, s)?;
    if !admissible(beta, gamma) {
        return invalid(format!("beta + gamma must exceed -1, got {}", beta + gamma));
    }
    if !(eta > 0.0 && delta > 0.0 && delta < 0.5 * eta) {
        return invalid(format!("need 0 < delta < eta/2, got delta={delta}, eta={eta}"));
    }
    Ok(())
}

/// The regime-dependent third term of the sharp profile.
pub fn predict_theta(beta: f64, gamma: f64, s: f64, eta: f64, delta: f64) -> Result<f64> {
    check_profile(beta, gamma, s, eta, delta)?;
    Ok(match regime(gamma, s) {
        Regime::Below => delta.powf(beta + 2.0 * gamma + 1.0),
        Regime::Critical => {
            delta.powf(beta + 2.0 * s) * delta.ln().abs()
                + eta.powf(beta + gamma + 1.0) * eta.ln().abs() * delta.powf(gamma)
        }
        Regime::Above => {
            let edge = gamma - 2.0 * s;
            if (beta - edge).abs() < LOG_TIE {
                delta.powf(beta + 2.0 * s) * (delta / eta).ln().abs()
            } else if beta < edge {
                0.0
            } else {
                eta.powf(beta + 2.0 * s - gamma) * delta.powf(gamma)
            }
        }
    })
}

/// `delta^{beta+2s} + eta^{beta+gamma+1} delta^gamma + Theta`, the two-sided
/// model for `G(delta^beta chi_{delta < eta})` near the boundary.
pub fn sharp_boundary_profile(beta: f64, gamma: f64, s: f64, eta: f64, delta: f64) -> Result<f64> {
    let theta = predict_theta(beta, gamma, s, eta, delta)?;
    Ok(delta.powf(beta + 2.0 * s) + eta.powf(beta + gamma + 1.0) * delta.powf(gamma) + theta)
}

/// Which boundary nodes enter a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Combined,
}

/// Regression model for `ln u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// Pick the better of the two by `r^2`, requiring the log model to win
    /// by at least [`LOG_SELECTION_MARGIN`].
    Auto,
    /// `ln u = c + alpha ln delta`.
    Power,
    /// `ln u = c + alpha ln delta + ln(1 + |ln delta|)`.
    PowerLog,
}

pub const LOG_SELECTION_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    /// Nodes nearest each endpoint left out of the fit.
    pub skip_nodes: usize,
    /// Largest `delta` used; `None` means a quarter of the half-width.
    pub delta_max: Option<f64>,
    pub min_nodes: usize,
    pub model: FitModel,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            skip_nodes: 2,
            delta_max: None,
            min_nodes: 6,
            model: FitModel::Auto,
        }
    }
}

impl FitWindow {
    pub fn with_model(mut self, model: FitModel) -> Self {
        self.model = model;
        self
    }

    fn delta_max(&self, grid: &Grid) -> f64 {
        self.delta_max.unwrap_or(0.125 * grid.width())
    }

    /// Node indices inside the window on `side`.
    pub fn indices(&self, grid: &Grid, side: Side) -> Vec<usize> {
        let n = grid.len();
        let dmax = self.delta_max(grid);
        let left = (self.skip_nodes..n).take_while(|&i| 2 * i + 1 < n && grid.delta_at(i) <= dmax);
        let right = (0..n - self.skip_nodes.min(n))
            .rev()
            .take_while(|&i| 2 * i + 1 > n && grid.delta_at(i) <= dmax);
        match side {
            Side::Left => left.collect(),
            Side::Right => right.collect(),
            Side::Combined => left.chain(right).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub alpha: f64,
    pub log_correction: bool,
    /// `r^2` of the selected model.
    pub r_squared: f64,
    pub r_squared_power: f64,
    pub r_squared_log: f64,
    pub window: (f64, f64),
    pub side: Side,
    pub nodes: usize,
}

struct LineFit {
    slope: f64,
    r_squared: f64,
}

/// Weighted least squares of `y` on `x`.
fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    LineFit {
        slope,
        r_squared: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 },
    }
}

/// Fits `u ~ delta^alpha` (optionally with a `|ln delta|` factor) over the
/// window. Samples are weighted by `1/delta`, i.e. uniformly in `ln delta`.
pub fn fit_boundary_rate(u: &GridFunction, side: Side, window: &FitWindow) -> Result<RateFit> {
    let grid = u.grid();
    let idx = window.indices(grid, side);
    if idx.len() < window.min_nodes.max(3) {
        return Err(Error::WindowTooSmall {
            found: idx.len(),
            required: window.min_nodes.max(3),
        });
    }
    let mut x = Vec::with_capacity(idx.len());
    let mut y = Vec::with_capacity(idx.len());
    let mut ylog = Vec::with_capacity(idx.len());
    let mut w = Vec::with_capacity(idx.len());
    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for &i in &idx {
        let v = u.values()[i];
        if !(v > 0.0) {
            return Err(Error::NonPositive { index: i, value: v });
        }
        let d = grid.delta_at(i);
        dmin = dmin.min(d);
        dmax = dmax.max(d);
        let ld = d.ln();
        x.push(ld);
        y.push(v.ln());
        ylog.push(v.ln() - (1.0 + ld.abs()).ln());
        w.push(1.0 / d);
    }
    let power = weighted_line(&x, &y, &w);
    let log = weighted_line(&x, &ylog, &w);
    // the log model is scored against the variance of ln u, like the power one
    let syy = {
        let sw: f64 = w.iter().sum();
        let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        y.iter().zip(&w).map(|(a, b)| b * (a - my).powi(2)).sum::<f64>()
    };
    let r2_log = if syy > 0.0 {
        let sw: f64 = w.iter().sum();
        let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let my = ylog.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let res: f64 = (0..x.len())
            .map(|i| w[i] * (ylog[i] - my - log.slope * (x[i] - mx)).powi(2))
            .sum();
        1.0 - res / syy
    } else {
        log.r_squared
    };
    let use_log = match window.model {
        FitModel::Power => false,
        FitModel::PowerLog => true,
        FitModel::Auto => r2_log > power.r_squared + LOG_SELECTION_MARGIN,
    };
    let (alpha, r_squared) = if use_log {
        (log.slope, r2_log)
    } else {
        (power.slope, power.r_squared)
    };
    Ok(RateFit {
        alpha,
        log_correction: use_log,
        r_squared,
        r_squared_power: power.r_squared,
        r_squared_log: r2_log,
        window: (dmin, dmax),
        side,
        nodes: idx.len(),
    })
}

/// Extrapolation of `u / delta^gamma` to the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    /// Least-squares line through three nodes, evaluated at `delta = 0`.
    pub value: f64,
    /// Line through the two nodes nearest the boundary.
    pub two_point: f64,
    /// `|value - two_point| / |value|`.
    pub spread: f64,
}

impl Extrapolation {
    pub fn resolved(&self) -> bool {
        self.spread <= 0.5
    }
}

/// Linear-in-`delta` extrapolation of three `(delta, ratio)` samples ordered
/// from the boundary inward.
pub fn extrapolate_to_boundary(samples: [(f64, f64); 3]) -> Extrapolation {
    let mx = samples.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = samples.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxx: f64 = samples.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let value = my - sxy / sxx * mx;
    let (d1, r1) = samples[0];
    let (d2, r2) = samples[1];
    let two_point = r1 - (r2 - r1) / (d2 - d1) * d1;
    let spread = if value != 0.0 {
        (value - two_point).abs() / value.abs()
    } else if two_point == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Extrapolation {
        value,
        two_point,
        spread,
    }
}

/// Indices of the second, third and fourth nodes from the endpoint.
pub fn extrapolation_stencil(grid: &Grid, side: Side) -> Result<[usize; 3]> {
    let n = grid.len();
    if n < 8 {
        return invalid(format!("need at least 8 nodes for boundary extrapolation, got {n}"));
    }
    match side {
        Side::Left => Ok([1, 2, 3]),
        Side::Right => Ok([n - 2, n - 3, n - 4]),
        Side::Combined => invalid("extrapolation needs a single endpoint"),
    }
}

/// The gamma-normal derivative: the boundary limit of `u / delta^gamma`.
/// Fails when the two- and three-node extrapolations disagree by over 50%.
pub fn d_gamma(u: &GridFunction, gamma: f64, side: Side) -> Result<Extrapolation> {
    let grid = u.grid();
    let st = extrapolation_stencil(grid, side)?;
    let samples = st.map(|i| {
        let d = grid.delta_at(i);
        (d, u.values()[i] / d.powf(gamma))
    });
    let e = extrapolate_to_boundary(samples);
    if !e.resolved() {
        return Err(Error::UnresolvedBoundaryLayer(format!(
            "extrapolations {} and {} disagree; refine the grid",
            e.value, e.two_point
        )));
    }
    Ok(e)
}

/// Strip average of `|u|` against the regime-dependent weight, over both
/// endpoint strips `{delta < eta}`.
pub fn averaged_trace(u: &GridFunction, gamma: f64, s: f64, eta: f64) -> Result<f64> {
    let grid = u.grid();
    let h = grid.h();
    if !(eta >= 3.0 * h) {
        return invalid(format!("eta = {eta} must be at least 3h = {}", 3.0 * h));
    }
    let reg = regime(gamma, s);
    let exponent = match reg {
        Regime::Above => 2.0 * s - gamma - 1.0,
        Regime::Critical | Regime::Below => gamma,
    };
    let mut sum = 0.0;
    let mut count = 0;
    for (i, v) in u.values().iter().enumerate() {
        let d = grid.delta_at(i);
        if d < eta {
            sum += v.abs() / d.powf(exponent) * h;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyStrip(eta));
    }
    let mut out = sum / eta;
    if reg == Regime::Critical {
        out /= eta.ln().abs();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use proptest::prelude::*;

    use crate::grid::delta;

    #[test]
    fn predictor_examples() {
        let p = predict_alpha(0.0, 1.0, 0.75).unwrap();
        assert_eq!((p.alpha, p.log_flag), (Some(1.0), false));
        let p = predict_alpha(-1.5, 0.75, 0.75).unwrap();
        assert!(p.admissible);
        assert!(p.alpha.unwrap().abs() < 1e-15);
        let p = predict_alpha(-2.0 * 0.6, 0.6, 0.6).unwrap();
        assert!(p.alpha.unwrap().abs() < 1e-15);
        let p = predict_alpha(-2.0, 0.75, 0.75).unwrap();
        assert!(!p.admissible && p.alpha.is_none());
        let p = predict_alpha(0.75 - 1.5, 0.75, 0.75).unwrap();
        assert_eq!((p.alpha, p.log_flag), (Some(0.75), true));
        assert!(predict_alpha(0.0, 1.5, 0.5).is_err());
    }

    #[test]
    fn u_star_examples() {
        let r = predict_u_star_rate(0.75, 0.75).unwrap();
        assert!((r.alpha.unwrap() + 0.25).abs() < 1e-15);
        let r = predict_u_star_rate(1.0, 0.75).unwrap();
        assert!((r.alpha.unwrap() + 0.5).abs() < 1e-15);
        let r = predict_u_star_rate(0.5, 0.75).unwrap();
        assert!(r.alpha.unwrap().abs() < 1e-15);
        assert!(!r.log_flag);
        let r = predict_u_star_rate(0.25, 0.75).unwrap();
        assert!(r.log_flag);
        assert!((r.alpha.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn theta_branches() {
        assert_eq!(predict_theta(-1.0, 0.75, 0.75, 0.1, 0.01).unwrap(), 0.0);
        let eta = 0.2;
        let d = eta / 4.0;
        let t = predict_theta(0.0, 0.25, 0.75, eta, d).unwrap();
        assert!(d.powf(1.5) * d.ln().abs() > 0.0 && t > d.powf(1.5) * d.ln().abs());
        let g = 0.1;
        let t = predict_theta(-g, g, 0.9, 0.1, 0.01).unwrap();
        assert!((t - 0.01f64.powf(g + 1.0)).abs() < 1e-15);
        assert!(predict_theta(0.0, 0.5, 0.5, 0.1, 0.06).is_err());
        assert!(predict_theta(-2.0, 0.5, 0.5, 0.1, 0.01).is_err());
    }

    #[test]
    fn profile_limit_over_delta_gamma() {
        let (beta, gamma, s, eta) = (0.0, 0.75, 0.75, 0.1);
        let d = 1e-12;
        let r = sharp_boundary_profile(beta, gamma, s, eta, d).unwrap() / d.powf(gamma);
        let limit = eta.powf(beta + gamma + 1.0) + eta.powf(beta + 2.0 * s - gamma);
        assert!((r - limit).abs() < 1e-6 * limit);
    }

    /// Local log-log slope of the profile at `d`.
    fn profile_slope(beta: f64, gamma: f64, s: f64, d: f64) -> f64 {
        let p = |x: f64| sharp_boundary_profile(beta, gamma, s, 0.1, x).unwrap().ln();
        (p(d * 1.01) - p(d)) / 1.01f64.ln()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn predictor_matches_profile_asymptotics(
            s in 0.05f64..1.0,
            gamma in 0.05f64..1.0,
            lift in 0.02f64..2.0,
        ) {
            let beta = -1.0 - gamma + lift;
            let pred = predict_alpha(beta, gamma, s).unwrap();
            prop_assume!((beta - (gamma - 2.0 * s)).abs() > 0.05);
            prop_assume!((gamma - (s - 0.5)).abs() > 0.05);
            let alpha = pred.alpha.unwrap();
            let slope = profile_slope(beta, gamma, s, 1e-60);
            prop_assert!((slope - alpha).abs() < 0.03, "slope {} alpha {}", slope, alpha);
        }
    }

    #[test]
    fn borderline_profile_carries_log() {
        let (gamma, s) = (0.75, 0.75);
        let beta = gamma - 2.0 * s;
        let p = predict_alpha(beta, gamma, s).unwrap();
        assert!(p.log_flag);
        let r = |d: f64| sharp_boundary_profile(beta, gamma, s, 0.1, d).unwrap() / d.powf(gamma);
        // grows like |ln delta|
        assert!((r(1e-80) / r(1e-40) - 2.0).abs() < 0.1);
    }

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::symmetric(n).unwrap())
    }

    #[test]
    fn fit_pure_power() {
        let g = grid(2047);
        let d = delta(&g);
        let u = d.map(|x| x.powf(0.5)).unwrap();
        for side in [Side::Left, Side::Right, Side::Combined] {
            let f = fit_boundary_rate(&u, side, &FitWindow::default()).unwrap();
            assert!((f.alpha - 0.5).abs() < 1e-6, "{f:?}");
            assert!(!f.log_correction);
        }
    }

    #[test]
    fn fit_power_log() {
        let g = grid(2047);
        let u = delta(&g).map(|x| x.powf(0.75) * (1.0 + x.ln().abs())).unwrap();
        let f = fit_boundary_rate(&u, Side::Combined, &FitWindow::default()).unwrap();
        assert!(f.log_correction, "{f:?}");
        assert!((f.alpha - 0.75).abs() < 0.05);
    }

    #[test]
    fn fit_window_errors() {
        let g = grid(20);
        let u = delta(&g);
        assert!(matches!(
            fit_boundary_rate(&u, Side::Left, &FitWindow::default()),
            Err(Error::WindowTooSmall { .. })
        ));
        let g = grid(255);
        let mut v = delta(&g).into_values();
        v[5] = -1.0;
        let u = GridFunction::new(g, v).unwrap();
        assert!(matches!(
            fit_boundary_rate(&u, Side::Left, &FitWindow::default()),
            Err(Error::NonPositive { index: 5, .. })
        ));
    }

    #[test]
    fn window_respects_skip_and_cap() {
        let g = Grid::symmetric(199).unwrap();
        let w = FitWindow::default();
        let left = w.indices(&g, Side::Left);
        assert_eq!(left[0], 2);
        assert!(left.iter().all(|&i| g.delta_at(i) <= 0.25 + 1e-12));
        let right = w.indices(&g, Side::Right);
        assert_eq!(right.len(), left.len());
        assert_eq!(right[0], 196);
    }

    #[test]
    fn d_gamma_of_exact_power() {
        let g = grid(255);
        let u = delta(&g).map(|x| 3.0 * x.powf(0.4)).unwrap();
        for side in [Side::Left, Side::Right] {
            let e = d_gamma(&u, 0.4, side).unwrap();
            assert!((e.value - 3.0).abs() < 1e-12);
        }
        assert!(d_gamma(&u, 0.4, Side::Combined).is_err());
    }

    #[test]
    fn d_gamma_flags_unresolved_layer() {
        let g = grid(255);
        // oscillating ratio makes the two extrapolations disagree
        let v: Vec<f64> = (0..255)
            .map(|i| g.delta_at(i) * if i % 2 == 0 { 1.0 } else { 5.0 })
            .collect();
        let u = GridFunction::new(g, v).unwrap();
        assert!(matches!(
            d_gamma(&u, 1.0, Side::Left),
            Err(Error::UnresolvedBoundaryLayer(_))
        ));
    }

    #[test]
    fn averaged_trace_branches() {
        let g = grid(1023);
        let d = delta(&g);
        // u = delta^{2s - gamma - 1} makes the integrand 1: value ~ 2
        let (gamma, s) = (0.75, 0.75);
        let u = d.map(|x| x.powf(2.0 * s - gamma - 1.0)).unwrap();
        let t = averaged_trace(&u, gamma, s, 0.1).unwrap();
        assert!((t - 2.0).abs() < 0.05, "{t}");
        assert!(averaged_trace(&u, gamma, s, 1e-4).is_err());
        let crit = averaged_trace(&d.map(|x| x.powf(0.25)).unwrap(), 0.25, 0.75, 0.1).unwrap();
        assert!((crit - 2.0 / 0.1f64.ln().abs()).abs() < 0.05);
    }
}
