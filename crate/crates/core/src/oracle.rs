//! Grid-free reference values by adaptive quadrature: integrals of the model
//! Green kernel against boundary powers, and a principal-value evaluator for
//! the restricted fractional Laplacian in one dimension.

use crate::boundary::{regime, sharp_boundary_profile, Regime};
use crate::discrete::rfl_constant;
use crate::error::{invalid, Error, Result};
use crate::operator::admissible;
use crate::quad::{integrate_from_singularity, integrate_panel, Estimate, Tolerance};

/// `|x-y|^{2s-1} min(dx dy / |x-y|^2, 1)^gamma` from the separation and the
/// two boundary distances.
pub fn model_kernel_value(dist: f64, dx: f64, dy: f64, s: f64, gamma: f64) -> f64 {
    let ratio = (dx * dy / (dist * dist)).min(1.0);
    dist.powf(2.0 * s - 1.0) * ratio.powf(gamma)
}

/// Parameters of the model kernel on `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelKernelParams {
    pub s: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    /// Set when `2s > 1`: the kernel is then a formal model rather than a
    /// Green function in one dimension.
    pub formal: bool,
}

impl ModelKernelParams {
    /// Requires `s` in `(0, 1/2]` and `gamma` in `(0, 1]`.
    pub fn new(s: f64, gamma: f64, a: f64, b: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 0.5) {
            return invalid(format!(
                "model kernel needs s in (0, 1/2] in one dimension, got {s}; use ModelKernelParams::formal"
            ));
        }
        Self::formal(s, gamma, a, b).map(|p| Self { formal: false, ..p })
    }

    /// Accepts any `s` in `(0, 1)`, flagging `2s > 1` as formal.
    pub fn formal(s: f64, gamma: f64, a: f64, b: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return invalid(format!("s must lie in (0, 1), got {s}"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return invalid(format!("gamma must lie in (0, 1], got {gamma}"));
        }
        if !(a < b) {
            return invalid(format!("interval ({a}, {b}) must satisfy a < b"));
        }
        Ok(Self {
            s,
            gamma,
            a,
            b,
            formal: 2.0 * s > 1.0,
        })
    }

    pub fn delta(&self, x: f64) -> f64 {
        (x - self.a).min(self.b - x)
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }
}

pub fn model_kernel(x: f64, y: f64, p: &ModelKernelParams) -> Result<f64> {
    if x == y {
        return Err(Error::SingularPoint(x));
    }
    Ok(model_kernel_value(
        (x - y).abs(),
        p.delta(x),
        p.delta(y),
        p.s,
        p.gamma,
    ))
}

/// Points where `delta(x) delta(y) = |x - y|^2`, i.e. where the model kernel
/// changes form.
fn switch_points(p: &ModelKernelParams, x: f64) -> Vec<f64> {
    let dx = p.delta(x);
    let mid = 0.5 * (p.a + p.b);
    let (la, lb) = (x - p.a, p.b - x);
    let root = |c: f64| (dx * dx + 4.0 * dx * c).sqrt();
    let candidates = [
        (x - 0.5 * (root(la) - dx), true),
        (x - 0.5 * (root(lb) + dx), false),
        (x + 0.5 * (root(la) + dx), true),
        (x + 0.5 * (root(lb) - dx), false),
    ];
    candidates
        .into_iter()
        .filter(|&(y, from_left)| y > p.a && y < p.b && (y <= mid) == from_left)
        .map(|(y, _)| y)
        .collect()
}

/// `int G_model(x, y) delta(y)^beta chi_{delta(y) < eta} dy`.
pub fn quad_green_apply(
    p: &ModelKernelParams,
    beta: f64,
    eta: Option<f64>,
    x: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    if !admissible(beta, p.gamma) {
        return invalid(format!("beta + gamma must exceed -1, got {}", beta + p.gamma));
    }
    if !(x > p.a && x < p.b) {
        return invalid(format!("x = {x} must lie inside ({}, {})", p.a, p.b));
    }
    let mut pts = vec![p.a, p.b, x, 0.5 * (p.a + p.b)];
    pts.extend(switch_points(p, x));
    if let Some(e) = eta {
        if !(e > 0.0) {
            return invalid(format!("eta must be positive, got {e}"));
        }
        if e < p.half_width() {
            pts.push(p.a + e);
            pts.push(p.b - e);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let diag_exp = (2.0 * p.s - 1.0 < 0.0).then_some(2.0 * p.s - 1.0);
    let end_exp = (beta + p.gamma < 0.0).then_some(beta + p.gamma);
    let exp_at = |y: f64| {
        if y == x {
            diag_exp
        } else if y == p.a || y == p.b {
            end_exp
        } else {
            None
        }
    };
    let dx = p.delta(x);
    let tol = Tolerance::relative(rel_tol);
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let panel_mid = 0.5 * (lo + hi);
        if eta.is_some_and(|e| p.delta(panel_mid) >= e) {
            continue;
        }
        // distances measured from the panel ends keep full precision near
        // the boundary and near the diagonal
        let f = |y: f64, dl: f64, dr: f64| {
            let dy = ((lo - p.a) + dl).min((p.b - hi) + dr);
            let dist = if lo == x {
                dl
            } else if hi == x {
                dr
            } else {
                (x - y).abs()
            };
            if dy <= 0.0 || dist <= 0.0 {
                return 0.0;
            }
            model_kernel_value(dist, dx, dy, p.s, p.gamma) * dy.powf(beta)
        };
        let e = integrate_panel(f, lo, hi, exp_at(lo), exp_at(hi), tol)?;
        total.value += e.value;
        total.error += e.error;
        total.intervals += e.intervals;
    }
    Ok(total)
}

/// Extremes of the oracle-to-profile ratio near the boundary, and the
/// interior bounds away from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileComparison {
    pub c_low: f64,
    pub c_high: f64,
    /// `max` of the oracle over `delta(x) >= eta/2`.
    pub interior_max: f64,
    /// `max` of `oracle / (eta^{beta+gamma+1} delta^gamma)` over
    /// `delta(x) >= eta/2`, only below the critical `gamma`.
    pub interior_ratio: Option<f64>,
    pub formal: bool,
    pub samples: usize,
}

impl ProfileComparison {
    pub fn spread(&self) -> f64 {
        self.c_high / self.c_low
    }
}

/// Compares `quad_green_apply(p, beta, eta, .)` with the sharp profile on a
/// geometric sequence of points with `delta(x) < eta/2` next to `a`.
pub fn oracle_vs_profile(
    p: &ModelKernelParams,
    beta: f64,
    eta: f64,
    rel_tol: f64,
) -> Result<ProfileComparison> {
    if !(eta > 0.0 && eta < 0.5 * p.half_width()) {
        return invalid(format!(
            "eta must lie in (0, {}), got {eta}",
            0.5 * p.half_width()
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut samples = 0;
    for k in 1..=24 {
        let d = 0.5 * eta * 0.5f64.powf(0.5 * k as f64);
        let g = quad_green_apply(p, beta, Some(eta), p.a + d, rel_tol)?.value;
        let m = sharp_boundary_profile(beta, p.gamma, p.s, eta, d)?;
        let r = g / m;
        lo = lo.min(r);
        hi = hi.max(r);
        samples += 1;
    }
    let below = regime(p.gamma, p.s) == Regime::Below;
    let mut interior_max: f64 = 0.0;
    let mut interior_ratio: f64 = 0.0;
    let half = p.half_width();
    for k in 0..12 {
        let d = 0.5 * eta + (half - 0.5 * eta) * k as f64 / 11.0;
        let g = quad_green_apply(p, beta, Some(eta), p.a + d, rel_tol)?.value;
        interior_max = interior_max.max(g);
        interior_ratio = interior_ratio.max(g / (eta.powf(beta + p.gamma + 1.0) * d.powf(p.gamma)));
    }
    Ok(ProfileComparison {
        c_low: lo,
        c_high: hi,
        interior_max,
        interior_ratio: below.then_some(interior_ratio),
        formal: p.formal,
        samples,
    })
}

/// Controls for [`quad_rfl_apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RflQuadOptions {
    pub rel_tol: f64,
    /// Power-law exponent of `u` at the endpoints when it is singular there.
    pub endpoint_exponent: Option<f64>,
    /// Below `inner_fraction * delta(x)` the second difference is replaced by
    /// its Taylor term to avoid cancellation.
    pub inner_fraction: f64,
}

impl Default for RflQuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            endpoint_exponent: None,
            inner_fraction: 1e-3,
        }
    }
}

/// `(-Delta)^s u (x)` together with the size of the competing contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RflValue {
    pub value: f64,
    /// `c_{1,s} int |integrand|`; when the result nearly cancels, each of
    /// the two competing parts has about half this size.
    pub magnitude: f64,
}

impl RflValue {
    /// Size of either of two nearly cancelling parts.
    pub fn one_sided_scale(&self) -> f64 {
        0.5 * self.magnitude
    }
}

/// `c_{1,s} int_0^inf (2u(x) - u(x+t) - u(x-t)) / t^{1+2s} dt` for `u`
/// vanishing outside `(a, b)`. `u` is never evaluated outside `(a, b)`.
pub fn quad_rfl_apply(
    u: impl Fn(f64) -> f64,
    x: f64,
    s: f64,
    a: f64,
    b: f64,
    opts: RflQuadOptions,
) -> Result<RflValue> {
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("s must lie in (0, 1), got {s}"));
    }
    if !(x > a && x < b) {
        return invalid(format!("x = {x} must lie inside ({a}, {b})"));
    }
    let c = rfl_constant(s);
    let ux = u(x);
    let near_left = x - a <= b - x;
    let d1 = (x - a).min(b - x);
    let d2 = (x - a).max(b - x);
    let t0 = opts.inner_fraction * d1;
    let kernel = |t: f64| t.powf(-1.0 - 2.0 * s);
    // u at distance r from the near or the far endpoint
    let near = |r: f64| if near_left { u(a + r) } else { u(b - r) };
    let far = |r: f64| if near_left { u(b - r) } else { u(a + r) };
    let inside = |t: f64| if near_left { u(x + t) } else { u(x - t) };
    let paired = |t: f64, r_near: f64| (2.0 * ux - inside(t) - near(r_near)) * kernel(t);
    let one_sided = |r_far: f64, t: f64| (2.0 * ux - far(r_far)) * kernel(t);

    let inner_second_diff = 2.0 * ux - inside(t0) - near(d1 - t0);
    let inner = inner_second_diff / (t0 * t0) * t0.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let tail = ux * d2.powf(-2.0 * s) / s;

    let mid_exp = opts.endpoint_exponent.filter(|&p| p < 0.0);
    let run = |abs_mode: bool, tol: Tolerance| -> Result<f64> {
        let m = |v: f64| if abs_mode { v.abs() } else { v };
        let e1 = integrate_panel(
            |t, _, dr| m(paired(t, dr)),
            t0,
            d1,
            None,
            mid_exp,
            tol,
        )?;
        let e2 = if d2 > d1 {
            integrate_from_singularity(|r| m(one_sided(r, d2 - r)), d2 - d1, mid_exp, tol)?
        } else {
            Estimate {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            }
        };
        Ok(e1.value + e2.value)
    };
    let magnitude = run(true, Tolerance::relative(1e-4))? + inner.abs() + tail.abs();
    let scale_tol = Tolerance::relative(opts.rel_tol).with_abs(opts.rel_tol * magnitude);
    let body = run(false, scale_tol)?;
    Ok(RflValue {
        value: c * (inner + body + tail),
        magnitude: c * magnitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::getoor_constant;
    use crate::quad::integrate;

    fn unit(s: f64, gamma: f64) -> ModelKernelParams {
        ModelKernelParams::formal(s, gamma, -1.0, 1.0).unwrap()
    }

    #[test]
    fn model_kernel_basics() {
        let p = ModelKernelParams::new(0.4, 0.4, -1.0, 1.0).unwrap();
        assert!(!p.formal);
        assert!(model_kernel(0.1, 0.1, &p).is_err());
        let k1 = model_kernel(0.1, 0.5, &p).unwrap();
        let k2 = model_kernel(0.5, 0.1, &p).unwrap();
        assert_eq!(k1, k2);
        // delta(x) delta(y) = 0.81 > 0.16: kernel is the free power
        let k = model_kernel(-0.1, 0.3, &p).unwrap();
        assert!((k - 0.4f64.powf(-0.2)).abs() < 1e-15);
        assert!(ModelKernelParams::new(0.75, 0.5, -1.0, 1.0).is_err());
        assert!(unit(0.75, 0.5).formal);
    }

    #[test]
    fn model_kernel_hopf_lower_bound() {
        let p = unit(0.4, 0.4);
        let mut lo = f64::INFINITY;
        for i in 1..100 {
            for j in 1..100 {
                if i == j {
                    continue;
                }
                let (x, y) = (-1.0 + i as f64 * 0.02, -1.0 + j as f64 * 0.02);
                let r = model_kernel(x, y, &p).unwrap() / (p.delta(x) * p.delta(y)).powf(0.4);
                lo = lo.min(r);
            }
        }
        assert!(lo > 0.1);
    }

    #[test]
    fn switch_points_are_switches() {
        let p = unit(0.4, 0.6);
        for x in [-0.9, -0.3, 0.0, 0.45, 0.97] {
            let pts = switch_points(&p, x);
            assert!(!pts.is_empty());
            for y in pts {
                let lhs = p.delta(x) * p.delta(y);
                assert!((lhs - (x - y).powi(2)).abs() < 1e-12, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn green_apply_smooth_case() {
        // s = 1/2, gamma small, beta = 0: compare against a brute midpoint sum
        let p = ModelKernelParams::new(0.5, 0.3, -1.0, 1.0).unwrap();
        let x = 0.2;
        let q = quad_green_apply(&p, 0.0, None, x, 1e-10).unwrap().value;
        let n = 400_000;
        let h = 2.0 / n as f64;
        let brute: f64 = (0..n)
            .map(|i| -1.0 + (i as f64 + 0.5) * h)
            .map(|y| model_kernel(x, y, &p).unwrap() * h)
            .sum();
        assert!((q - brute).abs() < 1e-5 * q, "{q} {brute}");
    }

    #[test]
    fn truncated_below_full() {
        let p = ModelKernelParams::new(0.4, 0.4, -1.0, 1.0).unwrap();
        for x in [-0.95, -0.5, 0.3] {
            let full = quad_green_apply(&p, -0.9, None, x, 1e-8).unwrap().value;
            let cut = quad_green_apply(&p, -0.9, Some(0.1), x, 1e-8).unwrap().value;
            assert!(cut > 0.0 && cut < full);
        }
    }

    #[test]
    fn green_apply_singular_endpoint() {
        // beta + gamma = -0.95: substitution must cope
        let p = ModelKernelParams::new(0.4, 0.4, -1.0, 1.0).unwrap();
        let e = quad_green_apply(&p, -1.35, Some(0.1), -0.99, 1e-8).unwrap();
        assert!(e.value.is_finite() && e.value > 0.0);
        assert!(quad_green_apply(&p, -1.5, None, 0.0, 1e-6).is_err());
    }

    #[test]
    fn profile_comparison_runs() {
        let p = ModelKernelParams::new(0.4, 0.4, -1.0, 1.0).unwrap();
        let c = oracle_vs_profile(&p, 0.0, 0.1, 1e-6).unwrap();
        assert!(c.c_low > 0.0 && c.spread() < 50.0, "{c:?}");
        assert!(c.interior_ratio.is_none());
    }

    fn getoor(s: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| (1.0 - x * x).max(0.0).powf(s)
    }

    #[test]
    fn getoor_value_and_constancy() {
        for s in [0.3, 0.5, 0.7] {
            let opts = RflQuadOptions::default();
            let v0 = quad_rfl_apply(getoor(s), 0.0, s, -1.0, 1.0, opts).unwrap().value;
            assert!((v0 - getoor_constant(s)).abs() < 1e-6 * v0, "s={s} {v0}");
            let v3 = quad_rfl_apply(getoor(s), 0.3, s, -1.0, 1.0, opts).unwrap().value;
            assert!((v3 - v0).abs() < 1e-5 * v0);
        }
    }

    #[test]
    fn reflection_symmetry() {
        let u = |x: f64| (1.0 - x * x).max(0.0).powi(2) * (1.0 + 0.3 * x);
        let v = |x: f64| u(-x);
        for x in [0.1, 0.55, 0.9] {
            let p = quad_rfl_apply(u, x, 0.35, -1.0, 1.0, RflQuadOptions::default()).unwrap();
            let q = quad_rfl_apply(v, -x, 0.35, -1.0, 1.0, RflQuadOptions::default()).unwrap();
            assert!((p.value - q.value).abs() < 1e-8 * p.magnitude);
        }
    }

    #[test]
    fn exterior_point_reduces_to_plain_integral() {
        let s = 0.4;
        let bump = |y: f64| {
            if y.abs() < 0.5 {
                (-1.0 / (0.25 - y * y)).exp()
            } else {
                0.0
            }
        };
        let x = 0.9;
        let v = quad_rfl_apply(bump, x, s, -1.0, 1.0, RflQuadOptions::default()).unwrap();
        let direct = integrate(
            |y| bump(y) / (x - y).abs().powf(1.0 + 2.0 * s),
            -0.5,
            0.5,
            Tolerance::relative(1e-12),
        )
        .unwrap();
        let expected = -rfl_constant(s) * direct.value;
        assert!((v.value - expected).abs() < 1e-8 * expected.abs(), "{} {expected}", v.value);
    }
}
