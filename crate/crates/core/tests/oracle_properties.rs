use std::sync::Arc;

use fraclap_core::boundary::{averaged_trace, fit_boundary_rate, regime, FitModel, FitWindow, Regime, Side};
use fraclap_core::discrete::getoor_constant;
use fraclap_core::grid::{Grid, GridFunction};
use fraclap_core::oracle::{oracle_vs_profile, quad_green_apply, quad_rfl_apply, ModelKernelParams, RflQuadOptions};
use proptest::prelude::*;

fn getoor(s: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x: f64| (1.0 - x * x).max(0.0).powf(s)
}

fn rfl(u: impl Fn(f64) -> f64, x: f64, s: f64) -> f64 {
    quad_rfl_apply(u, x, s, -1.0, 1.0, RflQuadOptions::default())
        .unwrap()
        .value
}

#[test]
fn getoor_profile_has_constant_image() {
    for s in [0.3, 0.5, 0.7] {
        let vals: Vec<f64> = [0.0, 0.2, -0.2, 0.4, -0.4, 0.6, -0.6]
            .iter()
            .map(|&x| rfl(getoor(s), x, s))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!(var.sqrt() / mean < 1e-4, "s={s} {vals:?}");
        assert!((mean / getoor_constant(s) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn singular_solution_is_harmonic() {
    for s in [0.6, 0.75] {
        let w = move |x: f64| {
            if x.abs() < 1.0 {
                2.0 * s * (1.0 - x * x).powf(s - 1.0)
            } else {
                0.0
            }
        };
        let opts = RflQuadOptions {
            endpoint_exponent: Some(s - 1.0),
            ..Default::default()
        };
        for x in [0.0, 0.3, -0.3] {
            let r = quad_rfl_apply(w, x, s, -1.0, 1.0, opts).unwrap();
            assert!(r.value.abs() < 1e-3 * r.one_sided_scale(), "s={s} x={x} {r:?}");
        }
    }
}

#[test]
fn chain_rule_identity_on_bump() {
    // (-D)^s (x u') = x d/dx (-D)^s u + 2s (-D)^s u
    let s = 0.4;
    let bump = |x: f64| {
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    };
    let x_du = |x: f64| {
        if x.abs() < 1.0 {
            let q = 1.0 - x * x;
            x * (-1.0 / q).exp() * (-2.0 * x / (q * q))
        } else {
            0.0
        }
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for x in [-0.6, -0.3, 0.0, 0.25, 0.5] {
        let step = 1e-3;
        let d = (rfl(bump, x + step, s) - rfl(bump, x - step, s)) / (2.0 * step);
        let lu = rfl(bump, x, s);
        worst = worst.max((rfl(x_du, x, s) - x * d - 2.0 * s * lu).abs());
        scale = scale.max(lu.abs());
    }
    assert!(worst < 1e-3 * scale, "{worst} vs {scale}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reflection_symmetry(x in 0.05f64..0.95, s in 0.1f64..0.9) {
        let u = |y: f64| (1.0 - y * y).max(0.0).powi(2) * (1.0 + 0.5 * y);
        let v = |y: f64| u(-y);
        let p = quad_rfl_apply(u, x, s, -1.0, 1.0, RflQuadOptions::default()).unwrap();
        let q = quad_rfl_apply(v, -x, s, -1.0, 1.0, RflQuadOptions::default()).unwrap();
        prop_assert!((p.value - q.value).abs() < 1e-7 * p.magnitude);
    }

    #[test]
    fn green_apply_monotone_in_eta_and_beta(x in -0.99f64..0.99, e1 in 0.02f64..0.5) {
        let p = ModelKernelParams::new(0.4, 0.4, -1.0, 1.0).unwrap();
        let e2 = 1.5 * e1;
        let small = quad_green_apply(&p, -0.5, Some(e1), x, 1e-8).unwrap().value;
        let large = quad_green_apply(&p, -0.5, Some(e2), x, 1e-8).unwrap().value;
        prop_assert!(small <= large * (1.0 + 1e-7));
        // delta <= 1, so a lower beta gives larger data
        let lower = quad_green_apply(&p, -0.8, Some(e1), x, 1e-8).unwrap().value;
        prop_assert!(small <= lower * (1.0 + 1e-7));
    }
}

fn sampled_oracle(p: &ModelKernelParams, beta: f64, n: usize) -> GridFunction {
    let g = Arc::new(Grid::new(p.a, p.b, n).unwrap());
    let w = FitWindow::default();
    let window = w.indices(&g, Side::Left);
    let values = (0..n)
        .map(|i| {
            if window.contains(&i) {
                quad_green_apply(p, beta, None, g.nodes()[i], 1e-6).unwrap().value
            } else {
                1.0
            }
        })
        .collect();
    GridFunction::new(g, values).unwrap()
}

#[test]
fn oracle_boundary_exponents_follow_predictor() {
    let p = ModelKernelParams::new(0.4, 0.4, -1.0, 1.0).unwrap();
    let w = FitWindow::default().with_model(FitModel::Power);
    for (beta, expected) in [(0.0, 0.4), (-0.9, -0.1)] {
        let u = sampled_oracle(&p, beta, 1023);
        let fit = fit_boundary_rate(&u, Side::Left, &w).unwrap();
        assert!((fit.alpha - expected).abs() < 0.1, "beta={beta} {fit:?}");
    }
}

#[test]
fn profile_ratio_is_stable_under_tightening() {
    let cases = [
        (0.4, 0.4, 0.0, false),
        (0.45, 0.1, -0.05, false),
        (0.75, 0.25, 0.0, true),
        (0.9, 0.15, -0.3, true),
    ];
    for (s, gamma, beta, formal) in cases {
        let p = ModelKernelParams::formal(s, gamma, -1.0, 1.0).unwrap();
        assert_eq!(p.formal, formal);
        let a = oracle_vs_profile(&p, beta, 0.1, 1e-6).unwrap();
        let b = oracle_vs_profile(&p, beta, 0.1, 1e-7).unwrap();
        assert!(a.c_low > 0.0 && a.spread() < 50.0, "{a:?}");
        assert!((a.spread() / b.spread() - 1.0).abs() < 0.2);
        if regime(gamma, s) == Regime::Below {
            assert!(a.interior_ratio.unwrap().is_finite());
        }
    }
}

#[test]
fn averaged_trace_bounded_below_critical_gamma() {
    // gamma < s - 1/2 is reachable only as a formal model
    let p = ModelKernelParams::formal(0.9, 0.2, -1.0, 1.0).unwrap();
    let n = 255;
    let g = Arc::new(Grid::new(-1.0, 1.0, n).unwrap());
    let values = g
        .nodes()
        .iter()
        .map(|&x| quad_green_apply(&p, 0.0, None, x, 1e-6).unwrap().value)
        .collect();
    let u = GridFunction::new(g, values).unwrap();
    let traces: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eta| averaged_trace(&u, 0.2, 0.9, eta).unwrap())
        .collect();
    let hi = traces.iter().cloned().fold(0.0, f64::max);
    let lo = traces.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi < 10.0 * lo && lo > 0.0, "{traces:?}");
}
