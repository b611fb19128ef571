//! Experiment drivers. Each one returns its CSV tables and summary checks;
//! writing happens in [`crate::run`].
//!
//! The reference-interval studies (`getoor_study`, `lattice_order`,
//! `singular_harmonicity`, `chain_rule_residual`, `profile_sweep`) are public
//! so the acceptance suite drives the same code as the binary.

use std::sync::Arc;

use fraclap_core::boundary::{
    averaged_trace, fit_boundary_rate, predict_alpha, predict_u_star_rate, regime, Regime, Side,
};
use fraclap_core::discrete::{build_operator, build_rfl, build_sfl, getoor_constant, OperatorMatrix};
use fraclap_core::green::{first_eigenpair, green_matrix, EigenOptions, GreenMatrix, K2Check};
use fraclap_core::grid::{delta, layer_cap, power_data, Grid, GridFunction};
use fraclap_core::linalg::spd_solve;
use fraclap_core::martin::{check_martin_trace, martin_kernel, martin_limit};
use fraclap_core::operator::{OperatorKind, OperatorSpec};
use fraclap_core::oracle::{oracle_vs_profile, quad_rfl_apply, ModelKernelParams, RflQuadOptions};
use fraclap_core::Result;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{num, Check, Table};

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

pub fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec().expect("validated");
    let grid = cfg.grid().expect("validated");
    match cfg.experiment {
        Experiment::Solve => solve(cfg, spec, grid),
        Experiment::SweepBeta => sweep_beta(cfg, spec, grid),
        Experiment::MartinLimit => martin(cfg, spec, grid),
        Experiment::VerifyKernel => verify_kernel(spec, grid),
        Experiment::Eigen => eigen(cfg, spec, grid),
        Experiment::HarmonicChecks => harmonic_checks(cfg, spec, grid),
        Experiment::Oracle => oracle(cfg, spec),
        Experiment::Traces => traces(cfg, spec, grid),
    }
}

fn assemble(spec: OperatorSpec, grid: &Arc<Grid>) -> Result<(OperatorMatrix, GreenMatrix)> {
    let op = build_operator(&spec, grid)?;
    let gm = green_matrix(&op)?;
    Ok((op, gm))
}

/// Six data exponents covering the rows of the exponent table reachable for
/// `spec`: below the borderline, on it, and above it.
pub fn default_betas(spec: &OperatorSpec) -> Vec<f64> {
    let (s, gamma) = (spec.s(), spec.gamma());
    let lo = -gamma - 1.0;
    let edge = gamma - 2.0 * s;
    let d = edge - lo;
    if d > 0.0 {
        vec![lo + 0.5 * d, lo + 0.75 * d, edge, edge + 0.5, edge + 1.0, edge + 1.5]
    } else {
        [0.2, 0.5, 0.8, 1.1, 1.5, 2.0].iter().map(|t| lo + t).collect()
    }
}

/// Result of fitting the boundary rate of `G(delta^beta ^ cap)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRow {
    pub beta: f64,
    pub admissible: bool,
    pub predicted: Option<f64>,
    pub log_flag: bool,
    pub fitted: f64,
    pub r_squared: f64,
    pub profile: Vec<(f64, f64)>,
}

impl BetaRow {
    pub fn tolerance(&self) -> f64 {
        if self.log_flag {
            0.15
        } else {
            0.10
        }
    }

    pub fn error(&self) -> Option<f64> {
        self.predicted.map(|p| (p - self.fitted).abs())
    }
}

pub fn beta_row(cfg: &ExperimentConfig, gm: &GreenMatrix, beta: f64) -> Result<BetaRow> {
    let spec = gm.spec();
    let grid = gm.grid();
    let pred = predict_alpha(beta, spec.gamma(), spec.s())?;
    if !pred.admissible {
        return Ok(BetaRow {
            beta,
            admissible: false,
            predicted: None,
            log_flag: false,
            fitted: f64::NAN,
            r_squared: f64::NAN,
            profile: Vec::new(),
        });
    }
    let f = power_data(grid, beta, layer_cap(grid, beta, cfg.cap_layer))?;
    let u = gm.solve(&f)?;
    let fit = fit_boundary_rate(&u, Side::Combined, &cfg.fit_window_for(pred.log_flag))?;
    let profile = (0..grid.len() / 2).map(|i| (grid.delta_at(i), u.values()[i])).collect();
    Ok(BetaRow {
        beta,
        admissible: true,
        predicted: pred.alpha,
        log_flag: pred.log_flag,
        fitted: fit.alpha,
        r_squared: fit.r_squared,
        profile,
    })
}

fn rate_check(row: &BetaRow) -> Check {
    let name = format!("boundary rate beta={}", num(row.beta));
    match row.predicted {
        Some(p) => Check::near(&name, "boundary exponent table", row.fitted, p, row.tolerance()),
        None => Check::record(&format!("{name} inadmissible"), "admissibility beta+gamma>-1", f64::NAN),
    }
}

fn solve(cfg: &ExperimentConfig, spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let beta = cfg.beta.as_ref().map_or(0.0, |b| b[0]);
    let (op, gm) = assemble(spec, &grid)?;
    let f = power_data(&grid, beta, layer_cap(&grid, beta, cfg.cap_layer))?;
    let u = gm.solve(&f)?;
    let direct = spd_solve(op.entries(), f.values())?;
    let scale = u.max_abs();
    let diff = u
        .values()
        .iter()
        .zip(&direct)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let mut out = Outcome::default();
    let mut t = Table::new(
        "solution.csv",
        &[("x", "coordinate"), ("delta", "distance"), ("f", "data"), ("u", "solution")],
    )
    .comment(format!("data delta^beta with beta = {}", num(beta)));
    for i in 0..grid.len() {
        t.push_nums(&[grid.nodes()[i], grid.delta_at(i), f.values()[i], u.values()[i]]);
    }
    out.tables.push(t);
    out.checks.push(Check::below(
        "kernel solve matches direct solve",
        "solution operator u = G(f)",
        diff / scale,
        1e-8,
    ));
    out.checks.push(Check::holds(
        "positive data give a positive solution",
        "Hopf lower bound",
        u.values().iter().all(|&v| v > 0.0),
    ));
    out.checks.push(rate_check(&beta_row(cfg, &gm, beta)?));
    Ok(out)
}

fn sweep_beta(cfg: &ExperimentConfig, spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let betas = cfg.beta.clone().unwrap_or_else(|| default_betas(&spec));
    let op = build_operator(&spec, &grid)?;
    let gm = green_matrix(&op)?;
    let rows = betas
        .par_iter()
        .map(|&b| beta_row(cfg, &gm, b))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut t = Table::new(
        "sweep.csv",
        &[
            ("beta", "exponent"),
            ("predicted_alpha", "exponent"),
            ("fitted_alpha", "exponent"),
            ("log_flag", "bool"),
            ("r_squared", "1"),
            ("admissible", "bool"),
        ],
    )
    .comment(format!("cap at layer {} nodes; fit model {:?}", cfg.cap_layer, cfg.fit_model));
    let mut p = Table::new(
        "profiles.csv",
        &[("delta", "distance"), ("u", "solution"), ("beta", "exponent")],
    )
    .comment("left half of the interval");
    for r in &rows {
        t.push(vec![
            num(r.beta),
            r.predicted.map_or_else(String::new, num),
            num(r.fitted),
            r.log_flag.to_string(),
            num(r.r_squared),
            r.admissible.to_string(),
        ]);
        for &(d, v) in &r.profile {
            p.push_nums(&[d, v, r.beta]);
        }
        out.checks.push(rate_check(r));
    }
    out.tables.push(t);
    out.tables.push(p);
    Ok(out)
}

fn martin(cfg: &ExperimentConfig, spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let (_, gm) = assemble(spec, &grid)?;
    let mk = martin_kernel(&gm)?;
    let us = mk.u_star();
    let mut out = Outcome::default();
    let pred = predict_u_star_rate(spec.gamma(), spec.s())?;
    let fit = fit_boundary_rate(&us, Side::Combined, &cfg.fit_window_for(pred.log_flag))?;
    let expected = pred.alpha.expect("u* rate is always defined");
    let tol = if pred.log_flag { 0.15 } else { 0.10 };
    out.checks.push(Check::near(
        "large solution boundary rate",
        "u* rate delta^((2s-gamma-1) min gamma)",
        fit.alpha,
        expected,
        tol,
    ));
    out.checks.push(Check::record(
        "unresolved extrapolation fraction",
        "gamma-normal derivative of the kernel",
        mk.diagnostics().unresolved_fraction,
    ));
    let lim = martin_limit(&gm, &mk, &cfg.j, cfg.concentration.into())?;
    out.checks.push(Check::holds(
        "Cauchy differences decrease",
        "G(f_j) converges to u* in L1loc",
        lim.cauchy_decreasing,
    ));
    out.checks.push(Check::below(
        "final iterate vs u* on delta>0.25",
        "G(f_j) converges to u* in L1loc",
        lim.relative_difference,
        0.1,
    ));

    let h = (cfg.h[0], cfg.h[1]);
    let u = mk.solve(h.0, h.1);
    let rep = check_martin_trace(&u, &us, h, &spec, &cfg.eta)?;
    if let Some(p) = rep.pointwise {
        let anchor = "boundary limit of u/u* equals h";
        out.checks.push(Check::near("trace at a", anchor, p.left_limit, h.0, 0.1 * h.0.abs().max(1.0)));
        out.checks.push(Check::near("trace at b", anchor, p.right_limit, h.1, 0.1 * h.1.abs().max(1.0)));
    }
    let mut tr = Table::new(
        "trace.csv",
        &[("eta", "distance"), ("phi", "name"), ("value", "1"), ("expected", "1")],
    )
    .comment(format!("h = ({}, {}); normalised so u = u*, phi = 1 gives 2", num(h.0), num(h.1)));
    for t in &rep.averaged {
        tr.push(vec![num(t.eta), t.phi.name().to_string(), num(t.value), num(t.expected)]);
        out.checks.push(Check::record_against(
            &format!("averaged trace eta={} phi={}", num(t.eta), t.phi.name()),
            "averaged boundary trace",
            t.value,
            t.expected,
        ));
    }

    let mut cols: Vec<(String, &str)> = vec![
        ("x".into(), "coordinate"),
        ("delta".into(), "distance"),
        ("martin_a".into(), "kernel"),
        ("martin_b".into(), "kernel"),
        ("u_star".into(), "solution"),
    ];
    for j in &lim.j_list {
        cols.push((format!("u_j{j}"), "solution"));
    }
    let cols: Vec<(&str, &str)> = cols.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let mut m = Table::new("martin.csv", &cols)
        .comment(format!("concentration {:?}", cfg.concentration));
    for i in 0..grid.len() {
        let mut row = vec![
            grid.nodes()[i],
            grid.delta_at(i),
            mk.left().values()[i],
            mk.right().values()[i],
            us.values()[i],
        ];
        row.extend(lim.iterates.iter().map(|it| it.values()[i]));
        m.push_nums(&row);
    }
    let mut c = Table::new(
        "cauchy.csv",
        &[("j", "index"), ("j_next", "index"), ("cauchy", "max difference on delta>0.25")],
    );
    for (k, d) in lim.cauchy.iter().enumerate() {
        c.push(vec![lim.j_list[k].to_string(), lim.j_list[k + 1].to_string(), num(*d)]);
    }
    out.tables.extend([m, c, tr]);
    Ok(out)
}

/// Indicator of the middle quarter of the interval.
pub fn middle_indicator(grid: &Arc<Grid>) -> GridFunction {
    let (c, r) = (grid.midpoint(), grid.width() / 8.0);
    GridFunction::from_fn(grid.clone(), |x| if (x - c).abs() <= r { 1.0 } else { 0.0 })
        .expect("finite")
}

/// Largest nodal error of the `SFL(1)` kernel against the classical Green
/// function, off the diagonal.
pub fn classical_kernel_error(grid: &Arc<Grid>) -> Result<f64> {
    let gm = green_matrix(&build_sfl(grid, 1.0)?)?;
    let (a, b) = (grid.a(), grid.b());
    let x = grid.nodes();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                let exact = (x[i].min(x[j]) - a) * (b - x[i].max(x[j])) / (b - a);
                worst = worst.max((gm.kernel()[(i, j)] - exact).abs());
            }
        }
    }
    Ok(worst)
}

fn verify_kernel(spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let (op, gm) = assemble(spec, &grid)?;
    let mut out = Outcome::default();
    let sym = gm.symmetry_error();
    if spec.conjectural() {
        out.checks.push(Check::record("kernel symmetry (measured only)", "self-adjointness of G", sym));
    } else {
        out.checks.push(Check::below("kernel symmetry", "symmetric kernel G(x,y) = G(y,x)", sym, 1e-8));
    }
    out.checks.push(Check::above("smallest kernel entry", "positive kernel", gm.min_entry(), 0.0));
    let n = grid.len();
    let inv = op.entries() * gm.kernel() * grid.h() - DMatrix::identity(n, n);
    out.checks.push(Check::below(
        "L (G h) = I",
        "solution operator u = G(f)",
        inv.amax(),
        1e-8,
    ));
    out.checks.push(Check::record("largest row sum of G h", "L-infinity bound of G", gm.max_row_sum()));
    match gm.check_k2() {
        K2Check::Bounds { c_low, c_high } => {
            out.checks.push(Check::record("model bound lower constant", "two-sided kernel bound", c_low));
            out.checks.push(Check::record("model bound upper constant", "two-sided kernel bound", c_high));
        }
        K2Check::Skipped { reason } => {
            out.checks.push(Check::record(
                &format!("model bound skipped: {reason}"),
                "two-sided kernel bound",
                f64::NAN,
            ));
        }
    }
    let hopf = gm.hopf_ratio();
    let coarse_grid = Arc::new(Grid::new(grid.a(), grid.b(), (n - 1) / 2)?);
    let (_, coarse) = assemble(spec, &coarse_grid)?;
    let hc = coarse.hopf_ratio();
    out.checks.push(Check::above("Hopf constant", "Hopf lower bound", hopf, 0.0));
    out.checks.push(Check::near(
        "Hopf constant under refinement",
        "Hopf lower bound",
        hopf / hc,
        1.0,
        0.2,
    ));

    let u = gm.solve(&middle_indicator(&grid))?;
    let gamma = spec.gamma();
    let ratios: Vec<f64> = (0..n).map(|i| u.values()[i] / grid.delta_at(i).powf(gamma)).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    out.checks.push(Check::above(
        "G(chi_K)/delta^gamma lower constant",
        "G(chi_K) comparable to delta^gamma",
        lo,
        0.0,
    ));
    out.checks.push(Check::record(
        "G(chi_K)/delta^gamma upper constant",
        "G(chi_K) comparable to delta^gamma",
        hi,
    ));

    let m = n.min(1023);
    let cg = Arc::new(Grid::new(grid.a(), grid.b(), m)?);
    let err = classical_kernel_error(&cg)?;
    out.checks.push(Check::below(
        "SFL(1) kernel vs classical Green function",
        "classical Green function",
        err,
        cg.h() * cg.h(),
    ));

    let mid = n / 2;
    let quarter = n / 4;
    let mut t = Table::new(
        "kernel.csv",
        &[
            ("y", "coordinate"),
            ("delta", "distance"),
            ("g_mid", "kernel"),
            ("g_quarter", "kernel"),
            ("row_sum", "kernel times h"),
            ("g_chi_k", "solution"),
        ],
    )
    .comment(format!(
        "kernel rows at x = {} and x = {}",
        num(grid.nodes()[mid]),
        num(grid.nodes()[quarter])
    ));
    let k = gm.kernel();
    for j in 0..n {
        let rs: f64 = k.row(j).iter().sum::<f64>() * grid.h();
        t.push_nums(&[
            grid.nodes()[j],
            grid.delta_at(j),
            k[(mid, j)],
            k[(quarter, j)],
            rs,
            u.values()[j],
        ]);
    }
    out.tables.push(t);
    Ok(out)
}

fn eigen(cfg: &ExperimentConfig, spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let op = build_operator(&spec, &grid)?;
    let (lambda, phi) = first_eigenpair(&op, EigenOptions::default())?;
    let mut out = Outcome::default();
    out.checks.push(Check::holds(
        "first eigenfunction positive",
        "first eigenfunction comparable to delta^gamma",
        phi.values().iter().all(|&v| v > 0.0),
    ));
    out.checks.push(Check::record("first eigenvalue", "first eigenpair", lambda));
    let fit = fit_boundary_rate(&phi, Side::Combined, &cfg.fit_window_for(false))?;
    let anchor = "first eigenfunction comparable to delta^gamma";
    if spec.conjectural() {
        out.checks.push(Check::record_against("eigenfunction rate", anchor, fit.alpha, spec.gamma()));
    } else {
        out.checks.push(Check::near("eigenfunction rate", anchor, fit.alpha, spec.gamma(), 0.1));
    }
    if let OperatorKind::Sfl { s } = spec.kind() {
        let l = grid.width();
        let base = 4.0 / (grid.h() * grid.h())
            * (std::f64::consts::PI * grid.h() / (2.0 * l)).sin().powi(2);
        let exact = base.powf(s);
        out.checks.push(Check::below(
            "eigenvalue vs Laplacian eigenvalue to the power s",
            "spectral definition",
            (lambda / exact - 1.0).abs(),
            1e-8,
        ));
    }
    let mut t = Table::new(
        "eigenfunction.csv",
        &[("x", "coordinate"), ("delta", "distance"), ("phi", "normalised sum phi^2 h = 1")],
    )
    .comment(format!("lambda_1 = {}", num(lambda)));
    for i in 0..grid.len() {
        t.push_nums(&[grid.nodes()[i], grid.delta_at(i), phi.values()[i]]);
    }
    out.tables.push(t);
    Ok(out)
}

/// `(x, value, one-sided scale)` of the restricted operator applied to the
/// singular solution `2s (1-x^2)^{s-1}` on `(-1, 1)`.
pub fn singular_harmonicity(s: f64, xs: &[f64], rel_tol: f64) -> Result<Vec<(f64, f64, f64)>> {
    let w = move |x: f64| 2.0 * s * (1.0 - x * x).powf(s - 1.0);
    let opts = RflQuadOptions {
        rel_tol,
        endpoint_exponent: Some(s - 1.0),
        ..Default::default()
    };
    xs.iter()
        .map(|&x| {
            let r = quad_rfl_apply(w, x, s, -1.0, 1.0, opts)?;
            Ok((x, r.value, r.one_sided_scale()))
        })
        .collect()
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn x_bump_prime(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let q = 1.0 - x * x;
        -2.0 * x * x * (-1.0 / q).exp() / (q * q)
    } else {
        0.0
    }
}

/// Largest residual of `L(x u') = x (L u)' + 2s L u` on a smooth bump, and
/// the largest `|L u|` for scale. The derivative is a central difference.
pub fn chain_rule_residual(s: f64, xs: &[f64], step: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let opts = RflQuadOptions {
        rel_tol,
        ..Default::default()
    };
    let l = |f: fn(f64) -> f64, x: f64| quad_rfl_apply(f, x, s, -1.0, 1.0, opts).map(|r| r.value);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in xs {
        let d = (l(bump, x + step)? - l(bump, x - step)?) / (2.0 * step);
        let lu = l(bump, x)?;
        worst = worst.max((l(x_bump_prime, x)? - x * d - 2.0 * s * lu).abs());
        scale = scale.max(lu.abs());
    }
    Ok((worst, scale))
}

fn harmonic_checks(cfg: &ExperimentConfig, spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let op = build_operator(&spec, &grid)?;
    let mut out = Outcome::default();
    let ones = GridFunction::from_fn(grid.clone(), |_| 1.0)?;
    let l1 = op.apply(&ones)?;
    let mut t = Table::new(
        "l_of_one.csv",
        &[("x", "coordinate"), ("delta", "distance"), ("l_one", "operator applied to 1")],
    );
    match spec.kind() {
        OperatorKind::Cfl { .. } => {
            let closed = op.apply_closed(&ones, 1.0, 1.0)?;
            let scale = op.entries().amax();
            out.checks.push(Check::below(
                "censored operator annihilates constants",
                "censored operator: L 1 = 0",
                closed.max_abs() / scale,
                1e-10,
            ));
            for i in 0..grid.len() {
                t.push_nums(&[grid.nodes()[i], grid.delta_at(i), closed.values()[i]]);
            }
        }
        kind => {
            let fit = fit_boundary_rate(&l1, Side::Combined, &cfg.fit_window_for(false))?;
            let expected = -2.0 * spec.s();
            let anchor = "L 1 comparable to delta^(-2s)";
            if matches!(kind, OperatorKind::Rfl { .. }) {
                out.checks.push(Check::near("exponent of L 1", anchor, fit.alpha, expected, 0.1));
            } else {
                out.checks.push(Check::record_against("exponent of L 1", anchor, fit.alpha, expected));
            }
            for i in 0..grid.len() {
                t.push_nums(&[grid.nodes()[i], grid.delta_at(i), l1.values()[i]]);
            }
        }
    }
    out.tables.push(t);

    let s = spec.s();
    if matches!(spec.kind(), OperatorKind::Rfl { .. }) && s < 1.0 {
        let rows = singular_harmonicity(s, &[0.0, 0.3, -0.3], cfg.quad_tol.min(1e-8))?;
        let mut w = Table::new(
            "harmonic.csv",
            &[("x", "coordinate"), ("l_w", "operator applied to W"), ("scale", "one-sided part")],
        )
        .comment("W = 2s (1-x^2)^(s-1) on (-1, 1)");
        for &(x, v, sc) in &rows {
            w.push_nums(&[x, v, sc]);
            out.checks.push(Check::below(
                &format!("singular solution harmonic at x={}", num(x)),
                "L-harmonic singular solution",
                v.abs() / sc,
                1e-3,
            ));
        }
        out.tables.push(w);
        let (res, scale) =
            chain_rule_residual(s, &[-0.6, -0.3, 0.0, 0.25, 0.5], 1e-3, cfg.quad_tol.min(1e-8))?;
        out.checks.push(Check::below(
            "chain rule residual on a bump",
            "dilation identity for the fractional Laplacian",
            res / scale,
            1e-3,
        ));
    }
    Ok(out)
}

/// Spread of the restricted operator applied to `(1-x^2)_+^s` over seven
/// interior points of `(-1, 1)`, and the mean relative to the closed-form
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct GetoorStudy {
    pub s: f64,
    pub points: Vec<(f64, f64)>,
    pub relative_spread: f64,
    pub mean_vs_constant: f64,
}

pub fn getoor_study(s: f64, rel_tol: f64) -> Result<GetoorStudy> {
    let u = move |x: f64| (1.0 - x * x).max(0.0).powf(s);
    let opts = RflQuadOptions {
        rel_tol,
        ..Default::default()
    };
    let points = [0.0, 0.2, -0.2, 0.4, -0.4, 0.6, -0.6]
        .iter()
        .map(|&x| Ok((x, quad_rfl_apply(u, x, s, -1.0, 1.0, opts)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    Ok(GetoorStudy {
        s,
        points,
        relative_spread: var.sqrt() / mean.abs(),
        mean_vs_constant: mean / getoor_constant(s) - 1.0,
    })
}

/// Errors of the lattice scheme applied to `(1-x^2)_+^s` at `x = 0` against
/// the quadrature value, with `intervals - 1` interior nodes, and the
/// observed orders between successive grids.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeOrder {
    pub s: f64,
    pub reference: f64,
    pub intervals: Vec<usize>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

pub fn lattice_order(s: f64, intervals: &[usize], rel_tol: f64) -> Result<LatticeOrder> {
    let u = move |x: f64| (1.0 - x * x).max(0.0).powf(s);
    let opts = RflQuadOptions {
        rel_tol,
        ..Default::default()
    };
    let reference = quad_rfl_apply(u, 0.0, s, -1.0, 1.0, opts)?.value;
    let errors = intervals
        .par_iter()
        .map(|&m| {
            let g = Arc::new(Grid::symmetric(m - 1)?);
            let lu = build_rfl(&g, s)?.apply(&GridFunction::from_fn(g.clone(), u)?)?;
            Ok((lu.values()[m / 2 - 1] - reference).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(LatticeOrder {
        s,
        reference,
        intervals: intervals.to_vec(),
        errors,
        orders,
    })
}

/// A sampled model-kernel configuration for the profile sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileCase {
    pub s: f64,
    pub gamma: f64,
    pub beta: f64,
    pub eta: f64,
}

/// `count` configurations covering the three regimes; three in five lie
/// above the critical `gamma`, with `beta` cycling below, on and above the
/// borderline.
pub fn profile_cases(seed: u64, count: usize) -> Vec<ProfileCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (s, gamma) = match k % 5 {
                0..=2 => (rng.random_range(0.15..0.5), rng.random_range(0.1..1.0)),
                3 => {
                    let s = rng.random_range(0.6..0.95);
                    (s, s - 0.5)
                }
                _ => {
                    let s: f64 = rng.random_range(0.7..0.95);
                    (s, rng.random_range(0.05..s - 0.6))
                }
            };
            let lo = -gamma - 1.0;
            let edge = gamma - 2.0 * s;
            let beta = if regime(gamma, s) == Regime::Above {
                match k % 3 {
                    0 => lo + rng.random_range(0.1..0.9) * (edge - lo),
                    1 => edge,
                    _ => edge + rng.random_range(0.1..1.0),
                }
            } else {
                lo + rng.random_range(0.2..1.5)
            };
            ProfileCase {
                s,
                gamma,
                beta,
                eta: rng.random_range(0.05..0.2),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileResult {
    pub case: ProfileCase,
    pub regime: Regime,
    pub formal: bool,
    pub c_low: f64,
    pub c_high: f64,
    /// Largest relative change of either constant under 10x tightening.
    pub tightening_change: f64,
}

impl ProfileResult {
    pub fn spread(&self) -> f64 {
        self.c_high / self.c_low
    }

    pub fn ok(&self) -> bool {
        self.c_low.is_finite()
            && self.c_high.is_finite()
            && self.c_low > 0.0
            && self.spread() < 50.0
            && self.tightening_change <= 0.2
    }
}

pub fn profile_sweep(cases: &[ProfileCase], rel_tol: f64) -> Result<Vec<ProfileResult>> {
    cases
        .par_iter()
        .map(|c| {
            let p = ModelKernelParams::formal(c.s, c.gamma, -1.0, 1.0)?;
            let a = oracle_vs_profile(&p, c.beta, c.eta, rel_tol)?;
            let b = oracle_vs_profile(&p, c.beta, c.eta, 0.1 * rel_tol)?;
            let change = (a.c_low / b.c_low - 1.0)
                .abs()
                .max((a.c_high / b.c_high - 1.0).abs());
            Ok(ProfileResult {
                case: *c,
                regime: regime(c.gamma, c.s),
                formal: p.formal,
                c_low: a.c_low,
                c_high: a.c_high,
                tightening_change: change,
            })
        })
        .collect()
}

pub const LATTICE_INTERVALS: [usize; 4] = [256, 512, 1024, 2048];

fn oracle(cfg: &ExperimentConfig, spec: OperatorSpec) -> Result<Outcome> {
    let mut out = Outcome::default();
    let results = profile_sweep(&profile_cases(cfg.seed, 20), cfg.quad_tol)?;
    let mut t = Table::new(
        "profile.csv",
        &[
            ("s", "order"),
            ("gamma", "exponent"),
            ("beta", "exponent"),
            ("eta", "distance"),
            ("regime", "name"),
            ("formal", "bool"),
            ("c_low", "ratio"),
            ("c_high", "ratio"),
            ("tightening_change", "relative"),
        ],
    )
    .comment(format!("model kernel on (-1, 1); quadrature tolerance {}", num(cfg.quad_tol)));
    for r in &results {
        let c = r.case;
        t.push(vec![
            num(c.s),
            num(c.gamma),
            num(c.beta),
            num(c.eta),
            format!("{:?}", r.regime).to_lowercase(),
            r.formal.to_string(),
            num(r.c_low),
            num(r.c_high),
            num(r.tightening_change),
        ]);
    }
    out.tables.push(t);
    let worst = results.iter().map(|r| r.spread()).fold(0.0, f64::max);
    let change = results.iter().map(|r| r.tightening_change).fold(0.0, f64::max);
    let anchor = "sharp boundary profile of G(delta^beta chi_eta)";
    out.checks.push(Check::holds(
        "profile constants finite and positive",
        anchor,
        results.iter().all(|r| r.c_low > 0.0 && r.c_high.is_finite()),
    ));
    out.checks.push(Check::below("largest profile spread", anchor, worst, 50.0));
    out.checks.push(Check::below("largest change under tightening", anchor, change, 0.2));

    let s = spec.s();
    if s < 1.0 {
        let g = getoor_study(s, cfg.quad_tol.min(1e-8))?;
        out.checks.push(Check::below(
            "constant image of the Getoor profile",
            "Getoor identity",
            g.relative_spread,
            1e-4,
        ));
        let lo = lattice_order(s, &LATTICE_INTERVALS, cfg.quad_tol.min(1e-10))?;
        let mut c = Table::new(
            "lattice_order.csv",
            &[("intervals", "count"), ("error", "absolute"), ("order", "log2 ratio")],
        )
        .comment(format!("(1-x^2)_+^s at x = 0, s = {}, reference {}", num(s), num(lo.reference)));
        for (k, &m) in lo.intervals.iter().enumerate() {
            let order = if k == 0 { String::new() } else { num(lo.orders[k - 1]) };
            c.push(vec![m.to_string(), num(lo.errors[k]), order]);
        }
        out.tables.push(c);
        let min_order = lo.orders.iter().cloned().fold(f64::INFINITY, f64::min);
        out.checks.push(Check::above(
            "lattice scheme order at the centre",
            "Getoor identity",
            min_order,
            1.5,
        ));
    }
    Ok(out)
}

fn traces(cfg: &ExperimentConfig, spec: OperatorSpec, grid: Arc<Grid>) -> Result<Outcome> {
    let (_, gm) = assemble(spec, &grid)?;
    let (s, gamma) = (spec.s(), spec.gamma());
    let u = gm.solve(&middle_indicator(&grid))?;
    let mk = martin_kernel(&gm)?;
    let us = mk.u_star();
    let mut vals = Vec::new();
    let mut star = Vec::new();
    for &eta in &cfg.eta {
        vals.push(averaged_trace(&u, gamma, s, eta)?);
        star.push(averaged_trace(&us, gamma, s, eta)?);
    }
    let mut out = Outcome::default();
    let anchor = "vanishing averaged trace for f in L1(delta^gamma)";
    if regime(gamma, s) == Regime::Above {
        out.checks.push(Check::holds(
            "averaged trace strictly decreasing",
            anchor,
            vals.windows(2).all(|w| w[1] < w[0]),
        ));
        out.checks.push(Check::below(
            "final over first averaged trace",
            anchor,
            vals[vals.len() - 1] / vals[0],
            0.25,
        ));
    } else {
        out.checks.push(Check::record("final over first averaged trace", anchor, vals[vals.len() - 1] / vals[0]));
    }
    let ref_d = delta(&grid);
    let mut t = Table::new(
        "traces.csv",
        &[("eta", "distance"), ("chi_k", "averaged trace"), ("u_star", "averaged trace")],
    )
    .comment(format!("K = middle quarter; smallest delta {}", num(ref_d.values()[0])));
    for (k, &eta) in cfg.eta.iter().enumerate() {
        t.push_nums(&[eta, vals[k], star[k]]);
        out.checks.push(Check::record(
            &format!("u* averaged trace eta={}", num(eta)),
            "u* does not have vanishing trace",
            star[k],
        ));
    }
    out.tables.push(t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_betas_are_admissible() {
        for spec in [
            OperatorSpec::rfl(0.75).unwrap(),
            OperatorSpec::sfl(0.3).unwrap(),
            OperatorSpec::cfl(0.6).unwrap(),
            OperatorSpec::new(OperatorKind::ComposedRfl { s_total: 0.9, k: 3 }).unwrap(),
        ] {
            let b = default_betas(&spec);
            assert_eq!(b.len(), 6);
            assert!(b.iter().all(|&x| x + spec.gamma() > -1.0), "{spec}");
        }
    }

    #[test]
    fn profile_cases_cover_regimes() {
        let cases = profile_cases(7, 20);
        for r in [Regime::Below, Regime::Critical, Regime::Above] {
            assert!(cases.iter().any(|c| regime(c.gamma, c.s) == r));
        }
        assert_eq!(cases, profile_cases(7, 20));
        assert!(cases.iter().all(|c| c.beta + c.gamma > -1.0));
    }

    #[test]
    fn classical_kernel_exact_at_nodes() {
        let g = Arc::new(Grid::symmetric(63).unwrap());
        assert!(classical_kernel_error(&g).unwrap() < 1e-12);
    }
}
