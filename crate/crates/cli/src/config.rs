//! Experiment configuration: a flat JSON schema, command-line overrides and
//! up-front validation.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use fraclap_core::boundary::{FitModel, FitWindow};
use fraclap_core::grid::Grid;
use fraclap_core::martin::{concentration_sequence, Concentration};
use fraclap_core::operator::{OperatorKind, OperatorSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    SweepBeta,
    MartinLimit,
    VerifyKernel,
    Eigen,
    HarmonicChecks,
    Oracle,
    Traces,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::SweepBeta => "sweep-beta",
            Experiment::MartinLimit => "martin-limit",
            Experiment::VerifyKernel => "verify-kernel",
            Experiment::Eigen => "eigen",
            Experiment::HarmonicChecks => "harmonic-checks",
            Experiment::Oracle => "oracle",
            Experiment::Traces => "traces",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorName {
    Rfl,
    Sfl,
    Cfl,
    Rflsum,
    SpectralOfRfl,
    ComposedRfl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModelName {
    Auto,
    Power,
    PowerLog,
    /// Power-log when the predictor flags the borderline case, power otherwise.
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcentrationName {
    PowerOfJ,
    Exact,
}

impl From<ConcentrationName> for Concentration {
    fn from(c: ConcentrationName) -> Self {
        match c {
            ConcentrationName::PowerOfJ => Concentration::PowerOfJ,
            ConcentrationName::Exact => Concentration::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub operator: OperatorName,
    /// Order `s`; `s1` for `rflsum`, `sigma1` default for `spectral-of-rfl`,
    /// total order for `composed-rfl`.
    pub s: f64,
    pub s2: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub k: Option<u32>,
    pub a: f64,
    pub b: f64,
    pub n_interior: usize,
    /// Data exponents; `None` picks a default family spanning the table rows.
    pub beta: Option<Vec<f64>>,
    /// Singular data are capped at their value `cap_layer` steps from the
    /// boundary.
    pub cap_layer: usize,
    pub j: Vec<u32>,
    pub eta: Vec<f64>,
    pub quad_tol: f64,
    pub fit_skip: usize,
    pub fit_delta_max: Option<f64>,
    pub fit_model: FitModelName,
    /// Boundary data `(h(a), h(b))` for the Martin experiments.
    pub h: [f64; 2],
    pub concentration: ConcentrationName,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Solve,
            operator: OperatorName::Rfl,
            s: 0.75,
            s2: None,
            sigma1: None,
            sigma2: None,
            k: None,
            a: -1.0,
            b: 1.0,
            n_interior: 2048,
            beta: None,
            cap_layer: 2,
            j: vec![8, 16, 32, 64],
            eta: vec![0.2, 0.1, 0.05, 0.025],
            quad_tol: 1e-6,
            fit_skip: 2,
            fit_delta_max: None,
            fit_model: FitModelName::Predicted,
            h: [2.0, 0.0],
            concentration: ConcentrationName::Exact,
            seed: 0,
            output_dir: PathBuf::from("fraclap-out"),
        }
    }
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub operator: Option<OperatorName>,
    pub s: Option<f64>,
    pub n_interior: Option<usize>,
    pub beta: Option<Vec<f64>>,
    pub j: Option<Vec<u32>>,
    pub eta: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.experiment {
            self.experiment = v;
        }
        if let Some(v) = o.operator {
            self.operator = v;
        }
        if let Some(v) = o.s {
            self.s = v;
        }
        if let Some(v) = o.n_interior {
            self.n_interior = v;
        }
        if o.beta.is_some() {
            self.beta = o.beta;
        }
        if let Some(v) = o.j {
            self.j = v;
        }
        if let Some(v) = o.eta {
            self.eta = v;
        }
        if let Some(v) = o.output_dir {
            self.output_dir = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    fn require<T: Copy>(&self, v: Option<T>, key: &str) -> Result<T, CliError> {
        v.ok_or_else(|| {
            CliError::Config(format!("operator {:?} needs the `{key}` key", self.operator))
        })
    }

    pub fn spec(&self) -> Result<OperatorSpec, CliError> {
        let kind = match self.operator {
            OperatorName::Rfl => OperatorKind::Rfl { s: self.s },
            OperatorName::Sfl => OperatorKind::Sfl { s: self.s },
            OperatorName::Cfl => OperatorKind::Cfl { s: self.s },
            OperatorName::Rflsum => OperatorKind::RflSum {
                s1: self.s,
                s2: self.require(self.s2, "s2")?,
            },
            OperatorName::SpectralOfRfl => OperatorKind::SpectralOfRfl {
                sigma1: self.sigma1.unwrap_or(self.s),
                sigma2: self.require(self.sigma2, "sigma2")?,
            },
            OperatorName::ComposedRfl => OperatorKind::ComposedRfl {
                s_total: self.s,
                k: self.require(self.k, "k")?,
            },
        };
        OperatorSpec::new(kind).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        Grid::new(self.a, self.b, self.n_interior)
            .map(Arc::new)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn fit_window(&self) -> FitWindow {
        FitWindow {
            skip_nodes: self.fit_skip,
            delta_max: self.fit_delta_max,
            ..FitWindow::default()
        }
    }

    /// Window for data with the given predicted log flag.
    pub fn fit_window_for(&self, log_flag: bool) -> FitWindow {
        let model = match self.fit_model {
            FitModelName::Auto => FitModel::Auto,
            FitModelName::Power => FitModel::Power,
            FitModelName::PowerLog => FitModel::PowerLog,
            FitModelName::Predicted if log_flag => FitModel::PowerLog,
            FitModelName::Predicted => FitModel::Power,
        };
        self.fit_window().with_model(model)
    }

    /// Checks every parameter against the preconditions of the modules the
    /// chosen experiment calls. Nothing is computed before this passes.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let spec = self.spec()?;
        if !(self.a.is_finite() && self.b.is_finite()) {
            return bad("a and b must be finite".into());
        }
        if self.n_interior < 16 || self.n_interior > 4096 {
            return bad(format!("n_interior must lie in [16, 4096], got {}", self.n_interior));
        }
        let grid = self.grid()?;
        if !(self.quad_tol > 0.0 && self.quad_tol < 0.1) {
            return bad(format!("quad_tol must lie in (0, 0.1), got {}", self.quad_tol));
        }
        if self.cap_layer == 0 {
            return bad("cap_layer must be at least 1".into());
        }
        if let Some(d) = self.fit_delta_max {
            if !(d > 0.0 && d <= 0.5 * grid.width()) {
                return bad(format!("fit_delta_max must lie in (0, half-width], got {d}"));
            }
        }
        if 2 * self.fit_skip + 2 * self.fit_window().min_nodes > self.n_interior {
            return bad(format!("fit_skip = {} leaves no fit window", self.fit_skip));
        }
        if let Some(betas) = &self.beta {
            if betas.is_empty() || betas.iter().any(|b| !b.is_finite()) {
                return bad("beta must be a non-empty list of finite values".into());
            }
        }
        if self.h.iter().any(|v| !v.is_finite()) {
            return bad("h must be finite".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir must not be empty".into());
        }
        match self.experiment {
            Experiment::MartinLimit | Experiment::Traces => {
                if self.experiment == Experiment::MartinLimit {
                    if self.j.len() < 2 {
                        return bad("martin-limit needs at least two j values".into());
                    }
                    if self.j.windows(2).any(|w| w[1] <= w[0]) {
                        return bad("j values must be strictly increasing".into());
                    }
                    for &j in &self.j {
                        concentration_sequence(&grid, spec.gamma(), j, self.concentration.into())
                            .map_err(|e| CliError::Config(e.to_string()))?;
                    }
                }
                self.validate_eta(&grid)?;
            }
            _ => {}
        }
        Ok(())
    }

    fn validate_eta(&self, grid: &Grid) -> Result<(), CliError> {
        if self.eta.is_empty() {
            return Err(CliError::Config("eta must be a non-empty list".into()));
        }
        for &eta in &self.eta {
            if !(eta >= 3.0 * grid.h() && eta < 0.5 * grid.width()) {
                return Err(CliError::Config(format!(
                    "eta = {eta} must lie in [3h, half-width) with h = {}",
                    grid.h()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"s": 0.5, "colour": 1}"#),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn file_values_then_flags() {
        let mut c = ExperimentConfig::from_json(
            r#"{"experiment": "sweep-beta", "operator": "sfl", "s": 0.3, "n_interior": 256}"#,
        )
        .unwrap();
        assert_eq!(c.experiment, Experiment::SweepBeta);
        assert_eq!(c.a, -1.0);
        c.apply(Overrides {
            s: Some(0.6),
            ..Default::default()
        });
        assert_eq!((c.s, c.n_interior), (0.6, 256));
    }

    #[test]
    fn operator_parameters_checked() {
        let c = ExperimentConfig {
            operator: OperatorName::Cfl,
            s: 0.3,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let c = ExperimentConfig {
            operator: OperatorName::ComposedRfl,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn unresolved_strip_rejected() {
        let c = ExperimentConfig {
            experiment: Experiment::MartinLimit,
            n_interior: 64,
            j: vec![8, 64],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn predicted_model_follows_flag() {
        let c = ExperimentConfig::default();
        assert_eq!(c.fit_window_for(true).model, FitModel::PowerLog);
        assert_eq!(c.fit_window_for(false).model, FitModel::Power);
    }
}
