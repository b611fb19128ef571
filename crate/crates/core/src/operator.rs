//! Operator family descriptors and the exponent arithmetic shared by every
//! other module.

use std::fmt;

use crate::error::{invalid, Result};

/// Members of the operator catalogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// Restricted fractional Laplacian, zero exterior data.
    Rfl { s: f64 },
    /// Spectral fractional Laplacian (power of the Dirichlet Laplacian).
    Sfl { s: f64 },
    /// Censored (regional) fractional Laplacian.
    Cfl { s: f64 },
    /// `RFL(s1) + RFL(s2)` with `s2 < s1`.
    RflSum { s1: f64, s2: f64 },
    /// Spectral `sigma2` power of `RFL(sigma1)`.
    SpectralOfRfl { sigma1: f64, sigma2: f64 },
    /// `k`-fold composition of `RFL(s_total / k)`.
    ComposedRfl { s_total: f64, k: u32 },
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Rfl { .. } => "rfl",
            OperatorKind::Sfl { .. } => "sfl",
            OperatorKind::Cfl { .. } => "cfl",
            OperatorKind::RflSum { .. } => "rflsum",
            OperatorKind::SpectralOfRfl { .. } => "spectral-of-rfl",
            OperatorKind::ComposedRfl { .. } => "composed-rfl",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OperatorKind::Rfl { s } => write!(f, "RFL(s={s})"),
            OperatorKind::Sfl { s } => write!(f, "SFL(s={s})"),
            OperatorKind::Cfl { s } => write!(f, "CFL(s={s})"),
            OperatorKind::RflSum { s1, s2 } => write!(f, "RFL_SUM(s1={s1}, s2={s2})"),
            OperatorKind::SpectralOfRfl { sigma1, sigma2 } => {
                write!(f, "SPECTRAL_OF_RFL(sigma1={sigma1}, sigma2={sigma2})")
            }
            OperatorKind::ComposedRfl { s_total, k } => {
                write!(f, "COMPOSED_RFL(s={s_total}, k={k})")
            }
        }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        invalid(format!("{name} must lie in (0, 1), got {v}"))
    }
}

fn half_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        invalid(format!("{name} must lie in (0, 1], got {v}"))
    }
}

/// Validates the kind parameters.
pub fn validate(kind: &OperatorKind) -> Result<()> {
    match *kind {
        OperatorKind::Rfl { s } | OperatorKind::Sfl { s } => open_unit("s", s),
        OperatorKind::Cfl { s } => {
            if s > 0.5 && s < 1.0 {
                Ok(())
            } else {
                invalid(format!("CFL requires s in (1/2, 1), got {s}"))
            }
        }
        OperatorKind::RflSum { s1, s2 } => {
            // s1 = 1 would need n >= 3 for the dominant-order claim
            open_unit("s1", s1)?;
            open_unit("s2", s2)?;
            if s2 < s1 {
                Ok(())
            } else {
                invalid(format!("RFL_SUM requires s2 < s1, got s1={s1}, s2={s2}"))
            }
        }
        OperatorKind::SpectralOfRfl { sigma1, sigma2 } => {
            half_open_unit("sigma1", sigma1)?;
            half_open_unit("sigma2", sigma2)
        }
        OperatorKind::ComposedRfl { s_total, k } => {
            if k < 2 {
                return invalid(format!("COMPOSED_RFL requires k >= 2, got {k}"));
            }
            open_unit("s_total / k", s_total / k as f64)
        }
    }
}

/// Boundary exponent of the Green kernel for `kind`.
pub fn gamma_of(kind: &OperatorKind) -> Result<f64> {
    validate(kind)?;
    Ok(match *kind {
        OperatorKind::Rfl { s } => s,
        OperatorKind::Sfl { .. } => 1.0,
        OperatorKind::Cfl { s } => 2.0 * s - 1.0,
        OperatorKind::RflSum { s1, .. } => s1,
        OperatorKind::SpectralOfRfl { sigma1, .. } => sigma1,
        OperatorKind::ComposedRfl { s_total, k } => s_total / k as f64,
    })
}

/// Effective order `s` of `kind` (the exponent of `|x - y|^{2s - n}`).
pub fn order_of(kind: &OperatorKind) -> Result<f64> {
    validate(kind)?;
    Ok(match *kind {
        OperatorKind::Rfl { s } | OperatorKind::Sfl { s } | OperatorKind::Cfl { s } => s,
        OperatorKind::RflSum { s1, .. } => s1,
        OperatorKind::SpectralOfRfl { sigma1, sigma2 } => sigma1 * sigma2,
        OperatorKind::ComposedRfl { s_total, .. } => s_total,
    })
}

/// A validated operator together with its derived `(s, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    s: f64,
    gamma: f64,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind) -> Result<Self> {
        Ok(Self {
            kind,
            s: order_of(&kind)?,
            gamma: gamma_of(&kind)?,
        })
    }

    pub fn rfl(s: f64) -> Result<Self> {
        Self::new(OperatorKind::Rfl { s })
    }

    pub fn sfl(s: f64) -> Result<Self> {
        Self::new(OperatorKind::Sfl { s })
    }

    pub fn cfl(s: f64) -> Result<Self> {
        Self::new(OperatorKind::Cfl { s })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Composed RFL exponents are only conjectured; results built on them
    /// carry this flag.
    pub fn conjectural(&self) -> bool {
        matches!(self.kind, OperatorKind::ComposedRfl { .. })
    }

    /// Whether the order condition `2s <= 1` holds.
    pub fn satisfies_k3(&self) -> bool {
        2.0 * self.s <= 1.0
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [s={}, gamma={}]", self.kind, self.s, self.gamma)
    }
}

/// `delta^beta` is in `L^1(delta^gamma)` iff `beta + gamma > -1`.
pub fn admissible(beta: f64, gamma: f64) -> bool {
    beta + gamma > -1.0
}
