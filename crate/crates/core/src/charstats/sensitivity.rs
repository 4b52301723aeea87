//! Propagation of fractional E_C and E_J variations to f01 at first order.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::transmon::f01_from_energies;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInput {
    pub ec: f64,
    pub ej: f64,
    pub rel_dec: f64,
    pub rel_dej: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// |term_EC| + |term_EJ|.
    #[default]
    WorstCase,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub f01: f64,
    pub ec_term: f64,
    pub ej_term: f64,
    pub total: f64,
    pub combination: Combination,
}

/// Fractional f01 change from fractional E_C and E_J variations:
/// ∂ln f01/∂ln E_C = (½√(8E_J/E_C) − 1)·E_C/f01 and
/// ∂ln f01/∂ln E_J = ½√(8E_C/E_J)·E_J/f01.
pub fn frequency_sensitivity(s: &SensitivityInput, mode: Combination) -> Result<Sensitivity> {
    require_positive("EC", s.ec)?;
    require_positive("EJ", s.ej)?;
    if !(s.rel_dec >= 0.0 && s.rel_dej >= 0.0 && s.rel_dec.is_finite() && s.rel_dej.is_finite()) {
        return Err(Error::domain("relative variations must be non-negative"));
    }
    let f01 = f01_from_energies(s.ec, s.ej)?;
    let ec_term = ((0.5 * (8.0 * s.ej / s.ec).sqrt() - 1.0) * s.ec / f01).abs() * s.rel_dec;
    let ej_term = (0.5 * (8.0 * s.ec / s.ej).sqrt() * s.ej / f01).abs() * s.rel_dej;
    let total = match mode {
        Combination::WorstCase => ec_term + ej_term,
        Combination::Quadrature => ec_term.hypot(ej_term),
    };
    Ok(Sensitivity { f01, ec_term, ej_term, total, combination: mode })
}
