//! Transmon and tunable-coupler relations: energy/frequency conversions,
//! junction parameters, SQUID flux tuning and the CZ02 resonance condition.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, FEMTOFARAD, MHZ, MICRO_EV, NANOAMPERE, PLANCK};
use crate::error::{require_positive, Error, Result};

/// Below this E_J/E_C the perturbative transmon spectrum is noticeably off.
pub const TRANSMON_RATIO_WARN: f64 = 20.0;

/// One Josephson mode (qubit or coupler). All energies are E/h in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    pub f01: f64,
    pub alpha: f64,
    pub ec: f64,
    pub ej: f64,
    pub ratio: f64,
}

impl TransmonParams {
    /// Builds the parameter set from E_C and E_J, with α = −E_C.
    pub fn from_energies(ec: f64, ej: f64) -> Result<Self> {
        let f01 = f01_from_energies(ec, ej)?;
        Ok(Self { f01, alpha: -ec, ec, ej, ratio: ej / ec })
    }

    /// Builds the parameter set from a measured f01 and anharmonicity.
    pub fn from_spectrum(f01: f64, alpha: f64) -> Result<Self> {
        let (ec, ej) = energies_from_spectrum(f01, alpha)?;
        Ok(Self { f01, alpha, ec, ej, ratio: ej / ec })
    }
}

/// Normal-state resistance, critical current and superconducting gap of a
/// tunnel junction, tied together by the Ambegaokar–Baratoff relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams {
    pub rn_ohm: f64,
    pub ic_na: f64,
    pub gap_uev: f64,
}

impl JunctionParams {
    pub fn from_resistance(rn_ohm: f64, gap_uev: f64) -> Result<Self> {
        require_positive("normal-state resistance", rn_ohm)?;
        require_positive("superconducting gap", gap_uev)?;
        let ic = PI * gap_uev * MICRO_EV / (2.0 * ELEMENTARY_CHARGE * rn_ohm);
        Ok(Self { rn_ohm, ic_na: ic / NANOAMPERE, gap_uev })
    }

    /// E_J/h in MHz.
    pub fn ej_mhz(&self) -> f64 {
        self.ic_na * NANOAMPERE / (4.0 * PI * ELEMENTARY_CHARGE) / MHZ
    }
}

/// Flux-tunable coupler with a symmetric SQUID.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub fc0: f64,
    pub alpha_c: f64,
    /// Applied flux in units of Φ0.
    pub flux: f64,
}

impl CouplerSpec {
    pub fn frequency(&self) -> Result<f64> {
        coupler_frequency(self.fc0, self.flux)
    }
}

/// Transmon 0→1 frequency √(8 E_J E_C) − E_C.
pub fn f01_from_energies(ec: f64, ej: f64) -> Result<f64> {
    require_positive("E_C", ec)?;
    require_positive("E_J", ej)?;
    if ej / ec < TRANSMON_RATIO_WARN {
        log::warn!("E_J/E_C = {:.1} is below {TRANSMON_RATIO_WARN}; transmon approximation degrades", ej / ec);
    }
    Ok((8.0 * ej * ec).sqrt() - ec)
}

/// First-order inversion: E_C = −α and E_J chosen so that
/// [`f01_from_energies`] reproduces `f01`.
pub fn energies_from_spectrum(f01: f64, alpha: f64) -> Result<(f64, f64)> {
    require_positive("f01", f01)?;
    if !(alpha.is_finite() && alpha < 0.0) {
        return Err(Error::domain(format!("transmon anharmonicity must be negative, got {alpha}")));
    }
    let ec = -alpha;
    let ej = (f01 + ec).powi(2) / (8.0 * ec);
    Ok((ec, ej))
}

/// Charging energy e²/2C expressed as E_C/h in MHz.
pub fn ec_from_capacitance(c_self_ff: f64) -> Result<f64> {
    require_positive("self-capacitance", c_self_ff)?;
    let c = c_self_ff * FEMTOFARAD;
    Ok(ELEMENTARY_CHARGE.powi(2) / (2.0 * c * PLANCK) / MHZ)
}

/// Josephson energy (MHz) and critical current (nA) for a junction of
/// normal-state resistance `rn_ohm` and gap `gap_uev`.
pub fn ej_from_junction(rn_ohm: f64, gap_uev: f64) -> Result<(f64, f64)> {
    let j = JunctionParams::from_resistance(rn_ohm, gap_uev)?;
    Ok((j.ej_mhz(), j.ic_na))
}

/// Symmetric-SQUID coupler frequency f_c0 √|cos(πΦ/Φ0)|.
pub fn coupler_frequency(fc0: f64, flux: f64) -> Result<f64> {
    require_positive("zero-bias coupler frequency", fc0)?;
    if !flux.is_finite() {
        return Err(Error::domain("flux must be finite"));
    }
    // reduce first so that large |flux| keeps full precision
    let reduced = flux - flux.round();
    Ok(fc0 * (PI * reduced).cos().abs().sqrt())
}

/// Drive frequency of the |11⟩ ↔ |02⟩ transition: f01(q2) − f01(q1) + α(q2).
pub fn cz02_frequency(q1: &TransmonParams, q2: &TransmonParams) -> f64 {
    q2.f01 - q1.f01 + q2.alpha
}
