//! Physical constants (exact SI values since the 2019 redefinition) and
//! the unit factors used throughout the crate.
//!
//! Frequencies are carried in MHz, capacitances in fF, times in μs unless a
//! name says otherwise.

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

pub const MHZ: f64 = 1e6;
pub const FEMTOFARAD: f64 = 1e-15;
pub const MICROSECOND: f64 = 1e-6;
pub const NANOSECOND: f64 = 1e-9;
pub const NANOAMPERE: f64 = 1e-9;
/// One micro-electronvolt in joules.
pub const MICRO_EV: f64 = 1e-6 * ELEMENTARY_CHARGE;

/// Angular frequency in rad/s for a frequency given in MHz.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_mhz * MHZ
}

/// Converts a rate in 1/s to a lifetime in μs, mapping a zero rate to +∞.
pub fn lifetime_us_from_rate(rate_per_s: f64) -> f64 {
    if rate_per_s == 0.0 {
        f64::INFINITY
    } else {
        1.0 / rate_per_s / MICROSECOND
    }
}
