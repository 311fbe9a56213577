//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum speed of light (m/s).
pub const C0: f64 = 299_792_458.0;

pub const TWO_PI: f64 = 2.0 * PI;

/// Cyclic frequency in Hz to angular frequency.
#[inline]
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

#[inline]
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f * 1e9
}

/// Angular frequency to cyclic Hz.
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}

#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / TWO_PI / 1e6
}

#[inline]
pub fn to_ghz(omega: f64) -> f64 {
    omega / TWO_PI / 1e9
}

/// Power in watts to dBm (referenced to 1 mW).
#[inline]
pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p / 1e-3).log10()
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}
