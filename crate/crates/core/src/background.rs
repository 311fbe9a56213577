//! Measurement background: a global scale and an optional standing-wave ripple
//! from impedance mismatches along the feed line.
//!
//! Raw spectra are modelled as `S_meas = a · S_bg · S₂₁`, and normalization
//! inverts this as `S₂₁ = S_meas / (a · S_bg)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::FrequencyGrid;
use crate::spectrum::ComplexSpectrum;
use crate::tmatrix::TransferMatrix;

/// A lossless point mismatch on the feed line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflector {
    /// Amplitude reflectivity in `[0, 1)`.
    pub reflectivity: f64,
    /// Position along the cable (m).
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    pub scale: f64,
    /// Mismatches ordered along the line; empty means an ideal cable.
    #[serde(default)]
    pub reflectors: Vec<Reflector>,
    /// Propagation velocity in the feed cable (m/s).
    #[serde(default = "default_cable_velocity")]
    pub cable_velocity: f64,
}

fn default_cable_velocity() -> f64 {
    2.0e8
}

impl Default for BackgroundModel {
    fn default() -> Self {
        BackgroundModel {
            scale: 1.0,
            reflectors: Vec::new(),
            cable_velocity: default_cable_velocity(),
        }
    }
}

impl BackgroundModel {
    pub fn flat(scale: f64) -> Result<Self> {
        let b = BackgroundModel {
            scale,
            ..Default::default()
        };
        b.validate()?;
        Ok(b)
    }

    /// Two equal mismatches whose ripple has period `period` (Hz) on a cable with velocity `v`.
    pub fn ripple(scale: f64, reflectivity: f64, period: f64, cable_velocity: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter("ripple period must be positive".into()));
        }
        let spacing = cable_velocity / (2.0 * period);
        let b = BackgroundModel {
            scale,
            reflectors: vec![
                Reflector {
                    reflectivity,
                    position: 0.0,
                },
                Reflector {
                    reflectivity,
                    position: spacing,
                },
            ],
            cable_velocity,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidParameter("background scale must be > 0".into()));
        }
        if !(self.cable_velocity.is_finite() && self.cable_velocity > 0.0) {
            return Err(Error::InvalidParameter("cable velocity must be > 0".into()));
        }
        for (i, r) in self.reflectors.iter().enumerate() {
            if !(0.0..1.0).contains(&r.reflectivity) || !r.position.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "reflector {i}: reflectivity must lie in [0, 1) and position be finite"
                )));
            }
        }
        if self.reflectors.windows(2).any(|w| w[1].position < w[0].position) {
            return Err(Error::InvalidParameter("reflectors must be ordered by position".into()));
        }
        Ok(())
    }

    /// Unscaled ripple transmission `S_bg(ω)` from the first to the last mismatch.
    ///
    /// Each mismatch is a lossless symmetric scatterer with `r = ρ` and
    /// `t = i√(1 − ρ²)`.
    pub fn ripple_transmission(&self, omega: f64) -> Complex64 {
        let mut m = TransferMatrix::identity();
        for (i, refl) in self.reflectors.iter().enumerate() {
            if i > 0 {
                let gap = refl.position - self.reflectors[i - 1].position;
                let seg = TransferMatrix::phase(omega * gap / self.cable_velocity)
                    .expect("validated background has finite phases");
                m = seg * m;
            }
            let rho = refl.reflectivity;
            let t = Complex64::new(0.0, (1.0 - rho * rho).sqrt());
            m = TransferMatrix::scatterer(Complex64::new(rho, 0.0), t).expect("reflectivity < 1 keeps t nonzero") * m;
        }
        m.transmission()
    }

    /// `a · S_bg` on a grid.
    pub fn spectrum(&self, grid: &FrequencyGrid) -> Result<ComplexSpectrum> {
        self.validate()?;
        ComplexSpectrum::from_fn(grid.clone(), |w| self.scale * self.ripple_transmission(w))
    }
}

/// Imposes the background on an ideal spectrum: `a · S_bg · S₂₁`.
pub fn apply_background(spectrum: &ComplexSpectrum, background: &BackgroundModel) -> Result<ComplexSpectrum> {
    spectrum.product(&background.spectrum(spectrum.grid())?)
}

/// Normalizes measured data by a background reference and scale: `S_meas / (a · S_bg)`.
pub fn normalize(measured: &ComplexSpectrum, background_reference: &ComplexSpectrum, a: f64) -> Result<ComplexSpectrum> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter("normalization scale must be > 0".into()));
    }
    measured.quotient(&background_reference.scaled(Complex64::new(a, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{ControlDrive, TransmonQubit};
    use crate::tmatrix::{chain_s21, ChainLayout, PropagationMedium, DEFAULT_SPACING};
    use crate::units::{ghz, mhz, TWO_PI};

    fn grid() -> FrequencyGrid {
        FrequencyGrid::centered(ghz(7.812), mhz(0.25), 400).unwrap()
    }

    fn chain_spectrum() -> ComplexSpectrum {
        let q = TransmonQubit::averaged();
        let layout = ChainLayout::uniform(q, 7, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
        chain_s21(&layout, &ControlDrive::resonant(&q, mhz(40.0)), &grid()).unwrap()
    }

    #[test]
    fn identity_background() {
        let s = chain_spectrum();
        let out = apply_background(&s, &BackgroundModel::default()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn flat_scale_is_divided_out() {
        let raw = ComplexSpectrum::from_fn(grid(), |_| Complex64::new(0.8, -0.2)).unwrap();
        let unity = ComplexSpectrum::unity(grid());
        let n = normalize(&raw, &unity, 2.0).unwrap();
        for v in n.values() {
            assert!((v - Complex64::new(0.4, -0.1)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_with_ripple() {
        let s = chain_spectrum();
        let b = BackgroundModel::ripple(1.7, 0.1, 50e6, 2.0e8).unwrap();
        let raw = apply_background(&s, &b).unwrap();
        let reference = apply_background(&ComplexSpectrum::unity(grid()), &b).unwrap();
        let back = normalize(&raw, &reference, 1.0).unwrap();
        for (a, b) in back.values().iter().zip(s.values()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-3));
        }
    }

    #[test]
    fn ripple_matches_airy_formula() {
        let rho = 0.1;
        let b = BackgroundModel::ripple(1.0, rho, 50e6, 2.0e8).unwrap();
        let length = b.reflectors[1].position;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for w in grid().iter() {
            // Two-mirror Airy transmission with round-trip phase 2ωL/v.
            let theta = w * length / b.cable_velocity;
            let airy = (1.0 - rho * rho) / (1.0 - rho * rho * Complex64::from_polar(1.0, 2.0 * theta)).norm();
            let m = b.ripple_transmission(w).norm();
            assert!((m - airy).abs() < 1e-12);
            lo = lo.min(m);
            hi = hi.max(m);
        }
        // Window spans 100 MHz, two full ripple periods: extremes reach the closed-form bounds.
        assert!((hi - 1.0).abs() < 1e-4);
        assert!((lo - (1.0 - rho * rho) / (1.0 + rho * rho)).abs() < 1e-4);
        // Period check: the phase advances by π over 50 MHz.
        assert!((TWO_PI * 50e6 * length / b.cable_velocity - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        let s = chain_spectrum();
        let zero = ComplexSpectrum::from_fn(grid(), |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(normalize(&s, &zero, 1.0), Err(Error::DivisionGuard { index: 0 })));
        let other = ComplexSpectrum::unity(FrequencyGrid::new(vec![1.0, 2.0]).unwrap());
        assert!(matches!(normalize(&s, &other, 1.0), Err(Error::Shape(_))));
        assert!(BackgroundModel::flat(0.0).is_err());
        assert!(BackgroundModel::ripple(1.0, 1.0, 50e6, 2e8).is_err());
    }
}
