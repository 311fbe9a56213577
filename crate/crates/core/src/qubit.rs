//! Single three-level emitter: dressed-state scattering and control-power calibration.
//!
//! Time dependence is taken as `exp(-iωt)`. With that convention a weak probe
//! at `ω` sees the reflection amplitude
//!
//! ```text
//! r = -Γ₁₀ / ( 2[γ₁₀ - i(ω - ω₁₀)] + Ω_c² / (2γ₂₀ - 2i(ω - ω₁₀ + ω_c - ω₂₁)) )
//! ```
//!
//! and transmits `t = 1 + r`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, HBAR};

/// Three-level transmon parameters, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonQubit {
    /// 0→1 transition frequency.
    pub omega10: f64,
    /// ω₁₀ − ω₂₁, positive for transmons.
    pub anharmonicity: f64,
    /// Radiative relaxation rate Γ₁₀ into the waveguide.
    pub radiative_rate: f64,
    /// Non-radiative decoherence Γ_nr (pure dephasing and loss to unguided modes).
    pub nonradiative_rate: f64,
    /// Decoherence rate γ₂₀ of the 2→0 coherence.
    pub dephasing_20: f64,
    /// Radiative rate Γ₂₁; `None` means the transmon scaling 2Γ₁₀.
    pub radiative_rate_21: Option<f64>,
}

/// Non-fatal physical consistency findings.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// γ₂₀ ≤ Γ₂₁/2 although ladder systems require γ₂₀ > Γ₂₁/2.
    Dephasing20BelowRadiativeLimit { dephasing_20: f64, limit: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Dephasing20BelowRadiativeLimit { dephasing_20, limit } => write!(
                f,
                "gamma20/2pi = {:.3} MHz does not exceed Gamma21/4pi = {:.3} MHz",
                units::to_mhz(*dephasing_20),
                units::to_mhz(*limit)
            ),
        }
    }
}

impl TransmonQubit {
    pub fn new(
        omega10: f64,
        anharmonicity: f64,
        radiative_rate: f64,
        nonradiative_rate: f64,
        dephasing_20: f64,
    ) -> Result<Self> {
        let q = TransmonQubit {
            omega10,
            anharmonicity,
            radiative_rate,
            nonradiative_rate,
            dephasing_20,
            radiative_rate_21: None,
        };
        q.validate()?;
        Ok(q)
    }

    /// Chain-averaged parameters at the 7.812 GHz operating point:
    /// Γ₁₀/2π = 12 MHz, γ₁₀/2π = 6.9 MHz, γ₂₀/2π = 6.9 MHz, ω₂₁/2π = 7.533 GHz.
    pub fn averaged() -> Self {
        TransmonQubit {
            omega10: units::ghz(7.812),
            anharmonicity: units::mhz(279.0),
            radiative_rate: units::mhz(12.0),
            nonradiative_rate: units::mhz(0.9),
            dephasing_20: units::mhz(6.9),
            radiative_rate_21: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega10", self.omega10),
            ("anharmonicity", self.anharmonicity),
            ("radiative_rate", self.radiative_rate),
            ("nonradiative_rate", self.nonradiative_rate),
            ("dephasing_20", self.dephasing_20),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.omega10 <= 0.0 {
            return Err(Error::InvalidParameter("omega10 must be positive".into()));
        }
        if self.anharmonicity < 0.0 {
            return Err(Error::InvalidParameter("anharmonicity must be >= 0".into()));
        }
        for (name, v) in &fields[2..] {
            if *v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        if let Some(g21) = self.radiative_rate_21 {
            if !g21.is_finite() || g21 < 0.0 {
                return Err(Error::InvalidParameter("radiative_rate_21 must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// γ₁₀ = Γ₁₀/2 + Γ_nr.
    #[inline]
    pub fn decoherence_10(&self) -> f64 {
        0.5 * self.radiative_rate + self.nonradiative_rate
    }

    #[inline]
    pub fn omega21(&self) -> f64 {
        self.omega10 - self.anharmonicity
    }

    pub fn radiative_rate_21(&self) -> f64 {
        self.radiative_rate_21.unwrap_or(2.0 * self.radiative_rate)
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let limit = 0.5 * self.radiative_rate_21();
        if self.dephasing_20 > limit {
            Vec::new()
        } else {
            vec![Warning::Dephasing20BelowRadiativeLimit {
                dephasing_20: self.dephasing_20,
                limit,
            }]
        }
    }

    /// Same qubit with Γ_nr = 0 and γ₂₀ = 0.
    pub fn lossless(&self) -> Self {
        TransmonQubit {
            nonradiative_rate: 0.0,
            dephasing_20: 0.0,
            ..*self
        }
    }

    pub fn tuned_to(&self, omega10: f64) -> Self {
        TransmonQubit { omega10, ..*self }
    }

    /// Resonant single-qubit extinction `1 - |t(ω₁₀)|²` with the control off.
    pub fn extinction(&self) -> Result<f64> {
        let t = transmission(self, &ControlDrive::off(), self.omega10)?;
        Ok(1.0 - t.norm_sqr())
    }
}

/// Control tone on the 1→2 transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlDrive {
    /// Control frequency ω_c (rad/s).
    pub omega_c: f64,
    /// Rabi strength Ω_c (rad/s); zero means the control is off.
    pub rabi: f64,
}

impl ControlDrive {
    pub fn new(omega_c: f64, rabi: f64) -> Result<Self> {
        if !omega_c.is_finite() || !rabi.is_finite() {
            return Err(Error::InvalidParameter("control drive is not finite".into()));
        }
        if rabi < 0.0 {
            return Err(Error::InvalidParameter("Rabi strength must be >= 0".into()));
        }
        Ok(ControlDrive { omega_c, rabi })
    }

    pub fn off() -> Self {
        ControlDrive {
            omega_c: 0.0,
            rabi: 0.0,
        }
    }

    /// Drive resonant with the qubit's 2→1 transition.
    pub fn resonant(qubit: &TransmonQubit, rabi: f64) -> Self {
        ControlDrive {
            omega_c: qubit.omega21(),
            rabi,
        }
    }

    pub fn is_off(&self) -> bool {
        self.rabi == 0.0
    }
}

/// Strictly increasing list of probe angular frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid(Vec<f64>);

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("frequency grid is empty".into()));
        }
        if points.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("frequency grid has non-finite points".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "frequency grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(FrequencyGrid(points))
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::InvalidParameter("grid needs at least one point".into())),
            1 => Self::new(vec![start]),
            _ => {
                let step = (stop - start) / (n - 1) as f64;
                Self::new((0..n).map(|i| start + step * i as f64).collect())
            }
        }
    }

    /// `2 * half_points + 1` points centred on `center` with spacing `step`.
    pub fn centered(center: f64, step: f64, half_points: usize) -> Result<Self> {
        let h = half_points as i64;
        Self::new((-h..=h).map(|i| center + step * i as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    /// Index of the grid point closest to `omega`.
    pub fn nearest_index(&self, omega: f64) -> usize {
        match self.0.binary_search_by(|w| w.total_cmp(&omega)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.0.len() => i - 1,
            Err(i) => {
                if omega - self.0[i - 1] <= self.0[i] - omega {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FrequencyGrid::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.0
    }
}

fn check_finite(omega: f64, drive: &ControlDrive) -> Result<()> {
    if !omega.is_finite() || !drive.omega_c.is_finite() || !drive.rabi.is_finite() {
        return Err(Error::InvalidParameter("non-finite probe or drive".into()));
    }
    if drive.rabi < 0.0 {
        return Err(Error::InvalidParameter("Rabi strength must be >= 0".into()));
    }
    Ok(())
}

/// Dressed single-qubit reflection amplitude.
///
/// With the control off the dressing term vanishes and the result is the
/// two-level Lorentzian `-(Γ₁₀/2)/(γ₁₀ - iΔ)`. When `γ₂₀ = 0` and the
/// two-photon detuning vanishes under a finite drive, the dressing term
/// diverges and the qubit is transparent (`r = 0`).
pub fn reflection(qubit: &TransmonQubit, drive: &ControlDrive, omega: f64) -> Result<Complex64> {
    qubit.validate()?;
    check_finite(omega, drive)?;
    let detuning = omega - qubit.omega10;
    let bare = Complex64::new(2.0 * qubit.decoherence_10(), -2.0 * detuning);
    let dressing = if drive.is_off() {
        Complex64::new(0.0, 0.0)
    } else {
        let two_photon = detuning + drive.omega_c - qubit.omega21();
        let den = Complex64::new(2.0 * qubit.dephasing_20, -2.0 * two_photon);
        if den.norm_sqr() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        drive.rabi * drive.rabi / den
    };
    let den = bare + dressing;
    if den.norm_sqr() == 0.0 {
        return Err(Error::SingularModel(format!(
            "reflection denominator vanishes at omega = {omega:.6e} rad/s (lossless resonance)"
        )));
    }
    Ok(-qubit.radiative_rate / den)
}

/// `t = 1 + r`.
pub fn transmission(qubit: &TransmonQubit, drive: &ControlDrive, omega: f64) -> Result<Complex64> {
    Ok(1.0 + reflection(qubit, drive, omega)?)
}

/// Transmission for resonant probe (`ω = ω₁₀`) and control (`ω_c = ω₂₁`):
/// `t = 1 - (Γ₁₀/2γ₁₀) / (1 + Ω_c²/(4γ₂₀γ₁₀))`.
pub fn resonant_transmission(qubit: &TransmonQubit, rabi: f64) -> Result<f64> {
    qubit.validate()?;
    if !rabi.is_finite() || rabi < 0.0 {
        return Err(Error::InvalidParameter("Rabi strength must be finite and >= 0".into()));
    }
    let g10 = qubit.decoherence_10();
    if g10 == 0.0 {
        return Err(Error::SingularModel("gamma10 = 0 on resonance".into()));
    }
    let saturation = if rabi == 0.0 {
        0.0
    } else if qubit.dephasing_20 == 0.0 {
        return Err(Error::SingularModel("gamma20 = 0 with a finite drive".into()));
    } else {
        rabi * rabi / (4.0 * qubit.dephasing_20 * g10)
    };
    Ok(1.0 - (qubit.radiative_rate / (2.0 * g10)) / (1.0 + saturation))
}

/// Incident control power (W) for the drive's Rabi strength: `P_c = ħω_cΩ_c²/(4Γ₁₀)`.
pub fn rabi_to_power(qubit: &TransmonQubit, drive: &ControlDrive) -> Result<f64> {
    if qubit.radiative_rate <= 0.0 {
        return Err(Error::SingularModel("Gamma10 = 0 in power calibration".into()));
    }
    check_finite(0.0, drive)?;
    Ok(HBAR * drive.omega_c * drive.rabi * drive.rabi / (4.0 * qubit.radiative_rate))
}

/// Inverse of [`rabi_to_power`].
pub fn power_to_rabi(qubit: &TransmonQubit, omega_c: f64, power: f64) -> Result<f64> {
    if qubit.radiative_rate <= 0.0 {
        return Err(Error::SingularModel("Gamma10 = 0 in power calibration".into()));
    }
    if !power.is_finite() || power < 0.0 {
        return Err(Error::InvalidParameter("control power must be finite and >= 0".into()));
    }
    if !(omega_c.is_finite() && omega_c > 0.0) {
        return Err(Error::InvalidParameter("control frequency must be positive".into()));
    }
    Ok((4.0 * qubit.radiative_rate * power / (HBAR * omega_c)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{dbm_to_watts, ghz, mhz, to_mhz, watts_to_dbm};
    use proptest::prelude::*;

    fn two_level(gamma10_mhz: f64, big_gamma_mhz: f64) -> TransmonQubit {
        TransmonQubit {
            omega10: ghz(7.812),
            anharmonicity: mhz(279.0),
            radiative_rate: mhz(big_gamma_mhz),
            nonradiative_rate: mhz(gamma10_mhz - big_gamma_mhz / 2.0),
            dephasing_20: mhz(6.9),
            radiative_rate_21: None,
        }
    }

    #[test]
    fn resonant_two_level_reflection() {
        let q = TransmonQubit::averaged();
        let r = reflection(&q, &ControlDrive::off(), q.omega10).unwrap();
        assert!((r.re + 12.0 / 13.8).abs() < 1e-12);
        assert!(r.im.abs() < 1e-12);
        let t = transmission(&q, &ControlDrive::off(), q.omega10).unwrap();
        assert!((t.re - (1.0 - 12.0 / 13.8)).abs() < 1e-12);
        assert!((t.re - 0.1304).abs() < 1e-4);
    }

    #[test]
    fn first_table_qubit_extinction() {
        // Γ₁₀/2π = 7.3 MHz, γ₁₀/2π = 4.2 MHz, tabulated 98.4 %.
        let q = two_level(4.2, 7.3);
        let ext = q.extinction().unwrap();
        assert!((ext - (1.0 - (1.0 - 7.3 / 8.4_f64).powi(2))).abs() < 1e-12);
        assert!((ext * 100.0 - 98.4).abs() < 0.5);
    }

    #[test]
    fn far_detuned_probe_is_transparent() {
        let q = TransmonQubit::averaged();
        let drive = ControlDrive::resonant(&q, mhz(40.0));
        let r = reflection(&q, &drive, q.omega10 + ghz(50.0)).unwrap();
        assert!(r.norm() < 1e-3);
    }

    #[test]
    fn strong_drive_opens_transparency() {
        let q = TransmonQubit::averaged();
        let t = transmission(&q, &ControlDrive::resonant(&q, mhz(5000.0)), q.omega10).unwrap();
        assert!((t.norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn resonant_transmission_matches_scalar_evaluation() {
        let q = TransmonQubit::averaged();
        let rabi = mhz(40.0);
        // Scalar oracle in MHz units: 1 - (Γ/2γ10)/(1 + Ω²/(4γ20γ10)).
        let oracle = 1.0 - (12.0 / 13.8) / (1.0 + 1600.0 / (4.0 * 6.9 * 6.9));
        let direct = resonant_transmission(&q, rabi).unwrap();
        assert!((direct - oracle).abs() / oracle < 1e-12);
        let full = transmission(&q, &ControlDrive::resonant(&q, rabi), q.omega10).unwrap();
        assert!((full.re - direct).abs() / direct < 1e-12);
        assert!(full.im.abs() < 1e-12);
    }

    #[test]
    fn resonant_transmission_limits() {
        let q = TransmonQubit::averaged();
        let t0 = resonant_transmission(&q, 0.0).unwrap();
        assert!((t0 - (1.0 - 12.0 / 13.8)).abs() < 1e-12);
        assert!((resonant_transmission(&q, mhz(1e6)).unwrap() - 1.0).abs() < 1e-6);
        let mut prev = t0;
        for k in 1..50 {
            let t = resonant_transmission(&q, mhz(k as f64 * 4.0)).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn singular_cases() {
        let mut q = TransmonQubit::averaged();
        q.radiative_rate = 0.0;
        q.nonradiative_rate = 0.0;
        assert!(matches!(
            reflection(&q, &ControlDrive::off(), q.omega10),
            Err(Error::SingularModel(_))
        ));
        assert!(matches!(
            rabi_to_power(&q, &ControlDrive::resonant(&q, 1.0)),
            Err(Error::SingularModel(_))
        ));
        let mut q = TransmonQubit::averaged();
        q.dephasing_20 = 0.0;
        assert!(matches!(
            resonant_transmission(&q, mhz(10.0)),
            Err(Error::SingularModel(_))
        ));
        let bad = ControlDrive {
            omega_c: f64::NAN,
            rabi: 1.0,
        };
        assert!(matches!(
            reflection(&TransmonQubit::averaged(), &bad, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn lossless_dark_state_is_transparent() {
        let q = TransmonQubit::averaged().lossless();
        let r = reflection(&q, &ControlDrive::resonant(&q, mhz(20.0)), q.omega10).unwrap();
        assert_eq!(r, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn control_power_scale() {
        let q = TransmonQubit::averaged();
        let drive = ControlDrive::new(ghz(7.533), mhz(40.0)).unwrap();
        let p = rabi_to_power(&q, &drive).unwrap();
        // ħ·ω_c·Ω²/(4Γ) evaluated term by term.
        let oracle = 1.054_571_817e-34 * (2.0 * std::f64::consts::PI * 7.533e9)
            * (2.0 * std::f64::consts::PI * 40e6).powi(2)
            / (4.0 * 2.0 * std::f64::consts::PI * 12e6);
        assert!((p - oracle).abs() / oracle < 1e-12);
        assert!((p / 1e-15 - 1.0).abs() < 0.06);
        assert!((watts_to_dbm(p) + 120.0).abs() < 0.3);
        assert_eq!(rabi_to_power(&q, &ControlDrive::new(ghz(7.533), 0.0).unwrap()).unwrap(), 0.0);

        let rabi = power_to_rabi(&q, ghz(7.533), dbm_to_watts(-124.0)).unwrap();
        assert!((to_mhz(rabi) - 24.68).abs() < 0.05);
    }

    #[test]
    fn consistency_warning() {
        // Γ₂₁ defaults to 2Γ₁₀ = 24 MHz, so the limit is 12 MHz and the
        // averaged γ₂₀ = 6.9 MHz is flagged.
        let mut q = TransmonQubit::averaged();
        assert_eq!(q.warnings().len(), 1);
        q.dephasing_20 = mhz(12.5);
        assert!(q.warnings().is_empty());
        q.dephasing_20 = mhz(5.0);
        q.radiative_rate_21 = Some(mhz(8.0));
        assert!(q.warnings().is_empty());
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, f64::NAN]).is_err());
        let g = FrequencyGrid::linspace(0.0, 10.0, 11).unwrap();
        assert_eq!(g.nearest_index(3.4), 3);
        assert_eq!(g.nearest_index(3.6), 4);
        assert_eq!(g.nearest_index(-5.0), 0);
        assert_eq!(g.nearest_index(50.0), 10);
    }

    fn arb_qubit() -> impl Strategy<Value = TransmonQubit> {
        (
            1.0f64..30.0,
            0.0f64..5.0,
            0.0f64..20.0,
            200.0f64..320.0,
        )
            .prop_map(|(g, nr, g20, anh)| TransmonQubit {
                omega10: ghz(7.812),
                anharmonicity: mhz(anh),
                radiative_rate: mhz(g),
                nonradiative_rate: mhz(nr),
                dephasing_20: mhz(g20),
                radiative_rate_21: None,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn passivity(q in arb_qubit(), rabi in 0.0f64..200.0, det in -300.0f64..300.0, cdet in -20.0f64..20.0) {
            let drive = ControlDrive { omega_c: q.omega21() + mhz(cdet), rabi: mhz(rabi) };
            let w = q.omega10 + mhz(det);
            if let Ok(r) = reflection(&q, &drive, w) {
                let t = 1.0 + r;
                prop_assert!(t.norm_sqr() + r.norm_sqr() <= 1.0 + 1e-12);
                prop_assert!(t.norm() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn control_off_is_two_level_lorentzian(q in arb_qubit(), det in -300.0f64..300.0) {
            let w = q.omega10 + mhz(det);
            let r = reflection(&q, &ControlDrive::off(), w).unwrap();
            let lorentz = -(q.radiative_rate / 2.0)
                / Complex64::new(q.decoherence_10(), -(w - q.omega10));
            prop_assert!((r - lorentz).norm() <= 1e-14 * lorentz.norm().max(1e-300));
        }

        #[test]
        fn resonance_consistency(q in arb_qubit(), rabi in 0.0f64..200.0) {
            prop_assume!(q.dephasing_20 > 0.0);
            let rabi = mhz(rabi);
            let direct = resonant_transmission(&q, rabi).unwrap();
            let full = transmission(&q, &ControlDrive::resonant(&q, rabi), q.omega10).unwrap();
            prop_assert!((full.re - direct).abs() <= 1e-12 * direct.abs().max(1e-12));
        }

        #[test]
        fn calibration_round_trip(rabi in 0.0f64..200.0) {
            let q = TransmonQubit::averaged();
            let omega = mhz(rabi);
            let drive = ControlDrive::resonant(&q, omega);
            let p = rabi_to_power(&q, &drive).unwrap();
            let back = power_to_rabi(&q, drive.omega_c, p).unwrap();
            prop_assert!((back - omega).abs() <= 1e-12 * omega.max(1e-300));
        }
    }

    #[test]
    fn dressed_state_splitting() {
        // Damping pulls the two minima of |t| inward from ±Ω_c/2 by roughly
        // 0.6γ₁₀²/Ω_c (about 1 MHz at Ω_c = 4γ₁₀), so the separation is checked
        // against Ω_c within one grid step plus γ₁₀²/Ω_c.
        let q = TransmonQubit::averaged();
        let g10 = q.decoherence_10();
        for rabi_mhz in [27.6, 40.0, 60.0, 100.0] {
            let drive = ControlDrive::resonant(&q, mhz(rabi_mhz));
            let step = mhz(0.05);
            let grid = FrequencyGrid::centered(q.omega10, step, 4000).unwrap();
            let mag: Vec<f64> = grid
                .iter()
                .map(|w| transmission(&q, &drive, w).unwrap().norm())
                .collect();
            let minima: Vec<f64> = (1..mag.len() - 1)
                .filter(|&i| mag[i] < mag[i - 1] && mag[i] <= mag[i + 1])
                .map(|i| grid.as_slice()[i])
                .collect();
            assert_eq!(minima.len(), 2, "rabi {rabi_mhz}");
            let split = minima[1] - minima[0];
            let rabi = mhz(rabi_mhz);
            let tol = step * 1.0001 + g10 * g10 / rabi;
            assert!(split < rabi, "rabi {rabi_mhz}");
            assert!((split - rabi).abs() <= tol, "rabi {rabi_mhz}: {}", to_mhz(split));
        }
    }
}
