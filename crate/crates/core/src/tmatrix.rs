//! Transfer matrices for qubits and waveguide segments, and chain spectra.
//!
//! Matrices act on `(right-moving, left-moving)` amplitudes and map the field
//! on the left of an element to the field on its right. A symmetric scatterer
//! with reflection `r` and transmission `t` has
//!
//! ```text
//! T = (1/t) [[t² − r², r], [−r, 1]]
//! ```
//!
//! so for a qubit (`t = 1 + r`) `½Tr(T₁T_φ) = cos φ + (i r/(1+r)) sin φ`. The
//! composite of a chain is `M = T_N T_φ ⋯ T_φ T_1` and its transmission is
//! `1/M₂₂`.

use std::ops::Mul;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{reflection, ControlDrive, FrequencyGrid, TransmonQubit};
use crate::spectrum::ComplexSpectrum;
use crate::units::C0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[Complex64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TransferMatrix([[one, zero], [zero, one]])
    }

    /// Symmetric scatterer with reflection `r` and transmission `t`.
    pub fn scatterer(r: Complex64, t: Complex64) -> Option<Self> {
        if t.norm_sqr() == 0.0 {
            return None;
        }
        let inv = 1.0 / t;
        Some(TransferMatrix([
            [(t * t - r * r) * inv, r * inv],
            [-r * inv, inv],
        ]))
    }

    /// Qubit with reflection `r`, i.e. `t = 1 + r`.
    pub fn qubit(r: Complex64) -> Result<Self> {
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite reflection".into()));
        }
        let t = 1.0 + r;
        if t.norm_sqr() == 0.0 {
            return Err(Error::SingularScatterer {
                qubit: 0,
                omega: f64::NAN,
            });
        }
        let inv = 1.0 / t;
        Ok(TransferMatrix([
            [(1.0 + 2.0 * r) * inv, r * inv],
            [-r * inv, inv],
        ]))
    }

    /// Bare line with phase delay `phi`: `diag(e^{iφ}, e^{−iφ})`.
    pub fn phase(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("non-finite phase".into()));
        }
        let zero = Complex64::new(0.0, 0.0);
        let e = Complex64::from_polar(1.0, phi);
        Ok(TransferMatrix([[e, zero], [zero, e.conj()]]))
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Transmission seen from the left, `1/M₂₂`.
    ///
    /// Every matrix built here has unit determinant, for which `det(M)/M₂₂`
    /// reduces to `1/M₂₂`. The reduced form avoids the cancellation in
    /// `M₁₁M₂₂ − M₁₂M₂₁` that ruins the determinant deep inside a bandgap.
    pub fn transmission(&self) -> Complex64 {
        1.0 / self.0[1][1]
    }

    /// Reflection back to the left input, `−M₂₁/M₂₂`.
    pub fn reflection(&self) -> Complex64 {
        -self.0[1][0] / self.0[1][1]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;
    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let a = &self.0;
        let b = &rhs.0;
        TransferMatrix([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Effective propagation velocity of the coplanar waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationMedium {
    pub phase_velocity: f64,
}

/// Spacing used for the default medium calibration.
pub const DEFAULT_SPACING: f64 = 400e-6;

impl PropagationMedium {
    pub fn new(phase_velocity: f64) -> Result<Self> {
        if !(phase_velocity.is_finite() && phase_velocity > 0.0 && phase_velocity <= C0) {
            return Err(Error::InvalidParameter(format!(
                "phase velocity {phase_velocity} must lie in (0, c0]"
            )));
        }
        Ok(PropagationMedium { phase_velocity })
    }

    /// Velocity for which a 400 µm segment delays 0.16 rad at 8 GHz (≈ 1.26e8 m/s).
    pub fn calibrated() -> Self {
        PropagationMedium {
            phase_velocity: crate::units::ghz(8.0) * DEFAULT_SPACING / 0.16,
        }
    }

    pub fn phase(&self, omega: f64, length: f64) -> f64 {
        omega * length / self.phase_velocity
    }
}

impl Default for PropagationMedium {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// Ordered qubits with uniform spacing along the waveguide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLayout {
    qubits: Vec<TransmonQubit>,
    spacing: f64,
    medium: PropagationMedium,
}

/// Scattering of the full chain at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResponse {
    pub s21: Complex64,
    pub s11: Complex64,
}

impl ChainLayout {
    pub fn new(qubits: Vec<TransmonQubit>, spacing: f64, medium: PropagationMedium) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidParameter("chain needs at least one qubit".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter("qubit spacing must be positive".into()));
        }
        for q in &qubits {
            q.validate()?;
        }
        PropagationMedium::new(medium.phase_velocity)?;
        Ok(ChainLayout {
            qubits,
            spacing,
            medium,
        })
    }

    /// `n` copies of one qubit.
    pub fn uniform(qubit: TransmonQubit, n: usize, spacing: f64, medium: PropagationMedium) -> Result<Self> {
        Self::new(vec![qubit; n], spacing, medium)
    }

    pub fn qubits(&self) -> &[TransmonQubit] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn medium(&self) -> PropagationMedium {
        self.medium
    }

    /// Phase delay of one inter-qubit segment.
    pub fn segment_phase(&self, omega: f64) -> f64 {
        self.medium.phase(omega, self.spacing)
    }

    /// Phase `(N−1)φ` accumulated along the bare line between the outer qubits.
    pub fn line_phase(&self, omega: f64) -> f64 {
        (self.qubits.len() - 1) as f64 * self.segment_phase(omega)
    }

    pub fn reversed(&self) -> Self {
        let mut qubits = self.qubits.clone();
        qubits.reverse();
        ChainLayout { qubits, ..*self }
    }

    /// Keeps the first `n` qubits.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.qubits[..n.min(self.qubits.len())].to_vec(), self.spacing, self.medium)
    }

    pub fn with_qubits(&self, qubits: Vec<TransmonQubit>) -> Result<Self> {
        Self::new(qubits, self.spacing, self.medium)
    }

    pub fn qubit_matrix(&self, index: usize, drive: &ControlDrive, omega: f64) -> Result<TransferMatrix> {
        let r = reflection(&self.qubits[index], drive, omega)?;
        TransferMatrix::qubit(r).map_err(|e| match e {
            Error::SingularScatterer { .. } => Error::SingularScatterer { qubit: index, omega },
            e => e,
        })
    }

    /// Composite matrix `T_N T_φ ⋯ T_φ T_1`.
    pub fn composite_matrix(&self, drive: &ControlDrive, omega: f64) -> Result<TransferMatrix> {
        let segment = TransferMatrix::phase(self.segment_phase(omega))?;
        let mut m = self.qubit_matrix(0, drive, omega)?;
        for i in 1..self.qubits.len() {
            m = self.qubit_matrix(i, drive, omega)? * (segment * m);
        }
        Ok(m)
    }

    pub fn response(&self, drive: &ControlDrive, omega: f64) -> Result<ChainResponse> {
        let m = self.composite_matrix(drive, omega)?;
        Ok(ChainResponse {
            s21: m.transmission(),
            s11: m.reflection(),
        })
    }

    /// `e^{i(N−1)φ(ω)}` on the grid; dividing by it references a spectrum to the bare line.
    pub fn line_reference(&self, grid: &FrequencyGrid) -> ComplexSpectrum {
        ComplexSpectrum::from_fn(grid.clone(), |w| Complex64::from_polar(1.0, self.line_phase(w)))
            .expect("unit-modulus reference is finite")
    }
}

/// Chain transmission spectrum. Grid points are evaluated in parallel; each
/// point is independent so the result matches sequential evaluation exactly.
pub fn chain_s21(layout: &ChainLayout, drive: &ControlDrive, grid: &FrequencyGrid) -> Result<ComplexSpectrum> {
    let values = grid
        .as_slice()
        .par_iter()
        .map(|&w| layout.response(drive, w).map(|r| r.s21))
        .collect::<Result<Vec<_>>>()?;
    ComplexSpectrum::new(grid.clone(), values)
}

/// Chain transmission with the bare-line phase `e^{i(N−1)φ}` removed.
pub fn chain_s21_referenced(
    layout: &ChainLayout,
    drive: &ControlDrive,
    grid: &FrequencyGrid,
) -> Result<ComplexSpectrum> {
    chain_s21(layout, drive, grid)?.quotient(&layout.line_reference(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::transmission;
    use crate::units::{ghz, mhz};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_reflection_is_identity() {
        assert_eq!(TransferMatrix::qubit(c(0.0, 0.0)).unwrap(), TransferMatrix::identity());
        assert_eq!(TransferMatrix::phase(0.0).unwrap(), TransferMatrix::identity());
    }

    #[test]
    fn half_turn_phase() {
        let m = TransferMatrix::phase(std::f64::consts::PI).unwrap();
        assert!((m.0[0][0] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((m.0[1][1] - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(m.0[0][1], c(0.0, 0.0));
    }

    #[test]
    fn segment_phase_entries() {
        let phi: f64 = 0.156;
        let m = TransferMatrix::phase(phi).unwrap();
        assert!((m.0[0][0] - c(phi.cos(), phi.sin())).norm() < 1e-15);
        assert!((m.0[1][1] - c(phi.cos(), -phi.sin())).norm() < 1e-15);
    }

    #[test]
    fn resonant_qubit_entries() {
        let r = -0.8696;
        let m = TransferMatrix::qubit(c(r, 0.0)).unwrap();
        // Hand evaluation: t = 0.1304.
        let t = 0.1304;
        assert!((m.0[0][0].re - (1.0 - 2.0 * 0.8696) / t).abs() < 1e-9);
        assert!((m.0[0][1].re - r / t).abs() < 1e-9);
        assert!((m.0[1][0].re + r / t).abs() < 1e-9);
        assert!((m.0[1][1].re - 1.0 / t).abs() < 1e-9);
        assert!((m.0[0][0].re + 5.6687).abs() < 1e-3);
        assert!((m.0[1][1].re - 7.6687).abs() < 1e-3);
        assert!((m.transmission() - c(t, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn perfect_extinction_is_singular() {
        assert!(matches!(
            TransferMatrix::qubit(c(-1.0, 0.0)),
            Err(Error::SingularScatterer { .. })
        ));
        let q = TransmonQubit::averaged().lossless();
        let layout = ChainLayout::uniform(q, 3, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
        match chain_s21(&layout, &ControlDrive::off(), &FrequencyGrid::new(vec![q.omega10]).unwrap()) {
            Err(Error::SingularScatterer { qubit, omega }) => {
                assert_eq!(qubit, 0);
                assert_eq!(omega, q.omega10);
            }
            other => panic!("expected singular scatterer, got {other:?}"),
        }
    }

    #[test]
    fn unit_determinant() {
        let m = TransferMatrix::qubit(c(-0.3, 0.2)).unwrap() * TransferMatrix::phase(0.7).unwrap();
        assert!((m.det() - c(1.0, 0.0)).norm() < 1e-14);
        let s = TransferMatrix::scatterer(c(0.1, 0.0), c(0.0, 0.99f64.sqrt())).unwrap();
        assert!((s.det() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn calibrated_medium() {
        let m = PropagationMedium::calibrated();
        assert!((m.phase_velocity - 1.2566e8).abs() < 1e4);
        assert!((m.phase(ghz(8.0), DEFAULT_SPACING) - 0.16).abs() < 1e-12);
        assert!((m.phase(ghz(7.812), DEFAULT_SPACING) - 0.156).abs() < 5e-4);
        assert!(PropagationMedium::new(3.1e8).is_err());
        assert!(PropagationMedium::new(0.0).is_err());
    }

    fn averaged_chain(n: usize) -> ChainLayout {
        ChainLayout::uniform(TransmonQubit::averaged(), n, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap()
    }

    #[test]
    fn single_qubit_chain_reproduces_transmission() {
        let layout = averaged_chain(1);
        let q = TransmonQubit::averaged();
        let drive = ControlDrive::resonant(&q, mhz(40.0));
        let grid = FrequencyGrid::centered(q.omega10, mhz(0.5), 200).unwrap();
        let s = chain_s21(&layout, &drive, &grid).unwrap();
        for (w, v) in grid.iter().zip(s.values()) {
            let t = transmission(&q, &drive, w).unwrap();
            assert!((v - t).norm() < 1e-12);
        }
    }

    #[test]
    fn detuned_chain_is_transparent() {
        let q = TransmonQubit::averaged();
        let far = q.tuned_to(q.omega10 + mhz(100.0 * 13.8 * 10.0));
        let layout = ChainLayout::uniform(far, 7, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
        let grid = FrequencyGrid::centered(q.omega10, mhz(1.0), 100).unwrap();
        let s = chain_s21(&layout, &ControlDrive::off(), &grid).unwrap();
        assert!(s.magnitudes().iter().all(|&m| m >= 0.999));
    }

    #[test]
    fn parallel_matches_sequential() {
        let layout = averaged_chain(7);
        let q = TransmonQubit::averaged();
        let drive = ControlDrive::resonant(&q, mhz(30.0));
        let grid = FrequencyGrid::centered(q.omega10, mhz(0.1), 500).unwrap();
        let par = chain_s21(&layout, &drive, &grid).unwrap();
        for (w, v) in grid.iter().zip(par.values()) {
            assert_eq!(layout.response(&drive, w).unwrap().s21, *v);
        }
    }

    #[test]
    fn lossless_chain_is_unitary() {
        let q = TransmonQubit::averaged().lossless();
        let layout = ChainLayout::uniform(q, 7, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
        let grid = FrequencyGrid::centered(q.omega10 + mhz(0.0123), mhz(0.37), 400).unwrap();
        for w in grid.iter() {
            let r = layout.response(&ControlDrive::off(), w).unwrap();
            assert!((r.s21.norm_sqr() + r.s11.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    fn arb_qubit() -> impl Strategy<Value = TransmonQubit> {
        (5.0f64..20.0, 0.0f64..3.0, 0.0f64..15.0, -30.0f64..30.0).prop_map(|(g, nr, g20, det)| TransmonQubit {
            omega10: ghz(7.812) + mhz(det),
            anharmonicity: mhz(279.0),
            radiative_rate: mhz(g),
            nonradiative_rate: mhz(nr),
            dephasing_20: mhz(g20),
            radiative_rate_21: None,
        })
    }

    proptest! {
        #[test]
        fn trace_identity(re in -0.99f64..0.99, im in -0.99f64..0.99, phi in -3.0f64..3.0) {
            let r = c(re, im);
            prop_assume!((1.0 + r).norm() > 1e-3);
            let m = TransferMatrix::qubit(r).unwrap() * TransferMatrix::phase(phi).unwrap();
            let chi = Complex64::i() * r / (1.0 + r);
            let expected = phi.cos() + chi * phi.sin();
            prop_assert!((0.5 * m.trace() - expected).norm() <= 1e-12 * expected.norm().max(1.0));
        }

        #[test]
        fn reciprocity_under_reversal(qs in prop::collection::vec(arb_qubit(), 2..8), det in -60.0f64..60.0, rabi in 0.0f64..60.0) {
            let layout = ChainLayout::new(qs, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
            let drive = ControlDrive { omega_c: ghz(7.533), rabi: mhz(rabi) };
            let w = ghz(7.812) + mhz(det);
            let a = layout.response(&drive, w).unwrap().s21;
            let b = layout.reversed().response(&drive, w).unwrap().s21;
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }

        #[test]
        fn passive_chain_bounded(qs in prop::collection::vec(arb_qubit(), 1..8), det in -80.0f64..80.0, rabi in 0.0f64..80.0) {
            let layout = ChainLayout::new(qs, DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
            let drive = ControlDrive { omega_c: ghz(7.533), rabi: mhz(rabi) };
            if let Ok(r) = layout.response(&drive, ghz(7.812) + mhz(det)) {
                prop_assert!(r.s21.norm() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn composition(qs in prop::collection::vec(arb_qubit(), 2..8), det in -60.0f64..60.0) {
            let layout = ChainLayout::new(qs.clone(), DEFAULT_SPACING, PropagationMedium::calibrated()).unwrap();
            let drive = ControlDrive { omega_c: ghz(7.533), rabi: mhz(25.0) };
            let w = ghz(7.812) + mhz(det);
            let n = qs.len();
            let head = layout.truncated(n - 1).unwrap().composite_matrix(&drive, w).unwrap();
            let step = layout.qubit_matrix(n - 1, &drive, w).unwrap()
                * TransferMatrix::phase(layout.segment_phase(w)).unwrap();
            let full = layout.response(&drive, w).unwrap().s21;
            let composed = (step * head).transmission();
            prop_assert!((full - composed).norm() <= 1e-12 * full.norm().max(1.0));
        }
    }
}
