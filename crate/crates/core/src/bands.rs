//! Bloch bands of the infinite periodic chain and the closed-form delay asymptotes.
//!
//! The unit cell is one qubit followed by one bare segment. Bloch's theorem on
//! `T₁T_φ` gives `cos(kd) = cos φ + χ sin φ` with `χ = i r/(1+r)`. The retained
//! root has `Im(kd) ≥ 0`, so evanescent solutions decay along the propagation
//! direction. When the principal arccos has `Im < 0` the negated root is used;
//! if that leaves `Re(kd) < 0` the point is tagged [`Branch::Secondary`].

use std::io::Write;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{reflection, ControlDrive, FrequencyGrid, TransmonQubit};
use crate::tmatrix::{ChainLayout, PropagationMedium};
use crate::units::{to_hz, C0};

/// One qubit plus one segment of bare line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    pub qubit: TransmonQubit,
    pub spacing: f64,
    pub medium: PropagationMedium,
}

impl UnitCell {
    pub fn new(qubit: TransmonQubit, spacing: f64, medium: PropagationMedium) -> Result<Self> {
        qubit.validate()?;
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter("cell spacing must be positive".into()));
        }
        PropagationMedium::new(medium.phase_velocity)?;
        Ok(UnitCell { qubit, spacing, medium })
    }

    /// Cell of a chain whose qubits are all identical.
    pub fn from_layout(layout: &ChainLayout) -> Result<Self> {
        let q = layout.qubits()[0];
        if layout.qubits().iter().any(|other| *other != q) {
            return Err(Error::InvalidParameter(
                "a Bloch unit cell needs identical qubits along the chain".into(),
            ));
        }
        Self::new(q, layout.spacing(), layout.medium())
    }

    pub fn phase(&self, omega: f64) -> f64 {
        self.medium.phase(omega, self.spacing)
    }
}

/// `χ = i r/(1+r)` for the qubit at probe frequency `omega`.
pub fn chi(qubit: &TransmonQubit, drive: &ControlDrive, omega: f64) -> Result<Complex64> {
    let r = reflection(qubit, drive, omega)?;
    let t = 1.0 + r;
    if t.norm_sqr() == 0.0 {
        return Err(Error::SingularScatterer { qubit: 0, omega });
    }
    Ok(Complex64::i() * r / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `Re(kd) ∈ [0, π]`, `Im(kd) ≥ 0`.
    Principal,
    /// `Im(kd) ≥ 0` forced the negated root, leaving `Re(kd) ∈ [−π, 0)`.
    Secondary,
}

/// Root of `cos(kd) = z` with `Im(kd) ≥ 0`, folded into `(−π, π]`.
pub fn solve_kd(z: Complex64) -> (Complex64, Branch) {
    let x = z.acos();
    if x.im >= 0.0 {
        return (x, Branch::Principal);
    }
    let mut y = -x;
    if y.re <= -PI {
        y.re += 2.0 * PI;
    }
    let branch = if y.re < 0.0 { Branch::Secondary } else { Branch::Principal };
    (y, branch)
}

/// Long-wavelength approximation `(kd)² ≈ φ² − 2χφ`, root with `Im ≥ 0`.
pub fn quadratic_kd(phi: f64, chi: Complex64) -> Complex64 {
    let x = (Complex64::new(phi * phi, 0.0) - 2.0 * chi * phi).sqrt();
    if x.im < 0.0 {
        -x
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochSolution {
    grid: FrequencyGrid,
    kd: Vec<Complex64>,
    branch: Vec<Branch>,
    spacing: f64,
    medium: PropagationMedium,
    /// Indices `i` where `|Re(kd_i) − Re(kd_{i−1})| > π/2`.
    discontinuities: Vec<usize>,
}

impl BlochSolution {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Dimensionless Bloch phase `k·d` per grid point.
    pub fn kd(&self) -> &[Complex64] {
        &self.kd
    }

    /// Wavenumbers in 1/m.
    pub fn k(&self) -> Vec<Complex64> {
        self.kd.iter().map(|v| v / self.spacing).collect()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branch
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn medium(&self) -> PropagationMedium {
        self.medium
    }

    pub fn discontinuities(&self) -> &[usize] {
        &self.discontinuities
    }
}

/// Solves the Bloch condition on every grid point.
///
/// Points are solved independently and then scanned in increasing frequency
/// for jumps in `Re(kd)`; a jump larger than π/2 is recorded as a
/// discontinuity instead of being silently rewrapped.
pub fn bloch_k(cell: &UnitCell, drive: &ControlDrive, grid: &FrequencyGrid) -> Result<BlochSolution> {
    let mut kd = Vec::with_capacity(grid.len());
    let mut branch = Vec::with_capacity(grid.len());
    for w in grid.iter() {
        let phi = cell.phase(w);
        let c = chi(&cell.qubit, drive, w)?;
        let (x, b) = solve_kd(phi.cos() + c * phi.sin());
        kd.push(x);
        branch.push(b);
    }
    let discontinuities = (1..kd.len())
        .filter(|&i| (kd[i].re - kd[i - 1].re).abs() > PI / 2.0)
        .collect::<Vec<_>>();
    if !discontinuities.is_empty() {
        log::debug!("Bloch branch discontinuities at grid indices {discontinuities:?}");
    }
    Ok(BlochSolution {
        grid: grid.clone(),
        kd,
        branch,
        spacing: cell.spacing,
        medium: cell.medium,
        discontinuities,
    })
}

/// Lossless band diagram for one control strength.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDiagram {
    pub rabi: f64,
    pub solution: BlochSolution,
    pub in_gap: Vec<bool>,
}

/// Threshold on `Im(kd)` separating evanescent from propagating points.
const GAP_TOLERANCE: f64 = 1e-9;

impl BandDiagram {
    pub fn from_solution(rabi: f64, solution: BlochSolution) -> Self {
        let in_gap = solution.kd.iter().map(|v| v.im > GAP_TOLERANCE).collect();
        BandDiagram { rabi, solution, in_gap }
    }

    /// Closed frequency intervals `(first, last)` of consecutive in-gap grid points.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let w = self.solution.grid.as_slice();
        let mut out = Vec::new();
        let mut start = None;
        for (i, &g) in self.in_gap.iter().enumerate() {
            match (g, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((w[s], w[i - 1]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((w[s], w[w.len() - 1]));
        }
        out
    }

    /// CSV with columns `omega_Hz, re_kd, im_kd, branch, in_gap`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            #[serde(rename = "omega_Hz")]
            omega_hz: f64,
            re_kd: f64,
            im_kd: f64,
            branch: Branch,
            in_gap: bool,
        }
        let mut w = csv::Writer::from_writer(writer);
        for (i, omega) in self.solution.grid.iter().enumerate() {
            w.serialize(Row {
                omega_hz: to_hz(omega),
                re_kd: self.solution.kd[i].re,
                im_kd: self.solution.kd[i].im,
                branch: self.solution.branch[i],
                in_gap: self.in_gap[i],
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Band diagrams of the lossless cell (`Γ_nr = 0`, `γ₂₀ = 0`) for each control
/// strength, driving the 2→1 transition resonantly.
pub fn lossless_bands(
    qubit: &TransmonQubit,
    spacing: f64,
    medium: PropagationMedium,
    rabi_list: &[f64],
    grid: &FrequencyGrid,
) -> Result<Vec<BandDiagram>> {
    let cell = UnitCell::new(qubit.lossless(), spacing, medium)?;
    rabi_list
        .iter()
        .map(|&rabi| {
            let drive = ControlDrive::new(cell.qubit.omega21(), rabi)?;
            Ok(BandDiagram::from_solution(rabi, bloch_k(&cell, &drive, grid)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayRegime {
    /// Strong drive, `φ ≫ |χ|`.
    StrongDrive,
    /// Weak drive, `φ ≪ |χ|`.
    WeakDrive,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    /// The asymptote's numerator vanishes (`Ω_c = 2γ₂₀`).
    Boundary,
    /// Negative asymptotic delay; surfaced as computed.
    OutOfValidity,
}

/// Speed used to turn a delay into a group index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupIndexReference {
    /// Retardation relative to vacuum light.
    #[default]
    Vacuum,
    /// Retardation relative to the bare waveguide.
    Medium { phase_velocity: f64 },
}

impl GroupIndexReference {
    pub fn speed(&self) -> f64 {
        match self {
            GroupIndexReference::Vacuum => C0,
            GroupIndexReference::Medium { phase_velocity } => *phase_velocity,
        }
    }
}

/// Delay through `N − 1` cells with its group index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    #[serde(rename = "tau_s")]
    pub tau: f64,
    #[serde(rename = "n_g")]
    pub group_index: f64,
    pub regime: DelayRegime,
    pub validity: Validity,
}

impl DelayEstimate {
    /// Builds an estimate with `n_g = c₀·τ/((N−1)d)`.
    pub fn new(tau: f64, n: usize, spacing: f64, regime: DelayRegime, validity: Validity) -> Result<Self> {
        Self::with_reference(tau, n, spacing, regime, validity, GroupIndexReference::Vacuum)
    }

    pub fn with_reference(
        tau: f64,
        n: usize,
        spacing: f64,
        regime: DelayRegime,
        validity: Validity,
        reference: GroupIndexReference,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("delay per chain needs N >= 2".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter("spacing must be positive".into()));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidParameter("delay is not finite".into()));
        }
        Ok(DelayEstimate {
            tau,
            group_index: group_index(tau, n, spacing, reference.speed()),
            regime,
            validity,
        })
    }
}

/// `n_g = c·τ/((N−1)d)`.
pub fn group_index(tau: f64, n: usize, spacing: f64, speed: f64) -> f64 {
    speed * tau / ((n - 1) as f64 * spacing)
}

/// Traversal time `(N−1)d/v_ph` of the bare line between the outer qubits.
pub fn bare_line_delay(n: usize, spacing: f64, medium: &PropagationMedium) -> f64 {
    n.saturating_sub(1) as f64 * spacing / medium.phase_velocity
}

/// Inverse group velocity `Re(dk/dω)` at `omega_eval` by a central difference on the grid.
pub fn inverse_group_velocity(bloch: &BlochSolution, omega_eval: f64) -> Result<f64> {
    let w = bloch.grid.as_slice();
    let i = bloch.grid.nearest_index(omega_eval);
    if i == 0 || i + 1 >= w.len() {
        return Err(Error::InsufficientStencil(format!(
            "no central stencil around {:.6} GHz",
            crate::units::to_ghz(omega_eval)
        )));
    }
    let (h1, h2) = (w[i] - w[i - 1], w[i + 1] - w[i]);
    if (h1 - h2).abs() > 1e-6 * h1.max(h2) {
        return Err(Error::InsufficientStencil("grid is not locally uniform".into()));
    }
    let dk = (bloch.kd[i + 1] - bloch.kd[i - 1]).re / bloch.spacing;
    Ok(dk / (w[i + 1] - w[i - 1]))
}

/// Absolute delay `τ = (N−1)d·Re(dk/dω)`, including the bare-line traversal.
pub fn group_delay_numeric(bloch: &BlochSolution, n: usize, omega_eval: f64) -> Result<DelayEstimate> {
    let inv_vg = inverse_group_velocity(bloch, omega_eval)?;
    let tau = n.saturating_sub(1) as f64 * bloch.spacing * inv_vg;
    DelayEstimate::new(tau, n, bloch.spacing, DelayRegime::Numeric, Validity::Valid)
}

/// Closed-form excess delay at `ω₁₀` under resonant control.
///
/// Strong drive (`φ ≫ |χ|`):
/// `τ = (N−1)Γ₁₀(2Ω² − 8γ₂₀²)/D²`;
/// weak drive (`φ ≪ |χ|`):
/// `τ = (N−1)Γ₁₀(2Ω² − 8γ₂₀²)/D^{3/2} · √φ/√(8Γ₁₀γ₂₀)`,
/// with `D = (4γ₁₀ − 2Γ₁₀)γ₂₀ + Ω²`. The strong-drive form excludes the bare
/// traversal `(N−1)d/c`. Negative values are returned tagged, never clamped.
pub fn delay_asymptote(
    qubit: &TransmonQubit,
    rabi: f64,
    n: usize,
    spacing: f64,
    phi: f64,
    regime: DelayRegime,
) -> Result<DelayEstimate> {
    qubit.validate()?;
    if !(rabi.is_finite() && rabi >= 0.0) {
        return Err(Error::InvalidParameter("Rabi strength must be finite and >= 0".into()));
    }
    let g = qubit.radiative_rate;
    let g10 = qubit.decoherence_10();
    let g20 = qubit.dephasing_20;
    let den = (4.0 * g10 - 2.0 * g) * g20 + rabi * rabi;
    if den == 0.0 {
        return Err(Error::SingularModel("(4 gamma10 - 2 Gamma10) gamma20 + Omega^2 = 0".into()));
    }
    let numerator = (n as f64 - 1.0) * g * (2.0 * rabi * rabi - 8.0 * g20 * g20);
    let tau = match regime {
        DelayRegime::StrongDrive => numerator / (den * den),
        DelayRegime::WeakDrive => {
            if g20 == 0.0 || g == 0.0 {
                return Err(Error::SingularModel("weak-drive asymptote needs Gamma10, gamma20 > 0".into()));
            }
            if den < 0.0 {
                return Err(Error::SingularModel("negative base under the 3/2 power".into()));
            }
            numerator / den.powf(1.5) * phi.sqrt() / (8.0 * g * g20).sqrt()
        }
        DelayRegime::Numeric => {
            return Err(Error::InvalidParameter("asymptote regime must be strong or weak drive".into()))
        }
    };
    let validity = if numerator == 0.0 {
        Validity::Boundary
    } else if tau < 0.0 {
        Validity::OutOfValidity
    } else {
        Validity::Valid
    };
    DelayEstimate::new(tau, n, spacing, regime, validity)
}

/// Textbook EIT inverse group velocity `1/v_g = 1/c + 2Γ₁₀/(dΩ²)`.
pub fn eit_inverse_group_velocity(radiative_rate: f64, rabi: f64, spacing: f64, speed: f64) -> f64 {
    1.0 / speed + 2.0 * radiative_rate / (spacing * rabi * rabi)
}

/// Bandgap-width coefficient `ξ = (N² − 1)φ/3` and whether the chain is short
/// enough for it to apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandgapWidth {
    pub xi: f64,
    pub within_validity: bool,
}

/// The finite-chain estimate needs `N < π/φ`. The bound is only known to the
/// nearest integer, so chains with `N ≥ ⌊π/φ⌋` are reported as outside it.
pub fn bandgap_width_coefficient(n: usize, phi: f64) -> Result<BandgapWidth> {
    if n == 0 || !(phi.is_finite() && phi > 0.0) {
        return Err(Error::InvalidParameter("need N >= 1 and phi > 0".into()));
    }
    let nf = n as f64;
    let within_validity = nf < (PI / phi).floor();
    if !within_validity {
        log::warn!("N = {n} is not below pi/phi = {:.2}; xi is outside its finite-chain validity", PI / phi);
    }
    Ok(BandgapWidth {
        xi: (nf * nf - 1.0) * phi / 3.0,
        within_validity,
    })
}
