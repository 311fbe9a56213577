//! Lossless band diagrams for a list of control strengths.

use serde::Serialize;

use super::config::{DriveSetting, ExperimentConfig};
use super::{calibration_qubit, control_frequency, resolve_drive, Artifacts};
use crate::bands::{
    bandgap_width_coefficient, inverse_group_velocity, lossless_bands, BandDiagram, BandgapWidth,
};
use crate::error::Result;
use crate::qubit::FrequencyGrid;
use crate::units::{ghz, mhz, to_hz, C0};

/// Fraction of a grid step by which the band grid is shifted off ω₁₀, where
/// the lossless two-level scatterer has no transfer matrix.
const GRID_OFFSET: f64 = 0.137;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Gap {
    #[serde(rename = "lower_Hz")]
    pub lower_hz: f64,
    #[serde(rename = "upper_Hz")]
    pub upper_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandEntry {
    #[serde(rename = "rabi_Hz")]
    pub rabi_hz: f64,
    pub file: String,
    pub gaps: Vec<Gap>,
    /// `Re(dk/dω)` of the centre band at ω₁₀; absent when ω₁₀ lies in a gap.
    #[serde(rename = "center_slope_s_per_m")]
    pub center_slope: Option<f64>,
    /// `c₀·Re(dk/dω)`, the group index of the centre band.
    pub center_group_index: Option<f64>,
    pub discontinuities: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandReport {
    #[serde(rename = "omega10_Hz")]
    pub omega10_hz: f64,
    /// Phase per cell at ω₁₀.
    pub phi_rad: f64,
    pub bandgap_width: BandgapWidth,
    pub entries: Vec<BandEntry>,
    #[serde(skip)]
    pub diagrams: Vec<BandDiagram>,
}

fn file_name(rabi: f64) -> String {
    format!("band_rabi_{:.2}MHz.csv", crate::units::to_mhz(rabi))
}

/// Band diagrams around ω₁₀ (default Ω/2π ∈ {0, 10, 20, 40} MHz).
pub fn band_structure(config: &ExperimentConfig) -> Result<BandReport> {
    let qubit = config.single_qubit()?;
    let medium = config.medium();
    let omega_c = control_frequency(config, &qubit);
    let default: Vec<DriveSetting> = [0.0, 10.0, 20.0, 40.0].iter().map(|&r| DriveSetting::Rabi(mhz(r))).collect();
    let cal = calibration_qubit(&[qubit]);
    let rabi: Vec<f64> = config
        .drive
        .settings(&default)?
        .into_iter()
        .map(|s| resolve_drive(s, &cal, omega_c).map(|r| r.drive.rabi))
        .collect::<Result<_>>()?;
    let center = config.probe.center_ghz.map(ghz).unwrap_or(qubit.omega10);
    let step = mhz(config.probe.step_mhz);
    let base = config.probe.grid(center)?;
    let grid = FrequencyGrid::new(base.iter().map(|w| w + GRID_OFFSET * step).collect())?;
    let diagrams = lossless_bands(&qubit, config.chain.spacing, medium, &rabi, &grid)?;

    let entries = diagrams
        .iter()
        .map(|d| {
            let i = d.solution.grid().nearest_index(qubit.omega10);
            let slope = if d.in_gap[i] {
                None
            } else {
                inverse_group_velocity(&d.solution, qubit.omega10).ok()
            };
            BandEntry {
                rabi_hz: to_hz(d.rabi),
                file: file_name(d.rabi),
                gaps: d
                    .gaps()
                    .into_iter()
                    .map(|(lo, hi)| Gap {
                        lower_hz: to_hz(lo),
                        upper_hz: to_hz(hi),
                    })
                    .collect(),
                center_slope: slope,
                center_group_index: slope.map(|s| C0 * s),
                discontinuities: d.solution.discontinuities().to_vec(),
            }
        })
        .collect();

    let phi = medium.phase(qubit.omega10, config.chain.spacing);
    let bandgap_width = bandgap_width_coefficient(config.chain.n, phi)?;
    if !bandgap_width.within_validity {
        log::warn!(
            "N = {} is not below pi/phi = {:.2}; the bandgap-width estimate is outside its validity range",
            config.chain.n,
            std::f64::consts::PI / phi
        );
    }
    Ok(BandReport {
        omega10_hz: to_hz(qubit.omega10),
        phi_rad: phi,
        bandgap_width,
        entries,
        diagrams,
    })
}

/// Writes one `band_rabi_<Ω>MHz.csv` per control strength and `band_summary.json`.
pub fn cmd_band(config: &ExperimentConfig, out: &mut Artifacts) -> Result<BandReport> {
    let report = band_structure(config)?;
    for d in &report.diagrams {
        out.write_with(&file_name(d.rabi), |w| d.write_csv(w))?;
    }
    out.write_json("band_summary.json", &report)?;
    Ok(report)
}
