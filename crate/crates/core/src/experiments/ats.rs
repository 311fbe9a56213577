//! Collective Autler-Townes sweep: chain spectra and delays versus control power.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{DriveSetting, ExperimentConfig};
use super::pulsed::pulse_through_chain;
use super::{calibration_qubit, control_frequency, rabi_hz, resolve_drive, Artifacts};
use crate::analysis::{phase_gradient_delay, window_metrics, TransparencyWindow};
use crate::bands::DelayEstimate;
use crate::calibration::{fit_calibration_factor, CalibrationFit};
use crate::error::{Error, Result};
use crate::pulse::PulseResult;
use crate::spectrum::ComplexSpectrum;
use crate::tmatrix::chain_s21_referenced;
use crate::units::{dbm_to_watts, ghz, mhz, to_hz};

#[derive(Debug, Clone, Serialize)]
pub struct AtsPoint {
    #[serde(rename = "power_dBm", skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(rename = "rabi_Hz")]
    pub rabi_hz: f64,
    /// Spectroscopic delay at the probe centre.
    pub delay: DelayEstimate,
    /// Absent when no transparency window has opened yet.
    pub window: Option<TransparencyWindow>,
    /// Distance between the deepest transmission minima on either side of the centre.
    #[serde(rename = "minima_separation_Hz")]
    pub minima_separation_hz: f64,
    pub pulse: Option<PulseResult>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPeak {
    pub index: usize,
    #[serde(rename = "power_dBm", skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(rename = "rabi_Hz")]
    pub rabi_hz: f64,
    #[serde(rename = "tau_s")]
    pub tau: f64,
    /// Number of interior local maxima of the delay curve.
    pub interior_maxima: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtsReport {
    pub n: usize,
    #[serde(rename = "center_Hz")]
    pub center_hz: f64,
    #[serde(rename = "averaging_bandwidth_Hz")]
    pub averaging_bandwidth_hz: f64,
    pub points: Vec<AtsPoint>,
    pub spectroscopic_peak: SweepPeak,
    pub pulsed_peak: Option<SweepPeak>,
    /// Fit of the minima separation to `Ω = a√P` over points with an open window.
    pub splitting_law: Option<CalibrationFit>,
    #[serde(skip)]
    pub spectra: Vec<ComplexSpectrum>,
}

/// Maximum of `values` and the count of strict interior local maxima.
pub(crate) fn peak_of(values: &[f64]) -> (usize, usize) {
    let imax = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let interior = (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .count();
    (imax, interior)
}

fn minima_separation(spectrum: &ComplexSpectrum, center: f64) -> f64 {
    let w = spectrum.grid().as_slice();
    let m = spectrum.magnitudes();
    let argmin = |range: std::ops::Range<usize>| {
        range.min_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(0)
    };
    let split = w.partition_point(|&x| x < center);
    let lo = argmin(0..split.max(1));
    let hi = argmin(split.min(w.len() - 1)..w.len());
    to_hz(w[hi] - w[lo])
}

/// Chain spectra, spectroscopic delays and optional pulsed delays over the
/// control sweep (default −136 to −110 dBm in 0.5 dB steps).
pub fn ats_sweep(config: &ExperimentConfig) -> Result<AtsReport> {
    let layout = config.layout()?;
    let n = layout.len();
    if n < 2 {
        return Err(Error::Config("ats-sweep needs chain.n >= 2 to define a delay".into()));
    }
    let cal = calibration_qubit(layout.qubits());
    let omega_c = control_frequency(config, &cal);
    let default: Vec<DriveSetting> = (0..=52).map(|i| DriveSetting::PowerDbm(-136.0 + 0.5 * i as f64)).collect();
    let settings = config.drive.settings(&default)?;
    let center = config.probe.center_ghz.map(ghz).unwrap_or(layout.qubits()[0].omega10);
    let grid = config.probe.grid(center)?;
    let bw = mhz(config.analysis.averaging_bandwidth_mhz);

    let results = settings
        .par_iter()
        .map(|&s| {
            let resolved = resolve_drive(s, &cal, omega_c)?;
            let spectrum = chain_s21_referenced(&layout, &resolved.drive, &grid)?;
            let delay = phase_gradient_delay(&spectrum, n, layout.spacing(), center, bw)?;
            let window = window_metrics(&spectrum, config.analysis.threshold_fraction).ok();
            let pulse = if config.pulse.in_sweeps {
                Some(pulse_through_chain(&layout, &resolved.drive, &config.pulse, center)?.result)
            } else {
                None
            };
            let point = AtsPoint {
                power_dbm: resolved.power_dbm,
                rabi_hz: rabi_hz(&resolved.drive),
                delay,
                window,
                minima_separation_hz: minima_separation(&spectrum, center),
                pulse,
            };
            Ok((point, spectrum))
        })
        .collect::<Result<Vec<_>>>()?;
    let (points, spectra): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let peak = |values: Vec<f64>| {
        let (index, interior_maxima) = peak_of(&values);
        SweepPeak {
            index,
            power_dbm: points[index].power_dbm,
            rabi_hz: points[index].rabi_hz,
            tau: values[index],
            interior_maxima,
        }
    };
    let spectroscopic_peak = peak(points.iter().map(|p| p.delay.tau).collect());
    // Before the window opens the pulse is almost entirely absorbed and the
    // fitted arrival follows a distorted residue, so only open-window points
    // compete for the pulsed maximum.
    let pulsed_peak = config.pulse.in_sweeps.then(|| {
        let open: Vec<usize> = (0..points.len()).filter(|&i| points[i].window.is_some()).collect();
        let eligible = if open.is_empty() { (0..points.len()).collect() } else { open };
        let values: Vec<f64> = eligible
            .iter()
            .map(|&i| points[i].pulse.map_or(f64::NEG_INFINITY, |r| r.delay))
            .collect();
        let (k, interior_maxima) = peak_of(&values);
        let index = eligible[k];
        SweepPeak {
            index,
            power_dbm: points[index].power_dbm,
            rabi_hz: points[index].rabi_hz,
            tau: values[k],
            interior_maxima,
        }
    });

    let law_data: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.window.is_some())
        .filter_map(|p| p.power_dbm.map(|dbm| (dbm_to_watts(dbm), crate::units::hz(p.minima_separation_hz))))
        .collect();
    let splitting_law = if law_data.len() >= 2 {
        fit_calibration_factor(&law_data, &cal, omega_c).ok()
    } else {
        None
    };

    Ok(AtsReport {
        n,
        center_hz: to_hz(center),
        averaging_bandwidth_hz: to_hz(bw),
        points,
        spectroscopic_peak,
        pulsed_peak,
        splitting_law,
        spectra,
    })
}

#[derive(Serialize)]
struct SpectrumRow {
    #[serde(rename = "power_dBm")]
    power_dbm: Option<f64>,
    #[serde(rename = "rabi_Hz")]
    rabi_hz: f64,
    #[serde(rename = "frequency_Hz")]
    frequency_hz: f64,
    #[serde(rename = "abs_S21")]
    abs: f64,
}

/// Writes `ats_spectra.csv` (long format |S₂₁|(ω, P_c)) and `ats_delays.json`.
pub fn cmd_ats_sweep(config: &ExperimentConfig, out: &mut Artifacts) -> Result<AtsReport> {
    let report = ats_sweep(config)?;
    out.write_with("ats_spectra.csv", |f| {
        let mut w = csv::Writer::from_writer(f);
        for (p, s) in report.points.iter().zip(&report.spectra) {
            for (omega, v) in s.grid().iter().zip(s.values()) {
                w.serialize(SpectrumRow {
                    power_dbm: p.power_dbm,
                    rabi_hz: p.rabi_hz,
                    frequency_hz: to_hz(omega),
                    abs: v.norm(),
                })?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    out.write_json("ats_delays.json", &report)?;
    Ok(report)
}
