//! Dispersion-engineered chain: two interleaved qubit groups at f₁ and f₂
//! with the control tone off, swept in f₁ for fixed f₂.

use rayon::prelude::*;
use serde::Serialize;

use super::ats::{peak_of, SweepPeak};
use super::config::{uniform_grid, ExperimentConfig};
use super::pulsed::pulse_through_chain;
use super::Artifacts;
use crate::analysis::{phase_gradient_delay, window_metrics, TransparencyWindow};
use crate::bands::DelayEstimate;
use crate::error::{Error, Result};
use crate::pulse::PulseResult;
use crate::qubit::ControlDrive;
use crate::spectrum::ComplexSpectrum;
use crate::tmatrix::{chain_s21_referenced, ChainLayout};
use crate::units::{ghz, mhz, to_ghz, to_hz};

/// Per-qubit 0→1 frequencies (rad/s), in chain order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyAssignment {
    pub frequencies: Vec<f64>,
}

impl FrequencyAssignment {
    /// Qubits 0, 2, 4, … at `f1` and 1, 3, 5, … at `f2`.
    pub fn alternating(n: usize, f1: f64, f2: f64) -> Result<Self> {
        let a = FrequencyAssignment {
            frequencies: (0..n).map(|i| if i % 2 == 0 { f1 } else { f2 }).collect(),
        };
        a.validate(n)?;
        Ok(a)
    }

    /// Length must equal the chain size and every frequency must be within the 3–8 GHz tuning range.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.frequencies.len() != n {
            return Err(Error::InvalidParameter(format!(
                "frequency assignment has {} entries for {n} qubits",
                self.frequencies.len()
            )));
        }
        if let Some(f) = self.frequencies.iter().find(|&&f| !(ghz(3.0)..=ghz(8.0)).contains(&f)) {
            return Err(Error::InvalidParameter(format!(
                "{:.4} GHz is outside the 3-8 GHz tuning range",
                to_ghz(*f)
            )));
        }
        Ok(())
    }

    pub fn apply(&self, layout: &ChainLayout) -> Result<ChainLayout> {
        self.validate(layout.len())?;
        layout.with_qubits(
            layout
                .qubits()
                .iter()
                .zip(&self.frequencies)
                .map(|(q, &f)| q.tuned_to(f))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionPoint {
    #[serde(rename = "detuning_Hz")]
    pub detuning_hz: f64,
    #[serde(rename = "f1_Hz")]
    pub f1_hz: f64,
    #[serde(rename = "carrier_Hz")]
    pub carrier_hz: f64,
    /// Window-averaged spectroscopic delay at the carrier.
    pub delay: DelayEstimate,
    pub window: Option<TransparencyWindow>,
    pub pulse: Option<PulseResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub n: usize,
    #[serde(rename = "f2_Hz")]
    pub f2_hz: f64,
    #[serde(rename = "averaging_bandwidth_Hz")]
    pub averaging_bandwidth_hz: f64,
    pub points: Vec<DispersionPoint>,
    pub spectroscopic_peak: SweepPeak,
    pub pulsed_peak: Option<SweepPeak>,
    #[serde(skip)]
    pub spectra: Vec<ComplexSpectrum>,
}

/// Sweeps f₁ = f₂ − Δ over the configured detunings, evaluating delays at the
/// carrier (f₁ + f₂)/2.
pub fn dispersion_sweep(config: &ExperimentConfig) -> Result<DispersionReport> {
    let d = &config.dispersion;
    let base = ChainLayout::new(config.qubit_list(d.n)?, config.chain.spacing, config.medium())?;
    let f2 = ghz(d.f2_ghz);
    let bw = mhz(d.averaging_bandwidth_mhz);
    let results = d
        .detuning_mhz
        .par_iter()
        .map(|&delta| {
            let f1 = f2 - mhz(delta);
            let layout = FrequencyAssignment::alternating(d.n, f1, f2)
                .map_err(|e| Error::Config(format!("dispersion: {e}")))?
                .apply(&base)?;
            let carrier = 0.5 * (f1 + f2);
            let grid = uniform_grid("dispersion", carrier, d.span_mhz, d.step_mhz)?;
            let drive = ControlDrive::off();
            let spectrum = chain_s21_referenced(&layout, &drive, &grid)?;
            let delay = phase_gradient_delay(&spectrum, d.n, layout.spacing(), carrier, bw)?;
            let pulse = if config.pulse.in_sweeps {
                Some(pulse_through_chain(&layout, &drive, &config.pulse, carrier)?.result)
            } else {
                None
            };
            let point = DispersionPoint {
                detuning_hz: delta * 1e6,
                f1_hz: to_hz(f1),
                carrier_hz: to_hz(carrier),
                delay,
                window: window_metrics(&spectrum, config.analysis.threshold_fraction).ok(),
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
            power_dbm: None,
            rabi_hz: 0.0,
            tau: values[index],
            interior_maxima,
        }
    };
    let spectroscopic_peak = peak(points.iter().map(|p| p.delay.tau).collect());
    let pulsed_peak = config
        .pulse
        .in_sweeps
        .then(|| peak(points.iter().map(|p| p.pulse.map_or(f64::NEG_INFINITY, |r| r.delay)).collect()));
    Ok(DispersionReport {
        n: d.n,
        f2_hz: to_hz(f2),
        averaging_bandwidth_hz: to_hz(bw),
        points,
        spectroscopic_peak,
        pulsed_peak,
        spectra,
    })
}

#[derive(Serialize)]
struct SpectrumRow {
    #[serde(rename = "detuning_Hz")]
    detuning_hz: f64,
    #[serde(rename = "f1_Hz")]
    f1_hz: f64,
    #[serde(rename = "frequency_Hz")]
    frequency_hz: f64,
    #[serde(rename = "abs_S21")]
    abs: f64,
}

/// Writes `dispersion_spectra.csv` (long format |S₂₁|(ω, f₁)) and `dispersion_delays.json`.
pub fn cmd_dispersion_sweep(config: &ExperimentConfig, out: &mut Artifacts) -> Result<DispersionReport> {
    let report = dispersion_sweep(config)?;
    out.write_with("dispersion_spectra.csv", |f| {
        let mut w = csv::Writer::from_writer(f);
        for (p, s) in report.points.iter().zip(&report.spectra) {
            for (omega, v) in s.grid().iter().zip(s.values()) {
                w.serialize(SpectrumRow {
                    detuning_hz: p.detuning_hz,
                    f1_hz: p.f1_hz,
                    frequency_hz: to_hz(omega),
                    abs: v.norm(),
                })?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    out.write_json("dispersion_delays.json", &report)?;
    Ok(report)
}
