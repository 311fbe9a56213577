//! Gaussian pulse through a chain, detected like the measured pulses.

use serde::Serialize;

use super::config::{uniform_grid, DriveSetting, ExperimentConfig, PulseConfig, ReferenceConvention};
use super::{calibration_qubit, control_frequency, rabi_hz, resolve_drive, Artifacts};
use crate::dsp::heterodyne_chain;
use crate::error::Result;
use crate::pulse::{fit_arrival, propagate, synthesize_pulse, PulseResult, PulseSpec, Waveform};
use crate::qubit::ControlDrive;
use crate::spectrum::ComplexSpectrum;
use crate::tmatrix::{chain_s21, ChainLayout};
use crate::units::{mhz, to_hz};

/// Waveforms and fitted comparison of one pulsed measurement.
#[derive(Debug, Clone)]
pub struct PulseRun {
    pub input: Waveform,
    pub reference: Waveform,
    pub transmitted: Waveform,
    /// Spectrum the pulse was propagated through.
    pub spectrum: ComplexSpectrum,
    pub result: PulseResult,
    /// Group delay of the receiver filter, present when the receiver ran.
    pub filter_delay: Option<f64>,
}

/// Synthesizes a pulse at `carrier`, sends it through the chain and through the
/// reference path, optionally detects both with the heterodyne receiver, and
/// fits arrival times and energies.
pub fn pulse_through_chain(
    layout: &ChainLayout,
    drive: &ControlDrive,
    cfg: &PulseConfig,
    carrier: f64,
) -> Result<PulseRun> {
    let spec = PulseSpec::new(cfg.sigma_ns * 1e-9, carrier, cfg.amplitude)?;
    let input = synthesize_pulse(&spec, cfg.sample_rate_gsps * 1e9, cfg.duration_ns * 1e-9)?;
    let grid = uniform_grid("pulse", carrier, cfg.spectrum_span_mhz, cfg.spectrum_step_mhz)?;
    let spectrum = chain_s21(layout, drive, &grid)?;
    let reference_spectrum = match cfg.reference {
        ReferenceConvention::Detuned => {
            let shift = mhz(cfg.reference_detuning_mhz);
            let detuned = layout.with_qubits(layout.qubits().iter().map(|q| q.tuned_to(q.omega10 + shift)).collect())?;
            chain_s21(&detuned, &ControlDrive::off(), &grid)?
        }
        ReferenceConvention::Absolute => ComplexSpectrum::unity(grid),
    };
    let mut transmitted = propagate(&input, &spectrum)?;
    let mut reference = propagate(&input, &reference_spectrum)?;
    let mut filter_delay = None;
    if cfg.heterodyne {
        let rx = cfg.heterodyne_config();
        let t = heterodyne_chain(&transmitted, &rx)?;
        let r = heterodyne_chain(&reference, &rx)?;
        filter_delay = Some(t.filter_delay);
        transmitted = t.waveform;
        reference = r.waveform;
    }
    let result = fit_arrival(&transmitted, &reference)?;
    Ok(PulseRun {
        input,
        reference,
        transmitted,
        spectrum,
        result,
        filter_delay,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PulseReport {
    #[serde(rename = "power_dBm", skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(rename = "rabi_Hz")]
    pub rabi_hz: f64,
    #[serde(rename = "carrier_Hz")]
    pub carrier_hz: f64,
    #[serde(rename = "sigma_s")]
    pub sigma: f64,
    pub reference: ReferenceConvention,
    #[serde(rename = "filter_delay_s", skip_serializing_if = "Option::is_none")]
    pub filter_delay: Option<f64>,
    pub result: PulseResult,
}

/// Single pulsed measurement at the first configured drive setting
/// (default −124 dBm) with the carrier on the first qubit's 0→1 frequency.
pub fn cmd_pulse(config: &ExperimentConfig, out: &mut Artifacts) -> Result<PulseReport> {
    let layout = config.layout()?;
    let cal = calibration_qubit(layout.qubits());
    let omega_c = control_frequency(config, &cal);
    let setting = config.drive.settings(&[DriveSetting::PowerDbm(-124.0)])?[0];
    let resolved = resolve_drive(setting, &cal, omega_c)?;
    let carrier = config.probe.center_ghz.map(crate::units::ghz).unwrap_or(layout.qubits()[0].omega10);
    let run = pulse_through_chain(&layout, &resolved.drive, &config.pulse, carrier)?;
    let report = PulseReport {
        power_dbm: resolved.power_dbm,
        rabi_hz: rabi_hz(&resolved.drive),
        carrier_hz: to_hz(carrier),
        sigma: config.pulse.sigma_ns * 1e-9,
        reference: config.pulse.reference,
        filter_delay: run.filter_delay,
        result: run.result,
    };
    out.write_with("pulse_input.csv", |w| run.input.write_csv(w))?;
    out.write_with("pulse_reference.csv", |w| run.reference.write_csv(w))?;
    out.write_with("pulse_transmitted.csv", |w| run.transmitted.write_csv(w))?;
    out.write_with("pulse_spectrum.csv", |w| run.spectrum.write_csv(w))?;
    out.write_json("pulse_result.json", &report)?;
    Ok(report)
}
