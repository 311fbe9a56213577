//! Synthetic power calibration and γ₂₀ extraction with seeded noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::{control_frequency, Artifacts};
use crate::calibration::{extract_gamma20, fit_calibration_factor, resonant_transmission_model, slope_from_alpha};
use crate::error::{Error, Result};
use crate::units::{dbm_to_watts, to_hz};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTrial {
    pub trial: usize,
    pub alpha_fit: f64,
    pub alpha_relative_error: f64,
    #[serde(rename = "gamma20_fit_Hz")]
    pub gamma20_fit_hz: f64,
    pub gamma20_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub alpha_true: f64,
    #[serde(rename = "gamma20_true_Hz")]
    pub gamma20_true_hz: f64,
    #[serde(rename = "control_frequency_Hz")]
    pub control_frequency_hz: f64,
    pub splitting_noise: f64,
    pub transmission_noise: f64,
    pub seed: u64,
    pub trials: Vec<CalibrationTrial>,
    pub max_alpha_relative_error: f64,
    pub max_gamma20_relative_error: f64,
}

/// Independent stream per trial so results do not depend on scheduling.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// One synthetic calibration: splittings `Ω = a√P_appl` with relative noise and
/// a resonant transmission curve with absolute noise, each fitted back.
pub fn calibration_trial(config: &ExperimentConfig, trial: usize) -> Result<CalibrationTrial> {
    let c = &config.calibration;
    let qubit = config.single_qubit()?;
    let omega_c = control_frequency(config, &qubit);
    let mut rng = trial_rng(config.noise.seed, trial);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let a = slope_from_alpha(c.alpha, &qubit, omega_c);
    let splittings: Vec<(f64, f64)> = c
        .applied_power_dbm
        .iter()
        .map(|&dbm| {
            let p = dbm_to_watts(dbm);
            (p, a * p.sqrt() * (1.0 + c.splitting_noise * unit.sample(&mut rng)))
        })
        .collect();
    let cal = fit_calibration_factor(&splittings, &qubit, omega_c)?;

    let k = c.gamma20_points;
    let curve: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let dbm = c.gamma20_power_start_dbm
                + (c.gamma20_power_stop_dbm - c.gamma20_power_start_dbm) * i as f64 / (k - 1) as f64;
            let p = dbm_to_watts(dbm);
            let t = resonant_transmission_model(&qubit, omega_c, qubit.dephasing_20, p);
            (p, t + c.transmission_noise * unit.sample(&mut rng))
        })
        .collect();
    let g = extract_gamma20(&curve, &qubit, omega_c)?;

    Ok(CalibrationTrial {
        trial,
        alpha_fit: cal.alpha,
        alpha_relative_error: (cal.alpha - c.alpha).abs() / c.alpha,
        gamma20_fit_hz: to_hz(g.dephasing_20),
        gamma20_relative_error: (g.dephasing_20 - qubit.dephasing_20).abs() / qubit.dephasing_20,
    })
}

pub fn calibration_experiment(config: &ExperimentConfig) -> Result<CalibrationReport> {
    let c = &config.calibration;
    let qubit = config.single_qubit()?;
    if qubit.dephasing_20 <= 0.0 {
        return Err(Error::Config("calibration needs a qubit with gamma20 > 0".into()));
    }
    let trials = (0..c.trials)
        .into_par_iter()
        .map(|t| calibration_trial(config, t))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&CalibrationTrial) -> f64| trials.iter().map(f).fold(0.0, f64::max);
    Ok(CalibrationReport {
        alpha_true: c.alpha,
        gamma20_true_hz: to_hz(qubit.dephasing_20),
        control_frequency_hz: to_hz(control_frequency(config, &qubit)),
        splitting_noise: c.splitting_noise,
        transmission_noise: c.transmission_noise,
        seed: config.noise.seed,
        max_alpha_relative_error: max(|t| t.alpha_relative_error),
        max_gamma20_relative_error: max(|t| t.gamma20_relative_error),
        trials,
    })
}

/// Writes `calibration.json`.
pub fn cmd_calibrate(config: &ExperimentConfig, out: &mut Artifacts) -> Result<CalibrationReport> {
    let report = calibration_experiment(config)?;
    out.write_json("calibration.json", &report)?;
    Ok(report)
}
