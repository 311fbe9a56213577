//! EIT/ATS discrimination of a calculated single-qubit line shape.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::config::{uniform_grid, ExperimentConfig};
use super::{control_frequency, Artifacts};
use crate::aic::{aic_discriminate, LineShapeModel, ModelComparison};
use crate::error::{Error, Result};
use crate::qubit::{transmission, ControlDrive};
use crate::spectrum::ComplexSpectrum;
use crate::units::{mhz, to_hz};

#[derive(Debug, Clone, Serialize)]
pub struct DiscriminationReport {
    #[serde(rename = "rabi_Hz")]
    pub rabi_hz: f64,
    #[serde(rename = "gamma20_Hz")]
    pub gamma20_hz: f64,
    #[serde(rename = "noise_amplitude")]
    pub noise: f64,
    pub preferred: LineShapeModel,
    pub comparison: ModelComparison,
    #[serde(skip)]
    pub line_shape: ComplexSpectrum,
}

/// Builds the single-qubit transmission under resonant control and compares
/// the ATS and EIT line-shape models on its magnitude.
pub fn discrimination(config: &ExperimentConfig) -> Result<DiscriminationReport> {
    let d = &config.discrimination;
    let mut qubit = config.single_qubit()?;
    if let Some(g) = d.gamma20_mhz {
        qubit.dephasing_20 = mhz(g);
        qubit.validate().map_err(|e| Error::Config(format!("discrimination.gamma20_MHz: {e}")))?;
    }
    let drive = ControlDrive::new(control_frequency(config, &qubit), mhz(d.rabi_mhz))
        .map_err(|e| Error::Config(format!("discrimination.rabi_MHz: {e}")))?;
    let step = d.span_mhz / (d.points - 1) as f64;
    let grid = uniform_grid("discrimination", qubit.omega10, d.span_mhz, step)?;
    let clean = ComplexSpectrum::new(
        grid.clone(),
        grid.iter().map(|w| transmission(&qubit, &drive, w)).collect::<Result<_>>()?,
    )?;
    let line_shape = if config.noise.amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.noise.seed);
        let noise = Normal::new(0.0, config.noise.amplitude).expect("validated noise amplitude");
        let noisy: Vec<Complex64> = clean
            .values()
            .iter()
            .map(|v| {
                let m = (v.norm() + noise.sample(&mut rng)).abs();
                Complex64::from_polar(m, v.arg())
            })
            .collect();
        ComplexSpectrum::new(grid, noisy)?
    } else {
        clean
    };
    let comparison = aic_discriminate(&line_shape)?;
    Ok(DiscriminationReport {
        rabi_hz: to_hz(drive.rabi),
        gamma20_hz: to_hz(qubit.dephasing_20),
        noise: config.noise.amplitude,
        preferred: comparison.preferred(),
        comparison,
        line_shape,
    })
}

/// Writes `line_shape.csv` and `discrimination.json`; an invalid comparison
/// is still written before being reported as a fit failure.
pub fn cmd_discriminate(config: &ExperimentConfig, out: &mut Artifacts) -> Result<DiscriminationReport> {
    let report = discrimination(config)?;
    out.write_with("line_shape.csv", |w| report.line_shape.write_csv(w))?;
    out.write_json("discrimination.json", &report)?;
    if !report.comparison.valid {
        let best = if report.comparison.ats.rss <= report.comparison.eit.rss {
            &report.comparison.ats
        } else {
            &report.comparison.eit
        };
        return Err(Error::FitFailure {
            reason: report.comparison.diagnostics.join("; "),
            best: best.params.clone(),
            cost: best.rss,
            iterations: best.iterations,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averaged_rates_are_ats() {
        let r = discrimination(&ExperimentConfig::default()).unwrap();
        assert!(r.comparison.valid);
        assert!(r.comparison.weight_ats > 0.99, "{}", r.comparison.weight_ats);
        assert_eq!(r.preferred, LineShapeModel::Ats);
    }

    #[test]
    fn weak_control_with_long_lived_state_is_eit() {
        let mut c = ExperimentConfig::default();
        c.discrimination.gamma20_mhz = Some(0.01);
        c.discrimination.rabi_mhz = 5.0;
        c.discrimination.span_mhz = 100.0;
        let r = discrimination(&c).unwrap();
        assert!(r.comparison.weight_eit > 0.5, "{:?}", r.comparison);
        assert_eq!(r.preferred, LineShapeModel::Eit);
    }
}
