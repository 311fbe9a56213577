//! Experiment configuration: a TOML or JSON document whose keys carry their units.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::dsp::HeterodyneConfig;
use crate::error::{Error, Result};
use crate::qubit::{FrequencyGrid, TransmonQubit};
use crate::tmatrix::{ChainLayout, PropagationMedium, DEFAULT_SPACING};
use crate::units::{ghz, mhz};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Where the qubit parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitSource {
    /// Name of a parameter set in the corpus.
    pub set: String,
    /// Optional user corpus replacing the built-in one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// Records to use, in chain order. A single-record set is repeated instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Replacement for records whose γ₂₀ is missing.
    #[serde(rename = "gamma20_fallback_MHz", skip_serializing_if = "Option::is_none")]
    pub gamma20_fallback_mhz: Option<f64>,
}

impl Default for QubitSource {
    fn default() -> Self {
        QubitSource {
            set: "averaged".into(),
            file: None,
            labels: None,
            gamma20_fallback_mhz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub n: usize,
    #[serde(rename = "spacing_m")]
    pub spacing: f64,
    /// Defaults to the medium calibrated to φ = 0.16 at 8 GHz.
    #[serde(rename = "phase_velocity_m_per_s", skip_serializing_if = "Option::is_none")]
    pub phase_velocity: Option<f64>,
    /// Tunes every qubit to this 0→1 frequency.
    #[serde(rename = "frequency_GHz", skip_serializing_if = "Option::is_none")]
    pub frequency_ghz: Option<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n: 7,
            spacing: DEFAULT_SPACING,
            phase_velocity: None,
            frequency_ghz: None,
        }
    }
}

/// Control-tone sweep, given either as Rabi strengths or as on-chip powers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    #[serde(rename = "rabi_MHz", skip_serializing_if = "Option::is_none")]
    pub rabi_mhz: Option<Vec<f64>>,
    #[serde(rename = "power_dBm", skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<Vec<f64>>,
    /// Defaults to the 2→1 transition of the first qubit.
    #[serde(rename = "control_frequency_GHz", skip_serializing_if = "Option::is_none")]
    pub control_frequency_ghz: Option<f64>,
}

/// One control setting of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveSetting {
    Rabi(f64),
    PowerDbm(f64),
}

impl DriveConfig {
    /// The configured sweep, or `default` when neither list is given.
    pub fn settings(&self, default: &[DriveSetting]) -> Result<Vec<DriveSetting>> {
        let s: Vec<DriveSetting> = match (&self.rabi_mhz, &self.power_dbm) {
            (Some(_), Some(_)) => return Err(config_err("drive: give either rabi_MHz or power_dBm, not both")),
            (Some(r), None) => r.iter().map(|&v| DriveSetting::Rabi(mhz(v))).collect(),
            (None, Some(p)) => p.iter().map(|&v| DriveSetting::PowerDbm(v)).collect(),
            (None, None) => default.to_vec(),
        };
        if s.is_empty() {
            return Err(config_err("drive: the sweep is empty"));
        }
        for d in &s {
            match *d {
                DriveSetting::Rabi(r) if !(r.is_finite() && r >= 0.0) => {
                    return Err(config_err("drive.rabi_MHz entries must be finite and >= 0"))
                }
                DriveSetting::PowerDbm(p) if !p.is_finite() => {
                    return Err(config_err("drive.power_dBm entries must be finite"))
                }
                _ => {}
            }
        }
        Ok(s)
    }
}

/// Uniform probe grid around a centre frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Defaults to the 0→1 frequency of the first qubit.
    #[serde(rename = "center_GHz", skip_serializing_if = "Option::is_none")]
    pub center_ghz: Option<f64>,
    #[serde(rename = "span_MHz")]
    pub span_mhz: f64,
    #[serde(rename = "step_MHz")]
    pub step_mhz: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            center_ghz: None,
            span_mhz: 200.0,
            step_mhz: 0.1,
        }
    }
}

impl ProbeConfig {
    /// Grid centred on `center` (rad/s); the centre is always a grid point.
    pub fn grid(&self, center: f64) -> Result<FrequencyGrid> {
        uniform_grid("probe", center, self.span_mhz, self.step_mhz)
    }
}

pub(crate) fn uniform_grid(section: &str, center: f64, span_mhz: f64, step_mhz: f64) -> Result<FrequencyGrid> {
    if !(step_mhz.is_finite() && step_mhz > 0.0 && span_mhz.is_finite() && span_mhz >= 2.0 * step_mhz) {
        return Err(config_err(format!(
            "{section}: need step_MHz > 0 and span_MHz >= 2 step_MHz"
        )));
    }
    let half = (0.5 * span_mhz / step_mhz).round() as usize;
    if half > 500_000 {
        return Err(config_err(format!("{section}: grid would exceed one million points")));
    }
    FrequencyGrid::centered(center, mhz(step_mhz), half).map_err(|e| config_err(format!("{section}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Bandwidth over which the phase slope is averaged; 0 uses a central difference.
    #[serde(rename = "averaging_bandwidth_MHz")]
    pub averaging_bandwidth_mhz: f64,
    pub threshold_fraction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            averaging_bandwidth_mhz: 0.0,
            threshold_fraction: crate::analysis::DEFAULT_THRESHOLD,
        }
    }
}

/// What the transmitted pulse is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceConvention {
    /// The same chain with every qubit detuned far from the probe and the control off.
    #[default]
    Detuned,
    /// The input pulse itself, so the delay includes the bare-line traversal.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    #[serde(rename = "sigma_ns")]
    pub sigma_ns: f64,
    #[serde(rename = "sample_rate_GSps")]
    pub sample_rate_gsps: f64,
    #[serde(rename = "duration_ns")]
    pub duration_ns: f64,
    pub amplitude: f64,
    /// Run the emulated heterodyne receiver on signal and reference.
    pub heterodyne: bool,
    #[serde(rename = "if_MHz")]
    pub if_mhz: f64,
    pub filter_order: usize,
    #[serde(rename = "cutoff_MHz")]
    pub cutoff_mhz: f64,
    pub reference: ReferenceConvention,
    /// Detuning of the qubits in the detuned reference.
    #[serde(rename = "reference_detuning_MHz")]
    pub reference_detuning_mhz: f64,
    /// Span and resolution of the spectrum the pulse is propagated through.
    #[serde(rename = "spectrum_span_MHz")]
    pub spectrum_span_mhz: f64,
    #[serde(rename = "spectrum_step_MHz")]
    pub spectrum_step_mhz: f64,
    /// Also run pulses at every point of a spectroscopic sweep.
    pub in_sweeps: bool,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            sigma_ns: 50.0,
            sample_rate_gsps: 1.0,
            duration_ns: 1000.0,
            amplitude: 1.0,
            heterodyne: true,
            if_mhz: 115.0,
            filter_order: 5,
            cutoff_mhz: 115.0,
            reference: ReferenceConvention::Detuned,
            reference_detuning_mhz: 500.0,
            spectrum_span_mhz: 100.0,
            spectrum_step_mhz: 0.05,
            in_sweeps: true,
        }
    }
}

impl PulseConfig {
    pub fn heterodyne_config(&self) -> HeterodyneConfig {
        HeterodyneConfig {
            if_frequency: self.if_mhz * 1e6,
            filter_order: self.filter_order,
            cutoff: self.cutoff_mhz * 1e6,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_ns", self.sigma_ns),
            ("sample_rate_GSps", self.sample_rate_gsps),
            ("duration_ns", self.duration_ns),
            ("spectrum_span_MHz", self.spectrum_span_mhz),
            ("spectrum_step_MHz", self.spectrum_step_mhz),
            ("reference_detuning_MHz", self.reference_detuning_mhz),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(format!("pulse.{k} must be positive")));
            }
        }
        if !self.amplitude.is_finite() {
            return Err(config_err("pulse.amplitude must be finite"));
        }
        if self.duration_ns < 8.0 * self.sigma_ns {
            return Err(config_err("pulse.duration_ns must be at least 8 sigma_ns"));
        }
        Ok(())
    }
}

/// Alternating two-frequency chain sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub n: usize,
    #[serde(rename = "f2_GHz")]
    pub f2_ghz: f64,
    /// Values of f₂ − f₁.
    #[serde(rename = "detuning_MHz")]
    pub detuning_mhz: Vec<f64>,
    #[serde(rename = "averaging_bandwidth_MHz")]
    pub averaging_bandwidth_mhz: f64,
    #[serde(rename = "span_MHz")]
    pub span_mhz: f64,
    #[serde(rename = "step_MHz")]
    pub step_mhz: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            n: 8,
            f2_ghz: 7.882,
            detuning_mhz: (0..=16).map(|i| 32.0 + 4.0 * i as f64).collect(),
            averaging_bandwidth_mhz: 10.0,
            span_mhz: 200.0,
            step_mhz: 0.1,
        }
    }
}

/// Synthetic power-calibration and γ₂₀ experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Injected ratio of on-chip to applied power.
    pub alpha: f64,
    #[serde(rename = "applied_power_dBm")]
    pub applied_power_dbm: Vec<f64>,
    /// Relative Gaussian noise on the splittings.
    pub splitting_noise: f64,
    /// Absolute Gaussian noise on the resonant |t|.
    pub transmission_noise: f64,
    /// Log-spaced control powers for the γ₂₀ curve: start, stop, count.
    #[serde(rename = "gamma20_power_start_dBm")]
    pub gamma20_power_start_dbm: f64,
    #[serde(rename = "gamma20_power_stop_dBm")]
    pub gamma20_power_stop_dbm: f64,
    pub gamma20_points: usize,
    pub trials: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            alpha: 1e-7,
            applied_power_dbm: (0..=10).map(|i| -60.0 + 2.0 * i as f64).collect(),
            splitting_noise: 0.0,
            transmission_noise: 0.0,
            gamma20_power_start_dbm: -145.0,
            gamma20_power_stop_dbm: -105.0,
            gamma20_points: 41,
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminationConfig {
    #[serde(rename = "rabi_MHz")]
    pub rabi_mhz: f64,
    /// Overrides γ₂₀ of the selected qubit.
    #[serde(rename = "gamma20_MHz", skip_serializing_if = "Option::is_none")]
    pub gamma20_mhz: Option<f64>,
    #[serde(rename = "span_MHz")]
    pub span_mhz: f64,
    pub points: usize,
}

impl Default for DiscriminationConfig {
    fn default() -> Self {
        DiscriminationConfig {
            rabi_mhz: 40.0,
            gamma20_mhz: None,
            span_mhz: 200.0,
            points: 401,
        }
    }
}

/// Additive Gaussian noise for robustness demonstrations; off by default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Standard deviation added to |S₂₁| line shapes.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
}

/// Full experiment description. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub qubits: QubitSource,
    pub chain: ChainConfig,
    pub drive: DriveConfig,
    pub probe: ProbeConfig,
    pub analysis: AnalysisConfig,
    pub pulse: PulseConfig,
    pub dispersion: DispersionConfig,
    pub calibration: CalibrationConfig,
    pub discrimination: DiscriminationConfig,
    pub noise: NoiseConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Accepts either a bare configuration or a run manifest embedding one.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let c = match serde_json::from_str::<ExperimentConfig>(text) {
            Ok(c) => c,
            Err(plain) => match serde_json::from_str::<super::RunManifest>(text) {
                Ok(m) => m.config,
                Err(_) => return Err(config_err(format!("{plain}"))),
            },
        };
        c.validate()?;
        Ok(c)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.chain.n == 0 {
            return Err(config_err("chain.n must be at least 1"));
        }
        if !(self.chain.spacing.is_finite() && self.chain.spacing > 0.0) {
            return Err(config_err("chain.spacing_m must be positive"));
        }
        if let Some(v) = self.chain.phase_velocity {
            PropagationMedium::new(v).map_err(|e| config_err(format!("chain.phase_velocity_m_per_s: {e}")))?;
        }
        if let Some(f) = self.chain.frequency_ghz {
            check_tunable("chain.frequency_GHz", f)?;
        }
        if !(self.analysis.averaging_bandwidth_mhz.is_finite() && self.analysis.averaging_bandwidth_mhz >= 0.0) {
            return Err(config_err("analysis.averaging_bandwidth_MHz must be >= 0"));
        }
        if !(self.analysis.threshold_fraction > 0.0 && self.analysis.threshold_fraction < 1.0) {
            return Err(config_err("analysis.threshold_fraction must lie in (0, 1)"));
        }
        self.pulse.validate()?;
        let d = &self.dispersion;
        if d.n < 2 {
            return Err(config_err("dispersion.n must be at least 2"));
        }
        if d.detuning_mhz.is_empty() {
            return Err(config_err("dispersion.detuning_MHz must not be empty"));
        }
        check_tunable("dispersion.f2_GHz", d.f2_ghz)?;
        let c = &self.calibration;
        if !(c.alpha.is_finite() && c.alpha > 0.0) {
            return Err(config_err("calibration.alpha must be positive"));
        }
        if c.applied_power_dbm.len() < 2 {
            return Err(config_err("calibration.applied_power_dBm needs at least two entries"));
        }
        if c.trials == 0 || c.gamma20_points < 3 {
            return Err(config_err("calibration.trials must be >= 1 and gamma20_points >= 3"));
        }
        if !(c.splitting_noise >= 0.0 && c.transmission_noise >= 0.0) {
            return Err(config_err("calibration noise levels must be >= 0"));
        }
        if self.discrimination.points < 12 {
            return Err(config_err("discrimination.points must be at least 12"));
        }
        if !(self.noise.amplitude.is_finite() && self.noise.amplitude >= 0.0) {
            return Err(config_err("noise.amplitude must be >= 0"));
        }
        Ok(())
    }

    pub fn corpus(&self) -> Result<Corpus> {
        match &self.qubits.file {
            Some(f) => Corpus::from_path(Path::new(f)),
            None => Ok(Corpus::builtin()),
        }
    }

    /// The first `n` qubits of the configured source, retuned if requested.
    pub fn qubit_list(&self, n: usize) -> Result<Vec<TransmonQubit>> {
        let corpus = self.corpus()?;
        let set = corpus.set(&self.qubits.set)?;
        let fallback = self.qubits.gamma20_fallback_mhz.map(mhz);
        let records: Vec<_> = match &self.qubits.labels {
            Some(labels) => labels.iter().map(|l| set.record(l)).collect::<Result<_>>()?,
            None => set.qubits.iter().collect(),
        };
        let qubits: Vec<TransmonQubit> = if records.len() == 1 {
            vec![records[0].to_qubit(fallback)?; n]
        } else if records.len() >= n {
            records[..n].iter().map(|r| r.to_qubit(fallback)).collect::<Result<_>>()?
        } else {
            return Err(config_err(format!(
                "qubits: set '{}' provides {} records but the chain needs {n}",
                set.name,
                records.len()
            )));
        };
        Ok(match self.chain.frequency_ghz {
            Some(f) => qubits.iter().map(|q| q.tuned_to(ghz(f))).collect(),
            None => qubits,
        })
    }

    pub fn medium(&self) -> PropagationMedium {
        self.chain
            .phase_velocity
            .map(|v| PropagationMedium::new(v).expect("validated"))
            .unwrap_or_else(PropagationMedium::calibrated)
    }

    pub fn layout(&self) -> Result<ChainLayout> {
        ChainLayout::new(self.qubit_list(self.chain.n)?, self.chain.spacing, self.medium())
    }

    /// The qubit used for single-qubit experiments.
    pub fn single_qubit(&self) -> Result<TransmonQubit> {
        Ok(self.qubit_list(1)?[0])
    }
}

fn check_tunable(key: &str, f_ghz: f64) -> Result<()> {
    if !(3.0..=8.0).contains(&f_ghz) {
        return Err(config_err(format!("{key} = {f_ghz} lies outside the 3-8 GHz tuning range")));
    }
    Ok(())
}
