//! Config-driven experiment drivers that emit CSV and JSON artifacts.
//!
//! Each command has a pure compute function returning a report and a `cmd_*`
//! wrapper that writes the artifacts. Sweep points run in parallel on the
//! current rayon pool and are reported in input order, so identical configs
//! produce byte-identical files.

mod ats;
mod band;
mod calibrate;
mod config;
mod discriminate;
mod dispersion;
mod pulsed;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use ats::{ats_sweep, cmd_ats_sweep, AtsPoint, AtsReport, SweepPeak};
pub use band::{band_structure, cmd_band, BandEntry, BandReport, Gap};
pub use calibrate::{calibration_experiment, calibration_trial, cmd_calibrate, CalibrationReport, CalibrationTrial};
pub use config::{
    AnalysisConfig, CalibrationConfig, ChainConfig, DiscriminationConfig, DispersionConfig, DriveConfig,
    DriveSetting, ExperimentConfig, NoiseConfig, OutputConfig, ProbeConfig, PulseConfig, QubitSource,
    ReferenceConvention,
};
pub use discriminate::{cmd_discriminate, discrimination, DiscriminationReport};
pub use dispersion::{cmd_dispersion_sweep, dispersion_sweep, DispersionPoint, DispersionReport, FrequencyAssignment};
pub use pulsed::{cmd_pulse, pulse_through_chain, PulseReport, PulseRun};

use crate::error::{Error, Result};
use crate::qubit::{power_to_rabi, ControlDrive, TransmonQubit};
use crate::units::{dbm_to_watts, ghz, to_hz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Band,
    AtsSweep,
    DispersionSweep,
    Pulse,
    Calibrate,
    Discriminate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Band => "band",
            Command::AtsSweep => "ats-sweep",
            Command::DispersionSweep => "dispersion-sweep",
            Command::Pulse => "pulse",
            Command::Calibrate => "calibrate",
            Command::Discriminate => "discriminate",
        }
    }
}

/// Written next to the artifacts; reloading it reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "run_manifest.json";

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Collects the files a command writes into one output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(fs::File::create(self.dir.join(name))?))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut f = self.open(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        std::io::Write::write_all(&mut f, b"\n")?;
        Ok(())
    }

    /// Hands a buffered file to `write`, which typically serializes CSV into it.
    pub fn write_with(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
        let mut f = self.open(name)?;
        write(&mut f)?;
        std::io::Write::flush(&mut f)?;
        Ok(())
    }

    fn finish(mut self, command: Command, config: &ExperimentConfig) -> Result<RunManifest> {
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            outputs: self.written.clone(),
        };
        self.write_json(RunManifest::FILE_NAME, &manifest)?;
        Ok(manifest)
    }
}

/// Runs one command, writing its artifacts and a run manifest into `out_dir`.
pub fn run(command: Command, config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    let mut artifacts = Artifacts::create(out_dir)?;
    match command {
        Command::Band => cmd_band(config, &mut artifacts).map(drop),
        Command::AtsSweep => cmd_ats_sweep(config, &mut artifacts).map(drop),
        Command::DispersionSweep => cmd_dispersion_sweep(config, &mut artifacts).map(drop),
        Command::Pulse => cmd_pulse(config, &mut artifacts).map(drop),
        Command::Calibrate => cmd_calibrate(config, &mut artifacts).map(drop),
        Command::Discriminate => cmd_discriminate(config, &mut artifacts).map(drop),
    }?;
    artifacts.finish(command, config)
}

/// Control frequency: the configured one or the 2→1 transition of `qubit`.
pub(crate) fn control_frequency(config: &ExperimentConfig, qubit: &TransmonQubit) -> f64 {
    config.drive.control_frequency_ghz.map(ghz).unwrap_or_else(|| qubit.omega21())
}

/// Representative qubit for power-to-Rabi conversion: the first qubit with the
/// chain-mean Γ₁₀, since one control power dresses every qubit.
pub(crate) fn calibration_qubit(qubits: &[TransmonQubit]) -> TransmonQubit {
    let mean = qubits.iter().map(|q| q.radiative_rate).sum::<f64>() / qubits.len() as f64;
    TransmonQubit {
        radiative_rate: mean,
        ..qubits[0]
    }
}

/// A resolved sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ResolvedDrive {
    pub drive: ControlDrive,
    pub power_dbm: Option<f64>,
}

pub(crate) fn resolve_drive(setting: DriveSetting, qubit: &TransmonQubit, omega_c: f64) -> Result<ResolvedDrive> {
    let (rabi, power_dbm) = match setting {
        DriveSetting::Rabi(r) => (r, None),
        DriveSetting::PowerDbm(p) => (power_to_rabi(qubit, omega_c, dbm_to_watts(p))?, Some(p)),
    };
    Ok(ResolvedDrive {
        drive: ControlDrive::new(omega_c, rabi)?,
        power_dbm,
    })
}

/// Rabi strength in cyclic Hz, the unit used in every artifact.
pub(crate) fn rabi_hz(d: &ControlDrive) -> f64 {
    to_hz(d.rabi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_qubit_uses_mean_rate() {
        let a = TransmonQubit::averaged();
        let b = TransmonQubit {
            radiative_rate: 3.0 * a.radiative_rate,
            ..a
        };
        let q = calibration_qubit(&[a, b]);
        assert_eq!(q.radiative_rate, 2.0 * a.radiative_rate);
        assert_eq!(q.omega10, a.omega10);
    }

    #[test]
    fn command_names_match_serde() {
        for c in [
            Command::Band,
            Command::AtsSweep,
            Command::DispersionSweep,
            Command::Pulse,
            Command::Calibrate,
            Command::Discriminate,
        ] {
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
    }
}
