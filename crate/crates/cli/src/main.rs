//! `slowlight` command-line front end for the experiment drivers.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slowlight::experiments::{run, Command, ExperimentConfig};
use slowlight::Error;

#[derive(Parser, Debug)]
#[command(name = "slowlight", version, about = "Slow-light simulations for transmon chains in a waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (TOML, or JSON including a previous run manifest).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random draw; overrides `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Lossless band diagrams for several control strengths.
    Band,
    /// Chain spectra and delays versus control power.
    AtsSweep,
    /// Two-group dispersion-engineered chain swept in detuning.
    DispersionSweep,
    /// Gaussian pulse through the chain and the receiver model.
    Pulse,
    /// Synthetic power calibration and gamma20 extraction.
    Calibrate,
    /// Akaike comparison of EIT and ATS line shapes.
    Discriminate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Band => Command::Band,
            Cmd::AtsSweep => Command::AtsSweep,
            Cmd::DispersionSweep => Command::DispersionSweep,
            Cmd::Pulse => Command::Pulse,
            Cmd::Calibrate => Command::Calibrate,
            Cmd::Discriminate => Command::Discriminate,
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_config() => EXIT_CONFIG,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn execute(cli: &Cli) -> Result<PathBuf, Error> {
    let mut config = match &cli.common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        config.noise.seed = seed;
    }
    if let Some(threads) = cli.common.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| config.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let command = Command::from(cli.command);
    log::info!("running {} into {}", command.name(), out.display());
    let manifest = run(command, &config, &out)?;
    for file in &manifest.outputs {
        log::info!("wrote {}", out.join(file).display());
    }
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
