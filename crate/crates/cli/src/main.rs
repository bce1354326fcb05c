//! `emech`: synthetic spectra, sweeps, fits and replayable runs for a
//! microwave cavity coupled to a mechanical drum.
//!
//! Exit status: 0 on success, 1 when a fit fails or does not converge, 2 for
//! usage and input errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use electromech::fit::FitError;
use electromech::formats::{parse_param_file, ParamRecord};
use electromech::harness::HarnessError;
use electromech::oracle::OracleError;
use electromech::DeviceParams;

use commands::{
    DetuningArgs, FitArgs, Job, MapArgs, NoiseArgs, NumericalFailure, PowerArgs, RoundtripArgs, SpectrumArgs,
};

#[derive(Parser, Debug)]
#[command(name = "emech", version, about = "Cavity electromechanics simulator and parameter estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that writes files.
#[derive(Args, Debug, Clone)]
struct Common {
    /// Device parameter file (JSON or `key = value` lines). Defaults to the
    /// built-in membrane device.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,

    /// Output directory.
    #[arg(long, value_name = "DIR", env = "EMECH_OUT_DIR", default_value = ".")]
    out: PathBuf,

    /// Seed for additive noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print derived figures of merit.
    Figures {
        #[arg(long, value_name = "FILE")]
        params: Option<PathBuf>,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Dressed probe transmission at one drive setting.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SpectrumArgs,
    },
    /// Probe spectra over drive photon number, with g fitted per spectrum.
    SweepPower {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: PowerArgs,
    },
    /// Spring shift and backaction damping over relative detuning.
    SweepDetuning {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: DetuningArgs,
    },
    /// Two-tone |T| map over drive and probe frequency.
    Map {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: MapArgs,
    },
    /// Thermal noise sideband of the drum.
    NoiseSpectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: NoiseArgs,
    },
    /// Fit a model to a spectrum or noise CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: FitArgs,
    },
    /// Synthesize, fit and compare against the truth.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: RoundtripArgs,
    },
    /// Rerun a command from its manifest.
    Replay {
        /// Manifest written by an earlier run.
        manifest: PathBuf,
        /// Output directory.
        #[arg(long, value_name = "DIR", env = "EMECH_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
}

/// The parameter record as given, which is what manifests store; runs use
/// its validated form so that replays see bit-identical parameters.
fn load_params(path: Option<&PathBuf>) -> Result<ParamRecord> {
    let record = match path {
        None => ParamRecord::from_params(&DeviceParams::membrane_device()),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_param_file(&text).with_context(|| format!("in parameter file {}", path.display()))?
        }
    };
    record
        .to_params()
        .with_context(|| "invalid device parameters".to_string())?;
    Ok(record)
}

fn run(cli: Cli) -> Result<()> {
    let (job, common) = match cli.command {
        Command::Figures { params, json } => {
            let params = load_params(params.as_ref())?.to_params()?;
            return commands::figures(&params, json);
        }
        Command::Replay { manifest, out } => return commands::replay(&manifest, &out),
        Command::Spectrum { common, args } => (Job::Spectrum(args), common),
        Command::SweepPower { common, args } => (Job::SweepPower(args), common),
        Command::SweepDetuning { common, args } => (Job::SweepDetuning(args), common),
        Command::Map { common, args } => (Job::Map(args), common),
        Command::NoiseSpectrum { common, args } => (Job::NoiseSpectrum(args), common),
        Command::Fit { common, args } => (Job::Fit(args), common),
        Command::Roundtrip { common, args } => (Job::Roundtrip(args), common),
    };
    job.validate()?;
    let params = load_params(common.params.as_ref())?;
    commands::execute(&job, &params, common.seed, &common.out)
}

/// 1 for numerical failures, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|cause| {
        cause.is::<NumericalFailure>()
            || cause.is::<FitError>()
            || cause.is::<OracleError>()
            || matches!(cause.downcast_ref::<HarnessError>(), Some(HarnessError::Fit(_)))
    });
    if numerical {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
