//! `zak-otfs` command-line runner.
//!
//! Every subcommand runs one experiment kind from a TOML configuration (or
//! the built-in defaults of that kind), writes its CSV output and prints a
//! summary table.  Exit codes: 0 success, 2 configuration error, 3 numerical
//! failure, 1 any other error.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zak_otfs::error::Error;
use zak_otfs::harness::{run_experiment, write_summary, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "zak-otfs", version, about = "Delay-Doppler modulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relative prediction error heatmaps.
    Rpe(RunArgs),
    /// BER against SNR.
    Ber(RunArgs),
    /// BER against maximum Doppler spread at fixed SNR.
    DopplerSweep(RunArgs),
    /// Radar ambiguity surface and delay-Doppler estimate.
    Radar(RunArgs),
    /// Zak-OTFS against MC-OTFS: BER and prediction heatmaps.
    McCompare(RunArgs),
    /// Print the default configuration of an experiment kind as TOML.
    Defaults {
        /// Experiment kind (rpe-heatmap, ber-snr, ber-doppler-sweep, radar-ambiguity, mcotfs-compare).
        kind: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration; the kind's defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo frames per point.
    #[arg(long)]
    frames: Option<usize>,
    /// Override the number of worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(kind: ExperimentKind, args: RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "configuration is of kind '{}' but subcommand '{}' was invoked",
            cfg.kind.subcommand(),
            kind.subcommand()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(f) = args.frames {
        cfg.frames = f;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(o) = args.out {
        cfg.output = Some(o);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_kind(s: &str) -> Result<ExperimentKind, Error> {
    #[derive(serde::Deserialize)]
    struct K {
        kind: ExperimentKind,
    }
    toml::from_str::<K>(&format!("kind = {s:?}")).map(|k| k.kind).map_err(|_| Error::Config(format!("unknown experiment kind '{s}'")))
}

fn run(cli: Cli) -> Result<(), Error> {
    let (kind, args) = match cli.command {
        Command::Rpe(a) => (ExperimentKind::RpeHeatmap, a),
        Command::Ber(a) => (ExperimentKind::BerSnr, a),
        Command::DopplerSweep(a) => (ExperimentKind::BerDopplerSweep, a),
        Command::Radar(a) => (ExperimentKind::RadarAmbiguity, a),
        Command::McCompare(a) => (ExperimentKind::McotfsCompare, a),
        Command::Defaults { kind } => {
            let cfg = ExperimentConfig::default_for(parse_kind(&kind)?);
            let text = toml::to_string_pretty(&cfg).map_err(|e| Error::Config(e.to_string()))?;
            print!("{text}");
            return Ok(());
        }
    };
    let cfg = load(kind, args)?;
    eprintln!("running {} (config {}) -> {}", kind.subcommand(), &cfg.hash()[..12], cfg.output_path().display());
    let records = run_experiment(&cfg)?;
    write_summary(&records, &mut std::io::stdout())?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Numerical(_) => 3,
                _ => 1,
            })
        }
    }
}
