use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cqed_core::{Error, Result};

mod commands;
mod config;
mod output;

use config::RunConfig;
use output::RunDir;

/// Exact diagonalization of a dipole lattice coupled to one cavity mode.
#[derive(Parser)]
#[command(name = "cqed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Lanczos start-vector seed; overrides `lanczos.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and operator application.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reuse completed sweep points from `points.jsonl` in the output directory.
    #[arg(long, global = true)]
    resume: bool,
    /// Write a gnuplot script next to every CSV.
    #[arg(long, global = true)]
    emit_gnuplot: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Ground state and observables of one parameter point.
    Ground,
    /// One-dimensional parameter sweep with optional boundary extraction.
    Sweep,
    /// Photon-cutoff doubling trace at one point.
    CutoffScan,
    /// Order-by-disorder polarization of triangular clusters.
    Obd,
    /// Ground-state histograms of one point.
    Hist,
    /// List the preset clusters.
    Presets,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ground => "ground",
            Command::Sweep => "sweep",
            Command::CutoffScan => "cutoff-scan",
            Command::Obd => "obd",
            Command::Hist => "hist",
            Command::Presets => "presets",
        }
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<commands::Failures> {
    let resolved = cfg.to_toml();
    let dir = RunDir::create(cfg.out_dir(), cli.command.name(), &resolved, cli.emit_gnuplot)?;
    let result = match cli.command {
        Command::Ground => commands::ground(cfg, &dir, false),
        Command::Hist => commands::ground(cfg, &dir, true),
        Command::Sweep => commands::sweep(cfg, &dir, cli.resume),
        Command::CutoffScan => commands::cutoff_scan(cfg, &dir),
        Command::Obd => commands::obd(cfg, &dir),
        Command::Presets => unreachable!("presets needs no run directory"),
    };
    if let Err(e) = &result {
        dir.write_error(e)?;
    }
    result
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    RunConfig::load(path)?.resolve(cli.out.clone(), cli.seed)
}

/// Error report for failures before a run directory exists.
fn report_early(cli: &Cli, e: &Error) {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("cqed-out"));
    let body = serde_json::json!({ "error": e.record(), "detail": output::error_detail(e) });
    let _ = std::fs::create_dir_all(&dir)
        .and_then(|_| std::fs::write(dir.join("error.json"), serde_json::to_string_pretty(&body).unwrap()));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    if let Command::Presets = cli.command {
        return match commands::presets() {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            report_early(&cli, &e);
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} recorded failures");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
