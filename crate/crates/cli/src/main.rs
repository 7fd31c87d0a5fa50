mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use restless_core::shots::Mode;

use config::ExperimentConfig;
use output::{OutDir, Provenance};

#[derive(Parser, Debug)]
#[command(name = "restless", version, about = "Simulated restless gate tuneup")]
struct Cli {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `restless` or `conventional`; overrides `mode`.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides `out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-step Nelder-Mead tuneup from each configured start.
    Tuneup,
    /// Cost over a grid of pulse amplitudes.
    Landscape,
    /// RB decay curve and fit at the nominal optimum.
    Rb,
    /// Monte Carlo and model signal-to-noise scans.
    Snr,
    /// T1 fluctuation spectrum, power-law fit and derived spread.
    Psd,
    /// Clifford fidelity from a measured gate set (JSON process matrices).
    GstFcl { file: PathBuf },
    /// Per-iteration time breakdown.
    Timing,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Simulation(String),
    Fit(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Simulation(m) => write!(f, "simulation error: {m}"),
            CliError::Fit(m) => write!(f, "fit error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<restless_core::Error> for CliError {
    fn from(e: restless_core::Error) -> Self {
        use restless_core::Error as E;
        match e {
            E::FitFailed(_) => CliError::Fit(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Simulation(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(CliError::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(d) = cli.out_dir {
        cfg.out_dir = d;
    }
    cfg.validate().map_err(CliError::Config)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Simulation(e.to_string()))?;
    }

    let mut out = OutDir::create(&cfg.out_dir, Provenance::new(cfg.hash(), cfg.master_seed))?;
    let result = match &cli.cmd {
        Command::Tuneup => commands::tuneup(&cfg, &mut out),
        Command::Landscape => commands::landscape_cmd(&cfg, &mut out),
        Command::Rb => commands::rb(&cfg, &mut out),
        Command::Snr => commands::snr(&cfg, &mut out),
        Command::Psd => commands::psd(&cfg, &mut out),
        Command::GstFcl { file } => commands::gst_fcl(file, &mut out),
        Command::Timing => commands::timing(&cfg, &mut out),
    };
    for p in out.written() {
        eprintln!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("restless: {e}");
            ExitCode::from(e.code())
        }
    }
}
