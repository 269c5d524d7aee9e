//! Command-line front end.
//!
//! Exit codes: 0 all checks passed, 1 a verification check failed, 2 invalid
//! configuration or input, 3 solver failure. The worker thread count is
//! taken from `RAYON_NUM_THREADS`.

pub mod config;
pub mod io;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, Experiment, InitialSpec, RunConfig};
pub use run::{Check, Manifest, RunError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nematic-wave", version, about = "Damped variational wave solver for nematic directors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve in energy coordinates and write time slices.
    Simulate(Overrides),
    /// Planar characteristic run on the gradient-blowup data.
    BlowupDemo(Overrides),
    /// Solve and check residuals, positivity, energy and continuity bounds.
    Verify(Overrides),
    /// Compare reconstructed slices against the finite-difference solver.
    CompareFd(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: the config's `output_dir`, else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Scale of the blowup data.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Project every node back onto the invariant set.
    #[arg(long)]
    pub project: bool,
}

impl Command {
    fn parts(&self) -> (Experiment, &Overrides) {
        match self {
            Command::Simulate(o) => (Experiment::Simulate, o),
            Command::BlowupDemo(o) => (Experiment::BlowupDemo, o),
            Command::Verify(o) => (Experiment::Verify, o),
            Command::CompareFd(o) => (Experiment::CompareFd, o),
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(experiment: Experiment, o: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(times) = &o.times {
        cfg.times = times.clone();
    }
    if let Some(h) = o.grid_step {
        cfg.grid_step = h;
    }
    if let Some(mu) = o.mu {
        cfg.mu = mu;
    }
    if o.project {
        cfg.project = true;
    }
    if let Some(eps) = o.eps {
        match &mut cfg.initial {
            InitialSpec::Blowup { eps: e, .. } => *e = eps,
            _ if experiment == Experiment::BlowupDemo => {
                cfg.initial = InitialSpec::Blowup {
                    u0: std::f64::consts::FRAC_PI_4,
                    eps,
                    amplitude: None,
                    skew: 0.5,
                }
            }
            _ => {
                return Err(ConfigError {
                    line: None,
                    message: "--eps applies only to blowup initial data".into(),
                })
            }
        }
    }
    cfg.validate().map_err(|e| ConfigError { line: None, message: format!("after overrides: {}", e.message) })?;
    Ok(cfg)
}

/// Parses `args`, runs the experiment and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let (experiment, overrides) = cli.command.parts();
    let cfg = match resolve_config(experiment, overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = overrides.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match run::run(&cfg, experiment, &out) {
        Ok(manifest) => {
            for c in &manifest.checks {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                println!("{mark} {:<24} {:e} (limit {:e})", c.name, c.value, c.limit);
            }
            println!("{} finished in {:.2} s; artifacts in {}", experiment.name(), manifest.wall_time_s, out.display());
            if manifest.passed {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e @ RunError::Config(_)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e @ RunError::Solver(_)) => {
            eprintln!("error: {e}");
            EXIT_SOLVER
        }
    }
}
