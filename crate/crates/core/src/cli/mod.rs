//! The `droplet` command line.
//!
//! Every command except `report` reads a flat `key = value` configuration
//! (see [`KEYS`]), optionally from a file given with `--config`, with
//! `--set key=value` and the named flags taking precedence. The resolved
//! configuration is echoed to `config.txt` in the output directory; passing
//! that file back with `--config` reproduces the run.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for failures
//! during a run.

mod commands;
mod config;

pub use commands::{cmd_compare, cmd_flow, cmd_glauber, cmd_report, cmd_shapes, ECHO_FILE};
pub use config::{describe_keys, Command, Config, RawConfig, KEYS};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "droplet", version, about = "Zero-temperature Ising droplets and anisotropic curve shortening")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Write the initial curve and its lattice droplets.
    Shapes(RunArgs),
    /// Run the deterministic flow to extinction.
    Flow(RunArgs),
    /// Run zero-temperature Glauber dynamics from the shape.
    Glauber(RunArgs),
    /// Compare droplets with the flow across scales and seeds.
    Compare(RunArgs),
    /// Re-aggregate the rows of an existing comparison report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file in `key = value` format.
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override any config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Initial shape, e.g. disk:0.4 or star:0.5,0.2,6.
    #[arg(long)]
    pub shape: Option<String>,
    /// Number of flow markers.
    #[arg(long)]
    pub n: Option<String>,
    /// Mobility: exact, mollified or constant.
    #[arg(long)]
    pub profile: Option<String>,
    /// Lattice scales, comma separated.
    #[arg(long = "L", value_name = "L")]
    pub scales: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub replicas: Option<String>,
    /// Diffusive times, comma separated; `0.5T` means half the shrink time.
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<String>,
    /// Also write boundary polylines and time series.
    #[arg(long)]
    pub emit_plot_data: bool,
    /// Write every flip of every glauber replica.
    #[arg(long)]
    pub event_log: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Report CSV written by `compare`.
    #[arg(long)]
    pub rows: PathBuf,
    #[arg(long, default_value_t = 0.875)]
    pub pass_threshold: f64,
    /// Directory for the aggregate JSON (stdout only when absent).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// File values, then `--set`, then named flags.
    pub fn raw_config(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::read(p)?,
            None => RawConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            raw.set(k.trim(), v.trim())?;
        }
        let named = [
            ("shape", &self.shape),
            ("flow.n", &self.n),
            ("anisotropy.kind", &self.profile),
            ("L", &self.scales),
            ("seed", &self.seed),
            ("replicas", &self.replicas),
            ("checkpoints", &self.checkpoints),
            ("eta", &self.eta),
            ("out", &self.out),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                raw.set(k, v)?;
            }
        }
        if self.emit_plot_data {
            raw.set("emit_plot_data", "true")?;
        }
        if self.event_log {
            raw.set("event_log", "true")?;
        }
        Ok(raw)
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let keys = format!("Config keys (key, default, meaning):\n{}", describe_keys());
    let matches = Cli::command()
        .mut_subcommand("shapes", |c| c.after_long_help(keys.clone()))
        .mut_subcommand("flow", |c| c.after_long_help(keys.clone()))
        .mut_subcommand("glauber", |c| c.after_long_help(keys.clone()))
        .mut_subcommand("compare", |c| c.after_long_help(keys.clone()))
        .try_get_matches_from(args);
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(sub: &Sub) -> Result<(), CliError> {
    let resolve = |args: &RunArgs, command: Command| Config::resolve(&args.raw_config()?, command);
    match sub {
        Sub::Shapes(a) => cmd_shapes(&resolve(a, Command::Shapes)?),
        Sub::Flow(a) => cmd_flow(&resolve(a, Command::Flow)?),
        Sub::Glauber(a) => cmd_glauber(&resolve(a, Command::Glauber)?),
        Sub::Compare(a) => cmd_compare(&resolve(a, Command::Compare)?),
        Sub::Report(a) => cmd_report(&a.rows, a.pass_threshold, a.out.as_deref()),
    }
}
