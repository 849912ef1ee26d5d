//! Command-line front end: system loading, single decisions, phase sweeps,
//! property reports and the theorem suites.
//!
//! Exit codes: 0 true / all PASS, 1 false / any FAIL, 2 usage or input
//! error, 3 undetermined.

pub mod config;
mod commands;
mod output;
pub mod sweep;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invshadow_core::harness::TheoremId;
use invshadow_core::{Horizon, MethodClass, Mode};

pub use config::{load_system, parse_system_config, ConfigError};
pub use output::{Envelope, SystemInfo, SCHEMA_VERSION};
pub use sweep::{run_phase_sweep, PhaseCell, PhaseDiagram, SweepConfig, SweepError};

pub const EXIT_TRUE: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDETERMINED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "invshadow", version, about = "Inverse shadowing on finite metric dynamical systems")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write the output document to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zoo families.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// δ-pseudo-orbit transition graph.
    Graph(GraphArgs),
    /// Decide T0 / Th inverse shadowing.
    Decide(DecideArgs),
    /// Decide weak inverse shadowing.
    Weak(WeakArgs),
    /// Sweep an (ε, δ) grid.
    Phase(PhaseArgs),
    /// Sensitivity, equicontinuity, expansivity and minimality moduli.
    Props(PropsArgs),
    /// Run theorem suites and revalidate their certificates, or revalidate a saved document.
    Verify(VerifyArgs),
    /// Run theorem suites and emit every cell.
    Report(SuiteArgs),
}

#[derive(Debug, Subcommand)]
pub enum ZooAction {
    List,
}

#[derive(Debug, Args)]
pub struct SystemArg {
    /// Zoo family (e.g. `rotation:8,1`) or path to a system config file.
    #[arg(long)]
    pub system: String,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    /// Positive integer or `full`.
    #[arg(long, default_value = "full")]
    pub horizon: Horizon,
    #[arg(long, default_value = "positive")]
    pub mode: Mode,
    /// `t0`, `th`, or `tc` (same as `t0` on finite spaces).
    #[arg(long, default_value = "t0")]
    pub class: MethodClass,
    /// Use the ball B_δ(y) as the start set.
    #[arg(long)]
    pub robust: bool,
    /// Stabilization cap for full-horizon scans.
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WeakArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value = "positive")]
    pub mode: Mode,
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub system: SystemArg,
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.2,0.3")]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.12,0.13")]
    pub delta: Vec<f64>,
    #[arg(long, default_value = "full")]
    pub horizon: Horizon,
    #[arg(long, default_value = "positive")]
    pub mode: Mode,
    #[arg(long, default_value = "t0")]
    pub class: MethodClass,
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PropsArgs {
    #[command(flatten)]
    pub system: SystemArg,
    /// Resolution of the sensitivity moduli.
    #[arg(long, default_value_t = 0.12)]
    pub eta: f64,
    #[arg(long, default_value_t = 6)]
    pub horizon: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.2,0.3")]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.12,0.13")]
    pub delta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Run every suite (the default when no `--theorem` is given).
    #[arg(long)]
    pub all: bool,
    /// Run only these suites, e.g. `REFORM` or `finite_eq_full`.
    #[arg(long = "theorem")]
    pub theorems: Vec<TheoremId>,
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub suites: SuiteArgs,
    /// Revalidate the certificates in a saved JSON document instead of running suites.
    #[arg(long, conflicts_with_all = ["all", "theorems", "cap"])]
    pub input: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Output goes to `out` (or `--out`), errors to `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_TRUE,
                _ => EXIT_USAGE,
            };
            let target: &mut dyn Write = if code == EXIT_TRUE { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let (envelope, code) = match commands::execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let rendered = match cli.format {
        Format::Json => envelope.to_json(),
        Format::Text => envelope.to_text(),
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &rendered).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => out.write_all(rendered.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    code
}
