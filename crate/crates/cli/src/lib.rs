//! Command-line front end: `merton <fp|adjoint|hj|optimize|mc|validate>
//! --config <path> [--out <dir>] [--seed <u64>]`.
//!
//! Exit codes: 0 success, 2 configuration, 3 solver or i/o, 4 sweep not
//! converged (partial files written), 5 validation failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "merton", about = "Forward-backward solvers for terminal-utility portfolio choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed; overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Density under the configured control.
    Fp,
    /// Multiplier under the configured control.
    Adjoint,
    /// Direct HJ solve by policy iteration.
    Hj,
    /// Forward-backward sweep to the optimal control.
    Optimize,
    /// Monte Carlo estimate under the configured control.
    Mc,
    /// Moment identities and the forward/adjoint/Monte Carlo triangle.
    Validate,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("merton: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        CliError::Config(config::ConfigError {
            source: "command line".into(),
            line: None,
            key: None,
            message: "--config <path> is required".into(),
        })
    })?;
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    match cli.command {
        Command::Fp => commands::cmd_fp(&cfg),
        Command::Adjoint => commands::cmd_adjoint(&cfg),
        Command::Hj => commands::cmd_hj(&cfg),
        Command::Optimize => commands::cmd_optimize(&cfg),
        Command::Mc => commands::cmd_mc(&cfg),
        Command::Validate => commands::cmd_validate(&cfg),
    }
}
