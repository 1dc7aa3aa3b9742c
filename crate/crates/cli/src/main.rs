//! `roughpde`: config-driven runs of the rough-drift PDE toolkit.
//!
//! Exit codes: 0 success, 1 compute failure (or failed validation),
//! 2 Picard non-convergence, 3 norm explosion, 64 usage or config errors.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roughpde::validation::{Suite, ValidationOptions};
use roughpde::Error;

use crate::config::ConfigError;
use crate::output::{out_dir, Log};

const EXIT_FAILURE: u8 = 1;
const EXIT_NON_CONVERGENCE: u8 = 2;
const EXIT_NORM_EXPLOSION: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "roughpde", version, about = "Mild solutions of heat equations with rough drift, and their BSDEs")]
struct Cli {
    /// More progress output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config, or the run.json of an earlier run of the same command.
    config: PathBuf,

    /// Output directory [default: $ROUGHPDE_OUT/<command> or ./roughpde-out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded coefficient bundle.
    Generate(Common),
    /// Solve the mild equation by Picard iteration.
    Solve(Common),
    /// Simulate the virtual BSDE solution and check it.
    Bsde(Common),
    /// Run built-in validation suites.
    Validate {
        /// Suite name, or `all`.
        #[arg(value_parser = parse_suites)]
        suite: SuiteSelection,
        /// Smaller grids and fewer paths.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study against a reference solver.
    Compare(Common),
}

#[derive(Clone)]
struct SuiteSelection(Vec<Suite>);

fn parse_suites(s: &str) -> Result<SuiteSelection, String> {
    if s == "all" {
        return Ok(SuiteSelection(Suite::ALL.to_vec()));
    }
    s.parse::<Suite>().map(|suite| SuiteSelection(vec![suite])).map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite {s:?}; expected one of {} or all", names.join(", "))
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Parameters(_)) => EXIT_USAGE,
        Some(Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
        Some(Error::NormExplosion { .. }) => EXIT_NORM_EXPLOSION,
        _ => EXIT_FAILURE,
    }
}

fn run_config<T, F>(common: &Common, name: &str, log: Log, run: F) -> anyhow::Result<bool>
where
    T: serde::de::DeserializeOwned + config::Resolve,
    F: FnOnce(&T, &Path, Log) -> anyhow::Result<()>,
{
    let config: T = config::load(&common.config, name)?;
    let out = out_dir(common.out.as_deref(), name);
    log.info(format!("output directory {}", out.display()));
    run(&config, &out, log)?;
    Ok(true)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let log = Log { verbose: cli.verbose };
    match cli.command {
        Command::Generate(c) => run_config(&c, "generate", log, commands::generate),
        Command::Solve(c) => run_config(&c, "solve", log, commands::solve),
        Command::Bsde(c) => run_config(&c, "bsde", log, commands::bsde),
        Command::Compare(c) => run_config(&c, "compare", log, commands::compare_oracle),
        Command::Validate { suite, quick, seed, out } => {
            let out = out_dir(out.as_deref(), "validate");
            commands::validate(&suite.0, &ValidationOptions { quick, seed }, &out, log)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILURE),
        Err(e) => {
            eprintln!("roughpde: error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
