//! `mingraph`: reproducible experiments on minimal graphs.
//!
//! Exit codes: 0 success, 1 assertion failure, 2 solver non-convergence,
//! 3 invalid input.
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod algebra_cmd;
mod config;
mod diagnose_cmd;
mod error;
mod invariants_cmd;
mod measure_cmd;
mod output;
mod solve_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "mingraph", version, about = "Numerical experiments on minimal graphs of higher codimension")]
struct Cli {
    /// JSON configuration for the command; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed override for every random component.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Randomized property suites for the Grassmannian invariants and models.
    Invariants(invariants_cmd::Args),
    /// Grid scans and random sampling of the algebraic inequalities.
    VerifyAlgebra,
    /// Solve the minimal surface system on a grid patch.
    Solve,
    /// Curvature and Δ log v diagnostics on a model or solved patch.
    Diagnose,
    /// Volume, density and growth measurements.
    Measure,
    /// The model catalogue.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Debug, Subcommand)]
enum ZooAction {
    /// Print the model labels.
    List,
}

/// Result of a command that ran to completion.
pub enum Outcome {
    Passed,
    /// A configured assertion failed; carries the first witness.
    AssertionFailed(String),
    NotConverged(String),
}

pub struct Common {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Common {
    pub fn out_dir(&self, configured: Option<&PathBuf>, command: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| configured.cloned())
            .unwrap_or_else(|| PathBuf::from("mingraph-out").join(command))
    }
}

fn run(cli: Cli) -> CliResult<Outcome> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let common = Common {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
    };
    match cli.command {
        Command::Invariants(args) => invariants_cmd::run(&common, &args),
        Command::VerifyAlgebra => algebra_cmd::run(&common),
        Command::Solve => solve_cmd::run(&common),
        Command::Diagnose => diagnose_cmd::run(&common),
        Command::Measure => measure_cmd::run(&common),
        Command::Zoo { action: ZooAction::List } => {
            for (label, about) in mingraph::model_zoo::CATALOG {
                println!("{label:<18} {about}");
            }
            Ok(Outcome::Passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionFailed(witness)) => {
            eprintln!("assertion failed: {witness}");
            ExitCode::from(1)
        }
        Ok(Outcome::NotConverged(report)) => {
            eprintln!("solver did not converge: {report}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
