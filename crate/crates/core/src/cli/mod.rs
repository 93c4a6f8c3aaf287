//! The `spikecap` command-line tool.
//!
//! Exit codes: 0 success, 2 parse error, 3 domain-invariant violation,
//! 4 solver-regime error.

mod commands;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::spike_vcg::PaymentScheme;
pub use output::Format;
pub use scenario::{Objective, ParseError, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spikecap", version, about = "Capacity-constrained spike auctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PaymentFlag {
    Betting,
    Ppa,
}

impl From<PaymentFlag> for PaymentScheme {
    fn from(p: PaymentFlag) -> Self {
        match p {
            PaymentFlag::Betting => PaymentScheme::Betting,
            PaymentFlag::Ppa => PaymentScheme::PayPerAcquisition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Solver {
    ClosedForm,
    Simplex,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the VCG spike auction.
    Vcg {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "betting")]
        payment: PaymentFlag,
    },
    /// Choose optimal spikes under the scenario's capacity bounds.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Defaults to the scenario's objective, then revenue.
        #[arg(long, value_enum)]
        objective: Option<Objective>,
        /// Defaults to the closed form when it applies, simplex otherwise.
        #[arg(long, value_enum)]
        solver: Option<Solver>,
        /// Emit the price-of-capacity report.
        #[arg(long)]
        poc: bool,
    },
    /// Optimal value across a grid of uniform capacity bounds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        objective: Option<Objective>,
        /// Number of leading ranks carrying the uniform bound; defaults to
        /// the threshold index of the objective (or M).
        #[arg(long)]
        kappa: Option<usize>,
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// Largest bound on the grid; defaults to the feasibility limit
        /// 2/(kappa(kappa+1)).
        #[arg(long)]
        eps_max: Option<f64>,
    },
    /// Monte Carlo run of the two-stage auction.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "ppa")]
        payment: PaymentFlag,
    },
    /// Sponsored-search combined auction at the scenario's spikes.
    Ssa {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Domain(Error),
    Solver(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Regime { .. } => CliError::Solver(e),
            other => CliError::Domain(other),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e.0)
    }
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    commands::dispatch(&cli.command)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation { code, stdout: String::new(), stderr: text }
            } else {
                Invocation { code, stdout: text, stderr: String::new() }
            };
        }
    };
    match execute(&cli) {
        Ok(stdout) => Invocation {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Invocation {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}
