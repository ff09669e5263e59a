//! `teprog`: solve composite convex problems with the telescoping
//! Bregmanian proximal gradient method, certify the produced traces
//! against the method's rate bound, compare against the classical
//! proximal-gradient baseline, and generate reproducible instances.
//!
//! Exit codes: 0 ok, 1 certification failure, 2 input/contract error,
//! 3 solver failure, 4 consistency (hash/checksum) error.

mod commands;
mod schema;
mod trace_io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CertifyArgs, CompareArgs, GenArgs, SolveArgs};
use schema::{RuleName, ScheduleSection};

/// An error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn certification(message: String) -> Self {
        CliError { code: 1, message }
    }

    pub fn input(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn solver(message: String) -> Self {
        CliError { code: 3, message }
    }

    pub fn consistency(message: String) -> Self {
        CliError { code: 4, message }
    }

    /// Core errors raised while building problems/configs are input errors.
    pub fn from_core_input(e: teprog::Error) -> Self {
        CliError::input(e.to_string())
    }

    /// Core errors raised mid-run: solver failures unless they indicate a
    /// configuration problem.
    pub fn from_core_solver(e: teprog::Error) -> Self {
        match e {
            teprog::Error::ProxFailure(_)
            | teprog::Error::BacktrackOverflow { .. }
            | teprog::Error::MaxInnerIterations { .. } => CliError::solver(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "teprog",
    about = "Telescoping Bregmanian proximal gradient solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleFlag {
    Lipschitz,
    Backtracking,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleFlag {
    PowerBox,
    Constant,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write the iteration trace as CSV
    Solve {
        /// Problem description (JSON)
        #[arg(long)]
        problem: PathBuf,
        /// Step size rule override
        #[arg(long, value_enum)]
        rule: Option<RuleFlag>,
        /// Backtracking growth factor override (> 1)
        #[arg(long)]
        eta: Option<f64>,
        /// Initial step constant override
        #[arg(long)]
        l1: Option<f64>,
        /// Iteration budget override (records, initial point included)
        #[arg(long)]
        kmax: Option<u64>,
        /// Trace output path
        #[arg(long)]
        out: PathBuf,
        /// Also write a reference-solution file from the final iterate
        #[arg(long)]
        ref_out: Option<PathBuf>,
    },
    /// Re-run a trace deterministically and certify it against the rate
    /// bound and per-step inequalities
    Certify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Reference solution (JSON with instance_hash, x_ref, f_ref)
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Report output path
        #[arg(long)]
        report: PathBuf,
    },
    /// Side-by-side run against the classical proximal-gradient baseline
    /// (p = 2, quadratic geometry, constant schedule only)
    Compare {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        kmax: Option<u64>,
        /// CSV output with both objective curves
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded random lp-l1 instance file
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 0.25)]
        density: f64,
        /// Box exponent; defaults to min(0.5, 0.5/(p-2))
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum, default_value_t = ScheduleFlag::PowerBox)]
        schedule: ScheduleFlag,
        #[arg(long, default_value_t = 1000)]
        kmax: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            problem,
            rule,
            eta,
            l1,
            kmax,
            out,
            ref_out,
        } => commands::cmd_solve(SolveArgs {
            problem,
            rule: rule.map(|r| match r {
                RuleFlag::Lipschitz => RuleName::Lipschitz,
                RuleFlag::Backtracking => RuleName::Backtracking,
            }),
            eta,
            l1,
            kmax,
            out,
            ref_out,
        }),
        Command::Certify {
            trace,
            problem,
            reference,
            report,
        } => commands::cmd_certify(CertifyArgs {
            trace,
            problem,
            reference,
            report,
        }),
        Command::Compare { problem, kmax, out } => {
            commands::cmd_compare(CompareArgs { problem, kmax, out })
        }
        Command::Gen {
            seed,
            n,
            m,
            p,
            lambda,
            density,
            sigma,
            schedule,
            kmax,
            out,
        } => commands::cmd_gen(GenArgs {
            seed,
            n,
            m,
            p,
            lambda,
            density,
            sigma,
            schedule: match schedule {
                ScheduleFlag::PowerBox => {
                    ScheduleSection::PowerBox(schema::PowerBoxSpec { sigma: 0.5 })
                }
                ScheduleFlag::Constant => ScheduleSection::Constant,
            },
            kmax,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
