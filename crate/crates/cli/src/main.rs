//! `nlsearch`: run the pairwise and flag-local search variants, emit
//! trajectories and reports, and run the invariant suites.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nlsearch::verify::Fault;

use config::{Algo, Format, RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "nlsearch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a pipeline and write a JSON report.
    Run(RunArgs),
    /// Write the ⟨σ₃⟩(t) trajectory of the local algorithm.
    Trace(RunArgs),
    /// Run every invariant suite.
    Verify {
        /// Inject a known defect to check that the suites catch it.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Compare reduced states under the disentangling map and the local flow.
    MobDemo {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    PropagatorSign,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Other(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            commands::cmd_run(&RunConfig::from_args(&args, Algo::Both, Format::Json)?)
        }
        Command::Trace(args) => {
            commands::cmd_trace(&RunConfig::from_args(&args, Algo::Local, Format::Csv)?)
        }
        Command::Verify { inject_fault } => commands::cmd_verify(inject_fault.map(|f| match f {
            FaultArg::PropagatorSign => Fault::PropagatorSign,
        })),
        Command::MobDemo { out } => commands::cmd_mob_demo(out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
