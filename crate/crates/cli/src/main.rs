//! `eigensel`: generate test problems, compute eigenvalues with selection,
//! verify results against dense oracles and print reports.

mod generate;
mod report;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status for runs that stopped before finding every requested pair.
pub const EXIT_TRUNCATED: u8 = 10;
/// Exit status for a failed verification.
pub const EXIT_VERIFY: u8 = 11;
/// Exit status for unreadable, unwritable or malformed files.
pub const EXIT_IO: u8 = 12;

#[derive(Parser, Debug)]
#[command(name = "eigensel", version, about = "Several eigenvalues of polynomial and multiparameter problems by selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a built-in test problem as Matrix Market files plus a manifest.
    Generate(generate::GenerateArgs),
    /// Run the subspace solver on a problem manifest.
    Solve(Box<solve::SolveArgs>),
    /// Check a results file against residuals and a dense oracle.
    Verify(verify::VerifyArgs),
    /// Print the table of a results file.
    Report {
        /// Results JSON written by `solve`.
        results: PathBuf,
    },
}

/// Failure categories with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Truncated,
    Verification,
    Io(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Truncated => EXIT_TRUNCATED,
            Self::Verification => EXIT_VERIFY,
            Self::Io(_) => EXIT_IO,
            Self::Other(_) => 1,
        }
    }
}

/// File-level errors (missing files, bad Matrix Market or JSON) map to the
/// I/O exit code; everything else is a general failure.
impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let io_like = e.chain().any(|c| {
            c.is::<std::io::Error>()
                || c.is::<serde_json::Error>()
                || matches!(
                    c.downcast_ref::<eigensel::Error>(),
                    Some(eigensel::Error::Io(_) | eigensel::Error::Json(_) | eigensel::Error::Parse(_))
                )
        });
        if io_like {
            Self::Io(e)
        } else {
            Self::Other(e)
        }
    }
}

impl From<eigensel::Error> for Failure {
    fn from(e: eigensel::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate::run(&args),
        Command::Solve(args) => solve::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Report { results } => report::run(&results),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Truncated => eprintln!("warning: fewer eigenvalues than requested were found"),
                Failure::Verification => eprintln!("verification failed"),
                Failure::Io(e) | Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
