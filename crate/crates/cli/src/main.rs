//! `kreduce`: build sequences, reduce third-kind problems and verify the
//! reduction from a TOML configuration.
//!
//! Exit codes: 0 success, 1 configuration or I/O, 2 construction failure
//! (empty band, unreachable tolerance), 3 numerical failure (near-singular
//! system, strict projection, failed checks).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kernel_reduction::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("construction: {0}")]
    Construction(Error),
    #[error("numerical: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Construction(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Config(_) => "Config".into(),
            CliError::Io(_) => "Io".into(),
            CliError::Construction(e) => {
                let debug = format!("{e:?}");
                debug
                    .split(|c: char| !c.is_alphanumeric())
                    .next()
                    .unwrap_or_default()
                    .to_string()
            }
            CliError::Numerical(_) => "Numerical".into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyBand { .. }
            | Error::ToleranceUnreachable { .. }
            | Error::NotBisectable { .. }
            | Error::InvalidSet(_) => CliError::Construction(e),
            Error::NearSingular { .. }
            | Error::QuadratureInsufficient { .. }
            | Error::DegenerateSystem
            | Error::NonFinite(_) => CliError::Numerical(e.to_string()),
            Error::DepthOutOfRange(_)
            | Error::SpaceMismatch { .. }
            | Error::SizeMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::AlphaNotZero
            | Error::AlphaZero => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kreduce", version, about = "Unitary reduction of third-kind integral equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output` from the config, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the orthonormal band sequence and write sequence.json.
    BuildSequence(Common),
    /// Run the full reduction; write A0.csv, A.csv, kernel grids and report.json.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Relative tolerance for strict projection checks.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Fail when a projected surrogate loses more than the tolerance.
        #[arg(long)]
        strict: bool,
    },
    /// Run the reduction and every invariant check; exit 0 iff all pass.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Relative tolerance for residual checks.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

fn out_dir(common: &Common, run: &config::Run) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| run.output())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn tolerance_ok(t: f64) -> Result<f64, CliError> {
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(CliError::Config(format!("tolerance must be positive, got {t}")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildSequence(common) => {
            let run = config::Run::load(&common.config)?;
            commands::build_sequence_cmd(&run, &out_dir(&common, &run))
        }
        Command::Reduce {
            common,
            tolerance,
            strict,
        } => {
            let tolerance = tolerance_ok(tolerance)?;
            let run = config::Run::load(&common.config)?;
            let strict = strict || run.config.strict;
            commands::reduce_cmd(&run, &out_dir(&common, &run), tolerance, strict)
        }
        Command::Verify { common, tolerance } => {
            let tolerance = tolerance_ok(tolerance)?;
            let run = config::Run::load(&common.config)?;
            commands::verify_cmd(&run, &out_dir(&common, &run), tolerance)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kreduce: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
