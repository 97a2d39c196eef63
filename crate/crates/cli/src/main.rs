//! `stark <subcommand> --config path.json [--out dir]`
//!
//! Exit codes: 0 success, 1 validation error, 2 solver failure, 3 verify
//! thresholds not met.

mod commands;
mod config;
mod format;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stark_core::StarkError;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Solver(StarkError),
    Io(String),
}

impl From<StarkError> for CliError {
    fn from(e: StarkError) -> Self {
        use StarkError as E;
        match e {
            E::InvalidCurve(_)
            | E::NonUniqueMinimum { .. }
            | E::NonPositiveCurvature { .. }
            | E::OutOfRange { .. }
            | E::OutOfPatch { .. }
            | E::Resolution(_)
            | E::PatchTooShallow { .. }
            | E::ScaleOverflow { .. }
            | E::NonPositiveField(_)
            | E::InvalidArgument(_) => CliError::Validation(e.to_string()),
            _ => CliError::Solver(e),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "stark", version, about = "Smallest Dirichlet eigenvalues of -h^2 Laplacian + x")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Three-term expansion tables.
    Predict(Common),
    /// Exact and discretized model-operator spectra.
    Model(Common),
    /// Tubular-patch eigenvalues for each h.
    Solve(Common),
    /// Quasimode form and Gram matrices with exponent fits.
    Quasimode(Common),
    /// Agmon-weighted norms and localization widths.
    Agmon(Common),
    /// Full sweep against the expansion with a pass/fail summary.
    Verify(Common),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, f): (&Common, fn(&RunConfig) -> Result<commands::Artifacts, CliError>) = match &cli.command {
        Command::Predict(c) => (c, commands::predict),
        Command::Model(c) => (c, commands::model),
        Command::Solve(c) => (c, commands::solve),
        Command::Quasimode(c) => (c, commands::quasimode),
        Command::Agmon(c) => (c, commands::agmon),
        Command::Verify(c) => (c, commands::verify),
    };
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", common.config.display())))?;
    let cfg = RunConfig::parse(&text)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let art = f(&cfg)?;
    write_all(&out, &art.files)?;
    Ok(art.passed)
}

/// The single collector: all files are written here, after every solve
/// finished.
fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification thresholds not met");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
