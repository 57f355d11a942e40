mod commands;
mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Resource quantifiers, witness games and certification runs for
/// state-measurement pairs.
#[derive(Debug, Parser)]
#[command(name = "qrt-games", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robustness and/or weight of a state and/or a measurement.
    Quantify(QuantifyArgs),
    /// Witness game (blueprint) for a state-measurement pair.
    BuildGame(BuildGameArgs),
    /// Value of a game for a given state and measurement.
    Evaluate(EvaluateArgs),
    /// Strict advantage in both witness games.
    CertifyResult1(CertifyArgs),
    /// Game ratios against the quantifier products, plus bound chains on random games.
    CertifyResult2(CertifyArgs),
    /// Single-shot information bounds on channel ensembles.
    CertifyResult3(CertifyArgs),
    /// Internal consistency checks, optionally against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for every random draw of the run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct Tolerances {
    /// Relative duality-gap tolerance of the SDP solver.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_gap: f64,
    /// Relative feasibility tolerance of the SDP solver.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_feas: f64,
    /// Write the solver iteration log (CSV) here.
    #[arg(long)]
    pub solver_log: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Objects {
    /// State JSON file.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// POVM JSON file.
    #[arg(long)]
    pub povm: Option<PathBuf>,
    /// Free states: `incoherent` or a descriptor JSON file.
    #[arg(long, default_value = "incoherent")]
    pub free: String,
    /// Free measurements: `trivial`, `incoherent` or a descriptor JSON file.
    #[arg(long, default_value = "trivial")]
    pub mfree: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Discrimination,
    Exclusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    Robustness,
    Weight,
    Both,
}

#[derive(Debug, Args)]
pub struct QuantifyArgs {
    #[command(flatten)]
    pub objects: Objects,
    #[arg(long, value_enum, default_value_t = QuantityArg::Both)]
    pub quantity: QuantityArg,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BuildGameArgs {
    #[command(flatten)]
    pub objects: Objects,
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Number of filler copies in the discrimination game.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Blueprint, instrument or ensemble JSON file.
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub povm: PathBuf,
    /// Required for instruments and ensembles; must agree with a blueprint.
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub objects: Objects,
    /// Filler copies of the discrimination game (result 2).
    #[arg(long)]
    pub n: Option<usize>,
    /// Random games per pair (result 2).
    #[arg(long, default_value_t = 20)]
    pub random_games: usize,
    /// Ensemble JSON file (result 3); repeatable.
    #[arg(long)]
    pub ensemble: Vec<PathBuf>,
    /// Additional seeded random ensembles (result 3).
    #[arg(long, default_value_t = 0)]
    pub random_ensembles: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub objects: Objects,
    /// Game JSON file, checked against exhaustive post-processing enumeration.
    #[arg(long)]
    pub game: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Compare against the brute-force oracles where they apply.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub tol: Tolerances,
    #[command(flatten)]
    pub common: Common,
}

/// Exit status of a run that produced a report.
pub enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => {
            eprintln!("one or more checks failed; see report");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
