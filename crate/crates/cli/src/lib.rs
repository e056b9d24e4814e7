//! Command-line driver: precision heatmaps, scaling tables, Bayesian
//! estimation runs, decoding tables and the oracle cross-check suite.
//!
//! Every command renders its whole output as a string so that it can be
//! written to a file or stdout, or inspected directly in tests.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qemetro::Protocol;

pub mod checks;
pub mod commands;
pub mod format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] qemetro::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 1 for malformed input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::CheckFailed(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qemetro", version, about = "Error-corrected GHZ magnetometry: precision bounds, estimation and oracle checks")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; `text` applies to `table` and `oracle-check`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tr[F^-1] over a (bx, bz) grid.
    Heatmap(HeatmapArgs),
    /// Tr[F^-1], Tr[Q^-1] and the closed form against N, with fitted exponents.
    Scaling(ScalingArgs),
    /// Repeated simulated experiments and their Bayesian estimates.
    Bayes(BayesArgs),
    /// Syndrome decoding table.
    Table(TableArgs),
    /// Statevector oracle against the closed-form model.
    OracleCheck(OracleCheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    AncillaFreeZ,
    SingleZ,
    SingleX,
    Dual,
    #[value(name = "3d")]
    ThreeD,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::AncillaFreeZ => Protocol::AncillaFreeZ,
            ProtocolArg::SingleZ => Protocol::SingleZ,
            ProtocolArg::SingleX => Protocol::SingleX,
            ProtocolArg::Dual => Protocol::Dual,
            ProtocolArg::ThreeD => Protocol::ThreeD,
        }
    }
}

impl ProtocolArg {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolArg::AncillaFreeZ => "ancilla-free-z",
            ProtocolArg::SingleZ => "single-z",
            ProtocolArg::SingleX => "single-x",
            ProtocolArg::Dual => "dual",
            ProtocolArg::ThreeD => "3d",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// Sensing qubits.
    #[arg(long)]
    pub n: usize,
    /// Field values `start:stop:step` (stop excluded) or a comma list, used
    /// for both axes unless `--grid-bz` is given.
    #[arg(long, default_value = "0.02:3.21:0.02")]
    pub grid: String,
    #[arg(long)]
    pub grid_bz: Option<String>,
    /// Fixed Y component for the 3d protocol.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub by: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// Sensing-qubit counts `start:stop:step` (stop excluded) or a comma list.
    #[arg(long)]
    pub n_range: String,
    #[arg(long, allow_negative_numbers = true)]
    pub bx: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub bz: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub by: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub bx: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub bz: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Shots per probe and repetition.
    #[arg(long, default_value_t = 4000)]
    pub shots: u64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Uniform prior `bx_min,bx_max,bz_min,bz_max`.
    #[arg(long, default_value = "0.05,1,0.05,1")]
    pub prior_box: String,
    /// Grid cells per axis.
    #[arg(long, default_value_t = 200)]
    pub cells: usize,
    /// Credible level of the effective-field band.
    #[arg(long, default_value_t = 0.99)]
    pub band: f64,
    /// Where to write the JSON summary; appended as a `#` footer otherwise.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableMode {
    AncillaFree,
    AncillaAssisted,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Z,
    X,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Physical qubits of the code, ancilla included.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: TableMode,
    #[arg(long, value_enum, default_value = "z")]
    pub basis: BasisArg,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Largest simulated register.
    #[arg(long, default_value_t = 10)]
    pub max_qubits: usize,
    /// Field points per axis.
    #[arg(long, default_value_t = 10)]
    pub cells: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
}

/// Runs the command and returns its rendered output.
pub fn run(config: &RunConfig) -> Result<String, CliError> {
    let format = match (config.format, &config.command) {
        (Some(OutputFormat::Text), Command::Table(_) | Command::OracleCheck(_)) | (None, Command::Table(_) | Command::OracleCheck(_)) => {
            OutputFormat::Text
        }
        (Some(OutputFormat::Text), _) => return Err(CliError::Validation("text output is available for table and oracle-check only".into())),
        (Some(f), _) => f,
        (None, _) => OutputFormat::Csv,
    };
    match &config.command {
        Command::Heatmap(a) => commands::heatmap(a, format),
        Command::Scaling(a) => commands::scaling(a, format),
        Command::Bayes(a) => commands::bayes(a, format),
        Command::Table(a) => commands::table(a, format),
        Command::OracleCheck(a) => commands::oracle_check(a, format),
    }
}

/// Writes `content` to `--out` or stdout.
pub fn emit(config: &RunConfig, content: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => std::fs::write(path, content)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
