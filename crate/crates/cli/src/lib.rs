//! `rangewalk` command-line driver: configuration, dispatch and reports.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rangewalk::classify::ClassifyError;
use rangewalk::dist_exact::ExactError;
use rangewalk::estimate_mc::McError;
use rangewalk::ladder::LadderError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("{0}")]
    Failure(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Failure(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Resource { .. } => CliError::Resource(e.to_string()),
            ExactError::Group(_) | ExactError::Invalid(_) | ExactError::NotRational => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::Exact(x) => x.into(),
            McError::Invalid(_) | McError::Group(_) => CliError::Usage(e.to_string()),
            McError::Codec(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<LadderError> for CliError {
    fn from(e: LadderError) -> Self {
        match e {
            LadderError::Mc(x) => x.into(),
            LadderError::Precision(_) => CliError::Resource(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Exact(x) => x.into(),
            ClassifyError::Mc(x) => x.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "rangewalk", version, about = "Entropy of ranges and traces of random walks on groups")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV/JSON reports and the manifest.
    #[arg(long, global = true, default_value = "rangewalk-out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "RANGEWALK_WORKERS")]
    pub workers: Option<usize>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo stream count.
    #[arg(long, global = true)]
    pub streams: Option<u32>,
    /// Exit with status 4 when a checked property fails.
    #[arg(long, global = true)]
    pub assert: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ArithmeticArg {
    Double,
    Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MethodArg {
    PlugIn,
    MillerMadow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Suite {
    Subadditivity,
    Reversal,
    #[value(alias = "lemma31")]
    LogMoment,
    #[value(alias = "lemma61")]
    EntropyIntegral,
    Boundary,
    Conditional,
    Aep,
    Transport,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Exact entropy sequences.
    Exact {
        #[arg(long)]
        n_max: Option<usize>,
        /// Comma list of range, range+endpoint, trace, trace+endpoint.
        #[arg(long)]
        targets: Option<String>,
        #[arg(long, value_enum)]
        arithmetic: Option<ArithmeticArg>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        max_paths: Option<usize>,
        /// Also write the law tables at this n.
        #[arg(long)]
        law_n: Option<usize>,
    },
    /// Monte Carlo entropies and escape probabilities.
    Mc {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        targets: Option<String>,
        #[arg(long, value_enum, default_value = "plug-in")]
        method: MethodArg,
        /// Comma list of truncation horizons for escape estimates.
        #[arg(long)]
        escape: Option<String>,
        /// Compare with exact values where available.
        #[arg(long)]
        exact: bool,
    },
    /// Recurrence class and vanishing predictions.
    Classify {
        /// Also compute exact sequences up to this n and check the trends.
        #[arg(long)]
        n_max: Option<usize>,
        /// Corroborate with truncated escape estimates at these horizons.
        #[arg(long)]
        horizons: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        /// Lower bound c for the trace rate (default: exact value when known).
        #[arg(long)]
        lower_bound: Option<f64>,
    },
    /// Law of the supremum of a walk skip-free to the left.
    Ladder {
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// `start:end:count` grid for the generating-function check.
        #[arg(long, default_value = "0.1:0.9:9")]
        t_grid: String,
        /// Monte Carlo check with this many samples.
        #[arg(long)]
        mc_samples: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
    },
    /// Round-trip and injectivity fuzzing of the trace codec.
    CodecFuzz {
        #[arg(long, default_value_t = 10_000)]
        cases: usize,
        #[arg(long, default_value_t = 300)]
        max_n: usize,
    },
    /// Named property suites.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        n_max: Option<usize>,
        /// Random cases (lemma sweeps) or sampled trajectories (aep).
        #[arg(long)]
        cases: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Exact { .. } => "exact",
            Command::Mc { .. } => "mc",
            Command::Classify { .. } => "classify",
            Command::Ladder { .. } => "ladder",
            Command::CodecFuzz { .. } => "codec-fuzz",
            Command::Check { .. } => "check",
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rangewalk: {e}");
            e.exit_code()
        }
    }
}
