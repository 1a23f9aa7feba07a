//! `mtmeval` command-line interface.
//!
//! Every subcommand reads its inputs from explicit paths (defaulting to the
//! artifacts of earlier stages under `--out`) and writes only below `--out`:
//!
//! ```text
//! <out>/corpus/       validated corpus tables + summary.json   (ingest)
//! <out>/rankings/     train.tsv, validation.tsv, manifest.json (rankings)
//! <out>/model/        scorer.json, training_report.json        (train)
//! <out>/scores/       metric_scores.tsv                        (score)
//! <out>/correlation/  report.json, report.txt                  (correlate)
//! <out>/robustness/   report.json, report.txt                  (robustness)
//! ```
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 data error,
//! 3 numeric failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{build_metrics, IngestSummary, RankingsManifest, SubsetSummary};
pub use config::{RankingsConfig, RunConfig, SignificanceConfig, DEFAULT_METRICS};

use crate::corpus::{CorpusError, LangPair};
use crate::metaeval::StatError;
use crate::metrics::{MetricError, ToyScorerError};
use crate::rankings::RankingError;
use crate::training::TrainingError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        let message = format!("{}: {e}", path.display());
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::usage(message)
        } else {
            CliError::data(message)
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Integrity { .. } => CliError::data(e.to_string()),
            CorpusError::Io { ref path, source } => CliError::io(path, source),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        match e {
            RankingError::Io { path, source } => CliError::io(std::path::Path::new(&path), source),
            RankingError::Tsv(_) => CliError::usage(e.to_string()),
        }
    }
}

impl From<TrainingError> for CliError {
    fn from(e: TrainingError) -> Self {
        match e {
            TrainingError::InvalidConfig(_) => CliError::usage(e.to_string()),
            TrainingError::EmptyTrainingData => CliError::data(e.to_string()),
            TrainingError::NonFinite { .. } => CliError::numeric(e.to_string()),
        }
    }
}

impl From<StatError> for CliError {
    fn from(e: StatError) -> Self {
        match e {
            StatError::NonFinite => CliError::numeric(e.to_string()),
            StatError::InvalidArgument(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::NonFinite(_) => CliError::numeric(e.to_string()),
            MetricError::Io { path, source } => CliError::io(std::path::Path::new(&path), source),
            MetricError::Tsv(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<ToyScorerError> for CliError {
    fn from(e: ToyScorerError) -> Self {
        match e {
            ToyScorerError::Io { path, source } => {
                CliError::io(std::path::Path::new(&path), source)
            }
            _ => CliError::usage(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// master seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// restrict to these language pairs (comma separated, e.g. en-de,zh-en)
    #[arg(long, global = true, value_delimiter = ',')]
    pub lang_pairs: Vec<LangPair>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic MQM corpus (raw tables) into --out
    Synth {
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long)]
        systems: Option<usize>,
    },
    /// Validate a raw corpus and write the corpus bundle with summary counts
    Ingest {
        /// directory with segments.tsv, system_outputs.tsv, references.tsv, mqm_ratings.tsv
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
    },
    /// Derive intra-annotator relative rankings and the holdout split
    Rankings {
        /// corpus bundle (default: <out>/corpus)
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        holdout: Option<usize>,
        /// also pair human translations
        #[arg(long)]
        include_human: bool,
    },
    /// Fine-tune the sequence scorer on the rankings
    Train {
        /// rankings directory (default: <out>/rankings)
        #[arg(long)]
        rankings: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        disable_ce: bool,
        #[arg(long)]
        disable_forward: bool,
        #[arg(long)]
        disable_backward: bool,
    },
    /// Score machine translations against the standard references
    Score {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// trained scorer for `prism-ft` (default: <out>/model/scorer.json)
        #[arg(long)]
        model: Option<PathBuf>,
        /// comma separated: bleu, chrf, prism, prism-ft
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
    },
    /// Correlate metric scores with MQM judgments
    Correlate {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// metric scores (default: <out>/scores/metric_scores.tsv)
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Compare correlations under human and machine-translated references
    Robustness {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "mtmeval",
    version,
    about = "Train and meta-evaluate reference-based MT metrics"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(i) => i,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.common, cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

/// Runs one command with already-parsed arguments.
pub fn execute(common: &Common, command: Command) -> Result<(), CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    if common.out.is_some() {
        config.out = common.out.clone();
    }
    if !common.lang_pairs.is_empty() {
        config.lang_pairs = common.lang_pairs.clone();
    }
    commands::dispatch(config, command)
}
