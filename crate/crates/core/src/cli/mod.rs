//! The `emoaudit` command line. Each subcommand maps to one workflow stage
//! and returns a [`CliError`] whose [`CliError::exit_code`] tells scripts what
//! kind of failure happened.

mod audit;
mod stats;
mod survey;
mod train_eval;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use audit::AuditArgs;
pub use stats::StatsArgs;
pub use survey::SurveyArgs;
pub use train_eval::TrainEvalArgs;

use crate::classifier::ClassifierError;
use crate::dataset::{DatasetError, EmotionTaxonomy};
use crate::llm::LlmError;
use crate::pipeline::PipelineError;
use crate::stats::StatsError;
use crate::survey::SurveyError;

#[derive(Debug, Parser)]
#[command(
    name = "emoaudit",
    version,
    about = "Audit emotion datasets with generated context, train a linear classifier, analyze ratings"
)]
pub struct Cli {
    /// Log filter, e.g. info or emoaudit=debug. Overridden by RUST_LOG.
    #[arg(long, global = true, default_value = "info")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify context, curate dataset variants and write a run directory.
    Audit(AuditArgs),
    /// Cross-validate on variant files and evaluate zero-shot on external datasets.
    TrainEval(TrainEvalArgs),
    /// Analyze exported survey ratings and word frequencies.
    Stats(StatsArgs),
    /// Serve the rating survey over HTTP.
    Survey(SurveyArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Transport(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Transport(_) => 4,
            Self::Internal(_) => 1,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Config(m) => Self::Config(m),
            e if e.is_transport() => Self::Transport(e.to_string()),
            e => Self::Config(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            e if e.is_transport() => Self::Transport(e.to_string()),
            PipelineError::Dataset(e) => e.into(),
            e @ (PipelineError::Llm { .. } | PipelineError::MissingVerdict(_)) => Self::Data(e.to_string()),
            e @ PipelineError::Io { .. } => Self::Internal(e.to_string()),
            PipelineError::Config(m) => Self::Config(m),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Config(m) => Self::Config(m),
            ClassifierError::Dataset(e) => e.into(),
            e => Self::Data(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::InvalidArgument(m) => Self::Config(m),
            e => Self::Data(e.to_string()),
        }
    }
}

impl From<SurveyError> for CliError {
    fn from(e: SurveyError) -> Self {
        match e {
            e @ SurveyError::Io { .. } => Self::Internal(e.to_string()),
            e @ SurveyError::BankMismatch => Self::Config(e.to_string()),
            e => Self::Data(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn taxonomy(path: Option<&Path>) -> Result<EmotionTaxonomy> {
    match path {
        Some(p) => Ok(EmotionTaxonomy::load(p)?),
        None => Ok(EmotionTaxonomy::goemotions()),
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(
        path,
        &(serde_json::to_string_pretty(value).expect("serializable") + "\n"),
    )
}

/// Parse `name=value` pairs.
pub(crate) fn parse_named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit(a) => audit::run(a),
        Command::TrainEval(a) => train_eval::run(a),
        Command::Stats(a) => stats::run(a),
        Command::Survey(a) => survey::run(a),
    }
}
