//! Dataset curation: context evaluation, CP/CA partitioning, subsampling,
//! context generation and the RS/CA/CAM/RSM/MM variants, written as a run
//! directory with a manifest.

mod curate;
mod report;
mod run;

pub use curate::{
    build_ca, build_cam, build_mm, build_rs, build_rsm, classify_context, train_pool, Exclusion, Modified, Partition,
    Unresolved,
};
pub use report::{AuditReport, CacheSummary};
pub use run::{run_audit, variant_paths, AuditConfig, FileEntry, RunManifest, RunSeeds, RunStatus};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetError;
use crate::llm::LlmError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationPolicy {
    /// Regenerate once, bypassing the cache; exclude if it fails again.
    #[default]
    RetryOnceThenExclude,
    Exclude,
    /// Append anyway and list the sample as flagged.
    KeepFlagged,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportPolicy {
    #[default]
    Halt,
    SkipAndLog,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailurePolicy {
    pub on_validation_fail: ValidationPolicy,
    pub on_transport_fail: TransportPolicy,
}

impl std::str::FromStr for ValidationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "retry_once_then_exclude" => Ok(Self::RetryOnceThenExclude),
            "exclude" => Ok(Self::Exclude),
            "keep_flagged" => Ok(Self::KeepFlagged),
            other => Err(format!("unknown validation policy {other:?}")),
        }
    }
}

impl std::str::FromStr for TransportPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "halt" => Ok(Self::Halt),
            "skip_and_log" => Ok(Self::SkipAndLog),
            other => Err(format!("unknown transport policy {other:?}")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("sample {sample_id:?}: {source}")]
    Llm {
        sample_id: String,
        #[source]
        source: LlmError,
    },
    #[error("no context verdict for sample {0:?}")]
    MissingVerdict(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

impl PipelineError {
    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Llm { source, .. } if source.is_transport())
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
