//! Canonical data model: taxonomies, samples, label mappings and JSONL I/O.

mod io;
mod mapping;
mod sample;
mod taxonomy;

pub use io::{load_dataset, load_dataset_with, parse_dataset, save_dataset, write_dataset, LoadMode};
pub use mapping::{
    map_labels, map_sentiment, LabelMapping, MappingFile, ResolvedMapping, Sentiment, SentimentMapping,
    BUNDLED_MAPPINGS,
};
pub use sample::{sample_random, AuditProvenance, Sample, Split, Variant};
pub use taxonomy::EmotionTaxonomy;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown label {label:?} for taxonomy {taxonomy}")]
    UnknownLabel {
        line: usize,
        label: String,
        taxonomy: String,
    },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: invalid sample: {message}")]
    InvalidSample { line: usize, message: String },
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("requested {requested} samples but only {available} available")]
    InsufficientSamples { requested: usize, available: usize },
    #[error("sample {id:?} has no labels after mapping and the mapping has no others label")]
    EmptyMapping { id: String },
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;
