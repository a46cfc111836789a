//! Multi-label linear classifier over pluggable text features: BCE loss,
//! AdamW, k-fold cross-validation, macro-F1 and zero-shot evaluation through
//! label mappings.

mod adamw;
mod cv;
mod features;
mod loss;
mod metrics;
mod model;
mod train;
mod zeroshot;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use cv::{cross_validate, cross_validate_with_evals, fold_assignment, CvOptions, CvReport, EvalSet};
pub use features::{ExternalEmbeddings, FeatureExtractor, HashedNgrams, SparseVector};
pub use loss::{bce_gradient, bce_loss, sigmoid};
pub use metrics::{fold_summary, ClassMetrics, Metrics};
pub use model::LinearModel;
pub use train::{decide, predict, train, TrainConfig, TrainedModel};
pub use zeroshot::{sentiment_eval, zero_shot_eval, zero_shot_predict, Aggregation};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("non-finite gradient in parameter block {block:?}")]
    NonFiniteGradient { block: String },
    #[error("shape mismatch in {block:?}: {expected} vs {actual}")]
    Shape {
        block: String,
        expected: usize,
        actual: usize,
    },
    #[error("extractor fingerprint {actual} does not match model ({expected})")]
    FingerprintMismatch { expected: String, actual: String },
    #[error("no external embedding for sample {id:?}")]
    MissingEmbedding { id: String },
    #[error("taxonomy mismatch: model is {model:?}, mapping expects {mapping:?}")]
    TaxonomyMismatch { model: String, mapping: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot make {k} folds from {n} samples")]
    TooFewSamples { k: usize, n: usize },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

pub type Result<T, E = ClassifierError> = std::result::Result<T, E>;
