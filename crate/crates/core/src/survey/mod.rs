//! Between-subjects Likert survey over CA/CAM items: item bank, batch
//! assignment with coverage balancing, an append-only event log, and the
//! HTTP service.

mod bank;
mod http;
mod store;

pub use bank::{create_survey, ItemBank, SurveyItem};
pub use http::{router, serve, ADMIN_TOKEN_ENV};
pub use store::{audit_log, Assignment, Event, ResponseStatus, Survey, SurveyConfig};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SurveyError {
    #[error("item bank is empty: no sample carries a survey emotion")]
    EmptyBank,
    #[error("only {available} eligible items left, a batch needs {needed}")]
    InsufficientItems { available: usize, needed: usize },
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
    #[error("participant reached the limit of {0} batches")]
    BatchLimit(usize),
    #[error("item {0:?} is not assigned to this participant")]
    NotAssigned(String),
    #[error("rating {0} outside 1..5")]
    RatingRange(i64),
    #[error("item {item_id:?} already rated {existing}")]
    Conflict { item_id: String, existing: u8 },
    #[error("survey directory holds a different item bank; use a fresh directory")]
    BankMismatch,
    #[error("{path}: {message}")]
    Log { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = SurveyError> = std::result::Result<T, E>;
