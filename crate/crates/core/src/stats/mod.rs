//! Rating statistics: descriptives, tie-corrected Kruskal-Wallis with η²,
//! Dunn post-hoc comparisons with Benjamini-Hochberg adjustment, and word
//! frequencies of original versus appended text.

mod descriptive;
mod nonparametric;
mod ratings;
pub mod special;
mod subjective;
mod words;

pub use descriptive::{descriptive, rank_with_ties, Descriptive, Ranking};
pub use nonparametric::{benjamini_hochberg, dunn_test, eta_squared, kruskal_wallis, PairwiseResult, TestResult};
pub use ratings::{
    load_ratings, parse_ratings_csv, parse_ratings_jsonl, write_ratings_csv, write_ratings_jsonl, RatingRecord,
    RatingVariant,
};
pub use subjective::{
    subjective_analysis, GroupSpec, GroupSummary, PairFamily, PairReport, SubjectiveReport, DEFAULT_EMOTIONS,
};
pub use words::{tokenize, word_frequency_analysis, Segment, Stopwords, WordFrequency};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("participant {participant_id:?} rated item {item_id:?} twice")]
    DuplicateRating { participant_id: String, item_id: String },
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} has no observations")]
    EmptyGroup(usize),
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("rating for ({emotion}, {variant}) is not in the group spec")]
    UnknownGroup { emotion: String, variant: String },
    #[error("no tokens for emotion {emotion:?} in the requested segment")]
    EmptyCorpus { emotion: String },
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;
