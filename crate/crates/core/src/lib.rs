//! Toolkit for auditing text emotion-classification datasets.
//!
//! The crate is organised by workflow stage:
//!
//! * [`dataset`]: taxonomies, samples, label and sentiment mappings, JSONL I/O
//!   and seeded sampling.
//! * [`llm`]: prompt templates, chat-completion backends (remote HTTP and a
//!   deterministic mock), response parsing, context validation and the
//!   append-only response cache.
//! * [`pipeline`]: curation of the RS / CP / CA / CAM / RSM / MM dataset
//!   variants with a run manifest.
//! * [`classifier`]: hashed n-gram features, a multi-label linear model trained
//!   with BCE + AdamW, cross-validation and zero-shot evaluation.
//! * [`stats`]: rating descriptives, Kruskal-Wallis, Dunn, Benjamini-Hochberg
//!   and word-frequency analysis.
//! * [`survey`]: the between-subjects Likert survey service.
//! * [`synthetic`]: seeded synthetic corpora used by examples and tests.
//! * [`cli`]: the `emoaudit` command line.

pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod llm;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod survey;
pub mod synthetic;

pub use dataset::{EmotionTaxonomy, Sample, Split, Variant};
