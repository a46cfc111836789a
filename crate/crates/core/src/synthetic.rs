//! Synthetic data for demos and end-to-end checks: a corpus whose base text
//! says nothing about its labels, an external evaluation set built from the
//! mock phrase bank, and Likert ratings with a controllable CAM shift.

use std::collections::BTreeSet;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{train, zero_shot_eval, Aggregation, FeatureExtractor, TrainConfig};
use crate::dataset::{LabelMapping, ResolvedMapping, Sample, Split};
use crate::llm::{ContextAuditor, GenerativeParams, MockBackend, ResponseCache, Scenario};
use crate::pipeline::{build_ca, build_cam, classify_context, FailurePolicy};
use crate::rng;
use crate::stats::{GroupSpec, RatingRecord, RatingVariant};
use crate::EmotionTaxonomy;

const FILLER: &[&str] = &[
    "the", "a", "train", "window", "table", "morning", "paper", "street", "blue", "green", "box", "chair", "coffee",
    "left", "right", "number", "week", "river", "bus", "phone", "note", "page", "corner", "door", "yard", "lamp",
    "shirt", "bottle", "garden", "road", "cloud", "pencil", "folder", "wall", "floor", "desk", "cup", "bag", "ticket",
    "station", "card", "screen", "cable", "shelf", "stone", "bridge", "field", "market", "tuesday", "second", "third",
    "small", "large", "round", "square", "old", "new", "near", "across", "under", "after",
];

/// `len` filler words, capitalized and closed with a period.
fn filler(rng: &mut rng::SeededRng, len: usize) -> String {
    let words: Vec<&str> = (0..len).map(|_| FILLER[rng.gen_range(0..FILLER.len())]).collect();
    let mut text = words.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text.push('.');
    text
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n: usize,
    pub seed: u64,
    /// Chance that a sample gets a second label.
    pub multi_label_rate: f64,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 0,
            multi_label_rate: 0.1,
            min_words: 6,
            max_words: 14,
        }
    }
}

/// Train-split samples with uniform labels and label-independent filler text.
pub fn synthetic_corpus(taxonomy: &EmotionTaxonomy, config: &CorpusConfig) -> Vec<Sample> {
    let mut r = rng::seeded(config.seed);
    (0..config.n)
        .map(|i| {
            let mut labels = BTreeSet::from([r.gen_range(0..taxonomy.len())]);
            if r.gen_bool(config.multi_label_rate) {
                labels.insert(r.gen_range(0..taxonomy.len()));
            }
            let len = r.gen_range(config.min_words..=config.max_words.max(config.min_words));
            let text = filler(&mut r, len);
            Sample::new(format!("syn{:x}-{i:05}", config.seed), text, labels, Split::Train)
        })
        .collect()
}

/// The bundled 200-sample toy set (see `data/toy200.jsonl`).
pub fn toy_dataset() -> Vec<Sample> {
    let mut samples = synthetic_corpus(
        &EmotionTaxonomy::goemotions(),
        &CorpusConfig {
            n: 200,
            seed: 200,
            ..CorpusConfig::default()
        },
    );
    for (i, s) in samples.iter_mut().enumerate() {
        s.id = format!("toy-{i:03}");
        if i % 10 == 9 {
            s.split = Split::Test;
        }
    }
    samples
}

/// Test-split samples for each real class of `mapping`'s target. Each text
/// is filler followed by a phrase of a source label that maps to the class.
pub fn phrase_eval_set(
    mapping: &ResolvedMapping,
    source: &EmotionTaxonomy,
    phrases: &IndexMap<String, Vec<String>>,
    per_class: usize,
    seed: u64,
) -> Vec<Sample> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::new();
    for class in 0..mapping.target().len() {
        let banks: Vec<&Vec<String>> = mapping.members()[class]
            .iter()
            .filter_map(|&m| phrases.get(source.label(m)))
            .filter(|b| !b.is_empty())
            .collect();
        if banks.is_empty() {
            continue;
        }
        for i in 0..per_class {
            let bank = banks[i % banks.len()];
            let phrase = &bank[r.gen_range(0..bank.len())];
            let len = r.gen_range(4..=10);
            let text = format!("{} {phrase}", filler(&mut r, len));
            out.push(Sample::new(
                format!("{}-{}-{i:03}", mapping.target().name(), mapping.target().label(class)),
                text,
                [class],
                Split::Test,
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficacyConfig {
    pub corpus_size: usize,
    pub ca_size: usize,
    pub eval_yes_rate: f64,
    pub eval_per_class: usize,
    pub mapping: String,
    pub train: TrainConfig,
}

impl Default for EfficacyConfig {
    fn default() -> Self {
        Self {
            corpus_size: 1000,
            ca_size: 500,
            eval_yes_rate: 0.3,
            eval_per_class: 40,
            mapping: "dailydialog".into(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficacyOutcome {
    pub seed: u64,
    pub ca_size: usize,
    pub cam_size: usize,
    pub ca_macro_f1: f64,
    pub cam_macro_f1: f64,
}

impl EfficacyOutcome {
    pub fn gain(&self) -> f64 {
        self.cam_macro_f1 - self.ca_macro_f1
    }
}

/// Curate CA and CAM from a synthetic corpus with the generative mock, train
/// one model on each, and score both zero-shot on a phrase-built external set.
pub fn efficacy_experiment(seed: u64, config: &EfficacyConfig) -> crate::pipeline::Result<EfficacyOutcome> {
    let tax = EmotionTaxonomy::goemotions();
    let corpus = synthetic_corpus(
        &tax,
        &CorpusConfig {
            n: config.corpus_size,
            seed,
            ..CorpusConfig::default()
        },
    );
    let backend = MockBackend::new(Scenario::generative(
        "synthetic",
        GenerativeParams {
            seed,
            eval_yes_rate: config.eval_yes_rate,
            ..GenerativeParams::default()
        },
    ));
    let auditor = ContextAuditor::new(
        Arc::new(backend),
        Arc::new(ResponseCache::in_memory()),
        tax.clone(),
        "mock",
    );
    let policy = FailurePolicy::default();
    let width = std::thread::available_parallelism().map_or(1, |n| n.get());
    let partition = classify_context(&corpus, &auditor, &policy, width)?;
    let ca = build_ca(
        &partition.ca_pool,
        config.ca_size.min(partition.ca_pool.len()),
        seed ^ 0xca,
    )?;
    let cam = build_cam(&ca, &auditor, &policy, width)?.samples;

    let mapping = LabelMapping::bundled(&config.mapping)
        .ok_or_else(|| crate::pipeline::PipelineError::Config(format!("no bundled mapping {:?}", config.mapping)))?
        .resolve(&tax)?;
    let eval = phrase_eval_set(
        &mapping,
        &tax,
        &MockBackend::bundled_phrases(),
        config.eval_per_class,
        seed ^ 0xe7a1,
    );
    let fx = FeatureExtractor::default();
    let train_config = TrainConfig { seed, ..config.train };
    let score = |samples: &[Sample]| -> crate::pipeline::Result<f64> {
        let model = train(samples, &tax, &fx, &train_config)
            .map_err(|e| crate::pipeline::PipelineError::Config(e.to_string()))?
            .model;
        let m = zero_shot_eval(&model, &fx, &eval, &mapping, train_config.threshold, Aggregation::Max)
            .map_err(|e| crate::pipeline::PipelineError::Config(e.to_string()))?;
        Ok(m.macro_f1)
    };
    Ok(EfficacyOutcome {
        seed,
        ca_size: ca.len(),
        cam_size: cam.len(),
        ca_macro_f1: score(&ca)?,
        cam_macro_f1: score(&cam)?,
    })
}

/// Base rating distribution over 1..=5 for simulated raters.
const BASE_RATING_WEIGHTS: [f64; 5] = [0.15, 0.25, 0.3, 0.2, 0.1];

fn draw_rating(r: &mut rng::SeededRng) -> u8 {
    let u: f64 = r.gen();
    let mut acc = 0.0;
    for (i, w) in BASE_RATING_WEIGHTS.iter().enumerate() {
        acc += w;
        if u < acc {
            return i as u8 + 1;
        }
    }
    5
}

/// `n_per_group` ratings for every group of `spec`. CA and CAM share a base
/// distribution; CAM ratings are then raised by `cam_shift` points (capped
/// at 5). One rating per simulated participant.
pub fn synthetic_ratings(spec: &GroupSpec, n_per_group: usize, cam_shift: u8, seed: u64) -> Vec<RatingRecord> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(spec.groups.len() * n_per_group);
    for (g, (emotion, variant)) in spec.groups.iter().enumerate() {
        for i in 0..n_per_group {
            let mut rating = draw_rating(&mut r);
            if *variant == RatingVariant::Cam {
                rating = (rating + cam_shift).min(5);
            }
            out.push(RatingRecord {
                participant_id: format!("sim-{g:02}-{i:04}"),
                item_id: format!("sim-{emotion}-{i:04}#{emotion}"),
                variant: *variant,
                emotion: emotion.clone(),
                rating,
                timestamp: "2024-01-01T00:00:00Z".into(),
            });
        }
    }
    out
}
