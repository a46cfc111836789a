use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::features::FeatureExtractor;
use super::metrics::Metrics;
use super::model::LinearModel;
use super::train::decide;
use super::{ClassifierError, Result};
use crate::dataset::{EmotionTaxonomy, ResolvedMapping, Sample, SentimentMapping};

/// How source-label probabilities combine into a target-label score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Self::Max),
            "sum" => Ok(Self::Sum),
            other => Err(format!("unknown aggregation {other:?} (expected max or sum)")),
        }
    }
}

fn check(model: &LinearModel, mapping: &ResolvedMapping) -> Result<()> {
    if model.taxonomy != mapping.source_name() || model.num_classes() != mapping.source_len() {
        return Err(ClassifierError::TaxonomyMismatch {
            model: model.taxonomy.clone(),
            mapping: mapping.source_name().to_string(),
        });
    }
    Ok(())
}

/// Predicted target sets (indices into `mapping.extended()`). Never empty.
pub fn zero_shot_predict(
    model: &LinearModel,
    extractor: &FeatureExtractor,
    samples: &[Sample],
    mapping: &ResolvedMapping,
    threshold: f64,
    aggregation: Aggregation,
) -> Result<Vec<BTreeSet<usize>>> {
    check(model, mapping)?;
    model.check_fingerprint(&extractor.fingerprint())?;
    samples
        .iter()
        .map(|s| {
            let probs = model.probabilities(&extractor.featurize(&s.id, &s.text)?);
            let scores: Vec<f64> = mapping
                .members()
                .iter()
                .map(|members| {
                    let it = members.iter().map(|&m| probs[m]);
                    match aggregation {
                        Aggregation::Max => it.fold(0.0, f64::max),
                        Aggregation::Sum => it.sum(),
                    }
                })
                .collect();
            Ok(decide(&scores, threshold))
        })
        .collect()
}

/// Macro-F1 over the target's real classes. An absorbing others bucket can
/// be predicted but is not scored.
pub fn zero_shot_eval(
    model: &LinearModel,
    extractor: &FeatureExtractor,
    samples: &[Sample],
    mapping: &ResolvedMapping,
    threshold: f64,
    aggregation: Aggregation,
) -> Result<Metrics> {
    let pred = zero_shot_predict(model, extractor, samples, mapping, threshold, aggregation)?;
    let gold: Vec<_> = samples.iter().map(|s| s.labels.clone()).collect();
    Ok(Metrics::compute(&gold, &pred, mapping.target().labels()))
}

/// Zero-shot evaluation on positive/negative/neutral samples.
pub fn sentiment_eval(
    model: &LinearModel,
    extractor: &FeatureExtractor,
    samples: &[Sample],
    sentiment: &SentimentMapping,
    source: &EmotionTaxonomy,
    threshold: f64,
    aggregation: Aggregation,
) -> Result<Metrics> {
    let mapping = sentiment.to_label_mapping(source)?.resolve(source)?;
    zero_shot_eval(model, extractor, samples, &mapping, threshold, aggregation)
}
