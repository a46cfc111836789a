use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::features::FeatureExtractor;
use super::metrics::Metrics;
use super::train::{decide, train, TrainConfig};
use super::zeroshot::{zero_shot_predict, Aggregation};
use super::{ClassifierError, Result};
use crate::dataset::{EmotionTaxonomy, ResolvedMapping, Sample};
use crate::llm::map_bounded;
use crate::rng::keyed_hash;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    /// Deal folds separately within each primary-label group.
    pub stratify: bool,
    /// Keep samples with the same normalized text in one fold.
    pub group_duplicates: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 5,
            stratify: false,
            group_duplicates: false,
        }
    }
}

/// An external dataset evaluated zero-shot with every fold model.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub name: String,
    /// Labels index into `mapping.extended()`.
    pub samples: Vec<Sample>,
    pub mapping: ResolvedMapping,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub config: TrainConfig,
    pub options: CvOptions,
    pub extractor: serde_json::Value,
    pub taxonomy: String,
    pub in_domain: Metrics,
    #[serde(default)]
    pub external: IndexMap<String, Metrics>,
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Fold index for every sample (input order). Assignment depends only on
/// the seed and the sample ids/texts, never on input order: units are
/// ordered by a keyed hash and dealt round-robin.
pub fn fold_assignment(samples: &[Sample], seed: u64, options: &CvOptions) -> Result<Vec<usize>> {
    let k = options.k;
    if k < 2 || k > samples.len() {
        return Err(ClassifierError::TooFewSamples { k, n: samples.len() });
    }
    // unit key -> member indices
    let mut units: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key = if options.group_duplicates {
            normalize(&s.text)
        } else {
            s.id.clone()
        };
        units.entry(key).or_default().push(i);
    }
    let mut keyed: Vec<(usize, u64, &String, &Vec<usize>)> = units
        .iter()
        .map(|(key, members)| {
            let stratum = if options.stratify {
                members
                    .iter()
                    .filter_map(|&i| samples[i].labels.iter().next().copied())
                    .min()
                    .unwrap_or(usize::MAX)
            } else {
                0
            };
            (stratum, keyed_hash(seed, key), key, members)
        })
        .collect();
    keyed.sort();
    let mut folds = vec![0; samples.len()];
    for (n, (_, _, _, members)) in keyed.iter().enumerate() {
        for &i in members.iter() {
            folds[i] = n % k;
        }
    }
    Ok(folds)
}

pub fn cross_validate(
    samples: &[Sample],
    taxonomy: &EmotionTaxonomy,
    extractor: &FeatureExtractor,
    config: &TrainConfig,
    options: &CvOptions,
) -> Result<CvReport> {
    cross_validate_with_evals(samples, taxonomy, extractor, config, options, &[])
}

struct FoldOutcome {
    held_out: Vec<usize>,
    predictions: Vec<BTreeSet<usize>>,
    external: Vec<Vec<BTreeSet<usize>>>,
}

/// k-fold CV: train on k-1 folds, score macro-F1 on the held-out fold.
/// `in_domain.per_class` pools the out-of-fold predictions. Each eval set is
/// scored zero-shot by every fold model.
pub fn cross_validate_with_evals(
    samples: &[Sample],
    taxonomy: &EmotionTaxonomy,
    extractor: &FeatureExtractor,
    config: &TrainConfig,
    options: &CvOptions,
    evals: &[EvalSet],
) -> Result<CvReport> {
    config.validate()?;
    let folds = fold_assignment(samples, config.seed, options)?;
    let fold_ids: Vec<usize> = (0..options.k).collect();
    let width = std::thread::available_parallelism().map_or(1, |n| n.get());

    let outcomes = map_bounded(&fold_ids, width, |&f| -> Result<FoldOutcome> {
        let train_set: Vec<Sample> = samples
            .iter()
            .zip(&folds)
            .filter(|(_, &g)| g != f)
            .map(|(s, _)| s.clone())
            .collect();
        let held_out: Vec<usize> = (0..samples.len()).filter(|&i| folds[i] == f).collect();
        let model = train(&train_set, taxonomy, extractor, config)?.model;
        let predictions = held_out
            .iter()
            .map(|&i| {
                let x = extractor.featurize(&samples[i].id, &samples[i].text)?;
                Ok(decide(&model.probabilities(&x), config.threshold))
            })
            .collect::<Result<Vec<_>>>()?;
        let external = evals
            .iter()
            .map(|e| {
                zero_shot_predict(
                    &model,
                    extractor,
                    &e.samples,
                    &e.mapping,
                    config.threshold,
                    e.aggregation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FoldOutcome {
            held_out,
            predictions,
            external,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let classes = taxonomy.labels();
    let mut fold_scores = Vec::with_capacity(options.k);
    let mut pooled_gold = vec![BTreeSet::new(); samples.len()];
    let mut pooled_pred = vec![BTreeSet::new(); samples.len()];
    for o in &outcomes {
        let gold: Vec<_> = o.held_out.iter().map(|&i| samples[i].labels.clone()).collect();
        fold_scores.push(Metrics::compute(&gold, &o.predictions, classes).macro_f1);
        for (&i, p) in o.held_out.iter().zip(&o.predictions) {
            pooled_gold[i] = samples[i].labels.clone();
            pooled_pred[i] = p.clone();
        }
    }
    let in_domain = Metrics::compute(&pooled_gold, &pooled_pred, classes).with_folds(fold_scores);

    let mut external = IndexMap::new();
    for (e_idx, e) in evals.iter().enumerate() {
        let real = e.mapping.target().labels();
        let gold: Vec<_> = e.samples.iter().map(|s| s.labels.clone()).collect();
        let mut scores = Vec::new();
        let (mut all_gold, mut all_pred) = (Vec::new(), Vec::new());
        for o in &outcomes {
            let pred = &o.external[e_idx];
            scores.push(Metrics::compute(&gold, pred, real).macro_f1);
            all_gold.extend(gold.iter().cloned());
            all_pred.extend(pred.iter().cloned());
        }
        external.insert(
            e.name.clone(),
            Metrics::compute(&all_gold, &all_pred, real).with_folds(scores),
        );
    }

    Ok(CvReport {
        config: *config,
        options: *options,
        extractor: extractor.describe(),
        taxonomy: taxonomy.name().to_string(),
        in_domain,
        external,
    })
}
