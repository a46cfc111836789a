use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::adamw::{adamw_step, AdamWConfig, AdamWState};
use super::features::{FeatureExtractor, SparseVector};
use super::loss::bce_loss;
use super::model::LinearModel;
use super::{ClassifierError, Result};
use crate::dataset::{EmotionTaxonomy, Sample};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let a = AdamWConfig::default();
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: a.learning_rate,
            weight_decay: a.weight_decay,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
            seed: 0,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ClassifierError::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        for b in [self.beta1, self.beta2] {
            if !(b > 0.0 && b < 1.0) {
                return bad("betas must lie in (0, 1)");
            }
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: LinearModel,
    /// Mean training loss over the full set: index 0 is the initialization,
    /// index `e` is after epoch `e`.
    pub losses: Vec<f64>,
}

fn targets(labels: &BTreeSet<usize>, c: usize) -> Vec<f64> {
    (0..c).map(|k| if labels.contains(&k) { 1.0 } else { 0.0 }).collect()
}

fn mean_loss(model: &LinearModel, xs: &[SparseVector], ys: &[Vec<f64>]) -> f64 {
    let total: f64 = xs.iter().zip(ys).map(|(x, y)| bce_loss(&model.logits(x), y)).sum();
    total / xs.len() as f64
}

/// Mini-batch AdamW on mean BCE. Samples are put in id order first, so the
/// result does not depend on input order.
pub fn train(
    samples: &[Sample],
    taxonomy: &EmotionTaxonomy,
    extractor: &FeatureExtractor,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    if samples.is_empty() {
        return Err(ClassifierError::TooFewSamples { k: 1, n: 0 });
    }
    let mut ordered: Vec<&Sample> = samples.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let c = taxonomy.len();
    let dim = extractor.dim();
    let xs = ordered
        .iter()
        .map(|s| extractor.featurize(&s.id, &s.text))
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<Vec<f64>> = ordered.iter().map(|s| targets(&s.labels, c)).collect();

    let mut model = LinearModel::zeros(
        dim,
        taxonomy.name(),
        taxonomy.labels().to_vec(),
        &extractor.fingerprint(),
    );
    let mut w_state = AdamWState::new(dim * c);
    let mut b_state = AdamWState::new(c);
    let opt = config.optimizer();
    let mut rng = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut grad_w = vec![0.0; dim * c];
    let mut grad_b = vec![0.0; c];
    let mut losses = vec![mean_loss(&model, &xs, &ys)];

    for _ in 0..config.epochs {
        rng::shuffle(&mut rng, &mut order);
        for batch in order.chunks(config.batch_size) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / (batch.len() * c) as f64;
            for &i in batch {
                let probs = model.probabilities(&xs[i]);
                let delta: Vec<f64> = probs.iter().zip(&ys[i]).map(|(p, t)| (p - t) * scale).collect();
                for (d, v) in xs[i].iter() {
                    for (g, dk) in grad_w[d * c..(d + 1) * c].iter_mut().zip(&delta) {
                        *g += v * dk;
                    }
                }
                for (g, dk) in grad_b.iter_mut().zip(&delta) {
                    *g += dk;
                }
            }
            adamw_step(&mut model.weights, &grad_w, &mut w_state, &opt, "weights")?;
            adamw_step(&mut model.bias, &grad_b, &mut b_state, &opt, "bias")?;
        }
        losses.push(mean_loss(&model, &xs, &ys));
    }
    Ok(TrainedModel { model, losses })
}

/// Labels with probability strictly above `threshold`; when none qualify, the
/// single most probable label (lowest index on ties).
pub fn decide(probabilities: &[f64], threshold: f64) -> BTreeSet<usize> {
    let above: BTreeSet<usize> = probabilities
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(i, _)| i)
        .collect();
    if !above.is_empty() || probabilities.is_empty() {
        return above;
    }
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    BTreeSet::from([best])
}

pub fn predict(
    model: &LinearModel,
    extractor: &FeatureExtractor,
    id: &str,
    text: &str,
    threshold: f64,
) -> Result<BTreeSet<usize>> {
    model.check_fingerprint(&extractor.fingerprint())?;
    let x = extractor.featurize(id, text)?;
    Ok(decide(&model.probabilities(&x), threshold))
}
