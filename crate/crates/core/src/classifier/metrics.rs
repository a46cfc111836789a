use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_class: IndexMap<String, ClassMetrics>,
    pub macro_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl Metrics {
    /// Per-class precision/recall/F1 over `classes`. Label indices outside
    /// `0..classes.len()` (an absorbing others bucket) are ignored. Undefined
    /// ratios count as 0.
    pub fn compute(gold: &[BTreeSet<usize>], pred: &[BTreeSet<usize>], classes: &[String]) -> Self {
        assert_eq!(gold.len(), pred.len());
        let c = classes.len();
        let (mut tp, mut fp, mut fn_) = (vec![0usize; c], vec![0usize; c], vec![0usize; c]);
        for (g, p) in gold.iter().zip(pred) {
            for k in 0..c {
                match (g.contains(&k), p.contains(&k)) {
                    (true, true) => tp[k] += 1,
                    (false, true) => fp[k] += 1,
                    (true, false) => fn_[k] += 1,
                    (false, false) => {}
                }
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let per_class: IndexMap<String, ClassMetrics> = classes
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let m = ClassMetrics {
                    precision: ratio(tp[k], tp[k] + fp[k]),
                    recall: ratio(tp[k], tp[k] + fn_[k]),
                    f1: ratio(2 * tp[k], 2 * tp[k] + fp[k] + fn_[k]),
                    support: tp[k] + fn_[k],
                };
                (name.clone(), m)
            })
            .collect();
        let macro_f1 = if c == 0 {
            0.0
        } else {
            per_class.values().map(|m| m.f1).sum::<f64>() / c as f64
        };
        Self {
            per_class,
            macro_f1,
            fold_scores: None,
            mean: None,
            std: None,
        }
    }

    pub fn with_folds(mut self, scores: Vec<f64>) -> Self {
        let (mean, std) = fold_summary(&scores);
        self.mean = Some(mean);
        self.std = Some(std);
        self.fold_scores = Some(scores);
        self
    }
}

/// Mean and population standard deviation.
pub fn fold_summary(scores: &[f64]) -> (f64, f64) {
    if scores.is_empty() {
        return (0.0, 0.0);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
