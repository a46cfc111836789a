use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::SparseVector;
use super::loss::sigmoid;
use super::{ClassifierError, Result};

const FORMAT: &str = "emoaudit.linear-model";
const VERSION: u32 = 1;

/// Linear head: `logits = x·W + b` with `W` stored row-major, one row per
/// feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    format: String,
    version: u32,
    pub dim: usize,
    pub taxonomy: String,
    pub classes: Vec<String>,
    pub extractor_fingerprint: String,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(dim: usize, taxonomy: &str, classes: Vec<String>, fingerprint: &str) -> Self {
        let c = classes.len();
        Self {
            format: FORMAT.into(),
            version: VERSION,
            dim,
            taxonomy: taxonomy.into(),
            classes,
            extractor_fingerprint: fingerprint.into(),
            weights: vec![0.0; dim * c],
            bias: vec![0.0; c],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn logits(&self, x: &SparseVector) -> Vec<f64> {
        let c = self.num_classes();
        let mut z = self.bias.clone();
        for (d, v) in x.iter() {
            let row = &self.weights[d * c..(d + 1) * c];
            for (zk, w) in z.iter_mut().zip(row) {
                *zk += v * w;
            }
        }
        z
    }

    pub fn probabilities(&self, x: &SparseVector) -> Vec<f64> {
        self.logits(x).into_iter().map(sigmoid).collect()
    }

    pub fn check_fingerprint(&self, fingerprint: &str) -> Result<()> {
        if self.extractor_fingerprint != fingerprint {
            return Err(ClassifierError::FingerprintMismatch {
                expected: self.extractor_fingerprint.clone(),
                actual: fingerprint.to_string(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).expect("model serializes");
        std::fs::write(path, json).map_err(|e| ClassifierError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let err = |message: String| ClassifierError::File {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if model.format != FORMAT || model.version != VERSION {
            return Err(err(format!(
                "unsupported model format {} v{}",
                model.format, model.version
            )));
        }
        let c = model.classes.len();
        if model.weights.len() != model.dim * c || model.bias.len() != c {
            return Err(err("weight shape does not match dims".into()));
        }
        if model.weights.iter().chain(&model.bias).any(|w| !w.is_finite()) {
            return Err(err("non-finite weight".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logits_and_round_trip() {
        let mut m = LinearModel::zeros(3, "t", vec!["a".into(), "b".into()], "fp");
        m.weights = vec![1.0, 0.0, 0.0, 2.0, 0.5, 0.5];
        m.bias = vec![0.1, -0.1];
        let x = SparseVector {
            indices: vec![0, 2],
            values: vec![1.0, 2.0],
        };
        assert_eq!(m.logits(&x), vec![1.0 + 1.0 + 0.1, 0.0 + 1.0 - 0.1]);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(LinearModel::load(&p).unwrap(), m);
        assert!(m.check_fingerprint("other").is_err());
    }
}
