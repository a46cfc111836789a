use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ClassifierError, Result};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_map(map: BTreeMap<u32, f64>) -> Self {
        let (indices, values) = map.into_iter().filter(|(_, v)| *v != 0.0).unzip();
        Self { indices, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, index: u32) -> f64 {
        self.indices
            .binary_search(&index)
            .map(|p| self.values[p])
            .unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Reference extractor: hashed bag of word n-grams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedNgrams {
    pub dim: usize,
    pub ngram_orders: Vec<usize>,
    pub hash_seed: u64,
    pub lowercase: bool,
}

impl Default for HashedNgrams {
    fn default() -> Self {
        Self {
            dim: 1 << 13,
            ngram_orders: vec![1, 2],
            hash_seed: 0,
            lowercase: true,
        }
    }
}

impl HashedNgrams {
    fn tokens(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .map(|t| t.trim_matches('\''))
            .filter(|t| !t.is_empty())
            .map(|t| {
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                }
            })
            .collect()
    }

    // FNV-1a over the seed and the gram, so buckets are stable across
    // platforms and releases.
    fn bucket(&self, order: usize, gram: &[String]) -> u32 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&self.hash_seed.to_le_bytes());
        eat(&(order as u64).to_le_bytes());
        for (i, tok) in gram.iter().enumerate() {
            if i > 0 {
                eat(&[0x1f]);
            }
            eat(tok.as_bytes());
        }
        (h % self.dim as u64) as u32
    }

    /// Bucket counts before normalization.
    pub fn counts(&self, text: &str) -> BTreeMap<u32, f64> {
        let tokens = self.tokens(text);
        let mut counts = BTreeMap::new();
        for &n in &self.ngram_orders {
            if n == 0 || tokens.len() < n {
                continue;
            }
            for gram in tokens.windows(n) {
                *counts.entry(self.bucket(n, gram)).or_insert(0.0) += 1.0;
            }
        }
        counts
    }

    pub fn featurize(&self, text: &str) -> SparseVector {
        let counts = self.counts(text);
        let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return SparseVector::default();
        }
        SparseVector::from_map(counts.into_iter().map(|(k, v)| (k, v / norm)).collect())
    }
}

#[derive(Deserialize)]
struct EmbeddingLine {
    id: String,
    vec: Vec<f64>,
}

/// Per-sample vectors precomputed by some external encoder, keyed by id.
#[derive(Debug, Clone)]
pub struct ExternalEmbeddings {
    path: PathBuf,
    dim: usize,
    digest: String,
    vectors: HashMap<String, SparseVector>,
}

impl ExternalEmbeddings {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| ClassifierError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let err = |line: usize, message: String| ClassifierError::File {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut hasher = Sha256::new();
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| err(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
            let rec: EmbeddingLine = serde_json::from_str(&line).map_err(|e| err(i + 1, e.to_string()))?;
            if *dim.get_or_insert(rec.vec.len()) != rec.vec.len() {
                return Err(err(
                    i + 1,
                    format!("expected {} dims, got {}", dim.unwrap(), rec.vec.len()),
                ));
            }
            if rec.vec.iter().any(|v| !v.is_finite()) {
                return Err(err(i + 1, "non-finite value".into()));
            }
            let map = rec.vec.iter().enumerate().map(|(j, &v)| (j as u32, v)).collect();
            vectors.insert(rec.id, SparseVector::from_map(map));
        }
        let dim = dim.filter(|&d| d > 0).ok_or_else(|| err(0, "no vectors".into()))?;
        Ok(Self {
            path: path.to_path_buf(),
            dim,
            digest: hex::encode(hasher.finalize()),
            vectors,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum FeatureExtractor {
    HashedNgrams(HashedNgrams),
    ExternalEmbeddings(ExternalEmbeddings),
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::HashedNgrams(HashedNgrams::default())
    }
}

impl FeatureExtractor {
    pub fn hashed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ClassifierError::Config("feature dim must be at least 1".into()));
        }
        Ok(Self::HashedNgrams(HashedNgrams {
            dim,
            ..HashedNgrams::default()
        }))
    }

    pub fn external(path: &Path) -> Result<Self> {
        ExternalEmbeddings::load(path).map(Self::ExternalEmbeddings)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HashedNgrams(h) => h.dim,
            Self::ExternalEmbeddings(e) => e.dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::HashedNgrams(_) => "hashed_ngrams",
            Self::ExternalEmbeddings(_) => "external_embeddings",
        }
    }

    /// Identifies the feature space; models refuse features from any other.
    pub fn fingerprint(&self) -> String {
        let desc = match self {
            Self::HashedNgrams(h) => format!(
                "hashed_ngrams;dim={};orders={:?};seed={};lowercase={}",
                h.dim, h.ngram_orders, h.hash_seed, h.lowercase
            ),
            Self::ExternalEmbeddings(e) => format!("external_embeddings;dim={};sha256={}", e.dim, e.digest),
        };
        hex::encode(Sha256::digest(desc.as_bytes()))[..16].to_string()
    }

    pub fn featurize(&self, id: &str, text: &str) -> Result<SparseVector> {
        match self {
            Self::HashedNgrams(h) => Ok(h.featurize(text)),
            Self::ExternalEmbeddings(e) => e
                .vectors
                .get(id)
                .cloned()
                .ok_or_else(|| ClassifierError::MissingEmbedding { id: id.to_string() }),
        }
    }

    /// JSON description for metrics artifacts.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            Self::HashedNgrams(h) => serde_json::json!({
                "kind": self.kind(),
                "dim": h.dim,
                "ngram_orders": h.ngram_orders,
                "hash_seed": h.hash_seed,
                "lowercase": h.lowercase,
                "fingerprint": self.fingerprint(),
            }),
            Self::ExternalEmbeddings(e) => serde_json::json!({
                "kind": self.kind(),
                "dim": e.dim,
                "embeddings_path": e.path,
                "fingerprint": self.fingerprint(),
            }),
        }
    }
}
