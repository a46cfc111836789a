use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::curate::Modified;
use crate::dataset::{EmotionTaxonomy, Sample, Variant};
use crate::llm::CacheStats;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheSummary {
    pub hits: u64,
    pub misses: u64,
    pub hit_rate: f64,
}

impl From<CacheStats> for CacheSummary {
    fn from(s: CacheStats) -> Self {
        Self {
            hits: s.hits,
            misses: s.misses,
            hit_rate: s.hit_rate(),
        }
    }
}

/// Counts and label histograms per variant. Histograms count every label of
/// a multi-label sample, so they sum to at least the variant size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub counts: IndexMap<String, usize>,
    pub histograms: IndexMap<String, IndexMap<String, usize>>,
    pub neutral: IndexMap<String, usize>,
    pub excluded: IndexMap<String, usize>,
    pub flagged: IndexMap<String, usize>,
    pub validation_failures: IndexMap<String, IndexMap<String, usize>>,
    pub unresolved: usize,
    pub cache: CacheSummary,
}

impl AuditReport {
    pub fn add_variant(&mut self, variant: Variant, samples: &[Sample], taxonomy: &EmotionTaxonomy) {
        let key = variant.code().to_string();
        let mut hist: IndexMap<String, usize> = taxonomy.labels().iter().map(|l| (l.clone(), 0)).collect();
        for s in samples {
            for &l in &s.labels {
                hist[l] += 1;
            }
        }
        let neutral = taxonomy
            .neutral_index()
            .map_or(0, |n| samples.iter().filter(|s| s.labels.contains(&n)).count());
        self.counts.insert(key.clone(), samples.len());
        self.neutral.insert(key.clone(), neutral);
        self.histograms.insert(key, hist);
    }

    pub fn add_modification(&mut self, variant: Variant, m: &Modified) {
        let key = variant.code().to_string();
        self.excluded.insert(key.clone(), m.excluded.len());
        self.flagged.insert(key.clone(), m.flagged.len());
        self.validation_failures.insert(
            key,
            m.validation_failures.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        );
    }
}
