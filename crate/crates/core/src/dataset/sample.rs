use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{DatasetError, EmotionTaxonomy, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Which curated dataset a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "original")]
    Original,
    /// Random sample of the pool.
    #[serde(rename = "RS")]
    Rs,
    /// Context-present samples.
    #[serde(rename = "CP")]
    Cp,
    /// Subsample of the context-absent samples.
    #[serde(rename = "CA")]
    Ca,
    /// CA with generated context appended.
    #[serde(rename = "CAM")]
    Cam,
    /// RS with generated context appended to every sample.
    #[serde(rename = "RSM")]
    Rsm,
    /// RS with context appended only to context-absent samples.
    #[serde(rename = "MM")]
    Mm,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Original,
        Variant::Rs,
        Variant::Cp,
        Variant::Ca,
        Variant::Cam,
        Variant::Rsm,
        Variant::Mm,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Rs => "RS",
            Variant::Cp => "CP",
            Variant::Ca => "CA",
            Variant::Cam => "CAM",
            Variant::Rsm => "RSM",
            Variant::Mm => "MM",
        }
    }

    /// Lowercase tag used in file names.
    pub fn file_tag(self) -> String {
        self.code().to_ascii_lowercase()
    }

    /// Variants whose samples may carry appended context.
    pub fn allows_context(self) -> bool {
        matches!(self, Variant::Cam | Variant::Rsm | Variant::Mm)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditProvenance {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_appended: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    /// Unknown fields kept in lenient mode.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl AuditProvenance {
    pub fn original() -> Self {
        Self::of(Variant::Original)
    }

    pub fn of(variant: Variant) -> Self {
        Self {
            variant,
            context_appended: None,
            backend_id: None,
            prompt_hash: None,
            extra: Default::default(),
        }
    }
}

impl Default for AuditProvenance {
    fn default() -> Self {
        Self::original()
    }
}

/// One text item. `labels` holds taxonomy indices, so the set iterates in
/// taxonomy order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub labels: BTreeSet<usize>,
    pub split: Split,
    pub provenance: AuditProvenance,
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        labels: impl IntoIterator<Item = usize>,
        split: Split,
    ) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            labels: labels.into_iter().collect(),
            split,
            provenance: AuditProvenance::original(),
            extra: Default::default(),
        }
    }

    /// Build from label names, resolving them case-insensitively.
    pub fn with_label_names(
        id: impl Into<String>,
        text: impl Into<String>,
        labels: &[&str],
        split: Split,
        taxonomy: &EmotionTaxonomy,
    ) -> Result<Self> {
        let id = id.into();
        let mut set = BTreeSet::new();
        for l in labels {
            set.insert(taxonomy.index_of(l).ok_or_else(|| DatasetError::UnknownLabel {
                line: 0,
                label: l.to_string(),
                taxonomy: taxonomy.name().to_string(),
            })?);
        }
        Ok(Self::new(id, text, set, split))
    }

    pub fn label_names<'t>(&self, taxonomy: &'t EmotionTaxonomy) -> Vec<&'t str> {
        self.labels.iter().map(|&i| taxonomy.label(i)).collect()
    }

    /// Text before any appended context.
    pub fn original_text(&self) -> &str {
        match &self.provenance.context_appended {
            Some(ctx) => self
                .text
                .strip_suffix(ctx.as_str())
                .and_then(|t| t.strip_suffix(' '))
                .unwrap_or(&self.text),
            None => &self.text,
        }
    }

    pub fn has_label(&self, index: usize) -> bool {
        self.labels.contains(&index)
    }

    /// Checks the sample and provenance invariants against `taxonomy`.
    pub fn validate(&self, taxonomy: &EmotionTaxonomy) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("sample {:?}: empty text", self.id));
        }
        if self.labels.is_empty() {
            return Err(format!("sample {:?}: no labels", self.id));
        }
        if let Some(&bad) = self.labels.iter().find(|&&i| i >= taxonomy.len()) {
            return Err(format!("sample {:?}: label index {bad} out of range", self.id));
        }
        let p = &self.provenance;
        match &p.context_appended {
            Some(ctx) => {
                if !p.variant.allows_context() {
                    return Err(format!(
                        "sample {:?}: variant {} cannot carry appended context",
                        self.id, p.variant
                    ));
                }
                let suffix = format!(" {ctx}");
                if ctx.trim().is_empty() || !self.text.ends_with(&suffix) || self.text.len() == suffix.len() {
                    return Err(format!(
                        "sample {:?}: text is not original + \" \" + context_appended",
                        self.id
                    ));
                }
            }
            None if matches!(p.variant, Variant::Cam | Variant::Rsm) => {
                return Err(format!(
                    "sample {:?}: {} sample without appended context",
                    self.id, p.variant
                ));
            }
            None => {}
        }
        Ok(())
    }
}

/// Uniform draw of `n` distinct samples without replacement.
///
/// Deterministic for a fixed input order, `n` and `seed` (see [`crate::rng`]).
pub fn sample_random(samples: &[Sample], n: usize, seed: u64) -> Result<Vec<Sample>> {
    if n > samples.len() {
        return Err(DatasetError::InsufficientSamples {
            requested: n,
            available: samples.len(),
        });
    }
    let idx = rng::choose_indices(&mut rng::seeded(seed), samples.len(), n);
    Ok(idx.into_iter().map(|i| samples[i].clone()).collect())
}
