use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

use super::{DatasetError, Result};

/// An ordered label set. Label order defines class indices everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionTaxonomy {
    name: String,
    labels: Vec<String>,
    neutral_index: Option<usize>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    name: String,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    neutral: Option<String>,
}

const GOEMOTIONS_JSON: &str = include_str!("../../data/goemotions.taxonomy.json");

impl EmotionTaxonomy {
    /// Labels are lowercased; duplicates, blanks and an unknown neutral label are rejected.
    pub fn new(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = impl AsRef<str>>,
        neutral: Option<&str>,
    ) -> Result<Self> {
        let name = name.into();
        let labels: Vec<String> = labels.into_iter().map(|l| l.as_ref().trim().to_lowercase()).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(DatasetError::InvalidTaxonomy(format!("{name}: empty label at {i}")));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(DatasetError::InvalidTaxonomy(format!(
                    "{name}: duplicate label {label:?}"
                )));
            }
        }
        let neutral_index =
            match neutral {
                Some(n) => Some(*index.get(&n.trim().to_lowercase()).ok_or_else(|| {
                    DatasetError::InvalidTaxonomy(format!("{name}: neutral label {n:?} not in labels"))
                })?),
                None => None,
            };
        Ok(Self {
            name,
            labels,
            neutral_index,
            index,
        })
    }

    /// The 28-label GoEmotions taxonomy (27 emotions plus neutral).
    pub fn goemotions() -> Self {
        Self::from_json(GOEMOTIONS_JSON).expect("bundled taxonomy is valid")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: TaxonomyFile =
            serde_json::from_str(json).map_err(|e| DatasetError::InvalidTaxonomy(e.to_string()))?;
        Self::new(file.name, file.labels, file.neutral.as_deref())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TaxonomyFile {
            name: self.name.clone(),
            labels: self.labels.clone(),
            neutral: self.neutral_index.map(|i| self.labels[i].clone()),
        })
        .expect("taxonomy serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn neutral_index(&self) -> Option<usize> {
        self.neutral_index
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    /// Case-insensitive lookup.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        match self.index.get(label) {
            Some(&i) => Some(i),
            None => self.index.get(&label.trim().to_lowercase()).copied(),
        }
    }

    /// Taxonomy with one extra label appended (used for absorbing "other" buckets).
    pub(crate) fn with_extra_label(&self, label: &str) -> Result<Self> {
        let labels = self.labels.iter().map(String::as_str).chain(std::iter::once(label));
        let neutral = self.neutral_index.map(|i| self.labels[i].clone());
        Self::new(self.name.clone(), labels, neutral.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goemotions_has_28_labels_with_neutral_last() {
        let t = EmotionTaxonomy::goemotions();
        assert_eq!(t.len(), 28);
        assert_eq!(t.neutral_index(), Some(27));
        assert_eq!(t.label(27), "neutral");
        assert_eq!(t.index_of("Admiration"), Some(0));
        assert_eq!(t.index_of("shame"), None);
    }

    #[test]
    fn rejects_duplicates_and_blanks() {
        assert!(EmotionTaxonomy::new("x", ["a", "A"], None).is_err());
        assert!(EmotionTaxonomy::new("x", ["a", " "], None).is_err());
        assert!(EmotionTaxonomy::new("x", ["a"], Some("b")).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = EmotionTaxonomy::goemotions();
        assert_eq!(EmotionTaxonomy::from_json(&t.to_json()).unwrap(), t);
    }
}
