use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use super::{DatasetError, EmotionTaxonomy, Result, Sample};

/// Bundled GoEmotions-to-external mappings, keyed by target dataset name.
pub const BUNDLED_MAPPINGS: &[(&str, &str)] = &[
    ("dailydialog", include_str!("../../data/dailydialog.mapping.json")),
    ("isear", include_str!("../../data/isear.mapping.json")),
    ("semeval2019", include_str!("../../data/semeval2019.mapping.json")),
    ("tweeteval", include_str!("../../data/tweeteval.mapping.json")),
];

const SENTIMENT_JSON: &str = include_str!("../../data/sentiment.json");

/// On-disk mapping schema.
///
/// `entries` keys, in file order, are the target dataset's classes. When
/// `others` names a label that is not an entry key it acts as an absorbing
/// bucket that is not a real class of the target dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingFile {
    pub source: String,
    pub target: String,
    pub entries: IndexMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub others: Option<String>,
}

pub type LabelMapping = MappingFile;

impl MappingFile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| DatasetError::InvalidMapping(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED_MAPPINGS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, json)| Self::from_json(json).expect("bundled mapping is valid"))
    }

    /// Every label maps to itself.
    pub fn identity(taxonomy: &EmotionTaxonomy) -> Self {
        Self {
            source: taxonomy.name().to_string(),
            target: taxonomy.name().to_string(),
            entries: taxonomy.labels().iter().map(|l| (l.clone(), vec![l.clone()])).collect(),
            others: None,
        }
    }

    /// Validate against the source taxonomy and precompute lookup tables.
    pub fn resolve(&self, source: &EmotionTaxonomy) -> Result<ResolvedMapping> {
        if !self.source.eq_ignore_ascii_case(source.name()) {
            return Err(DatasetError::InvalidMapping(format!(
                "mapping source {:?} does not match taxonomy {:?}",
                self.source,
                source.name()
            )));
        }
        let target = EmotionTaxonomy::new(self.target.clone(), self.entries.keys(), None)?;
        let others = self.others.as_ref().map(|o| o.trim().to_lowercase());
        let (extended, others_index, pseudo_others) = match &others {
            Some(o) => match target.index_of(o) {
                Some(i) => (target.clone(), Some(i), false),
                None => {
                    let ext = target.with_extra_label(o)?;
                    let i = ext.len() - 1;
                    (ext, Some(i), true)
                }
            },
            None => (target.clone(), None, false),
        };

        let mut source_to_target: Vec<Option<usize>> = vec![None; source.len()];
        for (t_idx, sources) in self.entries.values().enumerate() {
            for name in sources {
                let s_idx = source
                    .index_of(name)
                    .ok_or_else(|| DatasetError::InvalidMapping(format!("unknown source label {name:?}")))?;
                if let Some(prev) = source_to_target[s_idx] {
                    return Err(DatasetError::InvalidMapping(format!(
                        "source label {name:?} mapped to both {:?} and {:?}",
                        extended.label(prev),
                        extended.label(t_idx)
                    )));
                }
                source_to_target[s_idx] = Some(t_idx);
            }
        }
        if let Some(o) = others_index {
            for slot in source_to_target.iter_mut().filter(|s| s.is_none()) {
                *slot = Some(o);
            }
        }
        let mut members = vec![Vec::new(); extended.len()];
        for (s, t) in source_to_target.iter().enumerate() {
            if let Some(t) = t {
                members[*t].push(s);
            }
        }
        Ok(ResolvedMapping {
            source_name: source.name().to_string(),
            source_len: source.len(),
            target,
            extended,
            others_index,
            pseudo_others,
            source_to_target,
            members,
        })
    }
}

/// A mapping checked against its source taxonomy.
#[derive(Debug, Clone)]
pub struct ResolvedMapping {
    source_name: String,
    source_len: usize,
    target: EmotionTaxonomy,
    extended: EmotionTaxonomy,
    others_index: Option<usize>,
    pseudo_others: bool,
    source_to_target: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
}

impl ResolvedMapping {
    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// The target dataset's real classes.
    pub fn target(&self) -> &EmotionTaxonomy {
        &self.target
    }

    /// Real classes plus the absorbing others bucket, if it is not a real class.
    pub fn extended(&self) -> &EmotionTaxonomy {
        &self.extended
    }

    pub fn others_index(&self) -> Option<usize> {
        self.others_index
    }

    /// True when the others label is a bucket outside the target's classes.
    pub fn has_pseudo_others(&self) -> bool {
        self.pseudo_others
    }

    /// Target index (into [`Self::extended`]) for a source label.
    pub fn target_of(&self, source_index: usize) -> Option<usize> {
        self.source_to_target.get(source_index).copied().flatten()
    }

    /// Source indices feeding each target label (extended order).
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn is_total(&self) -> bool {
        self.source_to_target.iter().all(Option::is_some)
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }
}

/// Translate a sample's labels into the target label space (extended indices).
pub fn map_labels(sample: &Sample, mapping: &ResolvedMapping) -> Result<Sample> {
    let labels: BTreeSet<usize> = sample.labels.iter().filter_map(|&s| mapping.target_of(s)).collect();
    if labels.is_empty() {
        return Err(DatasetError::EmptyMapping { id: sample.id.clone() });
    }
    Ok(Sample {
        labels,
        ..sample.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        }
    }
}

/// Emotion label to sentiment class. Must cover the whole source taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentimentMapping {
    #[serde(default = "default_source")]
    pub source: String,
    pub entries: IndexMap<String, Sentiment>,
}

fn default_source() -> String {
    "goemotions".to_string()
}

impl SentimentMapping {
    /// The reviewed GoEmotions grouping; surprise, realization, curiosity and
    /// confusion are neutral.
    pub fn bundled() -> Self {
        serde_json::from_str(SENTIMENT_JSON).expect("bundled sentiment mapping is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| DatasetError::InvalidMapping(e.to_string()))
    }

    pub fn sentiment_taxonomy() -> EmotionTaxonomy {
        EmotionTaxonomy::new("sentiment", Sentiment::ALL.map(Sentiment::as_str), Some("neutral")).expect("valid")
    }

    /// Per-source-label sentiment, in taxonomy order. Fails unless total.
    pub fn table(&self, taxonomy: &EmotionTaxonomy) -> Result<Vec<Sentiment>> {
        let mut table = vec![None; taxonomy.len()];
        for (label, sentiment) in &self.entries {
            let i = taxonomy
                .index_of(label)
                .ok_or_else(|| DatasetError::InvalidMapping(format!("unknown sentiment source label {label:?}")))?;
            table[i] = Some(*sentiment);
        }
        table
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| DatasetError::InvalidMapping(format!("no sentiment for {:?}", taxonomy.label(i))))
            })
            .collect()
    }

    /// Equivalent label mapping onto the 3-class sentiment taxonomy.
    pub fn to_label_mapping(&self, taxonomy: &EmotionTaxonomy) -> Result<LabelMapping> {
        let table = self.table(taxonomy)?;
        let mut entries: IndexMap<String, Vec<String>> = Sentiment::ALL
            .iter()
            .map(|s| (s.as_str().to_string(), Vec::new()))
            .collect();
        for (i, s) in table.iter().enumerate() {
            entries[s.as_str()].push(taxonomy.label(i).to_string());
        }
        Ok(LabelMapping {
            source: taxonomy.name().to_string(),
            target: "sentiment".to_string(),
            entries,
            others: None,
        })
    }
}

/// Union of the sentiments of a sample's gold emotions.
pub fn map_sentiment(
    sample: &Sample,
    mapping: &SentimentMapping,
    taxonomy: &EmotionTaxonomy,
) -> Result<BTreeSet<Sentiment>> {
    let table = mapping.table(taxonomy)?;
    Ok(sample.labels.iter().map(|&i| table[i]).collect())
}
