use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::dataset::{EmotionTaxonomy, Sample};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    /// Minimal list: articles, pronouns, auxiliaries and contraction pieces.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// One word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|source| StatsError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Original,
    Appended,
}

impl std::str::FromStr for Segment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(Self::Original),
            "appended" => Ok(Self::Appended),
            other => Err(format!("unknown segment {other:?} (expected original or appended)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFrequency {
    pub word: String,
    pub count: usize,
    /// Share of all retained tokens in the segment, in percent.
    pub percent: f64,
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Per-token word frequencies in one segment of the samples labeled with
/// `emotion`. The appended segment only covers samples with recorded
/// context. Sorted by count descending, then word.
pub fn word_frequency_analysis(
    samples: &[Sample],
    taxonomy: &EmotionTaxonomy,
    emotion: &str,
    top_k: usize,
    stopwords: &Stopwords,
    segment: Segment,
) -> Result<Vec<WordFrequency>> {
    let label = taxonomy
        .index_of(emotion)
        .ok_or_else(|| StatsError::InvalidArgument(format!("unknown emotion {emotion:?}")))?;
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut total = 0usize;
    for s in samples.iter().filter(|s| s.labels.contains(&label)) {
        let text = match segment {
            Segment::Original => s.original_text(),
            Segment::Appended => match &s.provenance.context_appended {
                Some(ctx) => ctx.as_str(),
                None => continue,
            },
        };
        for tok in tokenize(text).filter(|t| !stopwords.contains(t)) {
            *counts.entry(tok).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(StatsError::EmptyCorpus {
            emotion: emotion.to_string(),
        });
    }
    let mut out: Vec<WordFrequency> = counts
        .into_iter()
        .map(|(word, count)| WordFrequency {
            percent: 100.0 * count as f64 / total as f64,
            word,
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    out.truncate(top_k);
    Ok(out)
}
