use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::descriptive::{descriptive, Descriptive};
use super::nonparametric::{benjamini_hochberg, dunn_test, eta_squared, kruskal_wallis, TestResult};
use super::ratings::{RatingRecord, RatingVariant};
use super::{Result, StatsError};

pub const DEFAULT_EMOTIONS: [&str; 9] = [
    "admiration",
    "love",
    "approval",
    "amusement",
    "neutral",
    "annoyance",
    "anger",
    "sadness",
    "disapproval",
];

/// Ordered (emotion, variant) groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub groups: Vec<(String, RatingVariant)>,
}

impl Default for GroupSpec {
    fn default() -> Self {
        Self::for_emotions(DEFAULT_EMOTIONS)
    }
}

impl GroupSpec {
    /// Each emotion contributes a CA group followed by a CAM group.
    pub fn for_emotions<S: AsRef<str>>(emotions: impl IntoIterator<Item = S>) -> Self {
        let groups = emotions
            .into_iter()
            .flat_map(|e| {
                let e = e.as_ref().to_lowercase();
                RatingVariant::BOTH.map(|v| (e.clone(), v))
            })
            .collect();
        Self { groups }
    }

    pub fn emotions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (e, _) in &self.groups {
            if !out.contains(&e.as_str()) {
                out.push(e);
            }
        }
        out
    }

    pub fn index_of(&self, emotion: &str, variant: RatingVariant) -> Option<usize> {
        self.groups.iter().position(|(e, v)| e == emotion && *v == variant)
    }

    /// Ratings per group, in group-spec order.
    pub fn partition(&self, records: &[RatingRecord]) -> Result<Vec<Vec<f64>>> {
        let mut groups = vec![Vec::new(); self.groups.len()];
        for r in records {
            let i = self
                .index_of(&r.emotion, r.variant)
                .ok_or_else(|| StatsError::UnknownGroup {
                    emotion: r.emotion.clone(),
                    variant: r.variant.to_string(),
                })?;
            groups[i].push(r.rating as f64);
        }
        Ok(groups)
    }
}

/// Which Dunn comparisons form the BH family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFamily {
    /// CA vs CAM within each emotion.
    #[default]
    WithinEmotion,
    /// Every pair of groups.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub emotion: String,
    pub variant: RatingVariant,
    /// Absent when the group has no ratings.
    pub stats: Option<Descriptive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: (String, RatingVariant),
    pub b: (String, RatingVariant),
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveReport {
    pub alpha: f64,
    pub family: PairFamily,
    pub n: usize,
    pub groups: Vec<GroupSummary>,
    /// Kruskal-Wallis over the non-empty groups, with η² as effect size.
    pub omnibus: Option<TestResult>,
    pub pairs: Vec<PairReport>,
    pub notes: Vec<String>,
}

impl SubjectiveReport {
    pub fn pair_for(&self, emotion: &str) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| p.a.0 == emotion && p.b.0 == emotion && p.a.1 != p.b.1)
    }

    pub fn significant_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.significant).count()
    }

    /// Plain-text table: Mean / Std Dev. / Median for CA and CAM per emotion.
    pub fn render_table(&self) -> String {
        let cell = |e: &str, v: RatingVariant| -> String {
            match self
                .groups
                .iter()
                .find(|g| g.emotion == e && g.variant == v)
                .and_then(|g| g.stats)
            {
                Some(d) => format!(
                    "{:>6.2} {:>9} {:>7.1}",
                    d.mean,
                    d.std.map_or("-".to_string(), |s| format!("{s:.2}")),
                    d.median
                ),
                None => format!("{:>6} {:>9} {:>7}", "-", "-", "-"),
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "{:<14}| {:^24} | {:^24} |", "", "CA", "CAM");
        let _ = writeln!(
            out,
            "{:<14}| {:>6} {:>9} {:>7} | {:>6} {:>9} {:>7} | {:>10}",
            "Emotion", "Mean", "Std Dev.", "Median", "Mean", "Std Dev.", "Median", "p (adj.)"
        );
        let mut emotions: Vec<&str> = Vec::new();
        for g in &self.groups {
            if !emotions.contains(&g.emotion.as_str()) {
                emotions.push(&g.emotion);
            }
        }
        for e in emotions {
            let p = self.pair_for(e).map_or("-".to_string(), |p| {
                let star = if p.significant { "*" } else { "" };
                if p.p_adjusted < 0.001 {
                    format!("<0.001{star}")
                } else {
                    format!("{:.3}{star}", p.p_adjusted)
                }
            });
            let _ = writeln!(
                out,
                "{:<14}| {} | {} | {:>10}",
                e,
                cell(e, RatingVariant::Ca),
                cell(e, RatingVariant::Cam),
                p
            );
        }
        if let Some(o) = &self.omnibus {
            let _ = writeln!(
                out,
                "Kruskal-Wallis H = {:.3}, df = {}, p = {:.3e}, eta^2 = {:.3}, N = {}",
                o.statistic,
                o.df,
                o.p_value,
                o.effect_size.unwrap_or(0.0),
                self.n
            );
        }
        out
    }
}

/// Descriptives per group, an omnibus Kruskal-Wallis over all groups, and
/// Dunn comparisons adjusted with BH over the chosen family.
pub fn subjective_analysis(
    records: &[RatingRecord],
    spec: &GroupSpec,
    alpha: f64,
    family: PairFamily,
) -> Result<SubjectiveReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let groups = spec.partition(records)?;
    let summaries = spec
        .groups
        .iter()
        .zip(&groups)
        .map(|((e, v), g)| GroupSummary {
            emotion: e.clone(),
            variant: *v,
            stats: descriptive(g),
        })
        .collect();

    // Rank tests run on non-empty groups only; keep the group index of each.
    let present: Vec<usize> = (0..groups.len()).filter(|&i| !groups[i].is_empty()).collect();
    let kept: Vec<Vec<f64>> = present.iter().map(|&i| groups[i].clone()).collect();
    let mut notes = vec![
        "power analysis (alpha 0.05, power 0.95) is metadata only".to_string(),
        "Dunn p-values are BH-adjusted within the reported family".to_string(),
    ];
    let empty = groups.len() - present.len();
    if empty > 0 {
        notes.push(format!(
            "{empty} group(s) had no ratings and were left out of the tests"
        ));
    }
    let n = kept.iter().map(Vec::len).sum();
    let mut omnibus = None;
    let mut pairs = Vec::new();
    if kept.len() >= 2 {
        let mut kw = kruskal_wallis(&kept)?;
        if n > kept.len() {
            kw.effect_size = Some(eta_squared(kw.statistic, kept.len(), n)?);
        }
        let local = |i: usize| present.iter().position(|&p| p == i);
        let wanted: Vec<(usize, usize)> = match family {
            PairFamily::WithinEmotion => spec
                .emotions()
                .iter()
                .filter_map(|e| {
                    let a = local(spec.index_of(e, RatingVariant::Ca)?)?;
                    let b = local(spec.index_of(e, RatingVariant::Cam)?)?;
                    Some((a, b))
                })
                .collect(),
            PairFamily::All => (0..kept.len())
                .flat_map(|i| (i + 1..kept.len()).map(move |j| (i, j)))
                .collect(),
        };
        let mut dunn = dunn_test(&kept, Some(&wanted))?;
        let raw: Vec<f64> = dunn.iter().map(|d| d.p_raw).collect();
        for (d, adj) in dunn.iter_mut().zip(benjamini_hochberg(&raw)?) {
            d.p_adjusted = adj;
        }
        pairs = dunn
            .iter()
            .map(|d| PairReport {
                a: spec.groups[present[d.group_i]].clone(),
                b: spec.groups[present[d.group_j]].clone(),
                z: d.z,
                p_raw: d.p_raw,
                p_adjusted: d.p_adjusted,
                significant: d.p_adjusted < alpha,
            })
            .collect();
        omnibus = Some(kw);
    }
    Ok(SubjectiveReport {
        alpha,
        family,
        n,
        groups: summaries,
        omnibus,
        pairs,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(emotion: &str, variant: RatingVariant, ratings: &[u8], tag: &str) -> Vec<RatingRecord> {
        ratings
            .iter()
            .enumerate()
            .map(|(i, &r)| RatingRecord {
                participant_id: format!("{tag}{i}"),
                item_id: format!("{emotion}-{i}"),
                variant,
                emotion: emotion.into(),
                rating: r,
                timestamp: "2024-01-01T00:00:00Z".into(),
            })
            .collect()
    }

    #[test]
    fn default_spec_has_eighteen_groups() {
        let spec = GroupSpec::default();
        assert_eq!(spec.groups.len(), 18);
        assert_eq!(spec.emotions(), DEFAULT_EMOTIONS);
        assert_eq!(spec.groups[1], ("admiration".to_string(), RatingVariant::Cam));
    }

    #[test]
    fn shifted_emotion_is_flagged() {
        let spec = GroupSpec::for_emotions(["love", "anger"]);
        let mut rs = records("love", RatingVariant::Ca, &[1, 2, 2, 1, 2, 1, 2, 1, 2, 2, 1, 1], "a");
        rs.extend(records(
            "love",
            RatingVariant::Cam,
            &[4, 5, 5, 4, 5, 4, 5, 4, 5, 5, 4, 4],
            "b",
        ));
        rs.extend(records("anger", RatingVariant::Ca, &[3, 3, 2, 4, 3, 2], "c"));
        rs.extend(records("anger", RatingVariant::Cam, &[3, 2, 3, 4, 3, 3], "d"));
        let rep = subjective_analysis(&rs, &spec, 0.05, PairFamily::WithinEmotion).unwrap();
        assert_eq!(rep.pairs.len(), 2);
        assert!(rep.pair_for("love").unwrap().significant);
        assert!(!rep.pair_for("anger").unwrap().significant);
        assert_eq!(rep.n, 36);
        let table = rep.render_table();
        assert!(table.contains("Std Dev."));
        assert!(table.lines().any(|l| l.starts_with("love")));

        let all = subjective_analysis(&rs, &spec, 0.05, PairFamily::All).unwrap();
        assert_eq!(all.pairs.len(), 6);
    }

    #[test]
    fn empty_groups_are_absent() {
        let spec = GroupSpec::for_emotions(["love", "anger"]);
        let mut rs = records("love", RatingVariant::Ca, &[1, 2, 3], "a");
        rs.extend(records("love", RatingVariant::Cam, &[3, 4, 5], "b"));
        let rep = subjective_analysis(&rs, &spec, 0.05, PairFamily::WithinEmotion).unwrap();
        assert!(rep.groups[2].stats.is_none());
        assert_eq!(rep.pairs.len(), 1);
        assert!(rep.render_table().contains("anger"));
    }

    #[test]
    fn unknown_group_is_an_error() {
        let spec = GroupSpec::for_emotions(["love"]);
        let rs = records("grief", RatingVariant::Ca, &[1], "a");
        assert!(matches!(
            subjective_analysis(&rs, &spec, 0.05, PairFamily::WithinEmotion),
            Err(StatsError::UnknownGroup { .. })
        ));
    }
}
