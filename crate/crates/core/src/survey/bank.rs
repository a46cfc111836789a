use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, SurveyError};
use crate::dataset::Sample;
use crate::stats::{GroupSpec, RatingVariant};
use crate::EmotionTaxonomy;

/// One rating prompt. The CA and CAM versions of a sample share `item_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyItem {
    pub item_id: String,
    pub variant: RatingVariant,
    pub sample_id: String,
    pub emotion: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemBank {
    /// Sorted by (item_id, variant).
    pub items: Vec<SurveyItem>,
    /// Items contributed by samples with more than one survey emotion.
    pub multi_emotion_items: usize,
}

impl ItemBank {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, item_id: &str, variant: RatingVariant) -> Option<&SurveyItem> {
        self.items
            .binary_search_by(|i| (i.item_id.as_str(), i.variant).cmp(&(item_id, variant)))
            .ok()
            .map(|p| &self.items[p])
    }

    /// Distinct item ids.
    pub fn item_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.items.iter().map(|i| i.item_id.as_str()).collect();
        ids.dedup();
        ids
    }
}

/// Build items from CA and CAM samples: one item per sample and survey
/// emotion among its gold labels, identified as `{sample_id}#{emotion}`.
pub fn create_survey(ca: &[Sample], cam: &[Sample], taxonomy: &EmotionTaxonomy, spec: &GroupSpec) -> Result<ItemBank> {
    let emotions = spec.emotions();
    let mut items = BTreeMap::new();
    let mut multi = 0;
    for (variant, samples) in [(RatingVariant::Ca, ca), (RatingVariant::Cam, cam)] {
        for s in samples {
            let hits: Vec<&str> = s
                .label_names(taxonomy)
                .into_iter()
                .filter(|l| emotions.contains(l) && spec.index_of(l, variant).is_some())
                .collect();
            if hits.len() > 1 {
                multi += hits.len();
            }
            for emotion in hits {
                let item_id = format!("{}#{emotion}", s.id);
                items.insert(
                    (item_id.clone(), variant),
                    SurveyItem {
                        item_id,
                        variant,
                        sample_id: s.id.clone(),
                        emotion: emotion.to_string(),
                        text: s.text.clone(),
                    },
                );
            }
        }
    }
    if items.is_empty() {
        return Err(SurveyError::EmptyBank);
    }
    Ok(ItemBank {
        items: items.into_values().collect(),
        multi_emotion_items: multi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;

    fn s(id: &str, text: &str, labels: &[&str]) -> Sample {
        Sample::with_label_names(id, text, labels, Split::Train, &EmotionTaxonomy::goemotions()).unwrap()
    }

    #[test]
    fn pairing_and_filtering() {
        let tax = EmotionTaxonomy::goemotions();
        let ca = vec![
            s("a", "Nice work.", &["admiration"]),
            s("b", "Take care.", &["caring"]),
            s("c", "Ugh.", &["anger", "sadness"]),
        ];
        let cam = vec![s("a", "Nice work. Truly remarkable effort.", &["admiration"])];
        let bank = create_survey(&ca, &cam, &tax, &GroupSpec::default()).unwrap();
        let a_ca = bank.get("a#admiration", RatingVariant::Ca).unwrap();
        let a_cam = bank.get("a#admiration", RatingVariant::Cam).unwrap();
        assert_eq!(a_ca.item_id, a_cam.item_id);
        assert_ne!(a_ca.text, a_cam.text);
        assert!(bank.items.iter().all(|i| i.sample_id != "b"));
        assert!(bank.get("c#anger", RatingVariant::Ca).is_some());
        assert!(bank.get("c#sadness", RatingVariant::Ca).is_some());
        assert_eq!(bank.multi_emotion_items, 2);
        assert_eq!(bank.item_ids(), ["a#admiration", "c#anger", "c#sadness"]);
    }

    #[test]
    fn empty_bank_is_an_error() {
        let tax = EmotionTaxonomy::goemotions();
        let ca = vec![s("b", "Take care.", &["caring"])];
        assert!(matches!(
            create_survey(&ca, &[], &tax, &GroupSpec::default()),
            Err(SurveyError::EmptyBank)
        ));
    }
}
