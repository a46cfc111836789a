use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{
    extract_appended, parse_yes_no, validate_context, BannedStems, CacheKey, ChatBackend, ChatRequest, LlmError,
    PromptKind, PromptTemplate, RenderedPrompt, RequestMeta, ResponseCache, Result, ValidationReport, YesNo,
};
use crate::dataset::{EmotionTaxonomy, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextAggregate {
    ContextPresent,
    ContextAbsent,
}

/// How per-label answers combine into a sample verdict. Recorded in run
/// manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateRule {
    /// Context-present only if every gold label is judged conveyed.
    #[default]
    AllYes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextVerdict {
    pub sample_id: String,
    /// Gold labels in taxonomy order.
    pub per_label: IndexMap<String, YesNo>,
    pub aggregate: ContextAggregate,
}

impl ContextVerdict {
    pub fn from_answers(sample_id: impl Into<String>, per_label: IndexMap<String, YesNo>) -> Self {
        let aggregate = if !per_label.is_empty() && per_label.values().all(|v| *v == YesNo::Yes) {
            ContextAggregate::ContextPresent
        } else {
            ContextAggregate::ContextAbsent
        };
        Self {
            sample_id: sample_id.into(),
            per_label,
            aggregate,
        }
    }

    pub fn is_present(&self) -> bool {
        self.aggregate == ContextAggregate::ContextPresent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedContext {
    pub sample_id: String,
    pub appended_text: String,
    pub raw_response: String,
    pub prompt_hash: String,
    pub validation: ValidationReport,
}

/// Runs context evaluation and generation for samples of one taxonomy
/// against a backend, through a shared response cache.
pub struct ContextAuditor {
    backend: Arc<dyn ChatBackend>,
    cache: Arc<ResponseCache>,
    taxonomy: EmotionTaxonomy,
    model_id: String,
    generation: PromptTemplate,
    evaluation: PromptTemplate,
    banned: BannedStems,
}

impl ContextAuditor {
    pub fn new(
        backend: Arc<dyn ChatBackend>,
        cache: Arc<ResponseCache>,
        taxonomy: EmotionTaxonomy,
        model_id: impl Into<String>,
    ) -> Self {
        Self {
            backend,
            cache,
            taxonomy,
            model_id: model_id.into(),
            generation: PromptTemplate::generation(),
            evaluation: PromptTemplate::evaluation(),
            banned: BannedStems::bundled(),
        }
    }

    pub fn with_templates(mut self, generation: PromptTemplate, evaluation: PromptTemplate) -> Self {
        self.generation = generation;
        self.evaluation = evaluation;
        self
    }

    pub fn with_banned(mut self, banned: BannedStems) -> Self {
        self.banned = banned;
        self
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn taxonomy(&self) -> &EmotionTaxonomy {
        &self.taxonomy
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    fn ask(
        &self,
        sample: &Sample,
        kind: PromptKind,
        labels: Vec<String>,
        prompt: &RenderedPrompt,
        fresh: bool,
    ) -> Result<String> {
        let key = CacheKey::new(&sample.id, kind, &prompt.canonical(), &self.model_id);
        let request = ChatRequest::new(self.model_id.clone(), prompt).with_meta(RequestMeta {
            kind,
            sample_id: sample.id.clone(),
            labels,
            text: sample.text.clone(),
        });
        let fetch = || self.backend.complete(&request);
        if fresh {
            self.cache.refresh(&key, fetch)
        } else {
            self.cache.get_or_fetch(&key, fetch)
        }
    }

    /// One evaluation prompt per gold label, combined with [`AggregateRule::AllYes`].
    pub fn evaluate_context(&self, sample: &Sample) -> Result<ContextVerdict> {
        if sample.labels.is_empty() {
            return Err(LlmError::Template(format!("sample {:?} has no gold labels", sample.id)));
        }
        let mut per_label = IndexMap::new();
        for label in sample.label_names(&self.taxonomy) {
            let prompt = self.evaluation.render_evaluation(sample, label)?;
            let response = self.ask(sample, PromptKind::Eval, vec![label.to_string()], &prompt, false)?;
            per_label.insert(label.to_string(), parse_yes_no(&response)?);
        }
        Ok(ContextVerdict::from_answers(sample.id.clone(), per_label))
    }

    /// Generate and validate appended context. Validation failure is
    /// reported, not returned as an error.
    pub fn generate_context(&self, sample: &Sample) -> Result<GeneratedContext> {
        self.generate(sample, false)
    }

    /// Like [`Self::generate_context`] but bypasses (and overwrites) the cache.
    pub fn regenerate_context(&self, sample: &Sample) -> Result<GeneratedContext> {
        self.generate(sample, true)
    }

    fn generate(&self, sample: &Sample, fresh: bool) -> Result<GeneratedContext> {
        let prompt = self.generation.render_generation(sample, &self.taxonomy)?;
        let labels = sample
            .label_names(&self.taxonomy)
            .into_iter()
            .map(str::to_string)
            .collect();
        let raw = self.ask(sample, PromptKind::Gen, labels, &prompt, fresh)?;
        let extraction = extract_appended(&sample.text, &raw);
        let base = validate_context(&sample.text, &extraction.appended, &self.banned);
        let validation = ValidationReport::new(
            base.original_preserved && extraction.original_preserved,
            base.sentence_count,
            base.banned_word_hits,
        );
        Ok(GeneratedContext {
            sample_id: sample.id.clone(),
            appended_text: extraction.appended,
            raw_response: raw,
            prompt_hash: prompt.hash(),
            validation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::llm::{GenerativeParams, MatchRule, MockBackend, Scenario, ScenarioRule};

    fn rule(kind: PromptKind, label: Option<&str>, text: Option<&str>, respond: &str) -> ScenarioRule {
        ScenarioRule {
            matcher: MatchRule {
                kind: Some(kind),
                label: label.map(str::to_string),
                text: text.map(str::to_string),
                ..Default::default()
            },
            respond: Some(respond.to_string()),
            fail: None,
        }
    }

    fn auditor(rules: Vec<ScenarioRule>) -> (ContextAuditor, Arc<MockBackend>) {
        let mock = Arc::new(MockBackend::new(Scenario::scripted("t", rules)));
        let a = ContextAuditor::new(
            mock.clone(),
            Arc::new(ResponseCache::in_memory()),
            EmotionTaxonomy::goemotions(),
            "mock-model",
        );
        (a, mock)
    }

    fn sample(text: &str, labels: &[&str]) -> Sample {
        Sample::with_label_names("s", text, labels, Split::Train, &EmotionTaxonomy::goemotions()).unwrap()
    }

    #[test]
    fn all_yes_is_present_one_no_is_absent() {
        let (a, _) = auditor(vec![
            rule(PromptKind::Eval, Some("joy"), None, "Yes."),
            rule(PromptKind::Eval, Some("anger"), None, "No."),
        ]);
        assert!(a.evaluate_context(&sample("x", &["joy"])).unwrap().is_present());
        let v = a.evaluate_context(&sample("x", &["joy", "anger"])).unwrap();
        assert_eq!(v.aggregate, ContextAggregate::ContextAbsent);
        assert_eq!(v.per_label.keys().collect::<Vec<_>>(), ["anger", "joy"]);
    }

    #[test]
    fn cached_verdict_makes_no_calls() {
        let (a, mock) = auditor(vec![rule(PromptKind::Eval, None, None, "yes")]);
        let s = sample("x", &["joy", "love"]);
        a.evaluate_context(&s).unwrap();
        assert_eq!(mock.calls(), 2);
        a.evaluate_context(&s).unwrap();
        assert_eq!(mock.calls(), 2);
        assert_eq!(a.cache().stats().hits, 2);
    }

    #[test]
    fn ambiguous_answer_propagates() {
        let (a, _) = auditor(vec![rule(PromptKind::Eval, None, None, "It depends.")]);
        assert!(matches!(
            a.evaluate_context(&sample("x", &["joy"])),
            Err(LlmError::Ambiguous { .. })
        ));
    }

    #[test]
    fn table_five_curiosity_context() {
        let text = "What do the [NAME] have to do with it?";
        let ctx = "I can't help but wonder how they're connected to this situation. Can anyone shed some light on this intriguing aspect?";
        let (a, _) = auditor(vec![rule(PromptKind::Gen, None, Some(text), &format!("{text} {ctx}"))]);
        let g = a.generate_context(&sample(text, &["curiosity"])).unwrap();
        assert_eq!(g.appended_text, ctx);
        assert!(g.validation.passed);
        assert_eq!(g.validation.sentence_count, 2);
    }

    #[test]
    fn banned_word_and_sentence_count_failures() {
        let (a, _) = auditor(vec![
            rule(
                PromptKind::Gen,
                Some("admiration"),
                None,
                "Great. Such admiration for this.",
            ),
            rule(PromptKind::Gen, Some("joy"), None, "One. Two. Three."),
        ]);
        let g = a.generate_context(&sample("Nice work", &["admiration"])).unwrap();
        assert!(!g.validation.banned_word_hits.is_empty());
        assert!(!g.validation.passed);
        let g = a.generate_context(&sample("Nice work", &["joy"])).unwrap();
        assert_eq!(g.validation.sentence_count, 3);
        assert!(!g.validation.passed);
    }

    #[test]
    fn regenerate_bypasses_cache() {
        let mock = Arc::new(MockBackend::new(Scenario::generative("g", GenerativeParams::default())));
        let a = ContextAuditor::new(
            mock.clone(),
            Arc::new(ResponseCache::in_memory()),
            EmotionTaxonomy::goemotions(),
            "m",
        );
        let s = sample("post", &["joy"]);
        let first = a.generate_context(&s).unwrap();
        a.generate_context(&s).unwrap();
        assert_eq!(mock.calls(), 1);
        assert_eq!(a.regenerate_context(&s).unwrap(), first);
        assert_eq!(mock.calls(), 2);
    }
}
