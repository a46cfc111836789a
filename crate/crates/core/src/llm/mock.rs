use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{ChatBackend, ChatRequest, LlmError, PromptKind, RequestMeta, Result};
use crate::rng::keyed_hash;

const PHRASES_JSON: &str = include_str!("../../data/mock_phrases.json");

/// Conditions a request must satisfy for a scripted rule to fire. Absent
/// fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PromptKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_contains: Option<String>,
}

impl MatchRule {
    fn matches(&self, meta: &RequestMeta) -> bool {
        self.kind.is_none_or(|k| k == meta.kind)
            && self
                .label
                .as_ref()
                .is_none_or(|l| meta.labels.iter().any(|m| m.eq_ignore_ascii_case(l)))
            && self.id.as_ref().is_none_or(|id| *id == meta.sample_id)
            && self.text.as_ref().is_none_or(|t| *t == meta.text)
            && self
                .text_contains
                .as_ref()
                .is_none_or(|t| meta.text.contains(t.as_str()))
    }
}

/// A scripted response, or a scripted transport failure when `fail` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRule {
    #[serde(rename = "match")]
    pub matcher: MatchRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub respond: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<String>,
}

/// Deterministic response synthesis for requests no rule matches.
///
/// Evaluation answers "Yes." with probability `eval_yes_rate`, decided by a
/// hash of (seed, model, prompt). Generation appends one phrase per gold
/// label (at most `max_sentences`) drawn from a per-label phrase bank that
/// avoids the banned emotion words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerativeParams {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_yes_rate")]
    pub eval_yes_rate: f64,
    /// Repeat the post before the context, as chat models usually do.
    #[serde(default = "default_true")]
    pub echo: bool,
    #[serde(default = "default_max_sentences")]
    pub max_sentences: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrases: Option<IndexMap<String, Vec<String>>>,
}

fn default_yes_rate() -> f64 {
    0.3
}

fn default_true() -> bool {
    true
}

fn default_max_sentences() -> usize {
    2
}

impl Default for GenerativeParams {
    fn default() -> Self {
        Self {
            seed: 0,
            eval_yes_rate: default_yes_rate(),
            echo: true,
            max_sentences: default_max_sentences(),
            phrases: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub name: String,
    pub rules: Vec<ScenarioRule>,
    pub generative: Option<GenerativeParams>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioLine {
    Rule(ScenarioRule),
    Generative { generative: GenerativeParams },
}

impl Scenario {
    pub fn scripted(name: impl Into<String>, rules: Vec<ScenarioRule>) -> Self {
        Self {
            name: name.into(),
            rules,
            generative: None,
        }
    }

    pub fn generative(name: impl Into<String>, params: GenerativeParams) -> Self {
        Self {
            name: name.into(),
            rules: Vec::new(),
            generative: Some(params),
        }
    }

    /// Parse a scenario file: JSONL of rule lines plus at most one
    /// `{"generative": {...}}` line.
    pub fn parse(name: impl Into<String>, reader: impl BufRead) -> Result<Self> {
        let mut scenario = Scenario {
            name: name.into(),
            ..Default::default()
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LlmError::Config(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ScenarioLine =
                serde_json::from_str(&line).map_err(|e| LlmError::Config(format!("scenario line {}: {e}", i + 1)))?;
            match parsed {
                ScenarioLine::Rule(r) => {
                    if r.respond.is_none() && r.fail.is_none() {
                        return Err(LlmError::Config(format!(
                            "scenario line {}: rule needs \"respond\" or \"fail\"",
                            i + 1
                        )));
                    }
                    scenario.rules.push(r)
                }
                ScenarioLine::Generative { generative } => {
                    if scenario.generative.replace(generative).is_some() {
                        return Err(LlmError::Config(format!(
                            "scenario line {}: duplicate generative block",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::parse(name, std::io::BufReader::new(file))
    }
}

/// In-process backend answering from a [`Scenario`]. Identical requests always
/// yield identical responses.
pub struct MockBackend {
    scenario: Scenario,
    phrases: IndexMap<String, Vec<String>>,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(scenario: Scenario) -> Self {
        let phrases = scenario
            .generative
            .as_ref()
            .and_then(|g| g.phrases.clone())
            .unwrap_or_else(|| serde_json::from_str(PHRASES_JSON).expect("bundled phrases are valid"));
        Self {
            scenario,
            phrases,
            calls: AtomicUsize::new(0),
        }
    }

    /// Bundled label phrase bank.
    pub fn bundled_phrases() -> IndexMap<String, Vec<String>> {
        serde_json::from_str(PHRASES_JSON).expect("bundled phrases are valid")
    }

    /// Number of `complete` calls served.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn generate(&self, params: &GenerativeParams, request: &ChatRequest, meta: &RequestMeta) -> String {
        let prompt = format!("{}\n{}", request.model_id, request.canonical_prompt());
        match meta.kind {
            PromptKind::Eval => {
                let u = (keyed_hash(params.seed, &prompt) >> 11) as f64 / (1u64 << 53) as f64;
                if u < params.eval_yes_rate { "Yes." } else { "No." }.to_string()
            }
            PromptKind::Gen => {
                let sentences: Vec<&str> = meta
                    .labels
                    .iter()
                    .filter_map(|label| {
                        let bank = self.phrases.get(&label.to_lowercase())?;
                        if bank.is_empty() {
                            return None;
                        }
                        let pick = keyed_hash(params.seed, &format!("{label}\n{prompt}")) as usize % bank.len();
                        Some(bank[pick].as_str())
                    })
                    .take(params.max_sentences.max(1))
                    .collect();
                let appended = if sentences.is_empty() {
                    "That is all I have to say.".to_string()
                } else {
                    sentences.join(" ")
                };
                if params.echo {
                    format!("{} {appended}", meta.text)
                } else {
                    appended
                }
            }
        }
    }
}

/// Recover request metadata from the bundled prompt wording when the caller
/// did not attach any.
fn infer_meta(request: &ChatRequest) -> Option<RequestMeta> {
    let user = &request.messages.iter().find(|m| m.role == super::Role::User)?.content;
    if let Some(rest) = user.strip_prefix("Is the emotion of ") {
        let (label, rest) = rest.split_once(" well conveyed in this Reddit post? ")?;
        let text = rest.strip_suffix(" Answer yes or no.")?;
        return Some(RequestMeta {
            kind: PromptKind::Eval,
            sample_id: String::new(),
            labels: vec![label.to_string()],
            text: text.to_string(),
        });
    }
    let (_, rest) = user.split_once("convey the emotions of ")?;
    let (labels, _) = rest.split_once(", and no other emotions.")?;
    let (_, text) = rest.split_once("Do not change the words in the post itself. ")?;
    Some(RequestMeta {
        kind: PromptKind::Gen,
        sample_id: String::new(),
        labels: labels.split(", ").map(str::to_string).collect(),
        text: text.strip_suffix('.').unwrap_or(text).to_string(),
    })
}

impl ChatBackend for MockBackend {
    fn id(&self) -> String {
        format!("mock:{}", self.scenario.name)
    }

    fn complete(&self, request: &ChatRequest) -> Result<String> {
        request.ensure_zero_temperature()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let meta = request
            .meta
            .clone()
            .or_else(|| infer_meta(request))
            .ok_or_else(|| LlmError::NoScenarioMatch {
                kind: "unrecognized".into(),
                label: None,
            })?;
        if let Some(rule) = self.scenario.rules.iter().find(|r| r.matcher.matches(&meta)) {
            if let Some(reason) = &rule.fail {
                return Err(LlmError::Transport(format!("scripted failure: {reason}")));
            }
            return Ok(rule.respond.clone().unwrap_or_default());
        }
        match &self.scenario.generative {
            Some(params) => Ok(self.generate(params, request, &meta)),
            None => Err(LlmError::NoScenarioMatch {
                kind: meta.kind.as_str().to_string(),
                label: meta.labels.first().cloned(),
            }),
        }
    }
}
