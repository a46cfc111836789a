use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LlmError, Result};
use crate::dataset::{EmotionTaxonomy, Sample};

const EMOTION_WORDS: &str = "admiration, amusement, anger, annoyance, approval, caring, confusion, \
curiosity, desire, disappointment, disapproval, disgust, embarrassment, excitement, fear, gratitude, \
grief, joy, love, nervousness, optimism, pride, realization, relief, remorse, sadness, surprise";

const PLACEHOLDERS: [&str; 3] = ["gt_emotions", "text", "emotion"];

/// A system/user prompt pair with `__gt_emotions__`, `__text__` and
/// `__emotion__` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system_text: String,
    pub user_text: String,
}

impl PromptTemplate {
    /// Context generation prompt with the banned emotion-word list.
    pub fn generation() -> Self {
        Self {
            system_text: format!(
                "You are a Reddit user editing your post. You are banned from using these words, \
                 or any forms of them: {EMOTION_WORDS}"
            ),
            user_text: "Add one or two sentences to this Reddit post to convey the emotions of \
                        __gt_emotions__, and no other emotions. Add the sentences at the end of the post. \
                        Do not change the words in the post itself. __text__."
                .to_string(),
        }
    }

    /// Context evaluation prompt, asked once per gold label.
    pub fn evaluation() -> Self {
        Self {
            system_text: "You are a Reddit user reading posts.".to_string(),
            user_text: "Is the emotion of __emotion__ well conveyed in this Reddit post? __text__ Answer yes or no."
                .to_string(),
        }
    }

    /// Substitute placeholders in a single left-to-right pass. Inserted values
    /// are never rescanned, so placeholder-like text inside a sample is kept
    /// verbatim. A placeholder present in the template without a value is an
    /// error.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<RenderedPrompt> {
        Ok(RenderedPrompt {
            system: substitute(&self.system_text, values)?,
            user: substitute(&self.user_text, values)?,
        })
    }

    pub fn render_generation(&self, sample: &Sample, taxonomy: &EmotionTaxonomy) -> Result<RenderedPrompt> {
        if sample.labels.is_empty() {
            return Err(LlmError::Template(format!("sample {:?} has no gold labels", sample.id)));
        }
        let emotions = sample.label_names(taxonomy).join(", ");
        self.render(&[("gt_emotions", &emotions), ("text", &sample.text)])
    }

    pub fn render_evaluation(&self, sample: &Sample, label: &str) -> Result<RenderedPrompt> {
        self.render(&[("emotion", label), ("text", &sample.text)])
    }
}

fn substitute(template: &str, values: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(start) = rest.find("__") {
        let after = &rest[start + 2..];
        let hit = PLACEHOLDERS
            .iter()
            .find(|name| after.starts_with(**name) && after[name.len()..].starts_with("__"));
        match hit {
            Some(name) => {
                let value = values
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| LlmError::Template(format!("unresolved placeholder __{name}__")))?;
                out.push_str(&rest[..start]);
                out.push_str(value);
                rest = &after[name.len() + 2..];
            }
            None => {
                out.push_str(&rest[..start + 2]);
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    /// Canonical single-string form used for cache keys and hashing.
    pub fn canonical(&self) -> String {
        format!("system: {}\nuser: {}", self.system, self.user)
    }

    pub fn hash(&self) -> String {
        prompt_hash(&self.canonical())
    }
}

/// Lowercase hex SHA-256.
pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Eval,
    Gen,
}

impl PromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Eval => "eval",
            PromptKind::Gen => "gen",
        }
    }
}

/// Side-channel description of a pipeline request. Never sent over the wire;
/// test doubles use it to pick responses.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestMeta {
    pub kind: PromptKind,
    pub sample_id: String,
    pub labels: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub meta: Option<RequestMeta>,
}

impl ChatRequest {
    /// A temperature-0 request with one system and one user message.
    pub fn new(model_id: impl Into<String>, prompt: &RenderedPrompt) -> Self {
        Self {
            model_id: model_id.into(),
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: prompt.system.clone(),
                },
                ChatMessage {
                    role: Role::User,
                    content: prompt.user.clone(),
                },
            ],
            temperature: 0.0,
            max_tokens: None,
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: RequestMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub(crate) fn ensure_zero_temperature(&self) -> Result<()> {
        if self.temperature != 0.0 {
            return Err(LlmError::NonZeroTemperature(self.temperature));
        }
        Ok(())
    }

    /// Chat-completions request body.
    pub fn body_json(&self) -> serde_json::Value {
        let temperature = if self.temperature == 0.0 {
            serde_json::json!(0)
        } else {
            serde_json::json!(self.temperature)
        };
        let mut body = serde_json::json!({
            "model": self.model_id,
            "messages": self.messages,
            "temperature": temperature,
        });
        if let Some(max) = self.max_tokens {
            body["max_tokens"] = serde_json::json!(max);
        }
        body
    }

    /// System and user text joined as in [`RenderedPrompt::canonical`].
    pub fn canonical_prompt(&self) -> String {
        let find = |role| {
            self.messages
                .iter()
                .filter(|m| m.role == role)
                .map(|m| m.content.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        };
        format!("system: {}\nuser: {}", find(Role::System), find(Role::User))
    }
}
