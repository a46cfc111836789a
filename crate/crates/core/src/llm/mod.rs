//! Prompting, chat-completion transport, response parsing, context
//! validation and response caching.

mod auditor;
mod backend;
mod cache;
mod concurrency;
mod mock;
mod parse;
mod prompt;
mod remote;
mod validate;

pub use auditor::{AggregateRule, ContextAggregate, ContextAuditor, ContextVerdict, GeneratedContext};
pub use backend::ChatBackend;
pub use cache::{CacheKey, CacheKind, CacheRecord, CacheStats, ResponseCache};
pub use concurrency::map_bounded;
pub use mock::{GenerativeParams, MatchRule, MockBackend, Scenario, ScenarioRule};
pub use parse::{parse_yes_no, YesNo};
pub use prompt::{
    prompt_hash, ChatMessage, ChatRequest, PromptKind, PromptTemplate, RenderedPrompt, RequestMeta, Role,
};
pub use remote::{
    Clock, HttpReply, HttpTransport, RemoteBackend, RemoteConfig, ReqwestTransport, SystemClock, TransportFailure,
    API_KEY_ENV,
};
pub use validate::{
    count_sentences, extract_appended, validate_context, BannedHit, BannedStems, Extraction, ValidationReport,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum LlmError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("authentication failed (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("ambiguous yes/no response: {raw:?}")]
    Ambiguous { raw: String },
    #[error("pipeline requests must use temperature 0, got {0}")]
    NonZeroTemperature(f64),
    #[error("template error: {0}")]
    Template(String),
    #[error("no scenario rule matches {kind} request{}", label.as_ref().map(|l| format!(" for label {l:?}")).unwrap_or_default())]
    NoScenarioMatch { kind: String, label: Option<String> },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cache I/O error: {0}")]
    Cache(String),
}

impl LlmError {
    /// Errors caused by talking to the backend, as opposed to interpreting
    /// its output.
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            LlmError::Transport(_)
                | LlmError::RetriesExhausted { .. }
                | LlmError::Auth { .. }
                | LlmError::Http { .. }
                | LlmError::MalformedResponse(_)
                | LlmError::NoScenarioMatch { .. }
        )
    }
}

pub type Result<T, E = LlmError> = std::result::Result<T, E>;
