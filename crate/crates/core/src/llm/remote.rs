use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{ChatBackend, ChatRequest, LlmError, Result};

/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "EMOAUDIT_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    Timeout,
    Connection(String),
}

/// Minimal blocking HTTP POST, abstracted so retry logic can be tested
/// without a network.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: &str,
        body: &str,
        timeout: Duration,
    ) -> std::result::Result<HttpReply, TransportFailure>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| LlmError::Config(format!("http client: {e}")))?;
        Ok(Self { client })
    }
}

impl HttpTransport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: &str,
        body: &str,
        timeout: Duration,
    ) -> std::result::Result<HttpReply, TransportFailure> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .timeout(timeout)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportFailure::Timeout
                } else {
                    TransportFailure::Connection(e.to_string())
                }
            })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                TransportFailure::Timeout
            } else {
                TransportFailure::Connection(e.to_string())
            }
        })?;
        Ok(HttpReply { status, body })
    }
}

/// Monotonic time source; tests substitute a fake one.
pub trait Clock: Send + Sync {
    fn elapsed(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    start: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub api_base: String,
    pub api_key: String,
    /// Retries after the first attempt for timeouts, 429 and 5xx.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub max_requests_per_minute: Option<u32>,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(api_base: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            api_base: api_base.into(),
            api_key: api_key.into(),
            max_retries: 5,
            initial_backoff: Duration::from_secs(1),
            max_backoff: Duration::from_secs(60),
            max_requests_per_minute: None,
            timeout: Duration::from_secs(120),
        }
    }

    /// Read the credential from `EMOAUDIT_API_KEY`.
    pub fn from_env(api_base: impl Into<String>) -> Result<Self> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::Config(format!("{API_KEY_ENV} is not set")))?;
        Ok(Self::new(api_base, key))
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.api_base.trim_end_matches('/'))
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

/// Chat-completions client with exponential backoff and a sliding-window
/// request-rate cap.
pub struct RemoteBackend<T = ReqwestTransport, C = SystemClock> {
    config: RemoteConfig,
    transport: T,
    clock: C,
    window: Mutex<VecDeque<Duration>>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        Ok(Self::with_transport(
            config,
            ReqwestTransport::new()?,
            SystemClock::default(),
        ))
    }
}

impl<T: HttpTransport, C: Clock> RemoteBackend<T, C> {
    pub fn with_transport(config: RemoteConfig, transport: T, clock: C) -> Self {
        Self {
            config,
            transport,
            clock,
            window: Mutex::new(VecDeque::new()),
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }

    fn acquire_slot(&self) {
        let Some(limit) = self.config.max_requests_per_minute else {
            return;
        };
        let minute = Duration::from_secs(60);
        loop {
            let wait = {
                let mut window = self.window.lock().unwrap();
                let now = self.clock.elapsed();
                while window.front().is_some_and(|&t| now.saturating_sub(t) >= minute) {
                    window.pop_front();
                }
                if window.len() < limit.max(1) as usize {
                    window.push_back(now);
                    return;
                }
                (window[0] + minute).saturating_sub(now)
            };
            self.clock.sleep(wait);
        }
    }

    fn parse_content(body: &str) -> Result<String> {
        let value: serde_json::Value =
            serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))
    }
}

impl<T: HttpTransport, C: Clock> ChatBackend for RemoteBackend<T, C> {
    fn id(&self) -> String {
        format!("remote:{}", self.config.api_base.trim_end_matches('/'))
    }

    fn complete(&self, request: &ChatRequest) -> Result<String> {
        request.ensure_zero_temperature()?;
        let url = self.config.endpoint();
        let body = request.body_json().to_string();
        let mut attempt = 0;
        loop {
            self.acquire_slot();
            let outcome = self
                .transport
                .post_json(&url, &self.config.api_key, &body, self.config.timeout);
            let transient = match outcome {
                Ok(reply) if (200..300).contains(&reply.status) => return Self::parse_content(&reply.body),
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(LlmError::Auth { status: reply.status })
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    format!("HTTP {}", reply.status)
                }
                Ok(reply) => {
                    return Err(LlmError::Http {
                        status: reply.status,
                        body: reply.body,
                    })
                }
                Err(TransportFailure::Timeout) => "timeout".to_string(),
                Err(TransportFailure::Connection(e)) => e,
            };
            if attempt >= self.config.max_retries {
                return Err(LlmError::RetriesExhausted {
                    attempts: attempt + 1,
                    last: transient,
                });
            }
            log::debug!(
                "transient failure ({transient}), retry {} of {}",
                attempt + 1,
                self.config.max_retries
            );
            self.clock.sleep(self.config.backoff(attempt));
            attempt += 1;
        }
    }
}
