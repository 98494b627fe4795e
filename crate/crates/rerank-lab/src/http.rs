//! Chat-completion HTTP backend.
//!
//! Wire contract: POST JSON `{model, messages: [{role, content}...],
//! temperature, max_tokens}`; the ranking text is read from
//! `choices[0].message.content`. Transport errors and 429/5xx statuses are
//! retried with exponential backoff; other statuses fail immediately.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::{RankerBackend, WindowView};
use crate::error::BackendError;
use crate::rollout::MessageSequence;

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// Total attempts per window, including the first.
    pub attempts: u32,
    /// Backoff before the second attempt; doubles each retry.
    pub initial_backoff: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            api_key: None,
            // Deterministic decoding by default; raise for rollout sampling.
            temperature: 0.0,
            max_tokens: 2048,
            timeout: Duration::from_secs(60),
            attempts: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a MessageSequence,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

pub struct HttpBackend {
    cfg: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(cfg: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { cfg, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (bool, BackendError)> {
        let mut req = self.agent.post(&self.cfg.endpoint);
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| (true, BackendError::Transport(e.to_string())))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            let retryable = status == 429 || status >= 500;
            return Err((retryable, BackendError::Status { status, body: text }));
        }
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| (false, BackendError::Malformed(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or((false, BackendError::Malformed("empty choices array".into())))
    }
}

impl RankerBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn wants_messages(&self) -> bool {
        true
    }

    fn wire_request(&self, messages: &MessageSequence) -> serde_json::Value {
        serde_json::to_value(ChatRequest {
            model: &self.cfg.model,
            messages,
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_tokens,
        })
        .expect("request serializes")
    }

    fn rank_window(
        &self,
        messages: &MessageSequence,
        _window: &WindowView<'_>,
    ) -> Result<String, BackendError> {
        let body = self.wire_request(messages);
        let mut backoff = self.cfg.initial_backoff;
        let mut last_err = BackendError::Transport("no attempts configured".into());
        for attempt in 0..self.cfg.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.attempt(&body) {
                Ok(content) => return Ok(content),
                Err((retryable, err)) => {
                    if !retryable {
                        return Err(err);
                    }
                    last_err = err;
                }
            }
        }
        Err(last_err)
    }
}
