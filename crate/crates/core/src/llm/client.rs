//! Chat-completions HTTP submission with retry.

use std::time::Duration;

use serde_json::Value;

use super::prompt::LlmRequest;
use crate::error::{LofError, Result};

/// Environment variable holding the provider credential.
pub const API_KEY_ENV: &str = "LOF_API_KEY";

#[derive(Clone)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub api_key: Option<String>,
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl std::fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "***"))
            .field("max_attempts", &self.max_attempts)
            .field("initial_backoff", &self.initial_backoff)
            .finish()
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }

    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(base_url: impl Into<String>) -> Self {
        Self {
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            ..Self::new(base_url)
        }
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    /// Replaces any occurrence of the credential in `text`.
    pub fn redact(&self, text: &str) -> String {
        match &self.api_key {
            Some(key) if !key.is_empty() => text.replace(key.as_str(), "***"),
            _ => text.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmitOutcome {
    pub text: String,
    pub attempts: u32,
    /// Sleep before each retry, in order.
    pub backoff_delays: Vec<Duration>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(LofError),
}

pub async fn submit(
    client: &reqwest::Client,
    req: &LlmRequest,
    endpoint: &EndpointConfig,
) -> Result<SubmitOutcome> {
    let url = endpoint.url();
    let body = req.body();
    let attempts_allowed = endpoint.max_attempts.max(1);
    let mut delays = Vec::new();
    let mut last_reason = String::new();

    for attempt in 1..=attempts_allowed {
        log::info!(
            "POST {} model={} bytes={} attempt={attempt} auth={}",
            endpoint.redact(&url),
            req.model_id,
            body.len(),
            if endpoint.api_key.is_some() { "Bearer ***" } else { "none" }
        );
        match attempt_once(client, &url, &body, req.timeout, endpoint).await {
            Attempt::Done(text) => {
                log::info!("response attempt={attempt} chars={}", text.len());
                return Ok(SubmitOutcome {
                    text,
                    attempts: attempt,
                    backoff_delays: delays,
                });
            }
            Attempt::Fatal(e) => {
                log::warn!("request failed: {}", endpoint.redact(&e.to_string()));
                return Err(e);
            }
            Attempt::Retry(reason) => {
                let reason = endpoint.redact(&reason);
                log::warn!("attempt {attempt} failed: {reason}");
                last_reason = reason;
                if attempt < attempts_allowed {
                    let delay = endpoint.initial_backoff * 2u32.pow(attempt - 1);
                    delays.push(delay);
                    tokio::time::sleep(delay).await;
                }
            }
        }
    }
    Err(LofError::RequestFailed {
        attempts: attempts_allowed,
        reason: last_reason,
    })
}

async fn attempt_once(
    client: &reqwest::Client,
    url: &str,
    body: &[u8],
    timeout: Duration,
    endpoint: &EndpointConfig,
) -> Attempt {
    let mut builder = client
        .post(url)
        .header("content-type", "application/json")
        .timeout(timeout)
        .body(body.to_vec());
    if let Some(key) = &endpoint.api_key {
        builder = builder.bearer_auth(key);
    }
    let response = match builder.send().await {
        Ok(r) => r,
        Err(e) if e.is_timeout() => return Attempt::Retry(format!("timeout: {e}")),
        Err(e) => return Attempt::Retry(format!("transport: {e}")),
    };
    let status = response.status();
    let text = match response.text().await {
        Ok(t) => t,
        Err(e) => return Attempt::Retry(format!("reading body: {e}")),
    };
    if status.as_u16() == 429 || status.is_server_error() {
        return Attempt::Retry(format!("HTTP {status}"));
    }
    if !status.is_success() {
        return Attempt::Fatal(LofError::RequestFailed {
            attempts: 1,
            reason: format!("HTTP {status}: {}", endpoint.redact(&truncate(&text, 200))),
        });
    }
    match extract_completion(&text) {
        Ok(content) => Attempt::Done(content),
        Err(e) => Attempt::Fatal(e),
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Pulls `choices[0].message.content` out of a chat-completions body.
pub fn extract_completion(body: &str) -> Result<String> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| LofError::MalformedResponse(format!("non-JSON body: {e}")))?;
    match &value["choices"][0]["message"]["content"] {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        Value::Null => Err(LofError::MalformedResponse(
            "missing choices[0].message.content".into(),
        )),
        other => Err(LofError::MalformedResponse(format!(
            "unexpected content type: {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_extraction() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"LoF 2"}}]}"#;
        assert_eq!(extract_completion(body).unwrap(), "LoF 2");
        let parts = r#"{"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]}"#;
        assert_eq!(extract_completion(parts).unwrap(), "ab");
        assert!(extract_completion("<html>").is_err());
        assert!(extract_completion("{}").is_err());
    }

    #[test]
    fn url_and_redaction() {
        let mut cfg = EndpointConfig::new("http://localhost:8089/");
        assert_eq!(cfg.url(), "http://localhost:8089/chat/completions");
        cfg.api_key = Some("sk-secret".into());
        assert_eq!(cfg.redact("token sk-secret here"), "token *** here");
        assert!(!format!("{cfg:?}").contains("sk-secret"));
    }
}
