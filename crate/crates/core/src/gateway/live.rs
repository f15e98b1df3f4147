use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use serde_json::{json, Value};

use super::{BackendReply, ChatBackend, ChatRequest, EndpointConfig, GatewayError};

/// OpenAI-compatible chat-completion client with retry and backoff.
pub struct OpenAiBackend {
    config: EndpointConfig,
    client: reqwest::Client,
    api_key: Option<String>,
    top_k: AtomicBool,
}

enum Failure {
    Retryable(String),
    Fatal(String),
    RejectedTopK(String),
}

impl OpenAiBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, GatewayError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        let api_key = config.api_key();
        let top_k = AtomicBool::new(config.send_top_k);
        Ok(Self {
            config,
            client,
            api_key,
            top_k,
        })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn body(&self, request: &ChatRequest) -> Value {
        let messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        let mut body = json!({
            "model": request.model,
            "messages": messages,
            "temperature": request.sampling.temperature,
            "top_p": request.sampling.top_p,
        });
        if self.top_k.load(Ordering::Relaxed) {
            body["top_k"] = json!(request.sampling.top_k);
        }
        if let Some(max) = self.config.max_tokens {
            body["max_tokens"] = json!(max);
        }
        body
    }

    async fn attempt(&self, request: &ChatRequest) -> Result<String, Failure> {
        let mut builder = self.client.post(self.url()).json(&self.body(request));
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .await
            .map_err(|e| Failure::Retryable(format!("transport: {e}")))?;
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| Failure::Retryable(format!("reading body: {e}")))?;
        if status.is_server_error() {
            return Err(Failure::Retryable(format!("HTTP {status}: {}", snippet(&text))));
        }
        if !status.is_success() {
            if self.top_k.load(Ordering::Relaxed) && text.contains("top_k") {
                return Err(Failure::RejectedTopK(text));
            }
            return Err(Failure::Fatal(format!("HTTP {status}: {}", snippet(&text))));
        }
        extract_content(&text).map_err(Failure::Fatal)
    }
}

fn snippet(text: &str) -> &str {
    match text.char_indices().nth(300) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

fn extract_content(body: &str) -> Result<String, String> {
    let value: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    let message = value
        .pointer("/choices/0/message")
        .ok_or_else(|| format!("response lacks choices[0].message: {}", snippet(body)))?;
    match message.get("content") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Ok(String::new()),
        Some(other) => Err(format!("unexpected content type: {other}")),
    }
}

#[async_trait]
impl ChatBackend for OpenAiBackend {
    async fn send(&self, request: &ChatRequest) -> Result<BackendReply, GatewayError> {
        let mut attempts = 0u32;
        let mut retries = 0u32;
        loop {
            attempts += 1;
            match self.attempt(request).await {
                Ok(text) => return Ok(BackendReply { text, attempts }),
                Err(Failure::RejectedTopK(body)) => {
                    tracing::warn!(
                        endpoint = %self.config.base_url,
                        "endpoint rejected top_k; resending without it: {}",
                        snippet(&body)
                    );
                    self.top_k.store(false, Ordering::Relaxed);
                }
                Err(Failure::Fatal(message)) => return Err(GatewayError::Endpoint { attempts, message }),
                Err(Failure::Retryable(message)) => {
                    if retries >= self.config.max_retries {
                        return Err(GatewayError::Endpoint { attempts, message });
                    }
                    let delay = self.config.backoff_ms.saturating_mul(1 << retries.min(16));
                    tracing::warn!(attempt = attempts, delay_ms = delay, "retrying: {message}");
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                    retries += 1;
                }
            }
        }
    }
}
