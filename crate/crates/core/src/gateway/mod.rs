//! Uniform chat-completion access.
//!
//! A [`Gateway`] wraps one [`ChatBackend`] (live HTTP, replay script or an
//! in-process stub) and appends an [`Exchange`] to the caller's log for every
//! completed call. Gateways hold no per-run state, so independent runs may
//! share one.

mod config;
mod live;
mod replay;
mod request;
mod stub;

use std::sync::Arc;

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{EndpointConfig, EndpointKind};
pub use live::OpenAiBackend;
pub use replay::{ReplayBackend, ReplayEntry, ReplayScript};
pub use request::{ChatMessage, ChatRequest, ChatRole};
pub use stub::{ScriptedBackend, StubBackend};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("endpoint failed after {attempts} attempt(s): {message}")]
    Endpoint { attempts: u32, message: String },
    #[error("replay mismatch at entry {index}: script expects {expected}, request hashes to {actual}")]
    ReplayMismatch {
        index: usize,
        expected: String,
        actual: String,
    },
    #[error("replay script exhausted after {consumed} entries")]
    ReplayExhausted { consumed: usize },
    #[error("cannot record a run that did not complete: {0}")]
    IncompleteRun(String),
    #[error("endpoint configuration: {0}")]
    Config(String),
}

/// Reply from a backend with the number of attempts it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub attempts: u32,
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn send(&self, request: &ChatRequest) -> Result<BackendReply, GatewayError>;
}

/// One request/response pair as observed by the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub fingerprint: String,
    pub request: ChatRequest,
    pub response: String,
    pub timestamp: DateTime<Utc>,
    pub attempts: u32,
}

#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(backend: impl ChatBackend + 'static) -> Self {
        Self {
            backend: Arc::new(backend),
        }
    }

    pub fn from_arc(backend: Arc<dyn ChatBackend>) -> Self {
        Self { backend }
    }

    pub fn replay(script: ReplayScript) -> Self {
        Self::new(ReplayBackend::new(script))
    }

    /// Builds the backend described by an endpoint config.
    pub fn from_config(config: &EndpointConfig) -> Result<Self, GatewayError> {
        match config.kind {
            EndpointKind::Openai => Ok(Self::new(OpenAiBackend::new(config.clone())?)),
            EndpointKind::Stub => Ok(Self::new(StubBackend)),
        }
    }

    /// Sends `request` and appends the exchange to `log` on success.
    pub async fn complete(&self, request: &ChatRequest, log: &mut Vec<Exchange>) -> Result<String, GatewayError> {
        let reply = self.backend.send(request).await?;
        log.push(Exchange {
            fingerprint: request.fingerprint(),
            request: request.clone(),
            response: reply.text.clone(),
            timestamp: Utc::now(),
            attempts: reply.attempts,
        });
        Ok(reply.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SamplingParams;

    fn request(text: &str) -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage::user(text)],
            sampling: SamplingParams::with_temperature(0.6),
        }
    }

    #[tokio::test]
    async fn replay_identity_lookup() {
        let req = request("hi");
        let script = ReplayScript::from_pairs([(req.fingerprint(), "hello".to_string())]);
        let gateway = Gateway::replay(script);
        let mut log = Vec::new();
        assert_eq!(gateway.complete(&req, &mut log).await.unwrap(), "hello");
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].attempts, 1);
    }

    #[tokio::test]
    async fn replay_mismatch_is_an_error() {
        let script = ReplayScript::from_pairs([(request("hi").fingerprint(), "hello".to_string())]);
        let gateway = Gateway::replay(script);
        let mut log = Vec::new();
        let err = gateway.complete(&request("other"), &mut log).await.unwrap_err();
        assert!(matches!(err, GatewayError::ReplayMismatch { index: 0, .. }));
        assert!(log.is_empty());
    }

    #[tokio::test]
    async fn replay_exhaustion() {
        let gateway = Gateway::replay(ReplayScript::default());
        let err = gateway.complete(&request("x"), &mut Vec::new()).await.unwrap_err();
        assert!(matches!(err, GatewayError::ReplayExhausted { consumed: 0 }));
    }
}
