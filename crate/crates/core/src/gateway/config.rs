use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointKind {
    /// OpenAI-compatible `/chat/completions` over HTTP.
    #[default]
    Openai,
    /// Offline canned responses; see [`super::StubBackend`].
    Stub,
}

fn default_base_url() -> String {
    "http://127.0.0.1:8000/v1".to_string()
}

fn default_api_key_env() -> Option<String> {
    Some("OPENAI_API_KEY".to_string())
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    1000
}

fn default_true() -> bool {
    true
}

/// Where and how to reach the model. The API key itself never lives here,
/// only the name of the environment variable holding it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    #[serde(default)]
    pub kind: EndpointKind,
    #[serde(default = "default_base_url")]
    pub base_url: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Retries after the first attempt.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff delay; doubles on every further retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_true")]
    pub send_top_k: bool,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            kind: EndpointKind::default(),
            base_url: default_base_url(),
            api_key_env: default_api_key_env(),
            max_tokens: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            send_top_k: true,
        }
    }
}

pub const ENV_BASE_URL: &str = "TEAMHARNESS_BASE_URL";
pub const ENV_API_KEY_ENV: &str = "TEAMHARNESS_API_KEY_ENV";
pub const ENV_ENDPOINT_KIND: &str = "TEAMHARNESS_ENDPOINT";

impl EndpointConfig {
    pub fn stub() -> Self {
        Self {
            kind: EndpointKind::Stub,
            ..Self::default()
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `TEAMHARNESS_*` environment overrides.
    pub fn with_env_overrides(self) -> Result<Self, GatewayError> {
        self.with_overrides(|k| std::env::var(k).ok())
    }

    pub fn with_overrides(mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<Self, GatewayError> {
        if let Some(url) = lookup(ENV_BASE_URL) {
            self.base_url = url;
        }
        if let Some(var) = lookup(ENV_API_KEY_ENV) {
            self.api_key_env = Some(var).filter(|v| !v.is_empty());
        }
        if let Some(kind) = lookup(ENV_ENDPOINT_KIND) {
            self.kind = match kind.to_ascii_lowercase().as_str() {
                "openai" => EndpointKind::Openai,
                "stub" => EndpointKind::Stub,
                other => {
                    return Err(GatewayError::Config(format!(
                        "{ENV_ENDPOINT_KIND}={other}: expected openai or stub"
                    )))
                }
            };
        }
        Ok(self)
    }

    pub fn api_key(&self) -> Option<String> {
        self.api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty())
    }
}
