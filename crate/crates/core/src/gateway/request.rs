use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::SamplingParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

impl ChatRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ChatRole::System => "system",
            ChatRole::User => "user",
            ChatRole::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// A chat-completion request exactly as the orchestrator assembled it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub sampling: SamplingParams,
}

impl ChatRequest {
    /// Stable hash over model, sampling and the ordered role/content pairs.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"model\0");
        hasher.update(self.model.as_bytes());
        hasher.update(b"\0temperature\0");
        hasher.update(self.sampling.temperature.to_bits().to_be_bytes());
        hasher.update(b"top_p\0");
        hasher.update(self.sampling.top_p.to_bits().to_be_bytes());
        hasher.update(b"top_k\0");
        hasher.update(self.sampling.top_k.to_be_bytes());
        for message in &self.messages {
            hasher.update(message.role.as_str().as_bytes());
            hasher.update(b":");
            hasher.update((message.content.len() as u64).to_be_bytes());
            hasher.update(message.content.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Concatenated text of every message, for containment checks.
    pub fn full_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(content: &str) -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage::system("sys"), ChatMessage::user(content)],
            sampling: SamplingParams::with_temperature(0.5),
        }
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        assert_eq!(req("a").fingerprint(), req("a").fingerprint());
        assert_ne!(req("a").fingerprint(), req("b").fingerprint());
        let mut r = req("a");
        r.sampling.temperature = 0.4;
        assert_ne!(r.fingerprint(), req("a").fingerprint());
    }

    #[test]
    fn message_boundaries_matter() {
        let a = ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage::user("ab"), ChatMessage::user("c")],
            sampling: SamplingParams::with_temperature(0.5),
        };
        let b = ChatRequest {
            messages: vec![ChatMessage::user("a"), ChatMessage::user("bc")],
            ..a.clone()
        };
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
