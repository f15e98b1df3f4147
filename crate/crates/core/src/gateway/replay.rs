use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{BackendReply, ChatBackend, ChatRequest, Exchange, GatewayError};
use crate::orchestrator::{RunRecord, RunStatus};

pub const REPLAY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub fingerprint: String,
    pub response: String,
}

/// Canned responses keyed by request fingerprint, consumed strictly in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub schema_version: u32,
    pub entries: Vec<ReplayEntry>,
}

impl Default for ReplayScript {
    fn default() -> Self {
        Self {
            schema_version: REPLAY_SCHEMA_VERSION,
            entries: Vec::new(),
        }
    }
}

impl ReplayScript {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            schema_version: REPLAY_SCHEMA_VERSION,
            entries: pairs
                .into_iter()
                .map(|(fingerprint, response)| ReplayEntry { fingerprint, response })
                .collect(),
        }
    }

    pub fn from_exchanges(exchanges: &[Exchange]) -> Self {
        Self::from_pairs(exchanges.iter().map(|e| (e.fingerprint.clone(), e.response.clone())))
    }

    /// Script that reproduces a completed run call for call.
    pub fn record(run: &RunRecord) -> Result<Self, GatewayError> {
        match &run.status {
            RunStatus::Completed => Ok(Self::from_exchanges(&run.exchanges)),
            RunStatus::Failed { error } => Err(GatewayError::IncompleteRun(format!(
                "run {} failed: {error}",
                run.config.run_id
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let script: Self =
            serde_json::from_str(&text).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        if script.schema_version != REPLAY_SCHEMA_VERSION {
            return Err(GatewayError::Config(format!(
                "{}: unsupported replay schema_version {}",
                path.display(),
                script.schema_version
            )));
        }
        Ok(script)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}

pub struct ReplayBackend {
    script: ReplayScript,
    cursor: Mutex<usize>,
}

impl ReplayBackend {
    pub fn new(script: ReplayScript) -> Self {
        Self {
            script,
            cursor: Mutex::new(0),
        }
    }

    pub fn consumed(&self) -> usize {
        *self.cursor.lock().expect("replay cursor poisoned")
    }
}

#[async_trait]
impl ChatBackend for ReplayBackend {
    async fn send(&self, request: &ChatRequest) -> Result<BackendReply, GatewayError> {
        let mut cursor = self.cursor.lock().expect("replay cursor poisoned");
        let index = *cursor;
        let entry = self
            .script
            .entries
            .get(index)
            .ok_or(GatewayError::ReplayExhausted { consumed: index })?;
        let actual = request.fingerprint();
        if entry.fingerprint != actual {
            return Err(GatewayError::ReplayMismatch {
                index,
                expected: entry.fingerprint.clone(),
                actual,
            });
        }
        *cursor += 1;
        Ok(BackendReply {
            text: entry.response.clone(),
            attempts: 1,
        })
    }
}
