//! Domain types shared across the harness and the prompt templating built on them.

mod message;
mod prompts;
mod role;
pub mod template;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use message::{Histories, Message, Phase, SamplingOverride, SamplingParams, Speaker};
pub use prompts::{TemplateKind, TemplateSet};
pub use role::{default_roles, load_role_pack, RoleSpec, TeamRole};
pub use template::{Template, TemplateError};

use crate::gateway::EndpointConfig;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("role {0} appears among the other members")]
    DuplicateRole(TeamRole),
    #[error("unknown team role `{0}`")]
    UnknownRole(String),
    #[error("scenario body is empty")]
    EmptyScenario,
    #[error("phase {0} requires a step spec")]
    MissingStepSpec(Phase),
    #[error("phase {0} has no instruction prompt")]
    NoPhasePrompt(Phase),
    #[error("step {step} is not valid for phase {phase}")]
    StepPhaseMismatch { step: u32, phase: Phase },
    #[error("invalid sampling parameters: {0}")]
    InvalidSampling(String),
    #[error("unknown mode `{0}` (expected teamllm, baseline or ablation)")]
    UnknownMode(String),
    #[error("role pack: {0}")]
    RolePack(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("io: {0}")]
    Io(String),
}

/// One task step: number, name, description and output requirements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSpec {
    pub step_number: u32,
    pub step_name: String,
    pub step_description: String,
    pub step_output: String,
}

/// Experimental condition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Four role-bound agents running warm-up and three-phase collaboration.
    Teamllm,
    /// One agent, one continuous conversation.
    Baseline,
    /// Four agents with the role-play prompt replaced by a neutral teammate prompt.
    Ablation,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Teamllm => "teamllm",
            Mode::Baseline => "baseline",
            Mode::Ablation => "ablation",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "teamllm" => Ok(Mode::Teamllm),
            "baseline" => Ok(Mode::Baseline),
            "ablation" => Ok(Mode::Ablation),
            other => Err(ModelError::UnknownMode(other.to_string())),
        }
    }
}

fn default_language() -> String {
    "English".to_string()
}

/// Everything needed to execute one run; persisted as the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub run_id: String,
    pub mode: Mode,
    #[serde(default)]
    pub endpoint: EndpointConfig,
    pub model: String,
    pub scenario_id: String,
    /// Step pack file; the shipped six-step pack when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_pack: Option<String>,
    /// Scenario pack file; the shipped pack when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_pack: Option<String>,
    /// Template directory overriding individual shipped templates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sampling_overrides: BTreeMap<Speaker, SamplingOverride>,
    #[serde(default = "default_language")]
    pub response_language: String,
}

impl RunConfig {
    pub fn new(
        run_id: impl Into<String>,
        mode: Mode,
        model: impl Into<String>,
        scenario_id: impl Into<String>,
    ) -> Self {
        Self {
            run_id: run_id.into(),
            mode,
            endpoint: EndpointConfig::default(),
            model: model.into(),
            scenario_id: scenario_id.into(),
            step_pack: None,
            scenario_pack: None,
            templates: None,
            sampling_overrides: BTreeMap::new(),
            response_language: default_language(),
        }
    }

    /// Role defaults with any manifest override applied.
    pub fn sampling_for(&self, speaker: Speaker) -> SamplingParams {
        let base = SamplingParams::default_for(speaker);
        self.sampling_overrides.get(&speaker).map_or(base, |o| o.apply(base))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.run_id.trim().is_empty() {
            return Err(ModelError::MissingField("run_id"));
        }
        if self.model.trim().is_empty() {
            return Err(ModelError::MissingField("model"));
        }
        if self.scenario_id.trim().is_empty() {
            return Err(ModelError::MissingField("scenario_id"));
        }
        for speaker in [
            Speaker::Coordinator,
            Speaker::Plant,
            Speaker::MonitorEvaluator,
            Speaker::Implementer,
            Speaker::Baseline,
        ] {
            self.sampling_for(speaker).validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_with_overrides() {
        let json = r#"{
            "run_id": "A05_FS10",
            "mode": "teamllm",
            "model": "kimi-k2",
            "scenario_id": "FS10",
            "sampling_overrides": {"PL": {"temperature": 0.9}}
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.response_language, "English");
        assert_eq!(cfg.sampling_for(Speaker::Plant).temperature, 0.9);
        assert_eq!(cfg.sampling_for(Speaker::Plant).top_k, 20);
        assert_eq!(cfg.sampling_for(Speaker::Coordinator).temperature, 0.5);
        cfg.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_override_fails_validation() {
        let mut cfg = RunConfig::new("r", Mode::Baseline, "m", "FS10");
        cfg.sampling_overrides.insert(
            Speaker::Baseline,
            SamplingOverride {
                top_p: Some(1.5),
                ..Default::default()
            },
        );
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("Ablation".parse::<Mode>().unwrap(), Mode::Ablation);
        assert!("solo".parse::<Mode>().is_err());
    }
}
