use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, TeamRole};

/// Who produced a message: a team role, the single-agent baseline, or the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Speaker {
    #[serde(rename = "CO")]
    Coordinator,
    #[serde(rename = "PL")]
    Plant,
    #[serde(rename = "ME")]
    MonitorEvaluator,
    #[serde(rename = "IMP")]
    Implementer,
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "system")]
    System,
}

impl Speaker {
    pub fn role(self) -> Option<TeamRole> {
        match self {
            Speaker::Coordinator => Some(TeamRole::Coordinator),
            Speaker::Plant => Some(TeamRole::Plant),
            Speaker::MonitorEvaluator => Some(TeamRole::MonitorEvaluator),
            Speaker::Implementer => Some(TeamRole::Implementer),
            Speaker::Baseline | Speaker::System => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Coordinator => "CO",
            Speaker::Plant => "PL",
            Speaker::MonitorEvaluator => "ME",
            Speaker::Implementer => "IMP",
            Speaker::Baseline => "baseline",
            Speaker::System => "system",
        }
    }
}

impl From<TeamRole> for Speaker {
    fn from(role: TeamRole) -> Self {
        match role {
            TeamRole::Coordinator => Speaker::Coordinator,
            TeamRole::Plant => Speaker::Plant,
            TeamRole::MonitorEvaluator => Speaker::MonitorEvaluator,
            TeamRole::Implementer => Speaker::Implementer,
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Protocol phase a message belongs to. `Solo` marks baseline replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    WarmUp,
    TaskInitiation,
    PerspectiveSharing,
    Consensus,
    Solo,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::WarmUp => "warm_up",
            Phase::TaskInitiation => "task_initiation",
            Phase::PerspectiveSharing => "perspective_sharing",
            Phase::Consensus => "consensus",
            Phase::Solo => "solo",
        }
    }

    /// Whether the cross-step answer ledger is part of this phase's context.
    pub fn sees_log_history(self) -> bool {
        matches!(self, Phase::PerspectiveSharing | Phase::Consensus)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sampling configuration attached to every chat request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
}

impl SamplingParams {
    pub const DEFAULT_TOP_P: f64 = 0.9;
    pub const DEFAULT_TOP_K: u32 = 20;

    pub fn with_temperature(temperature: f64) -> Self {
        Self {
            temperature,
            top_p: Self::DEFAULT_TOP_P,
            top_k: Self::DEFAULT_TOP_K,
        }
    }

    /// Per-speaker defaults: CO 0.5, PL 0.8, ME 0.4, IMP 0.4, baseline 0.6.
    pub fn default_for(speaker: Speaker) -> Self {
        let temperature = match speaker {
            Speaker::Coordinator => 0.5,
            Speaker::Plant => 0.8,
            Speaker::MonitorEvaluator | Speaker::Implementer => 0.4,
            Speaker::Baseline | Speaker::System => 0.6,
        };
        Self::with_temperature(temperature)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ModelError::InvalidSampling(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ModelError::InvalidSampling(format!(
                "top_p must lie in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.top_k == 0 {
            return Err(ModelError::InvalidSampling("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Partial override of [`SamplingParams`] from a run manifest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
}

impl SamplingOverride {
    pub fn apply(&self, base: SamplingParams) -> SamplingParams {
        SamplingParams {
            temperature: self.temperature.unwrap_or(base.temperature),
            top_p: self.top_p.unwrap_or(base.top_p),
            top_k: self.top_k.unwrap_or(base.top_k),
        }
    }
}

/// One model output produced during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: Speaker,
    /// Zero for warm-up, otherwise the 1-based task step.
    pub step: u32,
    pub phase: Phase,
    pub content: String,
    pub sampling: SamplingParams,
    /// Set when the model returned no text.
    #[serde(default)]
    pub blank: bool,
}

impl Message {
    pub fn new(
        speaker: Speaker,
        step: u32,
        phase: Phase,
        content: impl Into<String>,
        sampling: SamplingParams,
    ) -> Result<Self, ModelError> {
        if (step == 0) != (phase == Phase::WarmUp) {
            return Err(ModelError::StepPhaseMismatch { step, phase });
        }
        let content = content.into();
        let blank = content.trim().is_empty();
        Ok(Self {
            speaker,
            step,
            phase,
            content,
            sampling,
            blank,
        })
    }
}

/// The two context buffers: final answers across steps and the live discussion of one step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histories {
    pub log_history: Vec<String>,
    pub step_history: Vec<Message>,
}

impl Histories {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn completed_steps(&self) -> usize {
        self.log_history.len()
    }

    pub fn begin_step(&mut self) {
        self.step_history.clear();
    }

    pub fn record(&mut self, message: Message) {
        self.step_history.push(message);
    }

    /// Appends a step answer and discards that step's discussion.
    pub fn commit_answer(&mut self, answer: impl Into<String>) {
        self.log_history.push(answer.into());
        self.step_history.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_defaults_match_hyperparameter_table() {
        let t = |s| SamplingParams::default_for(s).temperature;
        assert_eq!(t(Speaker::Coordinator), 0.5);
        assert_eq!(t(Speaker::Plant), 0.8);
        assert_eq!(t(Speaker::MonitorEvaluator), 0.4);
        assert_eq!(t(Speaker::Implementer), 0.4);
        assert_eq!(t(Speaker::Baseline), 0.6);
        let p = SamplingParams::default_for(Speaker::Plant);
        assert_eq!((p.top_p, p.top_k), (0.9, 20));
    }

    #[test]
    fn warm_up_is_step_zero_only() {
        let s = SamplingParams::default_for(Speaker::Plant);
        assert!(Message::new(Speaker::Plant, 0, Phase::WarmUp, "hi", s).is_ok());
        assert!(Message::new(Speaker::Plant, 1, Phase::WarmUp, "hi", s).is_err());
        assert!(Message::new(Speaker::Plant, 0, Phase::PerspectiveSharing, "hi", s).is_err());
    }

    #[test]
    fn empty_content_is_flagged_blank() {
        let s = SamplingParams::default_for(Speaker::Plant);
        let m = Message::new(Speaker::Plant, 2, Phase::PerspectiveSharing, "  ", s).unwrap();
        assert!(m.blank);
    }

    #[test]
    fn sampling_bounds() {
        assert!(SamplingParams::with_temperature(-0.1).validate().is_err());
        let mut p = SamplingParams::with_temperature(0.1);
        p.top_p = 0.0;
        assert!(p.validate().is_err());
        p.top_p = 1.0;
        p.top_k = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn commit_clears_step_history() {
        let mut h = Histories::new();
        let s = SamplingParams::default_for(Speaker::Coordinator);
        h.record(Message::new(Speaker::Coordinator, 1, Phase::TaskInitiation, "go", s).unwrap());
        h.commit_answer("answer");
        assert_eq!(h.completed_steps(), 1);
        assert!(h.step_history.is_empty());
    }
}
