//! Runs the collaboration protocol: warm-up, the three-phase loop per step,
//! and the single-agent baseline.
//!
//! Two buffers carry context. `log_history` keeps one final answer per
//! finished step; `step_history` holds the current step's discussion and is
//! dropped once the step's answer is committed. Warm-up chatter is recorded
//! in the transcript but never reaches a step context.

mod context;
mod persist;
mod team;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::{assemble_context, serialize_log_history, serialize_step_history};
pub use persist::{
    load_answers, load_record, parse_answers_text, read_transcript, transcript_lines, AnswerIndexEntry, TranscriptLine,
    ANSWERS_FILE, ANSWER_INDEX_FILE, MANIFEST_FILE, RECORD_FILE, TRANSCRIPT_FILE,
};
pub use team::{Member, Team};

use crate::gateway::{ChatMessage, ChatRequest, Exchange, Gateway, GatewayError};
use crate::model::{
    Histories, Message, Mode, ModelError, Phase, RoleSpec, RunConfig, Speaker, StepSpec, TeamRole, TemplateSet,
};
use crate::tasks::Scenario;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("{role} cannot act in phase {phase}")]
    PhaseRoleMismatch { role: TeamRole, phase: Phase },
    #[error("history out of sync for step {step}: log_history has {log} entries, step_history has {pending}")]
    HistoryDesync { step: u32, log: usize, pending: usize },
    #[error("steps must be numbered 1..=N in order; position {position} holds step {found}")]
    StepOrder { position: usize, found: u32 },
    #[error("invalid team: {0}")]
    InvalidTeam(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("io: {0}")]
    Io(String),
}

/// Mutable state of one executing run.
#[derive(Debug, Default)]
pub struct RunLog {
    pub transcript: Vec<Message>,
    pub exchanges: Vec<Exchange>,
}

/// Everything a run needs besides the gateway.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub config: RunConfig,
    pub steps: Vec<StepSpec>,
    pub scenario: Scenario,
    pub roles: Vec<RoleSpec>,
    pub templates: TemplateSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { error: String },
}

/// Histories as they stood right before a step's answer was committed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSnapshot {
    pub step: u32,
    pub histories: Histories,
}

/// Immutable result of a run, complete or failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub status: RunStatus,
    pub transcript: Vec<Message>,
    pub snapshots: Vec<StepSnapshot>,
    pub answers: Vec<String>,
    pub exchanges: Vec<Exchange>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl RunRecord {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Equality ignoring wall-clock fields.
    pub fn same_content(&self, other: &RunRecord) -> bool {
        let strip = |r: &RunRecord| {
            let mut r = r.clone();
            r.started_at = DateTime::<Utc>::UNIX_EPOCH;
            r.finished_at = DateTime::<Utc>::UNIX_EPOCH;
            for e in &mut r.exchanges {
                e.timestamp = DateTime::<Utc>::UNIX_EPOCH;
            }
            r
        };
        strip(self) == strip(other)
    }

    pub fn requests(&self) -> impl Iterator<Item = &ChatRequest> {
        self.exchanges.iter().map(|e| &e.request)
    }
}

async fn speak(
    gateway: &Gateway,
    request: ChatRequest,
    speaker: Speaker,
    step: u32,
    phase: Phase,
    log: &mut RunLog,
) -> Result<Message, OrchestratorError> {
    let text = gateway.complete(&request, &mut log.exchanges).await?;
    let message = Message::new(speaker, step, phase, text, request.sampling)?;
    log.transcript.push(message.clone());
    Ok(message)
}

/// Each member speaks once, in seat order, seeing the greetings so far.
pub async fn warm_up(team: &Team, inputs: &RunInputs, log: &mut RunLog) -> Result<Vec<Message>, OrchestratorError> {
    let mut scratch = Histories::new();
    for role in TeamRole::ALL {
        let speaker = Speaker::from(role);
        let request = assemble_context(
            team,
            &inputs.templates,
            &inputs.config.model,
            inputs.config.sampling_for(speaker),
            role,
            Phase::WarmUp,
            &scratch,
            None,
        )?;
        let message = speak(&team.member(role).gateway, request, speaker, 0, Phase::WarmUp, log).await?;
        scratch.record(message);
    }
    Ok(scratch.step_history)
}

/// Task initiation, perspective sharing and consensus for one step.
///
/// Returns the consensus text, which is also committed to `histories`.
pub async fn run_step(
    team: &Team,
    inputs: &RunInputs,
    spec: &StepSpec,
    histories: &mut Histories,
    log: &mut RunLog,
) -> Result<(String, Vec<Message>), OrchestratorError> {
    if histories.log_history.len() + 1 != spec.step_number as usize || !histories.step_history.is_empty() {
        return Err(OrchestratorError::HistoryDesync {
            step: spec.step_number,
            log: histories.log_history.len(),
            pending: histories.step_history.len(),
        });
    }
    let turns = [
        (TeamRole::Coordinator, Phase::TaskInitiation),
        (TeamRole::Plant, Phase::PerspectiveSharing),
        (TeamRole::MonitorEvaluator, Phase::PerspectiveSharing),
        (TeamRole::Implementer, Phase::PerspectiveSharing),
        (TeamRole::Coordinator, Phase::Consensus),
    ];
    for (role, phase) in turns {
        let speaker = Speaker::from(role);
        let request = assemble_context(
            team,
            &inputs.templates,
            &inputs.config.model,
            inputs.config.sampling_for(speaker),
            role,
            phase,
            histories,
            Some(spec),
        )?;
        let message = speak(
            &team.member(role).gateway,
            request,
            speaker,
            spec.step_number,
            phase,
            log,
        )
        .await?;
        histories.record(message);
    }
    let messages = histories.step_history.clone();
    let answer = messages.last().map(|m| m.content.clone()).unwrap_or_default();
    histories.commit_answer(answer.clone());
    Ok((answer, messages))
}

fn check_steps(steps: &[StepSpec]) -> Result<(), OrchestratorError> {
    match steps.iter().enumerate().find(|(i, s)| s.step_number as usize != i + 1) {
        Some((position, s)) => Err(OrchestratorError::StepOrder {
            position,
            found: s.step_number,
        }),
        None => Ok(()),
    }
}

struct Progress {
    histories: Histories,
    snapshots: Vec<StepSnapshot>,
    log: RunLog,
}

async fn drive_team(inputs: &RunInputs, team: &Team, p: &mut Progress) -> Result<(), OrchestratorError> {
    warm_up(team, inputs, &mut p.log).await?;
    for spec in &inputs.steps {
        let before = p.histories.clone();
        let (_, messages) = run_step(team, inputs, spec, &mut p.histories, &mut p.log).await?;
        p.snapshots.push(StepSnapshot {
            step: spec.step_number,
            histories: Histories {
                log_history: before.log_history,
                step_history: messages,
            },
        });
    }
    Ok(())
}

async fn drive_baseline(inputs: &RunInputs, gateway: &Gateway, p: &mut Progress) -> Result<(), OrchestratorError> {
    let meta =
        inputs
            .templates
            .render_meta_prompt(&inputs.scenario, Mode::Baseline, &inputs.config.response_language)?;
    let sampling = inputs.config.sampling_for(Speaker::Baseline);
    let mut conversation = vec![ChatMessage::system(meta)];
    for spec in &inputs.steps {
        conversation.push(ChatMessage::user(inputs.templates.render_step_prompt(spec)?));
        let request = ChatRequest {
            model: inputs.config.model.clone(),
            messages: conversation.clone(),
            sampling,
        };
        let message = speak(
            gateway,
            request,
            Speaker::Baseline,
            spec.step_number,
            Phase::Solo,
            &mut p.log,
        )
        .await?;
        conversation.push(ChatMessage::assistant(message.content.clone()));
        p.snapshots.push(StepSnapshot {
            step: spec.step_number,
            histories: Histories {
                log_history: p.histories.log_history.clone(),
                step_history: vec![message.clone()],
            },
        });
        p.histories.commit_answer(message.content);
    }
    Ok(())
}

/// Executes a whole task in the configured mode.
///
/// Setup problems are returned as errors. Failures once the run is underway
/// yield a record marked failed that keeps the partial transcript.
pub async fn run_task(inputs: &RunInputs, gateway: &Gateway) -> Result<RunRecord, OrchestratorError> {
    inputs.config.validate()?;
    check_steps(&inputs.steps)?;
    let team = match inputs.config.mode {
        Mode::Baseline => None,
        _ => Some(Team::assemble(
            &inputs.config,
            &inputs.roles,
            &inputs.templates,
            &inputs.scenario,
            gateway,
        )?),
    };
    if team.is_none() && inputs.scenario.body.trim().is_empty() {
        return Err(ModelError::EmptyScenario.into());
    }
    let started_at = Utc::now();
    let mut progress = Progress {
        histories: Histories::new(),
        snapshots: Vec::new(),
        log: RunLog::default(),
    };
    let outcome = match &team {
        Some(team) => drive_team(inputs, team, &mut progress).await,
        None => drive_baseline(inputs, gateway, &mut progress).await,
    };
    let status = match outcome {
        Ok(()) => RunStatus::Completed,
        Err(e) => {
            tracing::error!(run_id = %inputs.config.run_id, "run failed: {e}");
            RunStatus::Failed { error: e.to_string() }
        }
    };
    Ok(RunRecord {
        config: inputs.config.clone(),
        status,
        transcript: progress.log.transcript,
        snapshots: progress.snapshots,
        answers: progress.histories.log_history,
        exchanges: progress.log.exchanges,
        started_at,
        finished_at: Utc::now(),
    })
}
