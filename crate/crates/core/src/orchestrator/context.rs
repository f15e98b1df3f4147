use super::{OrchestratorError, Team};
use crate::gateway::{ChatMessage, ChatRequest};
use crate::model::{Histories, Message, Phase, SamplingParams, StepSpec, TeamRole, TemplateSet};

/// Renders log_history as `Step k final answer:` blocks.
pub fn serialize_log_history(log: &[String]) -> String {
    log.iter()
        .enumerate()
        .map(|(i, answer)| format!("Step {} final answer:\n{}", i + 1, answer))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Renders step_history as `<label> said:` blocks in arrival order.
pub fn serialize_step_history(team: &Team, messages: &[Message]) -> String {
    messages
        .iter()
        .map(|m| {
            let label = m
                .speaker
                .role()
                .map_or_else(|| m.speaker.to_string(), |r| team.label_of(r).to_string());
            format!("{label} said:\n{}", m.content)
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn check_phase(role: TeamRole, phase: Phase) -> Result<(), OrchestratorError> {
    let ok = match phase {
        Phase::WarmUp => true,
        Phase::TaskInitiation | Phase::Consensus => role == TeamRole::Coordinator,
        Phase::PerspectiveSharing => role != TeamRole::Coordinator,
        Phase::Solo => false,
    };
    if ok {
        Ok(())
    } else {
        Err(OrchestratorError::PhaseRoleMismatch { role, phase })
    }
}

/// Builds the request for `role` in `phase`.
///
/// Layout: system role prompt, then the log_history block when the phase
/// sees it, then the step_history block, then the phase prompt. Empty blocks
/// are left out. Only the Co-Ordinator receives the warm-up prompt.
#[allow(clippy::too_many_arguments)]
pub fn assemble_context(
    team: &Team,
    templates: &TemplateSet,
    model: &str,
    sampling: SamplingParams,
    role: TeamRole,
    phase: Phase,
    histories: &Histories,
    step: Option<&StepSpec>,
) -> Result<ChatRequest, OrchestratorError> {
    check_phase(role, phase)?;
    let member = team.member(role);
    let mut messages = vec![ChatMessage::system(member.system_prompt.clone())];
    if phase.sees_log_history() && !histories.log_history.is_empty() {
        messages.push(ChatMessage::user(serialize_log_history(&histories.log_history)));
    }
    if !histories.step_history.is_empty() {
        messages.push(ChatMessage::user(serialize_step_history(team, &histories.step_history)));
    }
    let prompt = match phase {
        Phase::WarmUp if role == TeamRole::Coordinator => Some(templates.render_phase_prompt(phase, None)?),
        Phase::TaskInitiation | Phase::Consensus => Some(templates.render_phase_prompt(phase, step)?),
        _ => None,
    };
    if let Some(prompt) = prompt {
        messages.push(ChatMessage::user(prompt));
    }
    Ok(ChatRequest {
        model: model.to_string(),
        messages,
        sampling,
    })
}
