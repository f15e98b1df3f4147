use std::collections::BTreeMap;

use super::OrchestratorError;
use crate::gateway::Gateway;
use crate::model::{Mode, RoleSpec, RunConfig, TeamRole, TemplateSet};
use crate::tasks::Scenario;

/// One seat of the team: its role, how it is named in shared history, its
/// standing system prompt and the gateway serving it.
#[derive(Debug, Clone)]
pub struct Member {
    pub spec: RoleSpec,
    pub label: String,
    pub system_prompt: String,
    pub gateway: Gateway,
}

/// Exactly the four roles, each bound once.
#[derive(Debug, Clone)]
pub struct Team {
    members: BTreeMap<TeamRole, Member>,
}

impl Team {
    pub fn new(members: Vec<Member>) -> Result<Self, OrchestratorError> {
        let mut map = BTreeMap::new();
        for member in members {
            let role = member.spec.team_role;
            if map.insert(role, member).is_some() {
                return Err(OrchestratorError::InvalidTeam(format!("{role} bound twice")));
            }
        }
        if let Some(missing) = TeamRole::ALL.iter().find(|r| !map.contains_key(r)) {
            return Err(OrchestratorError::InvalidTeam(format!("{missing} is not bound")));
        }
        Ok(Self { members: map })
    }

    /// Builds the team for a teamllm or ablation run, every seat on `gateway`.
    ///
    /// Teamllm seats get their role-play prompt; ablation seats all get the
    /// neutral teammate prompt and anonymous labels. The meta prompt with the
    /// scenario follows in the same system message.
    pub fn assemble(
        config: &RunConfig,
        roles: &[RoleSpec],
        templates: &TemplateSet,
        scenario: &Scenario,
        gateway: &Gateway,
    ) -> Result<Self, OrchestratorError> {
        if config.mode == Mode::Baseline {
            return Err(OrchestratorError::InvalidTeam(
                "baseline runs use a single agent, not a team".into(),
            ));
        }
        let meta = templates.render_meta_prompt(scenario, config.mode, &config.response_language)?;
        let mut members = Vec::with_capacity(roles.len());
        for spec in roles {
            let (label, persona) = match config.mode {
                Mode::Ablation => (
                    format!("Teammate {}", spec.team_role.seat() + 1),
                    templates.render_neutral()?,
                ),
                _ => {
                    let others: Vec<RoleSpec> = roles
                        .iter()
                        .filter(|r| r.team_role != spec.team_role)
                        .cloned()
                        .collect();
                    (
                        spec.team_role.display_name().to_string(),
                        templates.render_role_play(spec, &others)?,
                    )
                }
            };
            members.push(Member {
                spec: spec.clone(),
                label,
                system_prompt: format!("{persona}\n\n{meta}"),
                gateway: gateway.clone(),
            });
        }
        Self::new(members)
    }

    pub fn member(&self, role: TeamRole) -> &Member {
        &self.members[&role]
    }

    /// Rebinds one seat to a different gateway.
    pub fn bind(&mut self, role: TeamRole, gateway: Gateway) {
        if let Some(m) = self.members.get_mut(&role) {
            m.gateway = gateway;
        }
    }

    pub fn label_of(&self, role: TeamRole) -> &str {
        &self.members[&role].label
    }
}
