use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// One of the four team roles of a collaboration team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TeamRole {
    #[serde(rename = "CO")]
    Coordinator,
    #[serde(rename = "PL")]
    Plant,
    #[serde(rename = "ME")]
    MonitorEvaluator,
    #[serde(rename = "IMP")]
    Implementer,
}

impl TeamRole {
    /// Speaking order used by warm-up and perspective sharing.
    pub const ALL: [TeamRole; 4] = [
        TeamRole::Coordinator,
        TeamRole::Plant,
        TeamRole::MonitorEvaluator,
        TeamRole::Implementer,
    ];

    /// Roles that speak during perspective sharing, in order.
    pub const CONTRIBUTORS: [TeamRole; 3] = [TeamRole::Plant, TeamRole::MonitorEvaluator, TeamRole::Implementer];

    pub const fn display_name(self) -> &'static str {
        match self {
            TeamRole::Coordinator => "Co-Ordinator",
            TeamRole::Plant => "Plant",
            TeamRole::MonitorEvaluator => "Monitor Evaluator",
            TeamRole::Implementer => "Implementer",
        }
    }

    pub const fn abbreviation(self) -> &'static str {
        match self {
            TeamRole::Coordinator => "CO",
            TeamRole::Plant => "PL",
            TeamRole::MonitorEvaluator => "ME",
            TeamRole::Implementer => "IMP",
        }
    }

    /// Position in [`TeamRole::ALL`], zero based.
    pub fn seat(self) -> usize {
        Self::ALL.iter().position(|r| *r == self).unwrap_or(0)
    }
}

impl fmt::Display for TeamRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for TeamRole {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CO" | "CO-ORDINATOR" | "COORDINATOR" => Ok(TeamRole::Coordinator),
            "PL" | "PLANT" => Ok(TeamRole::Plant),
            "ME" | "MONITOR EVALUATOR" | "MONITOREVALUATOR" => Ok(TeamRole::MonitorEvaluator),
            "IMP" | "IMPLEMENTER" => Ok(TeamRole::Implementer),
            _ => Err(ModelError::UnknownRole(s.to_string())),
        }
    }
}

/// The `{team_role, role_speciality, role_prompt}` triplet assigned to one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub team_role: TeamRole,
    pub role_speciality: String,
    pub role_prompt: String,
}

impl RoleSpec {
    pub fn new(team_role: TeamRole, role_speciality: impl Into<String>, role_prompt: impl Into<String>) -> Self {
        Self {
            team_role,
            role_speciality: role_speciality.into(),
            role_prompt: role_prompt.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.role_speciality.trim().is_empty() {
            return Err(ModelError::MissingField("role_speciality"));
        }
        if self.role_prompt.trim().is_empty() {
            return Err(ModelError::MissingField("role_prompt"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct RolePack {
    schema_version: u32,
    roles: Vec<RoleSpec>,
}

const DEFAULT_ROLES: &str = include_str!("../../packs/roles.json");

/// Parses a role pack and checks it holds exactly one valid spec per role.
pub fn load_role_pack(json: &str) -> Result<Vec<RoleSpec>, ModelError> {
    let pack: RolePack = serde_json::from_str(json).map_err(|e| ModelError::RolePack(e.to_string()))?;
    if pack.schema_version != 1 {
        return Err(ModelError::RolePack(format!(
            "unsupported schema_version {}",
            pack.schema_version
        )));
    }
    let mut roles = pack.roles;
    for spec in &roles {
        spec.validate()?;
    }
    roles.sort_by_key(|r| r.team_role);
    let distinct: Vec<TeamRole> = roles.iter().map(|r| r.team_role).collect();
    if distinct != TeamRole::ALL {
        return Err(ModelError::RolePack(
            "role pack must define each of CO, PL, ME, IMP exactly once".into(),
        ));
    }
    Ok(roles)
}

/// The shipped role triplets, ordered CO, PL, ME, IMP.
pub fn default_roles() -> Vec<RoleSpec> {
    load_role_pack(DEFAULT_ROLES).expect("shipped role pack is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_roles_cover_the_team() {
        let roles = default_roles();
        assert_eq!(roles.len(), 4);
        assert_eq!(
            roles[0].role_speciality,
            "Team guidance, task organization, consensus integration"
        );
        assert!(roles[0].role_prompt.contains("organize and guide team collaboration"));
    }

    #[test]
    fn abbreviations_round_trip() {
        for role in TeamRole::ALL {
            assert_eq!(role.abbreviation().parse::<TeamRole>().unwrap(), role);
            assert_eq!(
                serde_json::to_string(&role).unwrap(),
                format!("\"{}\"", role.abbreviation())
            );
        }
    }

    #[test]
    fn duplicate_role_in_pack_is_rejected() {
        let json = r#"{"schema_version":1,"roles":[
            {"team_role":"CO","role_speciality":"a","role_prompt":"b"},
            {"team_role":"CO","role_speciality":"a","role_prompt":"b"},
            {"team_role":"ME","role_speciality":"a","role_prompt":"b"},
            {"team_role":"IMP","role_speciality":"a","role_prompt":"b"}]}"#;
        assert!(matches!(load_role_pack(json), Err(ModelError::RolePack(_))));
    }
}
