//! Prompt assets and the render operations built on them.

use std::fs;
use std::path::Path;

use super::template::{Template, TemplateError};
use super::{Mode, ModelError, Phase, RoleSpec, StepSpec};
use crate::tasks::Scenario;

/// Identifies one template asset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    RolePlay,
    MetaTeam,
    MetaBaseline,
    WarmUp,
    TaskInitiation,
    Consensus,
    AblationNeutral,
    StepPrompt,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 8] = [
        TemplateKind::RolePlay,
        TemplateKind::MetaTeam,
        TemplateKind::MetaBaseline,
        TemplateKind::WarmUp,
        TemplateKind::TaskInitiation,
        TemplateKind::Consensus,
        TemplateKind::AblationNeutral,
        TemplateKind::StepPrompt,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateKind::RolePlay => "role_play.txt",
            TemplateKind::MetaTeam => "meta_teamllm.txt",
            TemplateKind::MetaBaseline => "meta_baseline.txt",
            TemplateKind::WarmUp => "warm_up.txt",
            TemplateKind::TaskInitiation => "task_initiation.txt",
            TemplateKind::Consensus => "consensus.txt",
            TemplateKind::AblationNeutral => "ablation_neutral.txt",
            TemplateKind::StepPrompt => "step_prompt.txt",
        }
    }

    pub fn allowed_placeholders(self) -> &'static [&'static str] {
        const STEP: &[&str] = &["Step_Number", "Step_Name", "Step_Description", "Step_Output"];
        match self {
            TemplateKind::RolePlay => &["Team_Role", "Role_Speciality", "Other_Members", "Role_Prompt"],
            TemplateKind::MetaTeam | TemplateKind::MetaBaseline => &["future_scenario", "response_language"],
            TemplateKind::WarmUp | TemplateKind::AblationNeutral => &[],
            TemplateKind::TaskInitiation | TemplateKind::Consensus | TemplateKind::StepPrompt => STEP,
        }
    }

    fn builtin_source(self) -> &'static str {
        match self {
            TemplateKind::RolePlay => include_str!("../../templates/role_play.txt"),
            TemplateKind::MetaTeam => include_str!("../../templates/meta_teamllm.txt"),
            TemplateKind::MetaBaseline => include_str!("../../templates/meta_baseline.txt"),
            TemplateKind::WarmUp => include_str!("../../templates/warm_up.txt"),
            TemplateKind::TaskInitiation => include_str!("../../templates/task_initiation.txt"),
            TemplateKind::Consensus => include_str!("../../templates/consensus.txt"),
            TemplateKind::AblationNeutral => include_str!("../../templates/ablation_neutral.txt"),
            TemplateKind::StepPrompt => include_str!("../../templates/step_prompt.txt"),
        }
    }
}

fn compile(kind: TemplateKind, source: &str) -> Result<Template, TemplateError> {
    // Trailing newline of the asset file is not part of the prompt.
    let template = Template::parse(kind.file_name(), source.trim_end_matches(['\n', '\r']))?;
    template.check_allowed(kind.allowed_placeholders())?;
    Ok(template)
}

/// The full set of protocol templates.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = TemplateKind::ALL
            .iter()
            .map(|k| compile(*k, k.builtin_source()).expect("shipped templates are valid"))
            .collect();
        Self { templates }
    }

    /// Loads templates from a directory; files that are absent fall back to the shipped copy.
    pub fn load_dir(dir: &Path) -> Result<Self, ModelError> {
        let mut templates = Vec::with_capacity(TemplateKind::ALL.len());
        for kind in TemplateKind::ALL {
            let path = dir.join(kind.file_name());
            let source = if path.exists() {
                fs::read_to_string(&path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?
            } else {
                kind.builtin_source().to_string()
            };
            templates.push(compile(kind, &source)?);
        }
        Ok(Self { templates })
    }

    pub fn get(&self, kind: TemplateKind) -> &Template {
        let idx = TemplateKind::ALL.iter().position(|k| *k == kind).unwrap_or(0);
        &self.templates[idx]
    }

    /// Role-play prompt for `spec`; `others` contribute their role names only.
    pub fn render_role_play(&self, spec: &RoleSpec, others: &[RoleSpec]) -> Result<String, ModelError> {
        spec.validate()?;
        for other in others {
            other.validate()?;
            if other.team_role == spec.team_role {
                return Err(ModelError::DuplicateRole(spec.team_role));
            }
        }
        let names: Vec<&str> = others.iter().map(|o| o.team_role.display_name()).collect();
        let other_members = join_names(&names);
        Ok(self.get(TemplateKind::RolePlay).render(&[
            ("Team_Role", spec.team_role.display_name()),
            ("Role_Speciality", &spec.role_speciality),
            ("Other_Members", &other_members),
            ("Role_Prompt", &spec.role_prompt),
        ])?)
    }

    pub fn render_meta_prompt(
        &self,
        scenario: &Scenario,
        mode: Mode,
        response_language: &str,
    ) -> Result<String, ModelError> {
        if scenario.body.trim().is_empty() {
            return Err(ModelError::EmptyScenario);
        }
        let kind = match mode {
            Mode::Teamllm | Mode::Ablation => TemplateKind::MetaTeam,
            Mode::Baseline => TemplateKind::MetaBaseline,
        };
        Ok(self.get(kind).render(&[
            ("future_scenario", scenario.body.trim()),
            ("response_language", response_language),
        ])?)
    }

    /// Phase instruction for warm-up, task initiation or consensus building.
    pub fn render_phase_prompt(&self, phase: Phase, step: Option<&StepSpec>) -> Result<String, ModelError> {
        let kind = match phase {
            Phase::WarmUp => return Ok(self.get(TemplateKind::WarmUp).render(&[])?),
            Phase::TaskInitiation => TemplateKind::TaskInitiation,
            Phase::Consensus => TemplateKind::Consensus,
            Phase::PerspectiveSharing | Phase::Solo => return Err(ModelError::NoPhasePrompt(phase)),
        };
        let step = step.ok_or(ModelError::MissingStepSpec(phase))?;
        self.render_step_bound(kind, step)
    }

    /// The plain step prompt used by the single-agent baseline.
    pub fn render_step_prompt(&self, step: &StepSpec) -> Result<String, ModelError> {
        self.render_step_bound(TemplateKind::StepPrompt, step)
    }

    pub fn render_neutral(&self) -> Result<String, ModelError> {
        Ok(self.get(TemplateKind::AblationNeutral).render(&[])?)
    }

    fn render_step_bound(&self, kind: TemplateKind, step: &StepSpec) -> Result<String, ModelError> {
        let number = step.step_number.to_string();
        Ok(self.get(kind).render(&[
            ("Step_Number", &number),
            ("Step_Name", &step.step_name),
            ("Step_Description", &step.step_description),
            ("Step_Output", &step.step_output),
        ])?)
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

fn join_names(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => (*one).to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_roles, TeamRole};
    use crate::tasks::default_scenarios;

    fn fs10() -> Scenario {
        default_scenarios().into_iter().find(|s| s.id == "FS10").unwrap()
    }

    fn step1() -> StepSpec {
        crate::tasks::default_steps().remove(0)
    }

    #[test]
    fn coordinator_role_play() {
        let roles = default_roles();
        let text = TemplateSet::builtin().render_role_play(&roles[0], &roles[1..]).unwrap();
        assert!(text.contains("Co-Ordinator"));
        assert!(text.contains("Team guidance, task organization, consensus integration"));
        for name in ["Plant", "Monitor Evaluator", "Implementer"] {
            assert!(text.contains(name), "{name} missing");
        }
        assert!(text.contains("organize and guide team collaboration"));
    }

    #[test]
    fn role_play_is_deterministic_and_names_only() {
        let roles = default_roles();
        let others: Vec<RoleSpec> = roles
            .iter()
            .filter(|r| r.team_role != TeamRole::Plant)
            .cloned()
            .collect();
        let set = TemplateSet::builtin();
        let a = set.render_role_play(&roles[1], &others).unwrap();
        let b = set.render_role_play(&roles[1], &others).unwrap();
        assert_eq!(a, b);
        for other in &others {
            assert!(!a.contains(&other.role_prompt));
            assert!(!a.contains(&other.role_speciality));
        }
    }

    #[test]
    fn role_play_errors() {
        let roles = default_roles();
        let set = TemplateSet::builtin();
        let mut empty = roles[0].clone();
        empty.role_prompt.clear();
        assert!(matches!(
            set.render_role_play(&empty, &roles[1..]),
            Err(ModelError::MissingField("role_prompt"))
        ));
        assert!(matches!(
            set.render_role_play(&roles[0], &roles),
            Err(ModelError::DuplicateRole(TeamRole::Coordinator))
        ));
    }

    #[test]
    fn meta_prompts() {
        let set = TemplateSet::builtin();
        let scenario = fs10();
        let team = set.render_meta_prompt(&scenario, Mode::Teamllm, "English").unwrap();
        assert!(team.contains("six steps"));
        assert!(team.contains(scenario.body.trim()));
        assert!(!team.contains('{'));

        let base = set.render_meta_prompt(&scenario, Mode::Baseline, "English").unwrap();
        assert!(base.contains("independently complete the task"));
        assert!(!base.replace(scenario.body.trim(), "").to_lowercase().contains("team"));
        assert!(base.contains(scenario.body.trim()));

        let empty = Scenario {
            id: "FS99".into(),
            title: "t".into(),
            body: "  ".into(),
        };
        assert!(matches!(
            set.render_meta_prompt(&empty, Mode::Teamllm, "English"),
            Err(ModelError::EmptyScenario)
        ));
    }

    #[test]
    fn phase_prompts() {
        let set = TemplateSet::builtin();
        let step = step1();
        let init = set.render_phase_prompt(Phase::TaskInitiation, Some(&step)).unwrap();
        assert!(init.contains("Step 1"));
        assert!(init.contains(&step.step_output));

        let warm = set.render_phase_prompt(Phase::WarmUp, None).unwrap();
        assert!(warm.contains("warm-up"));
        assert!(!warm.contains("Step "));

        assert!(matches!(
            set.render_phase_prompt(Phase::Consensus, None),
            Err(ModelError::MissingStepSpec(Phase::Consensus))
        ));
    }

    #[test]
    fn every_placeholder_is_bound_by_some_render() {
        let set = TemplateSet::builtin();
        let roles = default_roles();
        let scenario = fs10();
        let step = step1();
        let rendered = vec![
            set.render_role_play(&roles[0], &roles[1..]).unwrap(),
            set.render_meta_prompt(&scenario, Mode::Teamllm, "English").unwrap(),
            set.render_meta_prompt(&scenario, Mode::Baseline, "English").unwrap(),
            set.render_phase_prompt(Phase::WarmUp, None).unwrap(),
            set.render_phase_prompt(Phase::TaskInitiation, Some(&step)).unwrap(),
            set.render_phase_prompt(Phase::Consensus, Some(&step)).unwrap(),
            set.render_neutral().unwrap(),
            set.render_step_prompt(&step).unwrap(),
        ];
        let marker = regex::Regex::new(r"\{[A-Za-z0-9_]+\}").unwrap();
        for text in rendered {
            assert!(!marker.is_match(&text), "unbound placeholder in: {text}");
        }
    }

    #[test]
    fn load_dir_overrides_and_rejects_unknown_placeholders() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("warm_up.txt"), "Say hello.\n").unwrap();
        let set = TemplateSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.render_phase_prompt(Phase::WarmUp, None).unwrap(), "Say hello.");

        std::fs::write(dir.path().join("warm_up.txt"), "Say {Step_Number}.").unwrap();
        assert!(matches!(
            TemplateSet::load_dir(dir.path()),
            Err(ModelError::Template(TemplateError::UnknownPlaceholder { .. }))
        ));
    }
}
