use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::TaskError;
use crate::model::StepSpec;

pub const PACK_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub title: String,
    pub body: String,
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> TaskError {
    TaskError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn root_array<'a>(doc: &'a Value, key: &str) -> Result<&'a Vec<Value>, TaskError> {
    let obj = doc.as_object().ok_or_else(|| schema("", "expected an object"))?;
    match obj.get("schema_version") {
        Some(v) if v.as_u64() == Some(PACK_SCHEMA_VERSION) => {}
        Some(v) => return Err(schema("/schema_version", format!("unsupported version {v}"))),
        None => return Err(schema("/schema_version", "missing")),
    }
    let items = obj
        .get(key)
        .ok_or_else(|| schema(format!("/{key}"), "missing"))?
        .as_array()
        .ok_or_else(|| schema(format!("/{key}"), "expected an array"))?;
    if items.is_empty() {
        return Err(schema(format!("/{key}"), "must not be empty"));
    }
    Ok(items)
}

fn text_field(item: &Value, at: &str, field: &str) -> Result<String, TaskError> {
    let pointer = format!("{at}/{field}");
    let value = item
        .get(field)
        .ok_or_else(|| schema(&pointer, "missing"))?
        .as_str()
        .ok_or_else(|| schema(&pointer, "expected a string"))?;
    if value.trim().is_empty() {
        return Err(schema(&pointer, "must not be empty"));
    }
    Ok(value.to_string())
}

fn parse_json(text: &str) -> Result<Value, TaskError> {
    serde_json::from_str(text).map_err(|e| schema("", format!("invalid JSON: {e}")))
}

/// Steps sorted by number; numbers must be exactly 1..=N.
pub fn parse_step_pack(text: &str) -> Result<Vec<StepSpec>, TaskError> {
    let doc = parse_json(text)?;
    let items = root_array(&doc, "steps")?;
    let mut steps = Vec::with_capacity(items.len());
    let mut seen = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let at = format!("/steps/{i}");
        if !item.is_object() {
            return Err(schema(&at, "expected an object"));
        }
        let number_at = format!("{at}/step_number");
        let step_number = item
            .get("step_number")
            .ok_or_else(|| schema(&number_at, "missing"))?
            .as_u64()
            .filter(|n| (1..=u32::MAX as u64).contains(n))
            .ok_or_else(|| schema(&number_at, "expected a positive integer"))? as u32;
        if !seen.insert(step_number) {
            return Err(schema(&number_at, format!("duplicate step_number {step_number}")));
        }
        steps.push(StepSpec {
            step_number,
            step_name: text_field(item, &at, "step_name")?,
            step_description: text_field(item, &at, "step_description")?,
            step_output: text_field(item, &at, "step_output")?,
        });
    }
    steps.sort_by_key(|s| s.step_number);
    if let Some(gap) = steps.iter().enumerate().find(|(i, s)| s.step_number as usize != i + 1) {
        return Err(schema(
            "/steps",
            format!(
                "step numbers must run 1..={} without gaps; found {}",
                steps.len(),
                gap.1.step_number
            ),
        ));
    }
    Ok(steps)
}

pub fn parse_scenario_pack(text: &str) -> Result<Vec<Scenario>, TaskError> {
    static ID: OnceLock<Regex> = OnceLock::new();
    let id_re = ID.get_or_init(|| Regex::new(r"^FS[0-9]+$").unwrap());
    let doc = parse_json(text)?;
    let items = root_array(&doc, "scenarios")?;
    let mut out = Vec::with_capacity(items.len());
    let mut seen = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let at = format!("/scenarios/{i}");
        if !item.is_object() {
            return Err(schema(&at, "expected an object"));
        }
        let id = text_field(item, &at, "id")?;
        if !id_re.is_match(&id) {
            return Err(schema(format!("{at}/id"), format!("`{id}` does not match FS<number>")));
        }
        if !seen.insert(id.clone()) {
            return Err(schema(format!("{at}/id"), format!("duplicate scenario id {id}")));
        }
        out.push(Scenario {
            id,
            title: text_field(item, &at, "title")?,
            body: text_field(item, &at, "body")?,
        });
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, TaskError> {
    std::fs::read_to_string(path).map_err(|e| TaskError::Io(format!("{}: {e}", path.display())))
}

pub fn load_step_pack(path: &Path) -> Result<Vec<StepSpec>, TaskError> {
    parse_step_pack(&read(path)?)
}

pub fn load_scenario_pack(path: &Path) -> Result<Vec<Scenario>, TaskError> {
    parse_scenario_pack(&read(path)?)
}

pub const DEFAULT_STEP_PACK: &str = include_str!("../../packs/cgpst_steps.json");
pub const DEFAULT_SCENARIO_PACK: &str = include_str!("../../packs/scenarios.json");

/// The six shipped CGPST steps.
pub fn default_steps() -> Vec<StepSpec> {
    parse_step_pack(DEFAULT_STEP_PACK).expect("shipped step pack is valid")
}

pub fn default_scenarios() -> Vec<Scenario> {
    parse_scenario_pack(DEFAULT_SCENARIO_PACK).expect("shipped scenario pack is valid")
}

pub fn find_scenario<'a>(scenarios: &'a [Scenario], id: &str) -> Result<&'a Scenario, TaskError> {
    scenarios
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| TaskError::UnknownScenario(id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_steps() {
        let steps = default_steps();
        let names: Vec<&str> = steps.iter().map(|s| s.step_name.as_str()).collect();
        assert_eq!(
            names,
            [
                "Identify Challenges",
                "Select an Underlying Problem",
                "Produce Solutions",
                "Select Criteria",
                "Apply Criteria to Top Solution",
                "Develop an Action Plan"
            ]
        );
        assert!(steps[4].step_output.contains("Solution ID | Criterion 1"));
    }

    #[test]
    fn shipped_scenarios() {
        let all = default_scenarios();
        let fs10 = find_scenario(&all, "FS10").unwrap();
        assert_eq!(fs10.title, "Ocean Soup Future Scenario");
        assert!(fs10.body.starts_with("As Jobie Sakai leans on the railing"));
        assert!(fs10.body.ends_with("an alarming amount of plastic particles."));
        assert!(find_scenario(&all, "FS99").is_err());
    }

    fn pointer(err: TaskError) -> String {
        match err {
            TaskError::Schema { pointer, .. } => pointer,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_step_number() {
        let text = r#"{"schema_version":1,"steps":[
            {"step_number":1,"step_name":"a","step_description":"b","step_output":"c"},
            {"step_number":1,"step_name":"a","step_description":"b","step_output":"c"}]}"#;
        assert_eq!(pointer(parse_step_pack(text).unwrap_err()), "/steps/1/step_number");
    }

    #[test]
    fn schema_locations() {
        assert_eq!(
            pointer(parse_step_pack(r#"{"steps":[]}"#).unwrap_err()),
            "/schema_version"
        );
        let missing = r#"{"schema_version":1,"steps":[{"step_number":1,"step_name":"a","step_description":"b"}]}"#;
        assert_eq!(pointer(parse_step_pack(missing).unwrap_err()), "/steps/0/step_output");
        let gap = r#"{"schema_version":1,"steps":[{"step_number":2,"step_name":"a","step_description":"b","step_output":"c"}]}"#;
        assert_eq!(pointer(parse_step_pack(gap).unwrap_err()), "/steps");
        let bad_id = r#"{"schema_version":1,"scenarios":[{"id":"X1","title":"t","body":"b"}]}"#;
        assert_eq!(pointer(parse_scenario_pack(bad_id).unwrap_err()), "/scenarios/0/id");
        let empty_body = r#"{"schema_version":1,"scenarios":[{"id":"FS1","title":"t","body":" "}]}"#;
        assert_eq!(
            pointer(parse_scenario_pack(empty_body).unwrap_err()),
            "/scenarios/0/body"
        );
    }
}
