use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::store::{SaveOutcome, SheetStore};
use super::{group_sessions, IndexEntry, Workspace, WorkspaceError};
use crate::model::Mode;
use crate::scoring::{
    choose_replaced, icc, needs_calibration, normalize, pcc, CalibrationCase, CaseStatus, Rubric, ScoreSheet,
    ScoringError,
};
use crate::tasks::{find_scenario, parse_step, ParsedOutput};

/// Opaque id exposed to raters in place of the run id.
pub fn response_id_for(run_id: &str) -> String {
    let digest = Sha256::digest(format!("response:{run_id}").as_bytes());
    format!("r-{}", &hex::encode(digest)[..12])
}

pub fn session_id_for(scenario_id: &str, mode: Mode) -> String {
    format!("{scenario_id}-{mode}")
}

/// Replaces case-insensitive occurrences of `needle` with a neutral marker.
pub fn redact(text: &str, needle: &str) -> String {
    if needle.trim().is_empty() {
        return text.to_string();
    }
    let lower_text = text.to_lowercase();
    let lower_needle = needle.to_lowercase();
    if lower_text.len() != text.len() {
        // Lowercasing changed byte offsets; fall back to an exact match.
        return text.replace(needle, "[model]");
    }
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (i, _) in lower_text.match_indices(&lower_needle) {
        if i < last {
            continue;
        }
        out.push_str(&text[last..i]);
        out.push_str("[model]");
        last = i + needle.len();
    }
    out.push_str(&text[last..]);
    out
}

/// Completed runs of one scenario under one condition, in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub scenario_id: String,
    pub mode: Mode,
    pub runs: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSummary {
    pub response_id: String,
    pub position: usize,
    pub raters: Vec<String>,
}

/// What a rater sees for a session. Carries no model or run identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub scenario_id: String,
    pub scenario_title: String,
    pub scenario_body: String,
    pub condition: Mode,
    pub responses: Vec<ResponseSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepView {
    pub step: u32,
    pub text: String,
    pub parsed: ParsedOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseView {
    pub response_id: String,
    pub session_id: String,
    pub steps: Vec<StepView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub response_id: String,
    pub raters: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pcc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccEntry {
    pub raters: [String; 2],
    pub responses: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub session_id: String,
    pub threshold: f64,
    pub pairs: Vec<PairAgreement>,
    pub icc: Vec<IccEntry>,
    pub cases: Vec<CalibrationCase>,
    pub awaiting_second_rater: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    #[serde(flatten)]
    pub saved: SaveOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationCase>,
}

fn shuffle_key(session_id: &str, response_id: &str) -> String {
    hex::encode(Sha256::digest(format!("{session_id}:{response_id}").as_bytes()))
}

impl Workspace {
    /// All sessions, sorted by id.
    pub fn sessions(&self) -> Result<Vec<Session>, WorkspaceError> {
        let entries = self.scan_runs()?;
        Ok(group_sessions(&entries)
            .into_iter()
            .map(|(id, runs)| {
                let mut runs: Vec<IndexEntry> = runs.into_iter().cloned().collect();
                runs.sort_by_key(|r| shuffle_key(&id, &r.response_id));
                Session {
                    scenario_id: runs[0].scenario_id.clone(),
                    mode: runs[0].mode,
                    id,
                    runs,
                }
            })
            .collect())
    }

    pub fn session(&self, id: &str) -> Result<Session, WorkspaceError> {
        self.sessions()?
            .into_iter()
            .find(|s| s.id == id)
            .ok_or_else(|| WorkspaceError::UnknownSession(id.to_string()))
    }

    /// Session and index entry holding a response id.
    pub fn locate_response(&self, response_id: &str) -> Result<(Session, IndexEntry), WorkspaceError> {
        for session in self.sessions()? {
            if let Some(e) = session.runs.iter().find(|r| r.response_id == response_id) {
                let e = e.clone();
                return Ok((session, e));
            }
        }
        Err(WorkspaceError::UnknownResponse(response_id.to_string()))
    }

    pub fn session_view(&self, id: &str, store: &SheetStore) -> Result<SessionView, WorkspaceError> {
        let session = self.session(id)?;
        let first = self.load_run(&session.runs[0].run_id)?;
        let scenarios = self.scenarios_for(&first.config)?;
        let scenario = find_scenario(&scenarios, &session.scenario_id)?;
        let mut body = scenario.body.clone();
        let mut title = scenario.title.clone();
        for r in &session.runs {
            body = redact(&body, &r.model);
            title = redact(&title, &r.model);
        }
        Ok(SessionView {
            session_id: session.id.clone(),
            scenario_id: session.scenario_id.clone(),
            scenario_title: title,
            scenario_body: body,
            condition: session.mode,
            responses: session
                .runs
                .iter()
                .enumerate()
                .map(|(i, r)| ResponseSummary {
                    response_id: r.response_id.clone(),
                    position: i + 1,
                    raters: store
                        .sheets_for(&r.response_id)
                        .iter()
                        .map(|s| s.rater_id.clone())
                        .collect(),
                })
                .collect(),
        })
    }

    /// Step texts and parse artifacts with the model name redacted.
    pub fn response_view(&self, response_id: &str) -> Result<ResponseView, WorkspaceError> {
        let (session, entry) = self.locate_response(response_id)?;
        let answers: Vec<String> = self
            .load_answers(&entry.run_id)?
            .iter()
            .map(|a| redact(a, &entry.model))
            .collect();
        let solutions = answers.get(2).and_then(|a| match parse_step(3, a, None) {
            ParsedOutput::List { list } => Some(list.len()),
            _ => None,
        });
        let steps = answers
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let step = i as u32 + 1;
                StepView {
                    step,
                    text: text.clone(),
                    parsed: parse_step(step, text, solutions),
                }
            })
            .collect();
        Ok(ResponseView {
            response_id: response_id.to_string(),
            session_id: session.id,
            steps,
        })
    }

    pub fn consistency(
        &self,
        session_id: &str,
        store: &SheetStore,
        rubric: &Rubric,
        threshold: f64,
    ) -> Result<ConsistencyReport, WorkspaceError> {
        let session = self.session(session_id)?;
        let mut pairs = Vec::new();
        let mut awaiting = Vec::new();
        let mut cases = Vec::new();
        let mut by_pair: BTreeMap<[String; 2], Vec<(f64, f64)>> = BTreeMap::new();
        for run in &session.runs {
            let sheets = store.sheets_for(&run.response_id);
            if let Some(case) = store.ledger().case_for_response(&run.response_id) {
                cases.push(case.clone());
            }
            if sheets.len() < 2 {
                awaiting.push(run.response_id.clone());
                continue;
            }
            let (a, b) = (sheets[0], sheets[1]);
            let (pcc_value, error) = match pcc(&normalize(a, rubric), &normalize(b, rubric)) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let mut raters = [a.rater_id.clone(), b.rater_id.clone()];
            let (ta, tb) = (a.total(rubric) as f64, b.total(rubric) as f64);
            let totals = if raters[0] <= raters[1] { (ta, tb) } else { (tb, ta) };
            raters.sort();
            by_pair.entry(raters.clone()).or_default().push(totals);
            pairs.push(PairAgreement {
                response_id: run.response_id.clone(),
                raters,
                flagged: pcc_value.is_none_or(|p| needs_calibration(p, threshold)),
                pcc: pcc_value,
                error,
            });
        }
        let icc = by_pair
            .into_iter()
            .map(|(raters, rows)| {
                let table: Vec<Vec<f64>> = rows.iter().map(|(x, y)| vec![*x, *y]).collect();
                let (value, error) = match icc(&table) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                IccEntry {
                    raters,
                    responses: rows.len(),
                    icc: value,
                    error,
                }
            })
            .collect();
        Ok(ConsistencyReport {
            session_id: session.id,
            threshold,
            pairs,
            icc,
            cases,
            awaiting_second_rater: awaiting,
        })
    }
}

/// Saves a sheet and advances calibration: a second sheet below `threshold`
/// opens a case, and the assigned third rater's sheet closes it.
pub fn submit_sheet(
    store: &mut SheetStore,
    rubric: &Rubric,
    sheet: ScoreSheet,
    expected_version: Option<u64>,
    threshold: f64,
) -> Result<SubmitOutcome, WorkspaceError> {
    let response_id = sheet.response_id.clone();
    let rater_id = sheet.rater_id.clone();
    if let Some(case) = store.ledger().case_for_response(&response_id) {
        let is_original = case.raters.contains(&rater_id);
        let is_third = case.third_rater.as_deref() == Some(rater_id.as_str());
        if !is_original && !is_third {
            return Err(
                ScoringError::InvalidInput(format!("{rater_id} is not assigned to response {response_id}")).into(),
            );
        }
    }
    let saved = store.save(rubric, sheet, expected_version)?;
    let case = store.ledger().case_for_response(&response_id).cloned();
    let calibration = match case {
        Some(case) if case.status == CaseStatus::Assigned && case.third_rater.as_deref() == Some(rater_id.as_str()) => {
            let a = store.latest(&response_id, &case.raters[0]).cloned();
            let b = store.latest(&response_id, &case.raters[1]).cloned();
            let third = store.latest(&response_id, &rater_id).cloned();
            match (a, b, third) {
                (Some(a), Some(b), Some(third)) => {
                    let replaced = choose_replaced(rubric, &a, &b, &third)?.rater_id.clone();
                    Some(store.ledger_mut().close(&case.case_id, &replaced)?)
                }
                _ => Some(case),
            }
        }
        Some(case) => Some(case),
        None => {
            let sheets = store.sheets_for(&response_id);
            if sheets.len() >= 2 {
                let (a, b) = (sheets[0].clone(), sheets[1].clone());
                match pcc(&normalize(&a, rubric), &normalize(&b, rubric)) {
                    Ok(p) if needs_calibration(p, threshold) => Some(store.ledger_mut().open_case(
                        &response_id,
                        [a.rater_id, b.rater_id],
                        p,
                    )?),
                    _ => None,
                }
            } else {
                None
            }
        }
    };
    Ok(SubmitOutcome { saved, calibration })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_ids_are_opaque_and_stable() {
        let a = response_id_for("A05_FS10");
        assert_eq!(a, response_id_for("A05_FS10"));
        assert_eq!(a.len(), 14);
        assert!(!a.contains("A05"));
        assert_ne!(a, response_id_for("A06_FS10"));
    }

    #[test]
    fn redaction() {
        assert_eq!(
            redact("I am Kimi-K2, and kimi-k2 agrees", "kimi-k2"),
            "I am [model], and [model] agrees"
        );
        assert_eq!(redact("nothing here", "gpt-5"), "nothing here");
    }

    const H01: [u32; 23] = [8, 5, 8, 3, 2, 3, 1, 2, 6, 8, 7, 2, 14, 7, 5, 6, 4, 3, 3, 4, 4, 3, 8];
    const H02: [u32; 23] = [8, 5, 8, 7, 2, 3, 1, 2, 6, 8, 7, 2, 14, 9, 5, 8, 4, 3, 3, 3, 3, 2, 4];
    const LOW: [u32; 23] = [0, 0, 0, 16, 0, 0, 0, 0, 0, 0, 0, 0, 0, 16, 0, 0, 0, 0, 0, 0, 0, 0, 10];

    #[test]
    fn calibration_loop() {
        let dir = tempfile::tempdir().unwrap();
        let rubric = Rubric::cgpst();
        let mut store = SheetStore::open(dir.path()).unwrap();
        let sheet = |rater: &str, v: &[u32]| ScoreSheet::from_ordered(&rubric, "r-x", rater, v).unwrap();

        let first = submit_sheet(&mut store, &rubric, sheet("H01", &H01), None, 0.65).unwrap();
        assert!(first.calibration.is_none());
        let second = submit_sheet(&mut store, &rubric, sheet("H02", &LOW), None, 0.65).unwrap();
        let case = second.calibration.unwrap();
        assert_eq!(case.status, CaseStatus::Open);
        assert!(case.pcc < 0.65);
        assert!(submit_sheet(&mut store, &rubric, sheet("H03", &H02), None, 0.65).is_err());

        store.ledger_mut().assign(&case.case_id, "H03").unwrap();
        let third = submit_sheet(&mut store, &rubric, sheet("H03", &H02), None, 0.65).unwrap();
        let closed = third.calibration.unwrap();
        assert_eq!(closed.status, CaseStatus::Closed);
        assert_eq!(closed.replaced.as_deref(), Some("H02"));
        assert_eq!(store.ledger().cases().count(), 1);
    }

    #[test]
    fn agreeing_pair_opens_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let rubric = Rubric::cgpst();
        let mut store = SheetStore::open(dir.path()).unwrap();
        let sheet = |rater: &str, v: &[u32]| ScoreSheet::from_ordered(&rubric, "r-y", rater, v).unwrap();
        submit_sheet(&mut store, &rubric, sheet("H01", &H01), None, 0.65).unwrap();
        let out = submit_sheet(&mut store, &rubric, sheet("H02", &H02), None, 0.65).unwrap();
        assert!(out.calibration.is_none());
        assert_eq!(store.ledger().cases().count(), 0);
    }
}
