//! Calibration cases and their append-only JSONL ledger.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ScoringError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    Open,
    Assigned,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCase {
    pub case_id: String,
    pub response_id: String,
    pub raters: [String; 2],
    pub pcc: f64,
    pub status: CaseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub third_rater: Option<String>,
    /// Rater whose sheet the third rater's sheet replaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced: Option<String>,
}

/// Ledger line; current case state is the fold of all events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum LedgerEvent {
    Opened {
        at: DateTime<Utc>,
        case_id: String,
        response_id: String,
        raters: [String; 2],
        pcc: f64,
    },
    Assigned {
        at: DateTime<Utc>,
        case_id: String,
        rater: String,
    },
    Closed {
        at: DateTime<Utc>,
        case_id: String,
        replaced: String,
    },
}

impl LedgerEvent {
    fn case_id(&self) -> &str {
        match self {
            LedgerEvent::Opened { case_id, .. }
            | LedgerEvent::Assigned { case_id, .. }
            | LedgerEvent::Closed { case_id, .. } => case_id,
        }
    }
}

/// In-memory case state, optionally mirrored to a JSONL file.
#[derive(Debug, Default)]
pub struct CalibrationLedger {
    path: Option<PathBuf>,
    events: Vec<LedgerEvent>,
    cases: BTreeMap<String, CalibrationCase>,
}

pub fn case_id_for(response_id: &str) -> String {
    format!("cal-{response_id}")
}

impl CalibrationLedger {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a ledger file and replays its events.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ScoringError> {
        let path = path.as_ref().to_path_buf();
        let mut ledger = Self {
            path: Some(path.clone()),
            ..Self::default()
        };
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: LedgerEvent =
                    serde_json::from_str(&line).map_err(|e| ScoringError::Ledger(format!("line {}: {e}", n + 1)))?;
                ledger.apply(&event)?;
                ledger.events.push(event);
            }
        }
        Ok(ledger)
    }

    pub fn cases(&self) -> impl Iterator<Item = &CalibrationCase> {
        self.cases.values()
    }

    pub fn case(&self, case_id: &str) -> Option<&CalibrationCase> {
        self.cases.get(case_id)
    }

    pub fn case_for_response(&self, response_id: &str) -> Option<&CalibrationCase> {
        self.cases.get(&case_id_for(response_id))
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    /// Opens a case for a disagreeing pair; reopening an existing case is a no-op.
    pub fn open_case(
        &mut self,
        response_id: &str,
        raters: [String; 2],
        pcc: f64,
    ) -> Result<CalibrationCase, ScoringError> {
        let case_id = case_id_for(response_id);
        if let Some(existing) = self.cases.get(&case_id) {
            return Ok(existing.clone());
        }
        self.record(LedgerEvent::Opened {
            at: Utc::now(),
            case_id: case_id.clone(),
            response_id: response_id.to_string(),
            raters,
            pcc,
        })?;
        Ok(self.cases[&case_id].clone())
    }

    pub fn assign(&mut self, case_id: &str, rater: &str) -> Result<CalibrationCase, ScoringError> {
        self.record(LedgerEvent::Assigned {
            at: Utc::now(),
            case_id: case_id.to_string(),
            rater: rater.to_string(),
        })?;
        Ok(self.cases[case_id].clone())
    }

    pub fn close(&mut self, case_id: &str, replaced: &str) -> Result<CalibrationCase, ScoringError> {
        self.record(LedgerEvent::Closed {
            at: Utc::now(),
            case_id: case_id.to_string(),
            replaced: replaced.to_string(),
        })?;
        Ok(self.cases[case_id].clone())
    }

    fn record(&mut self, event: LedgerEvent) -> Result<(), ScoringError> {
        self.apply(&event)?;
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&event).map_err(|e| ScoringError::Ledger(e.to_string()))?;
            writeln!(file, "{line}")?;
        }
        self.events.push(event);
        Ok(())
    }

    /// Applies one event, rejecting transitions the state machine forbids.
    fn apply(&mut self, event: &LedgerEvent) -> Result<(), ScoringError> {
        let id = event.case_id().to_string();
        match event {
            LedgerEvent::Opened {
                response_id,
                raters,
                pcc,
                ..
            } => {
                if self.cases.contains_key(&id) {
                    return Err(ScoringError::Ledger(format!("case {id} opened twice")));
                }
                self.cases.insert(
                    id.clone(),
                    CalibrationCase {
                        case_id: id,
                        response_id: response_id.clone(),
                        raters: raters.clone(),
                        pcc: *pcc,
                        status: CaseStatus::Open,
                        third_rater: None,
                        replaced: None,
                    },
                );
            }
            LedgerEvent::Assigned { rater, .. } => {
                let case = self
                    .cases
                    .get_mut(&id)
                    .ok_or_else(|| ScoringError::UnknownCase(id.clone()))?;
                if case.status == CaseStatus::Closed {
                    return Err(ScoringError::Ledger(format!("case {id} is closed")));
                }
                if case.raters.contains(rater) {
                    return Err(ScoringError::InvalidInput(format!(
                        "{rater} already rated this response and cannot be the third rater"
                    )));
                }
                case.third_rater = Some(rater.clone());
                case.status = CaseStatus::Assigned;
            }
            LedgerEvent::Closed { replaced, .. } => {
                let case = self
                    .cases
                    .get_mut(&id)
                    .ok_or_else(|| ScoringError::UnknownCase(id.clone()))?;
                if case.status != CaseStatus::Assigned {
                    return Err(ScoringError::Ledger(format!("case {id} has no third rater")));
                }
                if !case.raters.contains(replaced) {
                    return Err(ScoringError::Ledger(format!(
                        "{replaced} is not an original rater of {id}"
                    )));
                }
                case.replaced = Some(replaced.clone());
                case.status = CaseStatus::Closed;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle_persists_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibration.jsonl");
        let mut ledger = CalibrationLedger::open(&path).unwrap();
        let case = ledger.open_case("r-1", ["H01".into(), "H02".into()], 0.5).unwrap();
        assert_eq!(case.status, CaseStatus::Open);
        assert!(ledger.assign(&case.case_id, "H01").is_err());
        ledger.assign(&case.case_id, "H03").unwrap();
        ledger.close(&case.case_id, "H02").unwrap();
        assert!(ledger.assign(&case.case_id, "H04").is_err());

        let again = CalibrationLedger::open(&path).unwrap();
        let c = again.case_for_response("r-1").unwrap();
        assert_eq!(c.status, CaseStatus::Closed);
        assert_eq!(c.third_rater.as_deref(), Some("H03"));
        assert_eq!(c.replaced.as_deref(), Some("H02"));
        assert_eq!(again.events().len(), 3);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn close_requires_assignment() {
        let mut ledger = CalibrationLedger::in_memory();
        let case = ledger.open_case("r-2", ["A".into(), "B".into()], 0.1).unwrap();
        assert!(ledger.close(&case.case_id, "A").is_err());
        assert!(matches!(ledger.assign("nope", "C"), Err(ScoringError::UnknownCase(_))));
    }
}
