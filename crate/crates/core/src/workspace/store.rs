use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{io_err, WorkspaceError};
use crate::scoring::{
    read_final_scores_csv, write_final_scores_csv, CalibrationLedger, FinalScore, Rubric, ScoreSheet,
};

pub const SHEETS_FILE: &str = "sheets.jsonl";
pub const CALIBRATION_FILE: &str = "calibration.jsonl";
pub const FINALS_FILE: &str = "finals.csv";

/// One saved revision of a sheet; every revision is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetVersion {
    pub version: u64,
    pub saved_at: DateTime<Utc>,
    pub sheet: ScoreSheet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaveOutcome {
    pub version: u64,
    pub step_totals: [u32; 6],
    pub total: u32,
}

/// Versioned sheet log plus the calibration ledger under `scores/`.
#[derive(Debug)]
pub struct SheetStore {
    dir: PathBuf,
    /// Revisions per (response, rater), oldest first.
    sheets: BTreeMap<(String, String), Vec<SheetVersion>>,
    /// Order in which (response, rater) pairs first saved.
    arrival: Vec<(String, String)>,
    ledger: CalibrationLedger,
}

impl SheetStore {
    pub fn open(dir: &Path) -> Result<Self, WorkspaceError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut store = Self {
            dir: dir.to_path_buf(),
            sheets: BTreeMap::new(),
            arrival: Vec::new(),
            ledger: CalibrationLedger::open(dir.join(CALIBRATION_FILE))?,
        };
        let path = dir.join(SHEETS_FILE);
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: SheetVersion =
                    serde_json::from_str(line).map_err(|e| io_err(&path, format!("line {}: {e}", n + 1)))?;
                store.insert(v);
            }
        }
        Ok(store)
    }

    fn insert(&mut self, v: SheetVersion) {
        let key = (v.sheet.response_id.clone(), v.sheet.rater_id.clone());
        if !self.sheets.contains_key(&key) {
            self.arrival.push(key.clone());
        }
        self.sheets.entry(key).or_default().push(v);
    }

    pub fn ledger(&self) -> &CalibrationLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut CalibrationLedger {
        &mut self.ledger
    }

    /// Current version number; zero when the rater has not saved yet.
    pub fn version(&self, response_id: &str, rater_id: &str) -> u64 {
        self.sheets
            .get(&(response_id.to_string(), rater_id.to_string()))
            .and_then(|v| v.last())
            .map_or(0, |v| v.version)
    }

    /// Validates and appends a revision. `expected_version`, when given, must
    /// equal the current version (0 for a first save).
    pub fn save(
        &mut self,
        rubric: &Rubric,
        sheet: ScoreSheet,
        expected_version: Option<u64>,
    ) -> Result<SaveOutcome, WorkspaceError> {
        sheet.validate(rubric)?;
        let current = self.version(&sheet.response_id, &sheet.rater_id);
        if let Some(expected) = expected_version {
            if expected != current {
                return Err(WorkspaceError::VersionConflict { expected, current });
            }
        }
        let entry = SheetVersion {
            version: current + 1,
            saved_at: Utc::now(),
            sheet,
        };
        let path = self.dir.join(SHEETS_FILE);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let line = serde_json::to_string(&entry).map_err(|e| io_err(&path, e))?;
        writeln!(file, "{line}").map_err(|e| io_err(&path, e))?;
        let outcome = SaveOutcome {
            version: entry.version,
            step_totals: entry.sheet.step_totals(rubric),
            total: entry.sheet.total(rubric),
        };
        self.insert(entry);
        Ok(outcome)
    }

    pub fn latest(&self, response_id: &str, rater_id: &str) -> Option<&ScoreSheet> {
        self.sheets
            .get(&(response_id.to_string(), rater_id.to_string()))
            .and_then(|v| v.last())
            .map(|v| &v.sheet)
    }

    pub fn history(&self, response_id: &str, rater_id: &str) -> &[SheetVersion] {
        self.sheets
            .get(&(response_id.to_string(), rater_id.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    /// Latest sheets for a response in order of first submission.
    pub fn sheets_for(&self, response_id: &str) -> Vec<&ScoreSheet> {
        self.arrival
            .iter()
            .filter(|(r, _)| r == response_id)
            .filter_map(|(r, rater)| self.latest(r, rater))
            .collect()
    }

    /// Latest sheet of every (response, rater), sorted by response then rater.
    pub fn all_latest(&self) -> Vec<&ScoreSheet> {
        self.sheets
            .values()
            .filter_map(|v| v.last())
            .map(|v| &v.sheet)
            .collect()
    }

    /// Imported final totals (long format), empty when none were imported.
    pub fn finals(&self) -> Result<Vec<FinalScore>, WorkspaceError> {
        let path = self.dir.join(FINALS_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        Ok(read_final_scores_csv(&text)?)
    }

    /// Merges `scores` into the imported finals, replacing matching keys.
    pub fn import_finals(&self, scores: &[FinalScore]) -> Result<usize, WorkspaceError> {
        let mut all: BTreeMap<(String, String, String), FinalScore> = self
            .finals()?
            .into_iter()
            .map(|s| ((s.model.clone(), s.condition.clone(), s.scenario.clone()), s))
            .collect();
        for s in scores {
            all.insert((s.model.clone(), s.condition.clone(), s.scenario.clone()), s.clone());
        }
        let list: Vec<FinalScore> = all.into_values().collect();
        let path = self.dir.join(FINALS_FILE);
        fs::write(&path, write_final_scores_csv(&list)).map_err(|e| io_err(&path, e))?;
        Ok(scores.len())
    }
}
