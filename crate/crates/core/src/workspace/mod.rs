//! On-disk layout shared by the CLI and the rater-console API.
//!
//! ```text
//! <root>/runs/<run_id>/     manifest, record, transcript, answers, parsed/
//! <root>/runs/index.json    run index, rebuilt from the run directories
//! <root>/packs/             user step, scenario and role packs
//! <root>/scores/            sheets.jsonl, calibration.jsonl, finals.csv
//! <root>/reports/           generated tables; report.meta.json holds timestamps
//! ```

pub mod api;
mod report;
mod sessions;
mod store;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{build_report, metric_report, validate_answers, ReportFiles, RunValidation, StepVerdict};
pub use sessions::{
    redact, response_id_for, session_id_for, submit_sheet, ConsistencyReport, IccEntry, PairAgreement, ResponseSummary,
    ResponseView, Session, SessionView, StepView, SubmitOutcome,
};
pub use store::{SaveOutcome, SheetStore, SheetVersion};

use crate::model::{default_roles, load_role_pack, Mode, ModelError, RunConfig, TemplateSet};
use crate::orchestrator::{load_answers, load_record, OrchestratorError, RunInputs, RunRecord};
use crate::scoring::ScoringError;
use crate::tasks::{
    default_scenarios, default_steps, find_scenario, load_scenario_pack, load_step_pack, parse_run, write_archive,
    Scenario, TaskError,
};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("run id `{0}` already exists in the workspace")]
    DuplicateRun(String),
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown response `{0}`")]
    UnknownResponse(String),
    #[error("version conflict: expected {expected}, current is {current}")]
    VersionConflict { expected: u64, current: u64 },
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("metrics: {0}")]
    Metrics(String),
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> WorkspaceError {
    WorkspaceError::Io(format!("{}: {e}", path.display()))
}

pub const INDEX_FILE: &str = "index.json";
pub const PARSED_DIR: &str = "parsed";

/// Index line for one stored run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub run_id: String,
    pub response_id: String,
    pub mode: Mode,
    pub model: String,
    pub scenario_id: String,
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    index_lock: Arc<Mutex<()>>,
}

impl Workspace {
    /// Opens `root`, creating the subtrees when absent.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, WorkspaceError> {
        let root = root.as_ref().to_path_buf();
        for sub in ["runs", "packs", "scores", "reports"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        Ok(Self {
            root,
            index_lock: Arc::new(Mutex::new(())),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn packs_dir(&self) -> PathBuf {
        self.root.join("packs")
    }

    pub fn scores_dir(&self) -> PathBuf {
        self.root.join("scores")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.runs_dir().join(run_id)
    }

    pub fn sheet_store(&self) -> Result<SheetStore, WorkspaceError> {
        SheetStore::open(&self.scores_dir())
    }

    /// Fails when the id is taken or unusable as a directory name.
    pub fn check_new_run(&self, run_id: &str) -> Result<(), WorkspaceError> {
        if run_id.is_empty()
            || run_id == INDEX_FILE
            || !run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            || run_id.starts_with('.')
        {
            return Err(ModelError::MissingField("run_id (letters, digits, '-', '_' or '.')").into());
        }
        if self.run_dir(run_id).exists() {
            return Err(WorkspaceError::DuplicateRun(run_id.to_string()));
        }
        Ok(())
    }

    /// Persists a run, its parsed step archive and refreshes the index.
    pub fn store_run(&self, record: &RunRecord) -> Result<IndexEntry, WorkspaceError> {
        let _guard = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        let run_id = &record.config.run_id;
        self.check_new_run(run_id)?;
        let dir = self.run_dir(run_id);
        record.persist(&dir)?;
        write_archive(&dir.join(PARSED_DIR), &parse_run(run_id, &record.answers))?;
        self.write_index_locked()?;
        Ok(entry_for(record))
    }

    pub fn load_run(&self, run_id: &str) -> Result<RunRecord, WorkspaceError> {
        let dir = self.run_dir(run_id);
        if !dir.join(crate::orchestrator::RECORD_FILE).exists() {
            return Err(WorkspaceError::UnknownRun(run_id.to_string()));
        }
        Ok(load_record(&dir)?)
    }

    pub fn load_answers(&self, run_id: &str) -> Result<Vec<String>, WorkspaceError> {
        let dir = self.run_dir(run_id);
        if !dir.exists() {
            return Err(WorkspaceError::UnknownRun(run_id.to_string()));
        }
        Ok(load_answers(&dir)?)
    }

    /// Index entries recomputed from the run directories, sorted by run id.
    pub fn scan_runs(&self) -> Result<Vec<IndexEntry>, WorkspaceError> {
        let dir = self.runs_dir();
        let mut entries = Vec::new();
        for item in fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
            let path = item.map_err(|e| io_err(&dir, e))?.path();
            if path.is_dir() && path.join(crate::orchestrator::RECORD_FILE).exists() {
                entries.push(entry_for(&load_record(&path)?));
            }
        }
        entries.sort_by(|a, b| a.run_id.cmp(&b.run_id));
        Ok(entries)
    }

    pub fn write_index(&self) -> Result<Vec<IndexEntry>, WorkspaceError> {
        let _guard = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        self.write_index_locked()
    }

    fn write_index_locked(&self) -> Result<Vec<IndexEntry>, WorkspaceError> {
        let entries = self.scan_runs()?;
        let path = self.runs_dir().join(INDEX_FILE);
        let text = serde_json::to_string_pretty(&entries).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(entries)
    }

    /// Resolves a pack path from a manifest: absolute, else relative to the workspace root.
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn scenarios_for(&self, config: &RunConfig) -> Result<Vec<Scenario>, WorkspaceError> {
        Ok(match &config.scenario_pack {
            Some(p) => load_scenario_pack(&self.resolve(p))?,
            None => default_scenarios(),
        })
    }

    /// Everything `run_task` needs for a manifest, with packs resolved.
    pub fn resolve_inputs(&self, config: &RunConfig) -> Result<RunInputs, WorkspaceError> {
        let steps = match &config.step_pack {
            Some(p) => load_step_pack(&self.resolve(p))?,
            None => default_steps(),
        };
        let scenarios = self.scenarios_for(config)?;
        let scenario = find_scenario(&scenarios, &config.scenario_id)?.clone();
        let templates = match &config.templates {
            Some(dir) => TemplateSet::load_dir(&self.resolve(dir))?,
            None => TemplateSet::builtin(),
        };
        let role_pack = self.packs_dir().join("roles.json");
        let roles = if role_pack.exists() {
            load_role_pack(&fs::read_to_string(&role_pack).map_err(|e| io_err(&role_pack, e))?)?
        } else {
            default_roles()
        };
        Ok(RunInputs {
            config: config.clone(),
            steps,
            scenario,
            roles,
            templates,
        })
    }
}

fn entry_for(record: &RunRecord) -> IndexEntry {
    IndexEntry {
        run_id: record.config.run_id.clone(),
        response_id: response_id_for(&record.config.run_id),
        mode: record.config.mode,
        model: record.config.model.clone(),
        scenario_id: record.config.scenario_id.clone(),
        completed: record.is_completed(),
    }
}

/// Groups completed runs into sessions keyed by scenario and condition.
pub fn group_sessions(entries: &[IndexEntry]) -> BTreeMap<String, Vec<&IndexEntry>> {
    let mut out: BTreeMap<String, Vec<&IndexEntry>> = BTreeMap::new();
    for e in entries.iter().filter(|e| e.completed) {
        out.entry(session_id_for(&e.scenario_id, e.mode)).or_default().push(e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Gateway;
    use crate::gateway::StubBackend;
    use crate::orchestrator::run_task;
    use crate::scoring::{Rubric, ScoreSheet};

    async fn stored_run(ws: &Workspace, run_id: &str, mode: Mode, model: &str) -> IndexEntry {
        let config = RunConfig::new(run_id, mode, model, "FS10");
        let inputs = ws.resolve_inputs(&config).unwrap();
        let record = run_task(&inputs, &Gateway::new(StubBackend)).await.unwrap();
        ws.store_run(&record).unwrap()
    }

    #[tokio::test]
    async fn runs_sessions_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let a = stored_run(&ws, "A01_FS10", Mode::Teamllm, "qwen3-instruct").await;
        stored_run(&ws, "A02_FS10", Mode::Teamllm, "gpt-5").await;
        stored_run(&ws, "B01_FS10", Mode::Baseline, "qwen3-instruct").await;
        assert!(matches!(
            ws.check_new_run("A01_FS10"),
            Err(WorkspaceError::DuplicateRun(_))
        ));
        assert!(ws.check_new_run("../escape").is_err());
        assert_eq!(ws.scan_runs().unwrap().len(), 3);
        assert!(ws.run_dir("A01_FS10").join(PARSED_DIR).join("step-5.json").exists());

        let sessions = ws.sessions().unwrap();
        assert_eq!(
            sessions.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(),
            ["FS10-baseline", "FS10-teamllm"]
        );
        let store = ws.sheet_store().unwrap();
        let view = ws.session_view("FS10-teamllm", &store).unwrap();
        assert_eq!(view.responses.len(), 2);
        let payload = serde_json::to_string(&view).unwrap()
            + &serde_json::to_string(&ws.response_view(&a.response_id).unwrap()).unwrap();
        for secret in ["qwen3-instruct", "gpt-5", "A01_FS10", "A02_FS10"] {
            assert!(!payload.contains(secret), "{secret} leaked");
        }

        let rubric = Rubric::cgpst();
        let mut store = ws.sheet_store().unwrap();
        let h01 = [8, 5, 8, 3, 2, 3, 1, 2, 6, 8, 7, 2, 14, 7, 5, 6, 4, 3, 3, 4, 4, 3, 8];
        let h02 = [8, 5, 8, 7, 2, 3, 1, 2, 6, 8, 7, 2, 14, 9, 5, 8, 4, 3, 3, 3, 3, 2, 4];
        for (rater, v) in [("H01", h01), ("H02", h02)] {
            let sheet = ScoreSheet::from_ordered(&rubric, &a.response_id, rater, &v).unwrap();
            submit_sheet(&mut store, &rubric, sheet, None, 0.65).unwrap();
        }
        let consistency = ws.consistency("FS10-teamllm", &store, &rubric, 0.65).unwrap();
        assert_eq!(consistency.pairs.len(), 1);
        assert!(!consistency.pairs[0].flagged);
        assert_eq!(consistency.awaiting_second_rater.len(), 1);

        let first = build_report(&ws, &rubric).unwrap();
        let read = |f: &str| fs::read(ws.reports_dir().join(f)).unwrap();
        let before: Vec<Vec<u8>> = first.files.iter().map(|f| read(f)).collect();
        let second = build_report(&ws, &rubric).unwrap();
        assert_eq!(first.files, second.files);
        for (f, b) in second.files.iter().zip(before) {
            assert_eq!(read(f), b, "{f} changed between identical report runs");
        }
        let finals = String::from_utf8(read("finals.csv")).unwrap();
        assert!(finals.contains("qwen3-instruct,teamllm,FS10,116.5"), "{finals}");
        assert_eq!(first.pending.len(), 2);
    }
}
