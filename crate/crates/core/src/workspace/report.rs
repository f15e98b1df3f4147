use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::{io_err, IndexEntry, Workspace, WorkspaceError};
use crate::metrics::{
    BleuOptions, EfficiencyInput, EfficiencyObservation, ListObservation, MetricReport, Tokenization,
};
use crate::model::Mode;
use crate::scoring::{
    aggregate, aggregate_csv, compare_conditions, comparison_csv, merge_final, Calibration, FinalScore, Rubric,
    ScoreSheet, ScoringError,
};
use crate::tasks::{parse_run, MatrixClass, ParsedOutput, ParsedStep};

/// Verdict for one parsed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub step: u32,
    pub kind: String,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_score: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<MatrixClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunValidation {
    pub run_id: String,
    pub steps: Vec<StepVerdict>,
}

impl RunValidation {
    pub fn to_text(&self) -> String {
        let mut out = format!("run {}\n", self.run_id);
        for s in &self.steps {
            out.push_str(&format!("  step {} [{}] {}\n", s.step, s.kind, s.summary));
            for v in &s.violations {
                out.push_str(&format!("    - {v}\n"));
            }
        }
        out
    }
}

fn verdict(parsed: &ParsedStep) -> StepVerdict {
    let step = parsed.step;
    let base = |kind: &str, summary: String| StepVerdict {
        step,
        kind: kind.to_string(),
        summary,
        violations: Vec::new(),
        pre_score: None,
        class: None,
    };
    match &parsed.output {
        ParsedOutput::List { list } => {
            let mut v = base(
                "list",
                format!("{} item(s), {} blank", list.len(), list.blank_count(None)),
            );
            if list.overflow {
                v.violations
                    .push(format!("more items than the limit of {}", list.max_items));
            }
            if list.non_contiguous {
                v.violations.push("item numbering is not contiguous".into());
            }
            v
        }
        ParsedOutput::UnderlyingProblem { problem } => {
            let challenge = problem
                .challenge_number
                .map_or("no challenge id".to_string(), |n| format!("challenge {n}"));
            let mut v = base("underlying_problem", challenge);
            v.violations = problem
                .flags
                .iter()
                .map(|f| {
                    serde_json::to_value(f)
                        .ok()
                        .and_then(|j| j.as_str().map(|s| s.replace('_', " ")))
                        .unwrap_or_default()
                })
                .collect();
            v
        }
        ParsedOutput::ScoreMatrix {
            matrix,
            report,
            pre_score,
            class,
        } => {
            let mut v = base(
                "score_matrix",
                format!(
                    "{} row(s) x {} criteria, declared best {}, {:?}",
                    matrix.rows.len(),
                    matrix.n_criteria,
                    matrix.best_id,
                    class
                ),
            );
            v.violations = report.violations.iter().map(ToString::to_string).collect();
            v.pre_score = *pre_score;
            v.class = Some(*class);
            v
        }
        ParsedOutput::ActionPlan { best_solution_id, text } => base(
            "action_plan",
            match best_solution_id {
                Some(id) => format!("{} chars, refers to solution {id}", text.chars().count()),
                None => format!("{} chars, no solution id found", text.chars().count()),
            },
        ),
        ParsedOutput::Unparsed { error, class } => {
            let mut v = base("unparsed", error.clone());
            v.class = *class;
            v
        }
    }
}

/// Parses and validates every step answer of a run.
pub fn validate_answers(run_id: &str, answers: &[String]) -> RunValidation {
    RunValidation {
        run_id: run_id.to_string(),
        steps: parse_run(run_id, answers).iter().map(verdict).collect(),
    }
}

/// Files written by [`build_report`], relative to the reports directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFiles {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub pending: Vec<String>,
}

#[derive(Serialize)]
struct Pending {
    response_id: String,
    reason: String,
}

fn write(dir: &std::path::Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<(), WorkspaceError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    files.push(name.to_string());
    Ok(())
}

/// Step-1/Step-3 lists and per-sheet Step-3 efficiency inputs of one run.
fn observe(
    entry: &IndexEntry,
    answers: &[String],
    sheets: &[&ScoreSheet],
    rubric: &Rubric,
    lists: &mut Vec<ListObservation>,
    efficiency: &mut Vec<EfficiencyObservation>,
) {
    for parsed in parse_run(&entry.run_id, answers) {
        if let (1 | 3, ParsedOutput::List { list }) = (parsed.step, parsed.output) {
            lists.push(ListObservation {
                model: entry.model.clone(),
                mode: entry.mode,
                scenario: entry.scenario_id.clone(),
                step: parsed.step,
                list,
            });
        }
    }
    for sheet in sheets {
        let v = sheet.ordered(rubric);
        let idx = |k: &str| rubric.index_of(k).map_or(0, |i| v[i]);
        let input = EfficiencyInput::new(
            idx("s3_fluency"),
            idx("s3_flexibility"),
            idx("s3_elaboration"),
            idx("s3_originality"),
        );
        if input.fluency > 0 && input.validate().is_ok() {
            efficiency.push(EfficiencyObservation {
                model: entry.model.clone(),
                mode: entry.mode,
                scenario: entry.scenario_id.clone(),
                input,
            });
        }
    }
}

/// Diversity, blank and efficiency metrics over every completed run.
pub fn metric_report(
    ws: &Workspace,
    rubric: &Rubric,
    tokenization: Tokenization,
    options: BleuOptions,
) -> Result<MetricReport, WorkspaceError> {
    let store = ws.sheet_store()?;
    let mut lists = Vec::new();
    let mut efficiency = Vec::new();
    for entry in ws.scan_runs()?.iter().filter(|e| e.completed) {
        let answers = ws.load_answers(&entry.run_id)?;
        observe(
            entry,
            &answers,
            &store.sheets_for(&entry.response_id),
            rubric,
            &mut lists,
            &mut efficiency,
        );
    }
    MetricReport::build(&lists, &efficiency, tokenization, options).map_err(|e| WorkspaceError::Metrics(e.to_string()))
}

/// Regenerates `reports/` from the stored runs and scores. Content files are
/// deterministic; the generation time goes to `report.meta.json` only.
pub fn build_report(ws: &Workspace, rubric: &Rubric) -> Result<ReportFiles, WorkspaceError> {
    let entries = ws.scan_runs()?;
    let store = ws.sheet_store()?;
    let mut finals: BTreeMap<(String, String, String), FinalScore> = store
        .finals()?
        .into_iter()
        .map(|s| ((s.model.clone(), s.condition.clone(), s.scenario.clone()), s))
        .collect();
    let mut pending = Vec::new();
    let mut lists = Vec::new();
    let mut efficiency = Vec::new();
    let mut validations = Vec::new();

    for entry in entries.iter().filter(|e| e.completed) {
        let answers = ws.load_answers(&entry.run_id)?;
        validations.push(validate_answers(&entry.run_id, &answers));
        let sheets = store.sheets_for(&entry.response_id);
        observe(entry, &answers, &sheets, rubric, &mut lists, &mut efficiency);
        if sheets.len() < 2 {
            pending.push(Pending {
                response_id: entry.response_id.clone(),
                reason: format!("{} sheet(s) submitted", sheets.len()),
            });
            continue;
        }
        let case = store.ledger().case_for_response(&entry.response_id);
        let third = case
            .and_then(|c| c.third_rater.as_deref())
            .and_then(|r| store.latest(&entry.response_id, r));
        let calibration = case.map(|c| Calibration::from_case(c, third));
        match merge_final(rubric, sheets[0], sheets[1], calibration) {
            Ok(m) => {
                finals.insert(
                    (entry.model.clone(), entry.mode.to_string(), entry.scenario_id.clone()),
                    FinalScore {
                        model: entry.model.clone(),
                        condition: entry.mode.to_string(),
                        scenario: entry.scenario_id.clone(),
                        total: m.total,
                        step_totals: Some(m.step_totals),
                        dimensions: Some(m.dimensions),
                    },
                );
            }
            Err(ScoringError::OpenCalibration(case)) => pending.push(Pending {
                response_id: entry.response_id.clone(),
                reason: format!("calibration case {case} is open"),
            }),
            Err(e) => return Err(e.into()),
        }
    }

    let finals: Vec<FinalScore> = finals.into_values().collect();
    let dir = ws.reports_dir();
    let mut files = Vec::new();
    write(
        &dir,
        "finals.csv",
        &crate::scoring::write_final_scores_csv(&finals),
        &mut files,
    )?;
    let rows = aggregate(&finals)?;
    write(&dir, "aggregate.csv", &aggregate_csv(&rows), &mut files)?;
    write(&dir, "aggregate.json", &json(&rows)?, &mut files)?;
    let treatment = Mode::Teamllm.to_string();
    for control in [Mode::Baseline, Mode::Ablation] {
        let cmp = compare_conditions(&finals, &treatment, control.as_str())?;
        if !cmp.is_empty() {
            write(
                &dir,
                &format!("wilcoxon_{treatment}_vs_{control}.csv"),
                &comparison_csv(&cmp),
                &mut files,
            )?;
        }
    }
    let metrics = MetricReport::build(&lists, &efficiency, Tokenization::Auto, BleuOptions::default())
        .map_err(|e| WorkspaceError::Metrics(e.to_string()))?;
    write(&dir, "metrics.json", &json(&metrics)?, &mut files)?;
    write(
        &dir,
        "efficiency.csv",
        &metrics
            .efficiency_csv()
            .map_err(|e| WorkspaceError::Metrics(e.to_string()))?,
        &mut files,
    )?;
    write(&dir, "validation.json", &json(&validations)?, &mut files)?;
    write(&dir, "pending.json", &json(&pending)?, &mut files)?;

    let meta = serde_json::json!({
        "generated_at": Utc::now().to_rfc3339(),
        "runs": entries.len(),
        "final_scores": finals.len(),
        "files": files,
    });
    let meta_path = dir.join("report.meta.json");
    fs::write(&meta_path, json(&meta)?).map_err(|e| io_err(&meta_path, e))?;
    Ok(ReportFiles {
        dir,
        files,
        pending: pending.into_iter().map(|p| p.response_id).collect(),
    })
}

fn json(value: &impl Serialize) -> Result<String, WorkspaceError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| WorkspaceError::Io(e.to_string()))
}
