use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::first_integer;
use super::{
    classify_step5, parse_numbered_list, parse_score_matrix, parse_underlying_problem, validate_matrix_against,
    ItemList, MatrixClass, ScoreMatrix, TaskError, UnderlyingProblem, ValidationReport,
};

/// Item limit per list step: "up to eight" challenges and solutions, five criteria.
pub fn list_limit(step: u32) -> Option<usize> {
    match step {
        1 | 3 => Some(8),
        4 => Some(5),
        _ => None,
    }
}

/// Steps whose item count is fixed rather than an upper bound.
pub fn mandated_count(step: u32) -> Option<usize> {
    (step == 4).then_some(5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedOutput {
    List {
        list: ItemList,
    },
    UnderlyingProblem {
        problem: UnderlyingProblem,
    },
    ScoreMatrix {
        matrix: ScoreMatrix,
        report: ValidationReport,
        pre_score: Option<u32>,
        class: MatrixClass,
    },
    ActionPlan {
        best_solution_id: Option<u32>,
        text: String,
    },
    /// The parser could not extract the structure; raters still score the raw text.
    Unparsed {
        error: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<MatrixClass>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedStep {
    pub run_id: String,
    pub step: u32,
    pub raw: String,
    pub output: ParsedOutput,
}

/// Parses one step answer. `solutions` is the Step-3 item count, when known.
pub fn parse_step(step: u32, text: &str, solutions: Option<usize>) -> ParsedOutput {
    let unparsed = |e: TaskError| ParsedOutput::Unparsed {
        error: e.to_string(),
        class: None,
    };
    match step {
        1 | 3 | 4 => match parse_numbered_list(text, list_limit(step).unwrap_or(8)) {
            Ok(list) => ParsedOutput::List { list },
            Err(e) => unparsed(e),
        },
        2 => ParsedOutput::UnderlyingProblem {
            problem: parse_underlying_problem(text),
        },
        5 => match parse_score_matrix(text) {
            Ok(matrix) => {
                let report = validate_matrix_against(&matrix, solutions);
                ParsedOutput::ScoreMatrix {
                    pre_score: report.pre_score(),
                    class: report.class(),
                    matrix,
                    report,
                }
            }
            Err(e) => ParsedOutput::Unparsed {
                error: e.to_string(),
                class: Some(classify_step5(text, solutions)),
            },
        },
        _ => ParsedOutput::ActionPlan {
            best_solution_id: text
                .lines()
                .find(|l| l.to_ascii_lowercase().contains("best solution id"))
                .and_then(first_integer),
            text: text.trim().to_string(),
        },
    }
}

/// Parses every answer of a run, feeding the Step-3 count into Step-5 validation.
pub fn parse_run(run_id: &str, answers: &[String]) -> Vec<ParsedStep> {
    let mut solutions = None;
    answers
        .iter()
        .enumerate()
        .map(|(i, raw)| {
            let step = i as u32 + 1;
            let output = parse_step(step, raw, solutions);
            if step == 3 {
                if let ParsedOutput::List { list } = &output {
                    solutions = Some(list.len());
                }
            }
            ParsedStep {
                run_id: run_id.to_string(),
                step,
                raw: raw.clone(),
                output,
            }
        })
        .collect()
}

/// Writes `step-<k>.json` per parsed step into `dir`.
pub fn write_archive(dir: &Path, steps: &[ParsedStep]) -> Result<(), TaskError> {
    std::fs::create_dir_all(dir).map_err(|e| TaskError::Io(format!("{}: {e}", dir.display())))?;
    for step in steps {
        let path = dir.join(format!("step-{}.json", step.step));
        let text = serde_json::to_string_pretty(step).map_err(|e| TaskError::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| TaskError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_dispatch() {
        assert!(matches!(parse_step(1, "1. a\n2. b", None), ParsedOutput::List { .. }));
        assert!(matches!(
            parse_step(1, "nothing", None),
            ParsedOutput::Unparsed { class: None, .. }
        ));
        assert!(matches!(
            parse_step(5, "The solution with the highest total score is: 2.", Some(8)),
            ParsedOutput::Unparsed {
                class: Some(MatrixClass::NonCompliant),
                ..
            }
        ));
        match parse_step(6, "Best Solution ID: 3\nAction Plan: go", None) {
            ParsedOutput::ActionPlan { best_solution_id, .. } => assert_eq!(best_solution_id, Some(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step3_count_feeds_step5() {
        let answers: Vec<String> = vec![
            "1. a".into(),
            "x".into(),
            "1. s\n2. t\n3. u".into(),
            "1. c".into(),
            "1 | 2 | 2\n2 | 1 | 1\nThe solution with the highest total score is: 1.".into(),
            "plan".into(),
        ];
        let parsed = parse_run("r", &answers);
        match &parsed[4].output {
            ParsedOutput::ScoreMatrix { report, class, .. } => {
                assert_eq!(report.n_solutions, 3);
                assert_eq!(*class, MatrixClass::IncompleteMatrix);
            }
            other => panic!("{other:?}"),
        }
        let dir = tempfile::tempdir().unwrap();
        write_archive(dir.path(), &parsed).unwrap();
        assert!(dir.path().join("step-6.json").exists());
    }
}
