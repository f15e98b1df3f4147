use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::text::{first_integer, fold_width, strip_emphasis};
use super::TaskError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub id: u32,
    pub scores: Vec<i64>,
    pub total: i64,
}

/// A Step-5 decision matrix as written by the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub n_criteria: usize,
    pub rows: Vec<MatrixRow>,
    pub best_id: u32,
    pub best_text: String,
}

impl ScoreMatrix {
    pub fn n_solutions(&self) -> usize {
        self.rows.len()
    }

    pub fn totals(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.total).collect()
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        self.rows.iter().map(|r| r.scores[j]).collect()
    }

    /// Canonical pipe-table rendering; parses back to the same matrix.
    pub fn to_text(&self) -> String {
        let mut out = String::from("Solution ID");
        for j in 1..=self.n_criteria {
            out.push_str(&format!(" | Criterion {j}"));
        }
        out.push_str(" | Total Score\n");
        for row in &self.rows {
            out.push_str(&row.id.to_string());
            for s in &row.scores {
                out.push_str(&format!(" | {s}"));
            }
            out.push_str(&format!(" | {}\n", row.total));
        }
        out.push_str(&format!(
            "\nThe solution with the highest total score is: {}.",
            self.best_id
        ));
        if !self.best_text.is_empty() {
            out.push_str(&format!("\n\nThe solution is: {}", self.best_text));
        }
        out
    }
}

fn split_cells(line: &str) -> Vec<String> {
    let mut cells: Vec<String> = line.split('|').map(|c| c.trim().to_string()).collect();
    if cells.first().is_some_and(String::is_empty) {
        cells.remove(0);
    }
    if cells.last().is_some_and(String::is_empty) {
        cells.pop();
    }
    cells
}

fn is_separator(cells: &[String]) -> bool {
    cells.iter().all(|c| {
        let c = c.trim_matches(':');
        !c.is_empty() && c.chars().all(|ch| ch == '-')
    })
}

fn is_ellipsis(cells: &[String]) -> bool {
    cells
        .iter()
        .all(|c| c.is_empty() || c.chars().all(|ch| ch == '.' || ch == '…'))
}

fn parse_int(cell: &str) -> Option<i64> {
    let cell = strip_emphasis(cell);
    let (neg, digits) = match cell.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, cell),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let v: i64 = digits.parse().ok()?;
    Some(if neg { -v } else { v })
}

fn row_id(cell: &str) -> Option<u32> {
    let cell = strip_emphasis(cell);
    let lower = cell.to_ascii_lowercase();
    let rest = lower
        .strip_prefix("solution")
        .or_else(|| lower.strip_prefix('s'))
        .unwrap_or(&lower)
        .trim_start_matches([' ', '#']);
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

const BEST_LABELS: [&str; 4] = [
    "highest total score is",
    "highest-scoring solution id",
    "highest-scoring solution is",
    "best solution id",
];

fn best_declaration(lines: &[&str]) -> Option<(u32, String)> {
    for (i, line) in lines.iter().enumerate() {
        let lower = line.to_ascii_lowercase();
        let Some(pos) = BEST_LABELS.iter().find_map(|l| lower.find(l).map(|p| p + l.len())) else {
            continue;
        };
        let after = &line[pos..];
        let Some(digit_at) = after.find(|c: char| c.is_ascii_digit()) else {
            continue;
        };
        let prefix = after[..digit_at]
            .to_ascii_lowercase()
            .replace("solution", "")
            .replace("id", "");
        if !prefix.chars().all(|c| " :#*-,.".contains(c)) {
            continue;
        }
        let id = first_integer(&after[digit_at..])?;
        let tail = after[digit_at..].trim_start_matches(|c: char| c.is_ascii_digit());
        let tail = tail.trim_start_matches(['.', ',', ':', ';', ' ', '*']);
        let tail = tail
            .strip_prefix("Solution:")
            .or_else(|| tail.strip_prefix("Solution Content:"))
            .unwrap_or(tail)
            .trim();
        let text = if !tail.is_empty() {
            tail.to_string()
        } else {
            following_text(&lines[i + 1..])
        };
        return Some((id, text));
    }
    None
}

fn following_text(lines: &[&str]) -> String {
    let mut collected = Vec::new();
    for line in lines {
        let t = line.trim();
        if t.is_empty() {
            if collected.is_empty() {
                continue;
            }
            break;
        }
        collected.push(t);
    }
    let joined = collected.join(" ");
    for label in ["The solution is:", "Solution:", "Best Solution Content:"] {
        if let Some(rest) = joined.strip_prefix(label) {
            return rest.trim().to_string();
        }
    }
    joined
}

/// Reads the pipe table and the trailing best-solution declaration.
pub fn parse_score_matrix(text: &str) -> Result<ScoreMatrix, TaskError> {
    let folded = fold_width(text).replace('\u{2502}', "|");
    let lines: Vec<&str> = folded.lines().collect();
    let mut width: Option<usize> = None;
    let mut rows = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        if !line.contains('|') {
            continue;
        }
        let cells = split_cells(line);
        if cells.len() < 2 || is_separator(&cells) || is_ellipsis(&cells) {
            continue;
        }
        let Some(id) = row_id(&cells[0]) else {
            if rows.is_empty() {
                width = Some(cells.len());
                continue;
            }
            return Err(TaskError::MalformedRow {
                line: lineno + 1,
                reason: format!("solution id `{}` is not a number", cells[0]),
            });
        };
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(TaskError::MalformedRow {
                line: lineno + 1,
                reason: format!("expected {expected} cells, found {}", cells.len()),
            });
        }
        if expected < 3 {
            return Err(TaskError::MalformedRow {
                line: lineno + 1,
                reason: "a row needs an id, at least one criterion and a total".into(),
            });
        }
        let mut values = Vec::with_capacity(expected - 1);
        for cell in &cells[1..] {
            values.push(parse_int(cell).ok_or_else(|| TaskError::MalformedRow {
                line: lineno + 1,
                reason: format!("cell `{cell}` is not an integer"),
            })?);
        }
        let total = values.pop().expect("at least two values");
        rows.push(MatrixRow {
            id,
            scores: values,
            total,
        });
    }
    if rows.is_empty() {
        return Err(TaskError::NoMatrix);
    }
    let (best_id, best_text) = best_declaration(&lines).ok_or(TaskError::MissingBestDeclaration)?;
    Ok(ScoreMatrix {
        n_criteria: rows[0].scores.len(),
        rows,
        best_id,
        best_text,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Column `column` (1-based) is not a permutation of 1..=x.
    ColumnNotPermutation {
        column: usize,
        values: Vec<i64>,
        missing: Vec<i64>,
        repeated: Vec<i64>,
        out_of_range: Vec<i64>,
    },
    TotalMismatch {
        row_id: u32,
        stated: i64,
        computed: i64,
    },
    /// Claimed best does not hold the unique maximum stated total.
    BestNotArgmax {
        claimed: u32,
        max_total: i64,
        leaders: Vec<u32>,
    },
    BestUnknown {
        claimed: u32,
    },
    MissingSolutions {
        ids: Vec<u32>,
    },
    UnexpectedSolutions {
        ids: Vec<u32>,
    },
    DuplicateSolutionIds {
        ids: Vec<u32>,
    },
}

fn join(ids: &[impl ToString]) -> String {
    ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ColumnNotPermutation {
                column,
                values,
                missing,
                repeated,
                out_of_range,
            } => {
                let mut parts = Vec::new();
                for r in repeated {
                    let n = values.iter().filter(|v| *v == r).count();
                    parts.push(format!("{r} appears {n} times"));
                }
                if !missing.is_empty() {
                    parts.push(format!("missing {}", join(missing)));
                }
                if !out_of_range.is_empty() {
                    parts.push(format!("out of range {}", join(out_of_range)));
                }
                write!(f, "column {column} is not a ranking ({})", parts.join("; "))
            }
            Violation::TotalMismatch {
                row_id,
                stated,
                computed,
            } => {
                write!(f, "row {row_id} states total {stated}, cells sum to {computed}")
            }
            Violation::BestNotArgmax {
                claimed,
                max_total,
                leaders,
            } => write!(
                f,
                "declared best {claimed} does not hold the unique top total {max_total} (leaders: {})",
                join(leaders)
            ),
            Violation::BestUnknown { claimed } => write!(f, "declared best {claimed} is not a row of the matrix"),
            Violation::MissingSolutions { ids } => write!(f, "incomplete matrix: no rows for solutions {}", join(ids)),
            Violation::UnexpectedSolutions { ids } => write!(f, "rows for unknown solutions {}", join(ids)),
            Violation::DuplicateSolutionIds { ids } => write!(f, "duplicate rows for solutions {}", join(ids)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// The ranking range x used for the column checks.
    pub n_solutions: usize,
    pub column_permutation: Vec<bool>,
    pub totals_consistent: bool,
    pub argmax_consistent: bool,
    pub shape_ok: bool,
    pub violations: Vec<Violation>,
}

/// Coarse outcome, mirroring how raters describe Step-5 failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixClass {
    Valid,
    RankingError,
    IncompleteMatrix,
    NonCompliant,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn column_violations(&self) -> usize {
        self.column_permutation.iter().filter(|ok| !**ok).count()
    }

    /// Automatic "correctly used" score, when the case is clear-cut.
    pub fn pre_score(&self) -> Option<u32> {
        if self.is_valid() {
            Some(5)
        } else if self.column_violations() == 1 && self.totals_consistent && self.argmax_consistent && self.shape_ok {
            Some(4)
        } else {
            None
        }
    }

    pub fn class(&self) -> MatrixClass {
        if self.is_valid() {
            MatrixClass::Valid
        } else if !self.shape_ok {
            MatrixClass::IncompleteMatrix
        } else {
            MatrixClass::RankingError
        }
    }
}

/// Classifies a raw Step-5 answer, including answers with no table at all.
pub fn classify_step5(text: &str, expected_solutions: Option<usize>) -> MatrixClass {
    match parse_score_matrix(text) {
        Ok(m) => validate_matrix_against(&m, expected_solutions).class(),
        Err(_) => MatrixClass::NonCompliant,
    }
}

pub fn validate_matrix(m: &ScoreMatrix) -> ValidationReport {
    validate_matrix_against(m, None)
}

/// Checks every rule and lists every failure.
///
/// `expected_solutions` is the Step-3 count when known. Without it the range
/// is the larger of the row count and the highest solution id.
pub fn validate_matrix_against(m: &ScoreMatrix, expected_solutions: Option<usize>) -> ValidationReport {
    let x = expected_solutions.unwrap_or_else(|| {
        let max_id = m.rows.iter().map(|r| r.id as usize).max().unwrap_or(0);
        m.rows.len().max(max_id)
    });
    let mut violations = Vec::new();

    let mut id_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for row in &m.rows {
        *id_counts.entry(row.id).or_default() += 1;
    }
    let duplicated: Vec<u32> = id_counts.iter().filter(|(_, n)| **n > 1).map(|(id, _)| *id).collect();
    let missing: Vec<u32> = (1..=x as u32).filter(|id| !id_counts.contains_key(id)).collect();
    let unexpected: Vec<u32> = id_counts
        .keys()
        .copied()
        .filter(|id| *id == 0 || *id as usize > x)
        .collect();
    let shape_ok = duplicated.is_empty() && missing.is_empty() && unexpected.is_empty() && m.rows.len() == x;
    if !missing.is_empty() {
        violations.push(Violation::MissingSolutions { ids: missing });
    }
    if !unexpected.is_empty() {
        violations.push(Violation::UnexpectedSolutions { ids: unexpected });
    }
    if !duplicated.is_empty() {
        violations.push(Violation::DuplicateSolutionIds { ids: duplicated });
    }

    let mut column_permutation = Vec::with_capacity(m.n_criteria);
    for j in 0..m.n_criteria {
        let values = m.column(j);
        let mut seen = vec![0usize; x + 1];
        let mut out_of_range = Vec::new();
        for &v in &values {
            if v >= 1 && (v as usize) <= x {
                seen[v as usize] += 1;
            } else {
                out_of_range.push(v);
            }
        }
        let missing: Vec<i64> = (1..=x).filter(|&v| seen[v] == 0).map(|v| v as i64).collect();
        let repeated: Vec<i64> = (1..=x).filter(|&v| seen[v] > 1).map(|v| v as i64).collect();
        let ok = missing.is_empty() && repeated.is_empty() && out_of_range.is_empty();
        column_permutation.push(ok);
        if !ok {
            violations.push(Violation::ColumnNotPermutation {
                column: j + 1,
                values,
                missing,
                repeated,
                out_of_range,
            });
        }
    }

    let mut totals_consistent = true;
    for row in &m.rows {
        let computed: i64 = row.scores.iter().sum();
        if computed != row.total {
            totals_consistent = false;
            violations.push(Violation::TotalMismatch {
                row_id: row.id,
                stated: row.total,
                computed,
            });
        }
    }

    let argmax_consistent = match m.rows.iter().map(|r| r.total).max() {
        _ if !m.rows.iter().any(|r| r.id == m.best_id) => {
            violations.push(Violation::BestUnknown { claimed: m.best_id });
            false
        }
        Some(max_total) => {
            let leaders: Vec<u32> = m.rows.iter().filter(|r| r.total == max_total).map(|r| r.id).collect();
            let ok = leaders == [m.best_id];
            if !ok {
                violations.push(Violation::BestNotArgmax {
                    claimed: m.best_id,
                    max_total,
                    leaders,
                });
            }
            ok
        }
        None => false,
    };

    ValidationReport {
        n_solutions: x,
        column_permutation,
        totals_consistent,
        argmax_consistent,
        shape_ok,
        violations,
    }
}
