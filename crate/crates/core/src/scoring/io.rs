//! CSV and JSON forms of score sheets and final scores.
//!
//! Sheet CSV columns are `response_id,rater_id` followed by every rubric
//! dimension key in rubric order. Item annotations only travel in JSON.

use std::collections::BTreeMap;
use std::path::Path;

use super::aggregate::{AggregateRow, FinalScore, ModelComparison};
use super::rubric::Rubric;
use super::sheet::{FieldViolation, ScoreSheet};
use super::ScoringError;

fn csv_err(e: csv::Error) -> ScoringError {
    ScoringError::Format(e.to_string())
}

pub fn sheet_csv_header(rubric: &Rubric) -> Vec<String> {
    let mut header = vec!["response_id".to_string(), "rater_id".to_string()];
    header.extend(rubric.dimensions().iter().map(|d| d.key.clone()));
    header
}

pub fn write_sheets_csv(rubric: &Rubric, sheets: &[ScoreSheet]) -> Result<String, ScoringError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(sheet_csv_header(rubric)).map_err(csv_err)?;
    for s in sheets {
        let mut rec = vec![s.response_id.clone(), s.rater_id.clone()];
        rec.extend(s.ordered(rubric).iter().map(u32::to_string));
        w.write_record(rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ScoringError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses sheet CSV; every row is validated against the rubric.
pub fn read_sheets_csv(rubric: &Rubric, text: &str) -> Result<Vec<ScoreSheet>, ScoringError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != sheet_csv_header(rubric) {
        return Err(ScoringError::Format(format!(
            "sheet CSV header must be {}",
            sheet_csv_header(rubric).join(",")
        )));
    }
    let mut sheets = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut scores = BTreeMap::new();
        let mut bad = Vec::new();
        for (key, value) in header.iter().zip(rec.iter()).skip(2) {
            match value.parse::<u32>() {
                Ok(v) => {
                    scores.insert(key.clone(), v);
                }
                Err(_) => bad.push(FieldViolation {
                    field: format!("row {}.{key}", row + 1),
                    message: format!("`{value}` is not a non-negative integer"),
                }),
            }
        }
        if !bad.is_empty() {
            return Err(ScoringError::RubricViolation(bad));
        }
        let sheet = ScoreSheet {
            response_id: rec[0].to_string(),
            rater_id: rec[1].to_string(),
            scores,
            items: Vec::new(),
            comment: None,
        };
        sheet.validate(rubric)?;
        sheets.push(sheet);
    }
    Ok(sheets)
}

pub fn read_sheets_json(rubric: &Rubric, text: &str) -> Result<Vec<ScoreSheet>, ScoringError> {
    let sheets: Vec<ScoreSheet> = serde_json::from_str(text).map_err(|e| ScoringError::Format(e.to_string()))?;
    for s in &sheets {
        s.validate(rubric)?;
    }
    Ok(sheets)
}

pub fn write_sheets_json(sheets: &[ScoreSheet]) -> String {
    serde_json::to_string_pretty(sheets).expect("sheets serialize")
}

/// Reads sheets from a `.csv` or `.json` file.
pub fn load_sheets(rubric: &Rubric, path: &Path) -> Result<Vec<ScoreSheet>, ScoringError> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_sheets_csv(rubric, &text),
        Some("json") => read_sheets_json(rubric, &text),
        _ => Err(ScoringError::Format(format!(
            "{}: expected .csv or .json",
            path.display()
        ))),
    }
}

/// Long-format final scores: `model,condition,scenario,total`.
pub fn read_final_scores_csv(text: &str) -> Result<Vec<FinalScore>, ScoringError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() < 4 {
            return Err(ScoringError::Format(format!("expected 4 columns, found {}", rec.len())));
        }
        let total = rec[3]
            .parse::<f64>()
            .map_err(|_| ScoringError::Format(format!("bad total `{}`", &rec[3])))?;
        out.push(FinalScore {
            model: rec[0].to_string(),
            condition: rec[1].to_string(),
            scenario: rec[2].to_string(),
            total,
            step_totals: None,
            dimensions: None,
        });
    }
    Ok(out)
}

pub fn write_final_scores_csv(scores: &[FinalScore]) -> String {
    let mut out = String::from("model,condition,scenario,total\n");
    for s in scores {
        out.push_str(&format!("{},{},{},{}\n", s.model, s.condition, s.scenario, s.total));
    }
    out
}

/// Deterministic table: one row per model and condition, scenarios as columns.
pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut scenarios: Vec<&String> = rows.iter().flat_map(|r| r.scenarios.keys()).collect();
    scenarios.sort_by_key(|s| scenario_order(s));
    scenarios.dedup();
    let mut out = String::from("model,condition");
    for s in &scenarios {
        out.push(',');
        out.push_str(s);
    }
    out.push_str(",avg\n");
    for r in rows {
        out.push_str(&format!("{},{}", r.model, r.condition));
        for s in &scenarios {
            out.push(',');
            if let Some(v) = r.scenarios.get(*s) {
                out.push_str(&format!("{v:.2}"));
            }
        }
        out.push_str(&format!(",{:.2}\n", r.avg));
    }
    out
}

pub fn comparison_csv(rows: &[ModelComparison]) -> String {
    let mut out = String::from("model,n,zero_differences,w_plus,w_minus,p_value,method\n");
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{}\n",
            c.model,
            c.result.n,
            c.result.zero_differences,
            c.result.w_plus,
            c.result.w_minus,
            c.result.p_value,
            serde_json::to_value(c.result.method).unwrap().as_str().unwrap()
        ));
    }
    out
}

/// `FS2` sorts before `FS10`.
fn scenario_order(id: &str) -> (String, u64, String) {
    let digits: String = id
        .chars()
        .rev()
        .take_while(char::is_ascii_digit)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let prefix = id[..id.len() - digits.len()].to_string();
    (prefix, digits.parse().unwrap_or(0), id.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::aggregate::aggregate;

    const H01: [u32; 23] = [8, 5, 8, 3, 2, 3, 1, 2, 6, 8, 7, 2, 14, 7, 5, 6, 4, 3, 3, 4, 4, 3, 8];

    #[test]
    fn sheet_csv_round_trip() {
        let r = Rubric::cgpst();
        let s = ScoreSheet::from_ordered(&r, "r-1", "H01", &H01).unwrap();
        let text = write_sheets_csv(&r, std::slice::from_ref(&s)).unwrap();
        assert!(text.starts_with("response_id,rater_id,s1_fluency,s1_flexibility,"));
        assert_eq!(read_sheets_csv(&r, &text).unwrap(), vec![s]);
    }

    #[test]
    fn bad_csv_cells_are_reported_per_field() {
        let r = Rubric::cgpst();
        let s = ScoreSheet::from_ordered(&r, "r-1", "H01", &H01).unwrap();
        let text = write_sheets_csv(&r, &[s]).unwrap().replace("r-1,H01,8,", "r-1,H01,x,");
        match read_sheets_csv(&r, &text) {
            Err(ScoringError::RubricViolation(v)) => assert_eq!(v[0].field, "row 1.s1_fluency"),
            other => panic!("{other:?}"),
        }
        let too_high = write_sheets_csv(&r, &[ScoreSheet::from_ordered(&r, "r-1", "H01", &H01).unwrap()])
            .unwrap()
            .replace("r-1,H01,8,", "r-1,H01,9,");
        assert!(matches!(
            read_sheets_csv(&r, &too_high),
            Err(ScoringError::RubricViolation(_))
        ));
    }

    #[test]
    fn aggregate_table_orders_scenarios_numerically() {
        let scores = read_final_scores_csv("model,condition,scenario,total\nm,t,FS10,3\nm,t,FS2,1.5\n").unwrap();
        let table = aggregate_csv(&aggregate(&scores).unwrap());
        assert_eq!(table, "model,condition,FS2,FS10,avg\nm,t,1.50,3.00,2.25\n");
    }
}
