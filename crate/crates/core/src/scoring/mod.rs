//! Rubric scoring, inter-rater agreement, calibration and significance testing.

mod aggregate;
mod calibration;
mod io;
mod merge;
mod rubric;
mod sheet;
mod stats;
mod wilcoxon;

use thiserror::Error;

pub use aggregate::{aggregate, compare_conditions, AggregateRow, FinalScore, ModelComparison};
pub use calibration::{case_id_for, CalibrationCase, CalibrationLedger, CaseStatus, LedgerEvent};
pub use io::{
    aggregate_csv, comparison_csv, load_sheets, read_final_scores_csv, read_sheets_csv, read_sheets_json,
    sheet_csv_header, write_final_scores_csv, write_sheets_csv, write_sheets_json,
};
pub use merge::{choose_replaced, merge_final, Calibration, MergedScore};
pub use rubric::{canonical_category, Dimension, Invalidity, Rubric, CATEGORIES, GRAND_TOTAL, STEP_MAXIMA};
pub use sheet::{normalize, FieldViolation, ItemAnnotation, ScoreSheet};
pub use stats::{icc, needs_calibration, pcc, CALIBRATION_THRESHOLD};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, PMethod, WilcoxonResult, EXACT_LIMIT};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("rubric: {0}")]
    Rubric(String),
    #[error("score sheet violates the rubric: {}", .0.iter().map(|v| format!("{}: {}", v.field, v.message)).collect::<Vec<_>>().join("; "))]
    RubricViolation(Vec<FieldViolation>),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero-variance vector")]
    DegenerateVector,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("calibration case {0} is still open")]
    OpenCalibration(String),
    #[error("unknown calibration case {0}")]
    UnknownCase(String),
    #[error("calibration ledger: {0}")]
    Ledger(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
