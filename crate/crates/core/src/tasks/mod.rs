//! The CGPST step and scenario packs, plus parsers and validators for each
//! step's structured output.
//!
//! Parsers are tolerant; strictness lives in the validators.

mod archive;
mod list;
mod matrix;
mod packs;
mod problem;
pub mod text;

use thiserror::Error;

pub use archive::{list_limit, mandated_count, parse_run, parse_step, write_archive, ParsedOutput, ParsedStep};
pub use list::{parse_numbered_list, ItemList, ListItem};
pub use matrix::{
    classify_step5, parse_score_matrix, validate_matrix, validate_matrix_against, MatrixClass, MatrixRow, ScoreMatrix,
    ValidationReport, Violation,
};
pub use packs::{
    default_scenarios, default_steps, find_scenario, load_scenario_pack, load_step_pack, parse_scenario_pack,
    parse_step_pack, Scenario, DEFAULT_SCENARIO_PACK, DEFAULT_STEP_PACK,
};
pub use problem::{parse_underlying_problem, ProblemFlag, ScenarioParameters, UnderlyingProblem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskError {
    #[error("no numbered items found")]
    NoItemsFound,
    #[error("no score matrix rows found")]
    NoMatrix,
    #[error("malformed matrix row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("no highest-scoring solution declaration found")]
    MissingBestDeclaration,
    #[error("schema error at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(String),
}
