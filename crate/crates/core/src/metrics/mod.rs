//! Automatic metrics: Self-BLEU diversity, Step-3 efficiency ratios and
//! blank-response counts.

mod bleu;
mod efficiency;
mod report;

use thiserror::Error;

pub use bleu::{bleu, diversity, diversity_with, self_bleu, self_bleu_with, BleuOptions, ResponseSet, Tokenization};
pub use efficiency::{count_blanks, efficiencies, Efficiencies, EfficiencyInput};
pub use report::{EfficiencyEntry, EfficiencyObservation, ListObservation, MetricReport, ModelEntry, ScenarioEntry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("diversity needs at least two non-blank responses, got {0}")]
    TooFewResponses(usize),
    #[error("fluency is zero; efficiency ratios are undefined")]
    ZeroFluency,
    #[error("invalid efficiency input: {0}")]
    InvalidInput(String),
    #[error("io: {0}")]
    Io(String),
}
