//! Benchmark harness for role-based multi-agent collaboration on six-step
//! future-scenario problem solving tasks.
//!
//! The crate is organised by concern:
//!
//! - [`model`]: domain types shared by every other module and prompt templating.
//! - [`gateway`]: chat-completion access (live HTTP or deterministic replay).
//! - [`orchestrator`]: warm-up, three-phase collaboration, baseline and ablation runs.
//! - [`tasks`]: the shipped step and scenario packs plus per-step output parsers and validators.
//! - [`metrics`]: Self-BLEU diversity, efficiency ratios and blank counts.
//! - [`scoring`]: rubric, score sheets, inter-rater statistics, merging and significance tests.
//! - [`workspace`]: on-disk layout for runs, packs, scores and reports.

pub mod gateway;
pub mod metrics;
pub mod model;
pub mod orchestrator;
pub mod scoring;
pub mod tasks;
pub mod workspace;

pub use model::{
    Histories, Message, Mode, Phase, RoleSpec, RunConfig, SamplingParams, Speaker, StepSpec, TeamRole, TemplateSet,
};
