use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rubric::{canonical_category, Invalidity, Rubric};
use super::ScoringError;

/// One field-level problem in a score sheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldViolation {
    pub field: String,
    pub message: String,
}

impl FieldViolation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Per-item judgement for the list steps (Step-1 and Step-3).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemAnnotation {
    pub step: u32,
    pub index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalidity: Option<Invalidity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elaboration: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub originality: Option<u32>,
}

impl ItemAnnotation {
    pub fn valid(step: u32, index: u32, category: &str, elaboration: u32, originality: u32) -> Self {
        Self {
            step,
            index,
            category: Some(category.to_string()),
            invalidity: None,
            elaboration: Some(elaboration),
            originality: Some(originality),
        }
    }

    pub fn invalid(step: u32, index: u32, kind: Invalidity) -> Self {
        Self {
            step,
            index,
            category: None,
            invalidity: Some(kind),
            elaboration: None,
            originality: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.invalidity.is_none()
    }
}

/// One rater's scores for one response, keyed by dimension in rubric order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSheet {
    pub response_id: String,
    pub rater_id: String,
    pub scores: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<ItemAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl ScoreSheet {
    /// Builds a sheet from scores listed in canonical rubric order.
    pub fn from_ordered(
        rubric: &Rubric,
        response_id: impl Into<String>,
        rater_id: impl Into<String>,
        values: &[u32],
    ) -> Result<Self, ScoringError> {
        if values.len() != rubric.len() {
            return Err(ScoringError::RubricViolation(vec![FieldViolation::new(
                "scores",
                format!("expected {} values, found {}", rubric.len(), values.len()),
            )]));
        }
        let scores = rubric
            .dimensions()
            .iter()
            .zip(values)
            .map(|(d, v)| (d.key.clone(), *v))
            .collect();
        Ok(Self {
            response_id: response_id.into(),
            rater_id: rater_id.into(),
            scores,
            items: Vec::new(),
            comment: None,
        })
    }

    pub fn with_items(mut self, items: Vec<ItemAnnotation>) -> Self {
        self.items = items;
        self
    }

    /// Scores in canonical order; missing dimensions read as zero.
    pub fn ordered(&self, rubric: &Rubric) -> Vec<u32> {
        rubric
            .dimensions()
            .iter()
            .map(|d| self.scores.get(&d.key).copied().unwrap_or(0))
            .collect()
    }

    pub fn step_totals(&self, rubric: &Rubric) -> [u32; 6] {
        let mut out = [0; 6];
        for d in rubric.dimensions() {
            out[d.step as usize - 1] += self.scores.get(&d.key).copied().unwrap_or(0);
        }
        out
    }

    pub fn total(&self, rubric: &Rubric) -> u32 {
        self.step_totals(rubric).iter().sum()
    }

    /// Every field-level problem, empty when the sheet is acceptable.
    pub fn violations(&self, rubric: &Rubric) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        if self.response_id.trim().is_empty() {
            out.push(FieldViolation::new("response_id", "must not be empty"));
        }
        if self.rater_id.trim().is_empty() {
            out.push(FieldViolation::new("rater_id", "must not be empty"));
        }
        for d in rubric.dimensions() {
            match self.scores.get(&d.key) {
                None => out.push(FieldViolation::new(format!("scores.{}", d.key), "missing")),
                Some(v) if *v > d.max_score => out.push(FieldViolation::new(
                    format!("scores.{}", d.key),
                    format!("{v} exceeds maximum {}", d.max_score),
                )),
                Some(_) => {}
            }
        }
        for key in self.scores.keys() {
            if rubric.index_of(key).is_none() {
                out.push(FieldViolation::new(format!("scores.{key}"), "unknown dimension"));
            }
        }
        for step in [1, 3] {
            self.item_violations(rubric, step, &mut out);
        }
        for (i, item) in self.items.iter().enumerate() {
            if item.step != 1 && item.step != 3 {
                out.push(FieldViolation::new(
                    format!("items[{i}].step"),
                    "items exist only for steps 1 and 3",
                ));
            }
        }
        out
    }

    pub fn validate(&self, rubric: &Rubric) -> Result<(), ScoringError> {
        let v = self.violations(rubric);
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScoringError::RubricViolation(v))
        }
    }

    fn item_violations(&self, rubric: &Rubric, step: u32, out: &mut Vec<FieldViolation>) {
        let items: Vec<(usize, &ItemAnnotation)> = self
            .items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.step == step)
            .collect();
        if items.is_empty() {
            return;
        }
        let mut seen = BTreeSet::new();
        let mut categories = BTreeSet::new();
        let (mut fluency, mut elaboration, mut originality) = (0u32, 0u32, 0u32);
        for (i, item) in &items {
            let field = |name: &str| format!("items[{i}].{name}");
            if !seen.insert(item.index) {
                out.push(FieldViolation::new(
                    field("index"),
                    format!("item {} annotated twice", item.index),
                ));
            }
            match item.invalidity {
                Some(kind) => {
                    if !Invalidity::allowed_for(step).contains(&kind) {
                        out.push(FieldViolation::new(
                            field("invalidity"),
                            format!("{kind:?} is not an invalidity type for step {step}"),
                        ));
                    }
                    if item.elaboration.unwrap_or(0) > 0 || item.originality.unwrap_or(0) > 0 {
                        out.push(FieldViolation::new(field("invalidity"), "invalid items earn no points"));
                    }
                }
                None => {
                    fluency += 1;
                    match item.category.as_deref().map(canonical_category) {
                        Some(Some(c)) => {
                            categories.insert(c);
                        }
                        Some(None) => out.push(FieldViolation::new(field("category"), "unknown category")),
                        None => out.push(FieldViolation::new(field("category"), "valid items need a category")),
                    }
                    for (name, value) in [("elaboration", item.elaboration), ("originality", item.originality)] {
                        match value {
                            Some(v) if v > 2 => out.push(FieldViolation::new(field(name), format!("{v} exceeds 2"))),
                            Some(_) => {}
                            None => out.push(FieldViolation::new(field(name), "missing")),
                        }
                    }
                    elaboration += item.elaboration.unwrap_or(0);
                    originality += item.originality.unwrap_or(0);
                }
            }
        }
        let prefix = format!("s{step}_");
        let derived = [
            ("fluency", fluency),
            ("flexibility", categories.len() as u32),
            ("elaboration", elaboration),
            ("originality", originality),
        ];
        for (name, expected) in derived {
            let key = format!("{prefix}{name}");
            if rubric.index_of(&key).is_none() {
                continue;
            }
            if let Some(stated) = self.scores.get(&key) {
                if *stated != expected {
                    out.push(FieldViolation::new(
                        format!("scores.{key}"),
                        format!("item annotations give {expected}, sheet states {stated}"),
                    ));
                }
            }
        }
    }
}

/// Scores divided by their dimension maxima, in rubric order.
pub fn normalize(sheet: &ScoreSheet, rubric: &Rubric) -> Vec<f64> {
    rubric
        .dimensions()
        .iter()
        .map(|d| sheet.scores.get(&d.key).copied().unwrap_or(0) as f64 / d.max_score as f64)
        .collect()
}
