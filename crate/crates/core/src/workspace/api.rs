//! Request and error bodies shared by the rater-console server and its client.

use serde::{Deserialize, Serialize};

use crate::scoring::{FieldViolation, ItemAnnotation, ScoreSheet};
use std::collections::BTreeMap;

/// Body of `PUT /scores/{response_id}/{rater_id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSubmission {
    /// Version the rater last saw; 0 for a first save. Omit to skip the check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_version: Option<u64>,
    pub scores: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<ItemAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl ScoreSubmission {
    pub fn from_sheet(sheet: &ScoreSheet, expected_version: Option<u64>) -> Self {
        Self {
            expected_version,
            scores: sheet.scores.clone(),
            items: sheet.items.clone(),
            comment: sheet.comment.clone(),
        }
    }

    pub fn into_sheet(self, response_id: &str, rater_id: &str) -> ScoreSheet {
        ScoreSheet {
            response_id: response_id.to_string(),
            rater_id: rater_id.to_string(),
            scores: self.scores,
            items: self.items,
            comment: self.comment,
        }
    }
}

/// Latest saved sheet for one rater, as returned by `GET /scores/...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSheet {
    pub version: u64,
    pub sheet: ScoreSheet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignRequest {
    pub rater_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<FieldViolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_version: Option<u64>,
}
