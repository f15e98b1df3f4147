use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use super::ScoringError;

/// One final (merged) score in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalScore {
    pub model: String,
    pub condition: String,
    pub scenario: String,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_totals: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub condition: String,
    /// Totals by scenario, sorted by scenario id.
    pub scenarios: BTreeMap<String, f64>,
    pub avg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_means: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_means: Option<Vec<f64>>,
}

/// Rows per (model, condition), sorted by model then condition.
pub fn aggregate(scores: &[FinalScore]) -> Result<Vec<AggregateRow>, ScoringError> {
    let mut groups: BTreeMap<(String, String), Vec<&FinalScore>> = BTreeMap::new();
    for s in scores {
        groups
            .entry((s.model.clone(), s.condition.clone()))
            .or_default()
            .push(s);
    }
    let mut rows = Vec::new();
    for ((model, condition), group) in groups {
        let mut scenarios = BTreeMap::new();
        for s in &group {
            if scenarios.insert(s.scenario.clone(), s.total).is_some() {
                return Err(ScoringError::InvalidInput(format!(
                    "duplicate score for {model}/{condition}/{}",
                    s.scenario
                )));
            }
        }
        let n = group.len() as f64;
        let avg = group.iter().map(|s| s.total).sum::<f64>() / n;
        let step_means = if group.iter().all(|s| s.step_totals.is_some()) {
            let mut m = [0.0; 6];
            for s in &group {
                for (acc, v) in m.iter_mut().zip(s.step_totals.unwrap()) {
                    *acc += v / n;
                }
            }
            Some(m)
        } else {
            None
        };
        let dimension_means = match group.first().and_then(|s| s.dimensions.as_ref()) {
            Some(first)
                if group
                    .iter()
                    .all(|s| s.dimensions.as_ref().map(Vec::len) == Some(first.len())) =>
            {
                let mut m = vec![0.0; first.len()];
                for s in &group {
                    for (acc, v) in m.iter_mut().zip(s.dimensions.as_ref().unwrap()) {
                        *acc += v / n;
                    }
                }
                Some(m)
            }
            _ => None,
        };
        rows.push(AggregateRow {
            model,
            condition,
            scenarios,
            avg,
            step_means,
            dimension_means,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    /// Scenarios present in both conditions.
    pub paired: usize,
    pub result: WilcoxonResult,
}

/// Paired signed-rank test of `treatment` against `control` per model, pairing by scenario.
pub fn compare_conditions(
    scores: &[FinalScore],
    treatment: &str,
    control: &str,
) -> Result<Vec<ModelComparison>, ScoringError> {
    type Paired<'a> = (BTreeMap<&'a str, f64>, BTreeMap<&'a str, f64>);
    let mut by_model: BTreeMap<&str, Paired<'_>> = BTreeMap::new();
    for s in scores {
        let entry = by_model.entry(&s.model).or_default();
        if s.condition == treatment {
            entry.0.insert(&s.scenario, s.total);
        } else if s.condition == control {
            entry.1.insert(&s.scenario, s.total);
        }
    }
    let mut out = Vec::new();
    for (model, (t, c)) in by_model {
        let (a, b): (Vec<f64>, Vec<f64>) = t.iter().filter_map(|(k, v)| c.get(k).map(|w| (*v, *w))).unzip();
        if a.is_empty() {
            continue;
        }
        out.push(ModelComparison {
            model: model.to_string(),
            paired: a.len(),
            result: wilcoxon_signed_rank(&a, &b)?,
        });
    }
    Ok(out)
}
