use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    count_blanks, diversity_with, efficiencies, BleuOptions, EfficiencyInput, MetricsError, ResponseSet, Tokenization,
};
use crate::model::Mode;
use crate::tasks::{mandated_count, ItemList};

/// Parsed list answer of one run for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ListObservation {
    pub model: String,
    pub mode: Mode,
    pub scenario: String,
    pub step: u32,
    pub list: ItemList,
}

/// Rater scores feeding the efficiency ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyObservation {
    pub model: String,
    pub mode: Mode,
    pub scenario: String,
    pub input: EfficiencyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub model: String,
    pub mode: Mode,
    pub scenario: String,
    pub step: u32,
    pub runs: usize,
    pub responses: usize,
    pub mean_blanks: f64,
    /// None when fewer than two non-blank responses remain.
    pub diversity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model: String,
    pub mode: Mode,
    pub step: u32,
    /// Mean of the per-scenario values.
    pub diversity_scenario_mean: Option<f64>,
    /// One response set pooled over all scenarios.
    pub diversity_pooled: Option<f64>,
    pub mean_blanks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEntry {
    pub model: String,
    pub mode: Mode,
    pub responses: usize,
    pub flexibility: f64,
    pub elaboration: f64,
    pub originality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tokenization: Tokenization,
    pub options: BleuOptions,
    pub scenarios: Vec<ScenarioEntry>,
    pub models: Vec<ModelEntry>,
    pub efficiencies: Vec<EfficiencyEntry>,
}

fn diversity_of(texts: &[&str], tokenization: Tokenization, options: &BleuOptions) -> Option<f64> {
    let set = ResponseSet::new(texts, tokenization);
    match diversity_with(&set, options) {
        Ok(d) => Some(d),
        Err(MetricsError::TooFewResponses(_)) => None,
        Err(e) => unreachable!("diversity only fails on set size: {e}"),
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

impl MetricReport {
    pub fn build(
        lists: &[ListObservation],
        efficiency_inputs: &[EfficiencyObservation],
        tokenization: Tokenization,
        options: BleuOptions,
    ) -> Result<Self, MetricsError> {
        let mut by_scenario: BTreeMap<(String, Mode, u32, String), Vec<&ItemList>> = BTreeMap::new();
        for obs in lists {
            by_scenario
                .entry((obs.model.clone(), obs.mode, obs.step, obs.scenario.clone()))
                .or_default()
                .push(&obs.list);
        }
        let mut scenarios = Vec::new();
        for ((model, mode, step, scenario), group) in &by_scenario {
            let texts: Vec<&str> = group.iter().flat_map(|l| l.texts()).collect();
            let owned: Vec<ItemList> = group.iter().map(|l| (*l).clone()).collect();
            scenarios.push(ScenarioEntry {
                model: model.clone(),
                mode: *mode,
                scenario: scenario.clone(),
                step: *step,
                runs: group.len(),
                responses: texts.iter().filter(|t| !t.trim().is_empty()).count(),
                mean_blanks: count_blanks(&owned, mandated_count(*step)),
                diversity: diversity_of(&texts, tokenization, &options),
            });
        }

        let mut by_model: BTreeMap<(String, Mode, u32), Vec<&ScenarioEntry>> = BTreeMap::new();
        for entry in &scenarios {
            by_model
                .entry((entry.model.clone(), entry.mode, entry.step))
                .or_default()
                .push(entry);
        }
        let mut models = Vec::new();
        for ((model, mode, step), entries) in by_model {
            let per_scenario: Vec<f64> = entries.iter().filter_map(|e| e.diversity).collect();
            let pooled: Vec<&str> = lists
                .iter()
                .filter(|o| o.model == model && o.mode == mode && o.step == step)
                .flat_map(|o| o.list.texts())
                .collect();
            let runs: usize = entries.iter().map(|e| e.runs).sum();
            let blanks: f64 = entries.iter().map(|e| e.mean_blanks * e.runs as f64).sum();
            models.push(ModelEntry {
                diversity_scenario_mean: mean(&per_scenario),
                diversity_pooled: diversity_of(&pooled, tokenization, &options),
                mean_blanks: if runs == 0 { 0.0 } else { blanks / runs as f64 },
                model,
                mode,
                step,
            });
        }

        let mut by_condition: BTreeMap<(String, Mode), Vec<super::Efficiencies>> = BTreeMap::new();
        for obs in efficiency_inputs {
            by_condition
                .entry((obs.model.clone(), obs.mode))
                .or_default()
                .push(efficiencies(&obs.input)?);
        }
        let efficiencies = by_condition
            .into_iter()
            .map(|((model, mode), values)| {
                let n = values.len() as f64;
                EfficiencyEntry {
                    model,
                    mode,
                    responses: values.len(),
                    flexibility: values.iter().map(|v| v.flexibility).sum::<f64>() / n,
                    elaboration: values.iter().map(|v| v.elaboration).sum::<f64>() / n,
                    originality: values.iter().map(|v| v.originality).sum::<f64>() / n,
                }
            })
            .collect();

        Ok(Self {
            tokenization,
            options,
            scenarios,
            models,
            efficiencies,
        })
    }

    /// Efficiency table: one row per model and condition, one column per ratio.
    pub fn efficiency_csv(&self) -> Result<String, MetricsError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "model",
                "condition",
                "responses",
                "flexibility_efficiency",
                "elaboration_efficiency",
                "originality_efficiency",
            ])
            .map_err(|e| MetricsError::Io(e.to_string()))?;
        for e in &self.efficiencies {
            writer
                .write_record([
                    e.model.clone(),
                    e.mode.to_string(),
                    e.responses.to_string(),
                    format!("{:.4}", e.flexibility),
                    format!("{:.4}", e.elaboration),
                    format!("{:.4}", e.originality),
                ])
                .map_err(|e| MetricsError::Io(e.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| MetricsError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| MetricsError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::parse_numbered_list;

    fn obs(model: &str, scenario: &str, text: &str) -> ListObservation {
        ListObservation {
            model: model.into(),
            mode: Mode::Teamllm,
            scenario: scenario.into(),
            step: 3,
            list: parse_numbered_list(text, 8).unwrap(),
        }
    }

    #[test]
    fn aggregations() {
        let lists = [obs("m", "FS1", "1. a b\n2. a b"), obs("m", "FS2", "1. c d\n2. e f\n3.")];
        let eff = [EfficiencyObservation {
            model: "m".into(),
            mode: Mode::Teamllm,
            scenario: "FS1".into(),
            input: EfficiencyInput::new(7, 2, 14, 7),
        }];
        let report = MetricReport::build(&lists, &eff, Tokenization::Whitespace, BleuOptions::default()).unwrap();
        assert_eq!(report.scenarios[0].diversity, Some(0.0));
        assert_eq!(report.scenarios[1].diversity, Some(1.0));
        assert_eq!(report.scenarios[1].mean_blanks, 1.0);
        let m = &report.models[0];
        assert_eq!(m.diversity_scenario_mean, Some(0.5));
        assert!(m.diversity_pooled.unwrap() > 0.0 && m.diversity_pooled.unwrap() < 1.0);
        assert_eq!(m.mean_blanks, 0.5);
        let csv = report.efficiency_csv().unwrap();
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("m,teamllm,1,0.2857,2.0000,1.0000"));
    }
}
