use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::tasks::ItemList;

/// Step-3 divergent-thinking scores of one response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyInput {
    pub fluency: u32,
    pub flexibility: u32,
    pub elaboration: u32,
    pub originality: u32,
}

impl EfficiencyInput {
    pub fn new(fluency: u32, flexibility: u32, elaboration: u32, originality: u32) -> Self {
        Self {
            fluency,
            flexibility,
            elaboration,
            originality,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let f = self.fluency;
        if self.flexibility > f || self.elaboration > 2 * f || self.originality > 2 * f {
            return Err(MetricsError::InvalidInput(format!(
                "{self:?}: need flexibility <= fluency and elaboration, originality <= 2 * fluency"
            )));
        }
        Ok(())
    }
}

/// Per-solution ratios: flexibility, elaboration and originality over fluency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiencies {
    pub flexibility: f64,
    pub elaboration: f64,
    pub originality: f64,
}

pub fn efficiencies(input: &EfficiencyInput) -> Result<Efficiencies, MetricsError> {
    if input.fluency == 0 {
        return Err(MetricsError::ZeroFluency);
    }
    input.validate()?;
    let f = input.fluency as f64;
    Ok(Efficiencies {
        flexibility: input.flexibility as f64 / f,
        elaboration: input.elaboration as f64 / f,
        originality: input.originality as f64 / f,
    })
}

/// Mean blank items per run. `mandated` is the fixed item count for steps
/// that demand one; missing items then count as blanks.
pub fn count_blanks(lists: &[ItemList], mandated: Option<usize>) -> f64 {
    if lists.is_empty() {
        return 0.0;
    }
    let total: usize = lists.iter().map(|l| l.blank_count(mandated)).sum();
    total as f64 / lists.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::parse_numbered_list;
    use proptest::prelude::*;

    #[test]
    fn ratios() {
        let e = efficiencies(&EfficiencyInput::new(8, 8, 16, 16)).unwrap();
        assert_eq!((e.flexibility, e.elaboration, e.originality), (1.0, 2.0, 2.0));
        let z = efficiencies(&EfficiencyInput::new(5, 0, 0, 0)).unwrap();
        assert_eq!((z.flexibility, z.elaboration, z.originality), (0.0, 0.0, 0.0));
        assert!(matches!(
            efficiencies(&EfficiencyInput::new(0, 0, 0, 0)),
            Err(MetricsError::ZeroFluency)
        ));
        assert!(efficiencies(&EfficiencyInput::new(2, 3, 0, 0)).is_err());
    }

    #[test]
    fn blank_means() {
        let list = |blanks: usize| {
            let text: String = (1..=8)
                .map(|i| {
                    if i <= blanks {
                        format!("{i}.\n")
                    } else {
                        format!("{i}. s{i}\n")
                    }
                })
                .collect();
            parse_numbered_list(&text, 8).unwrap()
        };
        let runs = [list(2), list(1), list(2)];
        assert!((count_blanks(&runs, None) - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(count_blanks(&[list(0), list(0)], None), 0.0);
        assert_eq!(count_blanks(&[], None), 0.0);
    }

    proptest! {
        #[test]
        fn codomains(f in 1u32..=8, a in 0u32..=8, b in 0u32..=16, c in 0u32..=16) {
            let input = EfficiencyInput::new(f, a.min(f), b.min(2 * f), c.min(2 * f));
            let e = efficiencies(&input).unwrap();
            prop_assert!((0.0..=1.0).contains(&e.flexibility));
            prop_assert!((0.0..=2.0).contains(&e.elaboration));
            prop_assert!((0.0..=2.0).contains(&e.originality));
        }
    }
}
