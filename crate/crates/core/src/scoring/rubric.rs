use serde::{Deserialize, Serialize};

use super::ScoringError;

/// Expected per-step maxima of the shipped rubric.
pub const STEP_MAXIMA: [u32; 6] = [48, 30, 48, 20, 5, 35];
pub const GRAND_TOTAL: u32 = 186;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    /// Stable identifier, also the CSV column name.
    pub key: String,
    pub name: String,
    pub step: u32,
    pub max_score: u32,
    pub note: String,
}

/// Scoring dimensions in canonical order (Step-1 first, Step-6 last).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rubric {
    dimensions: Vec<Dimension>,
}

const CGPST: [(&str, &str, u32, u32, &str); 23] = [
    ("s1_fluency", "Fluency", 1, 8, "1 point per Yes challenge"),
    (
        "s1_flexibility",
        "Flexibility",
        1,
        8,
        "1 point per Yes challenge in a new category",
    ),
    (
        "s1_elaboration",
        "Elaboration",
        1,
        16,
        "up to 2 points per Yes challenge for causal detail",
    ),
    (
        "s1_originality",
        "Originality",
        1,
        16,
        "up to 2 points per Yes challenge for unique creativity",
    ),
    (
        "s2_condition_phrase",
        "Integrity: CP",
        2,
        2,
        "tied to the scenario and the KVP",
    ),
    (
        "s2_stem_kvp",
        "Integrity: Stem & KVP",
        2,
        3,
        "exactly one clear active verb phrase",
    ),
    ("s2_purpose", "Integrity: Purpose", 2, 3, "one purpose tied to the KVP"),
    (
        "s2_parameters",
        "Integrity: Future Scene Parameters",
        2,
        2,
        "theme, location and time present",
    ),
    (
        "s2_focus",
        "Focus of Underlying Problem",
        2,
        10,
        "KVP quality, purpose clarity and linkage",
    ),
    (
        "s2_importance",
        "Adequacy / Importance",
        2,
        10,
        "the problem matters in the scenario",
    ),
    ("s3_fluency", "Fluency", 3, 8, "1 point per Yes solution"),
    (
        "s3_flexibility",
        "Flexibility",
        3,
        8,
        "1 point per Yes solution in a new category",
    ),
    (
        "s3_elaboration",
        "Elaboration",
        3,
        16,
        "up to 2 points per Yes solution covering three of who/what/how/why/when",
    ),
    (
        "s3_originality",
        "Originality",
        3,
        16,
        "up to 2 points per Yes solution for unique creativity",
    ),
    (
        "s4_correctly_written",
        "Correctly Written",
        4,
        5,
        "1 point per correctly written criterion",
    ),
    (
        "s4_relevance",
        "Relevance",
        4,
        15,
        "3 points per clear, relevant criterion",
    ),
    (
        "s5_correctly_used",
        "Correctly Used",
        5,
        5,
        "the scoring matrix is used correctly",
    ),
    ("s6_relevance", "Relevance", 6, 5, "relevant to the underlying problem"),
    (
        "s6_effectiveness",
        "Effectiveness",
        6,
        5,
        "addresses the underlying problem",
    ),
    (
        "s6_criteria",
        "Criteria in Development of Action Plan",
        6,
        5,
        "responds to the criteria",
    ),
    ("s6_impact", "Impact", 6, 5, "positive impact on the scenario"),
    ("s6_humaneness", "Humaneness", 6, 5, "human concern and empathy"),
    (
        "s6_development",
        "Development",
        6,
        10,
        "structured, elaborated, feasible",
    ),
];

impl Rubric {
    /// The shipped six-step rubric.
    pub fn cgpst() -> Self {
        let dimensions = CGPST
            .iter()
            .map(|(key, name, step, max, note)| Dimension {
                key: key.to_string(),
                name: name.to_string(),
                step: *step,
                max_score: *max,
                note: note.to_string(),
            })
            .collect();
        Self::new(dimensions).expect("shipped rubric is consistent")
    }

    /// Checks order, unique keys and the expected step maxima.
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self, ScoringError> {
        let rubric = Self { dimensions };
        let mut keys = std::collections::BTreeSet::new();
        for d in &rubric.dimensions {
            if !keys.insert(d.key.as_str()) {
                return Err(ScoringError::Rubric(format!("duplicate dimension key {}", d.key)));
            }
            if d.max_score == 0 {
                return Err(ScoringError::Rubric(format!("{} has a zero maximum", d.key)));
            }
        }
        if rubric.dimensions.windows(2).any(|w| w[0].step > w[1].step) {
            return Err(ScoringError::Rubric("dimensions must be ordered by step".into()));
        }
        let maxima = rubric.step_maxima();
        if maxima != STEP_MAXIMA {
            return Err(ScoringError::Rubric(format!(
                "step maxima {maxima:?} differ from {STEP_MAXIMA:?}"
            )));
        }
        if rubric.grand_total() != GRAND_TOTAL {
            return Err(ScoringError::Rubric(format!(
                "grand total {} != {GRAND_TOTAL}",
                rubric.grand_total()
            )));
        }
        Ok(rubric)
    }

    pub fn from_json(text: &str) -> Result<Self, ScoringError> {
        let dims: Vec<Dimension> = serde_json::from_str(text).map_err(|e| ScoringError::Rubric(e.to_string()))?;
        Self::new(dims)
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.key == key)
    }

    pub fn step_maxima(&self) -> [u32; 6] {
        let mut out = [0; 6];
        for d in &self.dimensions {
            if (1..=6).contains(&d.step) {
                out[d.step as usize - 1] += d.max_score;
            }
        }
        out
    }

    pub fn grand_total(&self) -> u32 {
        self.dimensions.iter().map(|d| d.max_score).sum()
    }

    /// Index range of a step's dimensions.
    pub fn step_range(&self, step: u32) -> std::ops::Range<usize> {
        let start = self.dimensions.iter().position(|d| d.step == step).unwrap_or(0);
        let len = self.dimensions.iter().filter(|d| d.step == step).count();
        start..start + len
    }
}

impl Default for Rubric {
    fn default() -> Self {
        Self::cgpst()
    }
}

/// Category list for Flexibility in Step-1 and Step-3.
pub const CATEGORIES: [&str; 20] = [
    "Arts & Aesthetics",
    "Basic Needs",
    "Business & Commerce",
    "Communication",
    "Culture & Religion",
    "Defense",
    "Economics",
    "Education",
    "Environment",
    "Ethics & Morality",
    "Government & Politics",
    "Law & Justice",
    "Miscellaneous",
    "Physical Health",
    "Psychological Health",
    "Recreation",
    "Science",
    "Social Relationships",
    "Technology",
    "Transportation",
];

/// Canonical spelling of a category, accepting `Miscellaneous <n>` variants.
pub fn canonical_category(raw: &str) -> Option<String> {
    let trimmed = raw.trim();
    if let Some(found) = CATEGORIES.iter().find(|c| c.eq_ignore_ascii_case(trimmed)) {
        return Some(found.to_string());
    }
    let lower = trimmed.to_ascii_lowercase();
    let suffix = lower.strip_prefix("miscellaneous")?.trim();
    (!suffix.is_empty() && suffix.chars().all(|c| c.is_ascii_digit())).then(|| format!("Miscellaneous {suffix}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Invalidity {
    Perhaps,
    Why,
    Solution,
    Duplicate,
    Blank,
}

impl Invalidity {
    /// Types raters may pick for a step's items.
    pub fn allowed_for(step: u32) -> &'static [Invalidity] {
        use Invalidity::*;
        match step {
            1 => &[Perhaps, Why, Solution, Duplicate, Blank],
            3 => &[Perhaps, Why, Duplicate, Blank],
            _ => &[],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_maxima() {
        let r = Rubric::cgpst();
        assert_eq!(r.len(), 23);
        assert_eq!(r.step_maxima(), [48, 30, 48, 20, 5, 35]);
        assert_eq!(r.grand_total(), 186);
        assert_eq!(r.step_range(2), 4..10);
        assert_eq!(r.step_range(5), 16..17);
    }

    #[test]
    fn altered_rubric_is_rejected() {
        let mut dims = Rubric::cgpst().dimensions().to_vec();
        dims[16].max_score = 6;
        assert!(Rubric::new(dims.clone()).is_err());
        let json = serde_json::to_string(Rubric::cgpst().dimensions()).unwrap();
        assert_eq!(Rubric::from_json(&json).unwrap(), Rubric::cgpst());
    }

    #[test]
    fn categories() {
        assert_eq!(CATEGORIES.len(), 20);
        assert_eq!(canonical_category("law & justice").as_deref(), Some("Law & Justice"));
        assert_eq!(
            canonical_category("Miscellaneous 2").as_deref(),
            Some("Miscellaneous 2")
        );
        assert_eq!(canonical_category("Space"), None);
        assert!(Invalidity::allowed_for(1).contains(&Invalidity::Solution));
        assert!(!Invalidity::allowed_for(3).contains(&Invalidity::Solution));
    }
}
