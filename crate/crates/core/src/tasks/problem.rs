use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::text::{fold_width, strip_emphasis};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioParameters {
    pub time: String,
    pub location: String,
    pub theme: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemFlag {
    MissingChallengeNumber,
    MissingConditionPhrase,
    MissingStem,
    MissingKeyVerbPhrase,
    MissingPurpose,
    /// More than one purpose marker; the first was used.
    AmbiguousPurpose,
    MissingTime,
    MissingLocation,
    MissingTheme,
}

/// Best-effort spans of a Step-2 answer. Raters confirm or replace them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderlyingProblem {
    pub challenge_number: Option<u32>,
    pub condition_phrase: String,
    pub stem: String,
    pub key_verb_phrase: String,
    pub purpose: String,
    pub parameters: ScenarioParameters,
    pub flags: Vec<ProblemFlag>,
}

impl UnderlyingProblem {
    pub fn is_complete(&self) -> bool {
        self.flags.is_empty()
    }
}

const STEMS: [&str; 4] = [
    "how might we",
    "in what ways can we",
    "in what ways might we",
    "how can we",
];
const PURPOSE_MARKERS: [&str; 2] = ["in order to", "so that"];

fn challenge_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)challenge\s*(?:id|number|no\.?|#)?\s*[:.]?\s*#?\s*(\d+)").unwrap())
}

fn label_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^[\s\-*#>]*(time|location|theme|conditional phrase|condition phrase|purpose)(?:\s*\([^)]*\))?\s*\**\s*:\s*\**\s*(.*)$")
            .unwrap()
    })
}

/// Earliest case-insensitive occurrence of any needle: (byte offset, needle).
fn find_any<'a>(haystack_lower: &str, needles: &[&'a str]) -> Option<(usize, &'a str)> {
    needles
        .iter()
        .filter_map(|n| haystack_lower.find(n).map(|p| (p, *n)))
        .min_by_key(|(p, n)| (*p, std::cmp::Reverse(n.len())))
}

fn clean_span(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| c == ',' || c == '?' || c == '.' || c == ';' || c.is_whitespace())
        .trim()
        .to_string()
}

pub fn parse_underlying_problem(text: &str) -> UnderlyingProblem {
    let folded = fold_width(text);
    let mut out = UnderlyingProblem {
        challenge_number: challenge_re()
            .captures(&folded.replace("**", ""))
            .and_then(|c| c[1].parse().ok()),
        ..Default::default()
    };

    let mut labeled_condition = None;
    let mut labeled_purpose = None;
    let mut statement_lines = Vec::new();
    for line in folded.lines() {
        if let Some(caps) = label_re().captures(line) {
            let value = strip_emphasis(&caps[2]).to_string();
            match caps[1].to_ascii_lowercase().as_str() {
                "time" => out.parameters.time = value,
                "location" => out.parameters.location = value,
                "theme" => out.parameters.theme = value,
                "purpose" => labeled_purpose = Some(value),
                _ => labeled_condition = Some(value),
            }
        } else {
            statement_lines.push(line);
        }
    }

    let statement = statement_lines.join("\n");
    let lower = statement.to_ascii_lowercase();
    if let Some((at, stem)) = find_any(&lower, &STEMS) {
        out.stem = statement[at..at + stem.len()].to_string();
        let line_start = statement[..at].rfind('\n').map_or(0, |p| p + 1);
        let mut condition = &statement[line_start..at];
        if let Some(m) = challenge_re().find(condition) {
            condition = &condition[m.end()..];
        }
        out.condition_phrase = clean_span(condition);

        let after = at + stem.len();
        let end = statement[after..]
            .find(['?', '\n'])
            .map_or(statement.len(), |p| after + p);
        let question = &statement[after..end];
        let question_lower = &lower[after..end];
        let markers: Vec<(usize, &str)> = PURPOSE_MARKERS
            .iter()
            .flat_map(|m| {
                question_lower
                    .match_indices(m)
                    .map(|(p, _)| (p, *m))
                    .collect::<Vec<_>>()
            })
            .collect();
        match markers.iter().min_by_key(|(p, _)| *p) {
            Some(&(p, marker)) => {
                out.key_verb_phrase = clean_span(&question[..p]);
                out.purpose = clean_span(&question[p + marker.len()..]);
                if markers.len() > 1 {
                    out.flags.push(ProblemFlag::AmbiguousPurpose);
                }
            }
            None => out.key_verb_phrase = clean_span(question),
        }
    }
    if let Some(c) = labeled_condition.filter(|c| !c.is_empty()) {
        out.condition_phrase = c;
    }
    if out.purpose.is_empty() {
        if let Some(p) = labeled_purpose {
            out.purpose = clean_span(&p);
        }
    }

    let checks = [
        (out.challenge_number.is_none(), ProblemFlag::MissingChallengeNumber),
        (out.condition_phrase.is_empty(), ProblemFlag::MissingConditionPhrase),
        (out.stem.is_empty(), ProblemFlag::MissingStem),
        (out.key_verb_phrase.is_empty(), ProblemFlag::MissingKeyVerbPhrase),
        (out.purpose.is_empty(), ProblemFlag::MissingPurpose),
        (out.parameters.time.is_empty(), ProblemFlag::MissingTime),
        (out.parameters.location.is_empty(), ProblemFlag::MissingLocation),
        (out.parameters.theme.is_empty(), ProblemFlag::MissingTheme),
    ];
    out.flags
        .extend(checks.iter().filter(|(missing, _)| *missing).map(|(_, f)| *f));
    out.flags.sort();
    out
}
