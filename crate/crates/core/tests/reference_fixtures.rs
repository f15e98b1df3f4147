mod common;

use common::*;
use teamharness_core::scoring::{merge_final, Rubric};
use teamharness_core::tasks::{parse_underlying_problem, ProblemFlag};
use teamharness_core::workspace::validate_answers;

#[test]
fn a05_underlying_problem_spans() {
    let answers = a05_answers();
    let p = parse_underlying_problem(&answers[1]);
    assert_eq!(p.challenge_number, Some(1));
    assert!(p
        .condition_phrase
        .starts_with("In 2035, in the waters surrounding the Hawaiian Islands"));
    assert_eq!(p.stem.to_lowercase(), "how can we");
    assert!(p
        .key_verb_phrase
        .starts_with("reduce the overwhelming proportion of microplastics"));
    // a bare infinitive purpose is left to the rater
    assert!(p.key_verb_phrase.contains("to restore energy flow"));
    assert_eq!(p.flags, [ProblemFlag::MissingPurpose]);
    assert_eq!(p.parameters.time, "2035");
    assert_eq!(p.parameters.location, "Waters surrounding the Hawaiian Islands");
}

#[test]
fn a05_validation_names_column_four() {
    let v = validate_answers("A05_FS10", &a05_answers());
    assert_eq!(v.steps.len(), 6);
    let step5 = &v.steps[4];
    assert_eq!(step5.pre_score, Some(4));
    assert_eq!(step5.violations.len(), 1);
    assert!(step5.violations[0].contains("column 4"), "{:?}", step5.violations);
    assert!(v.to_text().contains("column 4"));
}

#[test]
fn a05_sheets_merge_to_published_mean() {
    let rubric = Rubric::cgpst();
    let sheets = a05_sheets();
    let merged = merge_final(&rubric, &sheets[0], &sheets[1], None).unwrap();
    assert_eq!(merged.total, 116.5);
    assert_eq!(merged.step_totals.len(), 6);
}

#[derive(serde::Deserialize)]
struct LabeledProblem {
    text: String,
    challenge_number: Option<u32>,
    stem: String,
    key_verb_phrase: String,
    purpose: String,
    flags: Vec<ProblemFlag>,
}

#[test]
fn hand_labeled_underlying_problems() {
    let labeled: Vec<LabeledProblem> = serde_json::from_str(&read_fixture("underlying_problems.json")).unwrap();
    for (i, l) in labeled.iter().enumerate() {
        let p = parse_underlying_problem(&l.text);
        assert_eq!(p.challenge_number, l.challenge_number, "fixture {i}");
        assert_eq!(p.stem.to_lowercase(), l.stem, "fixture {i}");
        assert_eq!(p.key_verb_phrase, l.key_verb_phrase, "fixture {i}");
        assert_eq!(p.purpose, l.purpose, "fixture {i}");
        let mut flags = p.flags.clone();
        flags.sort();
        assert_eq!(flags, l.flags, "fixture {i}: {p:?}");
    }
}
