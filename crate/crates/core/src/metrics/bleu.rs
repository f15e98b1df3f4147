use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenization {
    /// One token per non-whitespace character.
    Character,
    /// Whitespace-separated words.
    Whitespace,
    /// Character mode if any text contains CJK script, whitespace otherwise.
    #[default]
    Auto,
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF      // kana
        | 0x3400..=0x4DBF    // CJK ext A
        | 0x4E00..=0x9FFF    // CJK unified
        | 0xAC00..=0xD7AF    // hangul
        | 0xF900..=0xFAFF
        | 0x20000..=0x2FA1F)
}

impl Tokenization {
    /// Settles `Auto` for a concrete set of texts.
    pub fn resolve<S: AsRef<str>>(self, texts: &[S]) -> Tokenization {
        match self {
            Tokenization::Auto if texts.iter().any(|t| t.as_ref().chars().any(is_cjk)) => Tokenization::Character,
            Tokenization::Auto => Tokenization::Whitespace,
            other => other,
        }
    }

    pub fn tokenize(self, text: &str) -> Vec<String> {
        match self.resolve(&[text]) {
            Tokenization::Character => text.chars().filter(|c| !c.is_whitespace()).map(String::from).collect(),
            _ => text.split_whitespace().map(str::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuOptions {
    pub unigram_weight: f64,
    pub bigram_weight: f64,
    pub brevity_penalty: bool,
}

impl Default for BleuOptions {
    fn default() -> Self {
        Self {
            unigram_weight: 0.8,
            bigram_weight: 0.2,
            brevity_penalty: true,
        }
    }
}

/// Responses of one model for one step, blanks already removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSet {
    texts: Vec<String>,
    tokenization: Tokenization,
    excluded_blanks: usize,
}

impl ResponseSet {
    /// Drops blank texts and settles the tokenization over what remains.
    pub fn new<S: AsRef<str>>(texts: &[S], tokenization: Tokenization) -> Self {
        let kept: Vec<String> = texts
            .iter()
            .map(|t| t.as_ref())
            .filter(|t| !t.trim().is_empty())
            .map(str::to_string)
            .collect();
        Self {
            excluded_blanks: texts.len() - kept.len(),
            tokenization: tokenization.resolve(&kept),
            texts: kept,
        }
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn excluded_blanks(&self) -> usize {
        self.excluded_blanks
    }

    pub fn tokenization(&self) -> Tokenization {
        self.tokenization
    }
}

type Counts<'a> = HashMap<&'a [String], usize>;

fn ngram_counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped precision; the denominator is floored at 1 so a candidate too
/// short for an n-gram order scores 0 for that order.
fn clipped_precision(candidate: &[String], references: &[Vec<String>], n: usize) -> f64 {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: Counts<'_> = HashMap::new();
    for r in references {
        for (gram, count) in ngram_counts(r, n) {
            let slot = max_ref.entry(gram).or_insert(0);
            *slot = (*slot).max(count);
        }
    }
    let total: usize = cand.values().sum();
    let clipped: usize = cand
        .iter()
        .map(|(gram, count)| (*count).min(max_ref.get(gram).copied().unwrap_or(0)))
        .sum();
    clipped as f64 / total.max(1) as f64
}

/// Reference length closest to `c`, the shorter one on ties.
fn closest_ref_len(c: usize, references: &[Vec<String>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|r| (r.abs_diff(c), *r))
        .unwrap_or(0)
}

/// Sentence BLEU of `candidate` against `references`, 1- and 2-grams only.
pub fn bleu(candidate: &[String], references: &[Vec<String>], options: &BleuOptions) -> f64 {
    if candidate.is_empty() || references.is_empty() {
        return 0.0;
    }
    let p1 = clipped_precision(candidate, references, 1);
    let p2 = clipped_precision(candidate, references, 2);
    if p1 == 0.0 || p2 == 0.0 {
        return 0.0;
    }
    let score = (options.unigram_weight * p1.ln() + options.bigram_weight * p2.ln()).exp();
    if !options.brevity_penalty {
        return score;
    }
    let c = candidate.len();
    let r = closest_ref_len(c, references);
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    score * bp
}

/// Self-BLEU of each response against all the others.
pub fn self_bleu_with(set: &ResponseSet, options: &BleuOptions) -> Result<Vec<f64>, MetricsError> {
    if set.len() < 2 {
        return Err(MetricsError::TooFewResponses(set.len()));
    }
    let tokens: Vec<Vec<String>> = set.texts.iter().map(|t| set.tokenization.tokenize(t)).collect();
    Ok((0..tokens.len())
        .map(|i| {
            let refs: Vec<Vec<String>> = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t.clone())
                .collect();
            bleu(&tokens[i], &refs, options)
        })
        .collect())
}

pub fn self_bleu(set: &ResponseSet) -> Result<Vec<f64>, MetricsError> {
    self_bleu_with(set, &BleuOptions::default())
}

/// One minus the mean Self-BLEU.
pub fn diversity_with(set: &ResponseSet, options: &BleuOptions) -> Result<f64, MetricsError> {
    let scores = self_bleu_with(set, options)?;
    Ok(1.0 - scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn diversity(set: &ResponseSet) -> Result<f64, MetricsError> {
    diversity_with(set, &BleuOptions::default())
}
