//! Fixture loading and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use teamharness_core::scoring::{read_final_scores_csv, read_sheets_json, FinalScore, Rubric, ScoreSheet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn a05_answers() -> Vec<String> {
    teamharness_core::orchestrator::parse_answers_text(&read_fixture("a05_fs10/answers.txt")).unwrap()
}

pub fn a05_sheets() -> Vec<ScoreSheet> {
    read_sheets_json(&Rubric::cgpst(), &read_fixture("a05_fs10/sheets.json")).unwrap()
}

pub fn published_totals() -> Vec<FinalScore> {
    read_final_scores_csv(&read_fixture("published_totals.csv")).unwrap()
}

/// (model, condition, published average)
pub fn published_averages() -> Vec<(String, String, f64)> {
    read_fixture("published_averages.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

/// Models marked significant at the 0.01 level in the published table.
pub const SIGNIFICANT: [&str; 7] = [
    "claude-4-opus",
    "deepseek-r1",
    "deepseek-v3",
    "gpt-4o",
    "gpt-5",
    "qwen3-instruct",
    "qwen3-thinking",
];

// ---- reference implementations, written from the textbook definitions ----

/// Count of `gram` in `seq`, by direct scanning.
fn occurrences(seq: &[u8], gram: &[u8]) -> usize {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len())
        .filter(|&i| &seq[i..i + gram.len()] == gram)
        .count()
}

fn modified_precision(cand: &[u8], refs: &[&[u8]], n: usize) -> f64 {
    if cand.len() < n {
        return 0.0;
    }
    let mut seen: Vec<&[u8]> = Vec::new();
    let mut clipped = 0usize;
    for i in 0..=cand.len() - n {
        let g = &cand[i..i + n];
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let c = occurrences(cand, g);
        let m = refs.iter().map(|r| occurrences(r, g)).max().unwrap_or(0);
        clipped += c.min(m);
    }
    clipped as f64 / (cand.len() + 1 - n) as f64
}

/// BLEU with weights (0.8, 0.2) and the closest-reference brevity penalty.
pub fn oracle_bleu(cand: &[u8], refs: &[&[u8]]) -> f64 {
    if cand.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let p1 = modified_precision(cand, refs, 1);
    let p2 = modified_precision(cand, refs, 2);
    if p1 == 0.0 || p2 == 0.0 {
        return 0.0;
    }
    let c = cand.len();
    let mut best = refs[0].len();
    for r in refs {
        let (d, bd) = ((r.len() as i64 - c as i64).abs(), (best as i64 - c as i64).abs());
        if d < bd || (d == bd && r.len() < best) {
            best = r.len();
        }
    }
    let bp = if c > best {
        1.0
    } else {
        (1.0 - best as f64 / c as f64).exp()
    };
    bp * p1.powf(0.8) * p2.powf(0.2)
}

/// Mean Self-BLEU over a tuple of symbol strings; `None` below two non-empty strings.
pub fn oracle_self_bleu(texts: &[&[u8]]) -> Option<f64> {
    let kept: Vec<&[u8]> = texts.iter().copied().filter(|t| !t.is_empty()).collect();
    if kept.len() < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..kept.len() {
        let refs: Vec<&[u8]> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| *r)
            .collect();
        sum += oracle_bleu(kept[i], &refs);
    }
    Some(sum / kept.len() as f64)
}

/// Pearson r from raw sums.
pub fn oracle_pcc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// ICC(2,1) from explicit residuals.
pub fn oracle_icc(t: &[Vec<f64>]) -> f64 {
    let n = t.len();
    let k = t[0].len();
    let grand = t.iter().flatten().sum::<f64>() / (n * k) as f64;
    let rm: Vec<f64> = t.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let cm: Vec<f64> = (0..k).map(|j| t.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut sse = 0.0;
    for i in 0..n {
        for j in 0..k {
            let e = t[i][j] - rm[i] - cm[j] + grand;
            sse += e * e;
        }
    }
    let msr = k as f64 * rm.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n - 1) as f64;
    let msc = n as f64 * cm.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1) as f64;
    let mse = sse / ((n - 1) * (k - 1)) as f64;
    (msr - mse) / (msr + (k as f64 - 1.0) * mse + k as f64 * (msc - mse) / n as f64)
}

/// Every string over {a, b, c} with length in `1..=max_len`.
pub fn strings_upto(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for c in *b"abc" {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Whitespace-separated rendering consumed by the library tokenizer.
pub fn spaced(s: &[u8]) -> String {
    s.iter().map(|c| (*c as char).to_string()).collect::<Vec<_>>().join(" ")
}
