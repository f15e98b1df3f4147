use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ScoringError;

/// Largest non-zero pair count evaluated with the exact null distribution.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs with a non-zero difference.
    pub n: usize,
    pub zero_differences: usize,
    /// Rank sum of positive differences (`a - b > 0`); this is the reported statistic.
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub method: PMethod,
}

/// Ranks of `values` (1-based), ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &i in &order[start..=end] {
            ranks[i] = rank;
        }
        start = end + 1;
    }
    ranks
}

/// Two-sided paired signed-rank test on `a[i] - b[i]`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, ScoringError> {
    if a.len() != b.len() {
        return Err(ScoringError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(ScoringError::InsufficientData("no pairs".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(ScoringError::InvalidInput("non-finite value".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let zero_differences = a.len() - diffs.len();
    if diffs.is_empty() {
        return Err(ScoringError::AllZeroDifferences);
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = diffs.len();
    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), PMethod::Exact)
    } else {
        (normal_p(&ranks, w_plus), PMethod::Normal)
    };
    Ok(WilcoxonResult {
        n,
        zero_differences,
        w_plus,
        w_minus,
        p_value,
        method,
    })
}

/// Exact null distribution over all 2^n sign assignments. Average ranks are
/// multiples of one half, so doubling them gives integer weights.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let weights: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = weights.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &w in &weights {
        for s in (w..=total).rev() {
            counts[s] += counts[s - w];
        }
    }
    let observed = ((w_plus * 2.0).round() as i64 * 2 - total as i64).abs();
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 * 2 - total as i64).abs() >= observed)
        .map(|(_, c)| c)
        .sum();
    (extreme as f64 / 2f64.powi(ranks.len() as i32)).min(1.0)
}

/// Normal approximation with tie correction and no continuity correction.
fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates every sign assignment directly.
    fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let total: f64 = ranks.iter().sum();
        let obs: f64 = diffs
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d > 0.0)
            .map(|(_, r)| r)
            .sum();
        let observed = (2.0 * obs - total).abs();
        let n = ranks.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if (2.0 * w - total).abs() >= observed - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn all_positive_ten() {
        let a: Vec<f64> = (1..=10).map(|i| i as f64 + 100.0).collect();
        let b: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.w_plus, 55.0);
        assert_eq!(r.w_minus, 0.0);
        assert!((r.p_value - 2.0 / 1024.0).abs() < 1e-15);
        assert_eq!(r.method, PMethod::Exact);
    }

    #[test]
    fn zeros_and_ties() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 5.0], &[1.0, 1.0, 2.0, 7.0]).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.zero_differences, 1);
        assert_eq!(r.w_plus, 3.0);
        assert_eq!(r.w_minus, 3.0);
        assert_eq!(r.p_value, 1.0);
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]),
            Err(ScoringError::AllZeroDifferences)
        ));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..40)
            .map(|i| i as f64 + if i % 3 == 0 { 1.5 } else { -0.5 - i as f64 / 100.0 })
            .collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(pairs in prop::collection::vec((0i32..12, 0i32..12), 1..=12)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 2.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 2.0).collect();
            match wilcoxon_signed_rank(&a, &b) {
                Ok(r) => {
                    prop_assert!((r.p_value - brute_force_p(&a, &b)).abs() < 1e-12);
                    let n = r.n as f64;
                    prop_assert!((r.w_plus + r.w_minus - n * (n + 1.0) / 2.0).abs() < 1e-9);
                }
                Err(e) => prop_assert!(matches!(e, ScoringError::AllZeroDifferences)),
            }
        }

        #[test]
        fn swap_and_shift_invariance(
            pairs in prop::collection::vec((0i32..50, 0i32..50), 1..=20),
            shift in -100i32..100,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            if let Ok(r) = wilcoxon_signed_rank(&a, &b) {
                let swapped = wilcoxon_signed_rank(&b, &a).unwrap();
                prop_assert_eq!(swapped.w_plus, r.w_minus);
                prop_assert!((swapped.p_value - r.p_value).abs() < 1e-12);
                let a2: Vec<f64> = a.iter().map(|v| v + shift as f64).collect();
                let b2: Vec<f64> = b.iter().map(|v| v + shift as f64).collect();
                let shifted = wilcoxon_signed_rank(&a2, &b2).unwrap();
                prop_assert!((shifted.p_value - r.p_value).abs() < 1e-12);
            }
        }
    }
}
