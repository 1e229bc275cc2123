//! Two-sided Wilcoxon rank-sum test and the `+ / - / ~` verdicts built on it.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid_input, Result};

/// Combined sample sizes up to this use exact enumeration.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// First sample significantly better (lower).
    Plus,
    /// First sample significantly worse.
    Minus,
    /// No significant difference.
    Tilde,
}

impl Verdict {
    pub fn symbol(self) -> char {
        match self {
            Verdict::Plus => '+',
            Verdict::Minus => '-',
            Verdict::Tilde => '~',
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Verdict::Plus => Verdict::Minus,
            Verdict::Minus => Verdict::Plus,
            Verdict::Tilde => Verdict::Tilde,
        }
    }
}

/// Which sample has the lower mean rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Better {
    First,
    Second,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub verdict: Verdict,
    pub p_value: f64,
    pub better: Better,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Exact two-sided p-value: fraction of all size-`n1` rank subsets whose sum
/// lies at least as far from its expectation as the observed sum.
fn exact_p(ranks: &[f64], n1: usize, observed: f64) -> f64 {
    let expected = n1 as f64 * (ranks.len() as f64 + 1.0) / 2.0;
    let threshold = (observed - expected).abs() - 1e-9;
    // Ranks are multiples of 1/2, so work in half-units to count sums exactly.
    let halves: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = halves.iter().sum();
    // counts[k][s]: number of k-subsets of the processed ranks with half-sum s.
    let mut counts = vec![vec![0f64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for &h in &halves {
        for k in (1..=n1).rev() {
            for s in (h..=max_sum).rev() {
                let add = counts[k - 1][s - h];
                if add != 0.0 {
                    counts[k][s] += add;
                }
            }
        }
    }
    let total: f64 = counts[n1].iter().sum();
    let extreme: f64 = counts[n1]
        .iter()
        .enumerate()
        .filter(|&(s, _)| ((s as f64 / 2.0) - expected).abs() >= threshold)
        .map(|(_, c)| c)
        .sum();
    (extreme / total).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn normal_p(n1: usize, n2: usize, ties: &[usize], observed: f64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let expected = n1f * (n + 1.0) / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (n * (n - 1.0));
    let variance = n1f * n2f / 12.0 * ((n + 1.0) - tie_term);
    if variance <= 0.0 {
        return 1.0;
    }
    let dev = ((observed - expected).abs() - 0.5).max(0.0);
    let z = dev / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// Rank-sum test of `a` against `b` (lower values are better).
///
/// Uses exact enumeration when `|a| + |b| <= 20` and the normal approximation
/// otherwise. Verdict is `Plus` when `a` is significantly better at level `alpha`.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonVerdict> {
    wilcoxon_with(a, b, alpha, a.len() + b.len() <= EXACT_LIMIT)
}

/// As [`wilcoxon_ranksum`] with the branch chosen explicitly.
pub fn wilcoxon_with(a: &[f64], b: &[f64], alpha: f64, exact: bool) -> Result<ComparisonVerdict> {
    if a.len() < 3 || b.len() < 3 {
        return Err(invalid_input("rank-sum test needs at least 3 values per sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(invalid_input("rank-sum test on NaN values"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let (n1, n2) = (a.len(), b.len());
    let w: f64 = ranks[..n1].iter().sum();
    if ties.len() == 1 {
        return Ok(ComparisonVerdict { verdict: Verdict::Tilde, p_value: 1.0, better: Better::Neither, exact });
    }
    let p_value = if exact { exact_p(&ranks, n1, w) } else { normal_p(n1, n2, &ties, w) };
    let mean_a = w / n1 as f64;
    let mean_b = ranks[n1..].iter().sum::<f64>() / n2 as f64;
    let better = if mean_a < mean_b {
        Better::First
    } else if mean_b < mean_a {
        Better::Second
    } else {
        Better::Neither
    };
    let verdict = match (p_value < alpha, better) {
        (true, Better::First) => Verdict::Plus,
        (true, Better::Second) => Verdict::Minus,
        _ => Verdict::Tilde,
    };
    Ok(ComparisonVerdict { verdict, p_value, better, exact })
}
