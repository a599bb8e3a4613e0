use super::{two_tailed, PairedSample, TestKind, TestOutcome};
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_sf};

/// Largest `n0` for which the exact null distribution is used.
pub const MAX_EXACT_WILCOXON: usize = 50;

/// Relative tolerance under which two absolute differences share a rank.
const TIE_TOL: f64 = 1e-9;

/// Signed ranks of the non-zero differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRanks {
    pub ranks: Vec<f64>,
    /// Sizes of tied groups (only groups of size > 1).
    pub tie_groups: Vec<usize>,
}

impl SignedRanks {
    pub fn n0(&self) -> usize {
        self.ranks.len()
    }

    pub fn tie_present(&self) -> bool {
        !self.tie_groups.is_empty()
    }

    /// Sum of positive ranks.
    pub fn w_plus(&self) -> f64 {
        self.ranks.iter().filter(|&&r| r > 0.0).sum()
    }
}

/// Drops zero differences and ranks the rest by magnitude (mid-ranks for
/// ties), keeping each difference's sign.
pub fn signed_ranks(d: &[f64]) -> SignedRanks {
    let mut kept: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    kept.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranks = Vec::with_capacity(kept.len());
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < kept.len() {
        let base = kept[i].abs();
        let mut j = i + 1;
        while j < kept.len() && kept[j].abs() - base <= TIE_TOL * base {
            j += 1;
        }
        // positions i..j (0-based) share the average of ranks i+1..=j
        let mid = (i + 1 + j) as f64 / 2.0;
        for x in &kept[i..j] {
            ranks.push(mid.copysign(*x));
        }
        if j - i > 1 {
            tie_groups.push(j - i);
        }
        i = j;
    }
    SignedRanks { ranks, tie_groups }
}

/// Number of sign assignments of ranks 1..=n giving each value of W,
/// from the generating function `prod_k (1 + x^k)`.
pub fn wilcoxon_null_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    let mut top = 0;
    for k in 1..=n {
        top += k;
        for w in (k..=top).rev() {
            counts[w] += counts[w - k];
        }
    }
    counts
}

/// Exact `P(W >= w)` for `n` untied non-zero differences.
pub fn wilcoxon_exact_upper(w: usize, n: usize) -> f64 {
    let counts = wilcoxon_null_counts(n);
    if w >= counts.len() {
        return 0.0;
    }
    let tail: u64 = counts[w..].iter().sum();
    tail as f64 / 2f64.powi(n as i32)
}

/// Wilcoxon signed rank test. Exact for untied samples with
/// `n0 <= 50`, otherwise a normal approximation with tie-corrected
/// variance and continuity correction.
pub fn wilcoxon_test(sample: &PairedSample) -> Result<TestOutcome> {
    let sr = signed_ranks(sample.differences());
    let n0 = sr.n0();
    if n0 == 0 {
        return Err(Error::AllTies);
    }
    let w = sr.w_plus();
    let (p1, lower) = if !sr.tie_present() && n0 <= MAX_EXACT_WILCOXON {
        let w = w.round() as usize;
        // the null distribution is symmetric about n0 (n0 + 1) / 4
        let total = n0 * (n0 + 1) / 2;
        (
            wilcoxon_exact_upper(w, n0),
            wilcoxon_exact_upper(total - w, n0),
        )
    } else {
        let n = n0 as f64;
        let mean = n * (n + 1.0) / 4.0;
        let ties: f64 = sr
            .tie_groups
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
        let sd = var.sqrt();
        (
            norm_sf((w - mean - 0.5) / sd),
            norm_cdf((w - mean + 0.5) / sd),
        )
    };
    Ok(TestOutcome {
        test: TestKind::Wilcoxon,
        statistic: w,
        p1,
        p2: two_tailed(p1, lower),
        replicas: None,
        seed: None,
    })
}
