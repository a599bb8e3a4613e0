//! Paired significance tests on per-topic score differences.
//!
//! Five tests are provided: Student's t, Wilcoxon signed rank, sign,
//! permutation (random sign flips) and bootstrap-shift. Each returns a
//! [`TestOutcome`] holding both the 1-tailed p-value for `H1: μ_E > μ_B`
//! and the 2-tailed p-value for `H1: μ_E ≠ μ_B`.
//!
//! The 1-tailed p-values are computed as written whatever the sign of the
//! observed mean difference; a negative mean simply yields `p1 > 0.5`.

mod replicas;
mod resampling;
mod sample;
mod sign;
mod ttest;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub use replicas::{replica_standard_error, required_replicas};
pub use resampling::{
    bootstrap_distribution, bootstrap_shift_test, exact_permutation_p, permutation_distribution,
    permutation_test, ResamplingDistribution, MAX_EXACT_PERMUTATION,
};
pub use sample::PairedSample;
pub use sign::{sign_test, DEFAULT_SIGN_THRESHOLD};
pub use ttest::t_test;
pub use wilcoxon::{
    signed_ranks, wilcoxon_exact_upper, wilcoxon_null_counts, wilcoxon_test, SignedRanks,
    MAX_EXACT_WILCOXON,
};

/// Default number of Monte Carlo replicas for the resampling tests.
pub const DEFAULT_REPLICAS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    T,
    Wilcoxon,
    Sign,
    Permutation,
    Bootstrap,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::T,
        TestKind::Wilcoxon,
        TestKind::Sign,
        TestKind::Permutation,
        TestKind::Bootstrap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::T => "t",
            TestKind::Wilcoxon => "wilcoxon",
            TestKind::Sign => "sign",
            TestKind::Permutation => "permutation",
            TestKind::Bootstrap => "bootstrap",
        }
    }

    pub fn is_resampling(self) -> bool {
        matches!(self, TestKind::Permutation | TestKind::Bootstrap)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t" | "t-test" | "ttest" => Ok(TestKind::T),
            "wilcoxon" => Ok(TestKind::Wilcoxon),
            "sign" => Ok(TestKind::Sign),
            "permutation" | "perm" => Ok(TestKind::Permutation),
            "bootstrap" | "boot" => Ok(TestKind::Bootstrap),
            other => Err(Error::InvalidConfig(format!("unknown test '{other}'"))),
        }
    }
}

/// Directional (1) or non-directional (2) alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Tails {
    One,
    Two,
}

impl Tails {
    pub fn from_count(n: u8) -> Result<Self, Error> {
        match n {
            1 => Ok(Tails::One),
            2 => Ok(Tails::Two),
            _ => Err(Error::InvalidConfig(format!(
                "tails must be 1 or 2, got {n}"
            ))),
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Tails::One => 1,
            Tails::Two => 2,
        }
    }
}

impl From<Tails> for u8 {
    fn from(t: Tails) -> u8 {
        t.count()
    }
}

impl TryFrom<u8> for Tails {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self, Error> {
        Tails::from_count(n)
    }
}

/// Result of one paired test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: TestKind,
    /// t, W or S for the classical tests; the observed mean difference for
    /// the resampling tests.
    pub statistic: f64,
    pub p1: f64,
    pub p2: f64,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
}

impl TestOutcome {
    pub fn p(&self, tails: Tails) -> f64 {
        match tails {
            Tails::One => self.p1,
            Tails::Two => self.p2,
        }
    }
}

/// Settings shared by [`run_test`] across the five tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSettings {
    pub replicas: u64,
    pub seed: u64,
    pub sign_threshold: f64,
}

impl Default for TestSettings {
    fn default() -> Self {
        TestSettings {
            replicas: DEFAULT_REPLICAS,
            seed: 0,
            sign_threshold: DEFAULT_SIGN_THRESHOLD,
        }
    }
}

/// Runs `kind` on `sample` with the given settings.
pub fn run_test(
    kind: TestKind,
    sample: &PairedSample,
    settings: &TestSettings,
) -> crate::Result<TestOutcome> {
    match kind {
        TestKind::T => t_test(sample),
        TestKind::Wilcoxon => wilcoxon_test(sample),
        TestKind::Sign => sign_test(sample, settings.sign_threshold),
        TestKind::Permutation => permutation_test(sample, settings.replicas, settings.seed),
        TestKind::Bootstrap => bootstrap_shift_test(sample, settings.replicas, settings.seed),
    }
}

/// Two-tailed p-value from the upper and lower tail probabilities of the
/// observed statistic: twice the smaller tail, capped at one. Equals
/// `min(1, 2 p1)` whenever the upper tail is the smaller one.
pub(crate) fn two_tailed(upper: f64, lower: f64) -> f64 {
    (2.0 * upper.min(lower)).min(1.0)
}
