use super::{two_tailed, PairedSample, TestKind, TestOutcome};
use crate::error::{Error, Result};
use crate::special::binom_half_upper;

/// Differences with `|d| <= h` count as ties.
pub const DEFAULT_SIGN_THRESHOLD: f64 = 0.01;

/// Sign test with tie threshold `h`. `S` counts differences above `h`;
/// the 1-tailed p-value is `P(Binom(n0, 1/2) >= S)`.
pub fn sign_test(sample: &PairedSample, h: f64) -> Result<TestOutcome> {
    if !(h >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sign threshold must be non-negative, got {h}"
        )));
    }
    let d = sample.differences();
    let n0 = d.iter().filter(|x| x.abs() > h).count();
    if n0 == 0 {
        return Err(Error::AllTies);
    }
    let s = d.iter().filter(|&&x| x > h).count();
    let p1 = binom_half_upper(s, n0);
    Ok(TestOutcome {
        test: TestKind::Sign,
        statistic: s as f64,
        p1,
        p2: two_tailed(p1, binom_half_upper(n0 - s, n0)),
        replicas: None,
        seed: None,
    })
}
