//! Monte Carlo permutation and bootstrap-shift tests, plus exact
//! enumeration of the permutation distribution for small samples.
//!
//! p-values are the plain fractions of replicas at least as extreme as the
//! observed mean, so the smallest non-zero value is `1/T`. Replicas are
//! generated in fixed-size blocks, each block drawing from its own ChaCha
//! stream keyed by `(seed, block index)`; blocks may run in parallel and
//! the result is still bit-identical for a given seed.

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::{PairedSample, TestKind, TestOutcome};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const BLOCK: u64 = 8192;
const CHUNK: usize = 8;

/// Largest sample for [`exact_permutation_p`].
pub const MAX_EXACT_PERMUTATION: usize = 20;

/// Relative slack when comparing replica means against the observed mean,
/// so that means equal up to rounding are counted as ties.
const MEAN_TOL: f64 = 1e-10;

/// Replica means of a resampling test.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplingDistribution {
    pub replica_means: Vec<f64>,
    /// Mean of the replica means for the bootstrap; zero for permutations.
    pub shift: f64,
}

impl ResamplingDistribution {
    pub fn replicas(&self) -> usize {
        self.replica_means.len()
    }

    /// Fractions of shifted replica means with `m* >= observed` and
    /// `|m*| >= |observed|`.
    fn p_values(&self, observed: f64, tol: f64) -> (f64, f64) {
        let mut upper = 0u64;
        let mut both = 0u64;
        for &m in &self.replica_means {
            let m = m - self.shift;
            if m >= observed - tol {
                upper += 1;
            }
            if m.abs() >= observed.abs() - tol {
                both += 1;
            }
        }
        let t = self.replicas() as f64;
        (upper as f64 / t, both as f64 / t)
    }
}

fn tolerance(d: &[f64]) -> f64 {
    MEAN_TOL * d.iter().map(|x| x.abs()).sum::<f64>() / d.len() as f64
}

fn check_replicas(replicas: u64) -> Result<()> {
    if replicas < 1 {
        return Err(Error::InvalidConfig(
            "replica count must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Runs `per_block(rng, count)` over consecutive replica blocks and
/// concatenates the results in block order.
fn blocked<F>(replicas: u64, seed: u64, per_block: F) -> Vec<f64>
where
    F: Fn(&mut crate::rng::SimRng, usize, &mut Vec<f64>) + Sync,
{
    let blocks = replicas.div_ceil(BLOCK);
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = (replicas - b * BLOCK).min(BLOCK) as usize;
            let mut rng = stream_rng(seed, b);
            let mut out = Vec::with_capacity(count);
            per_block(&mut rng, count, &mut out);
            out
        })
        .collect();
    parts.concat()
}

/// Sign-flip sums for each chunk of up to eight differences, indexed by
/// the bit pattern of the chunk (bit set = positive sign).
struct FlipTables {
    tables: Vec<Vec<f64>>,
}

impl FlipTables {
    fn new(d: &[f64]) -> Self {
        let tables = d
            .chunks(CHUNK)
            .map(|chunk| {
                (0..1usize << chunk.len())
                    .map(|mask| {
                        chunk.iter().enumerate().fold(0.0, |acc, (i, &x)| {
                            if mask >> i & 1 == 1 {
                                acc + x
                            } else {
                                acc - x
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        FlipTables { tables }
    }

    fn observed_sum(&self) -> f64 {
        self.tables.iter().map(|t| t[t.len() - 1]).sum()
    }

    fn random_sum<R: RngCore>(&self, rng: &mut R) -> f64 {
        let mut sum = 0.0;
        let mut word = 0u64;
        for (c, table) in self.tables.iter().enumerate() {
            if c % 8 == 0 {
                word = rng.next_u64();
            }
            let byte = (word >> (8 * (c % 8))) as usize & (table.len() - 1);
            sum += table[byte];
        }
        sum
    }
}

/// Replica means of the permutation distribution: each replica flips the
/// sign of every difference independently with probability 1/2.
pub fn permutation_distribution(
    sample: &PairedSample,
    replicas: u64,
    seed: u64,
) -> Result<ResamplingDistribution> {
    check_replicas(replicas)?;
    let tables = FlipTables::new(sample.differences());
    let n = sample.n() as f64;
    let replica_means = blocked(replicas, seed, |rng, count, out| {
        out.extend((0..count).map(|_| tables.random_sum(rng) / n));
    });
    Ok(ResamplingDistribution {
        replica_means,
        shift: 0.0,
    })
}

/// Monte Carlo paired permutation test with `replicas` random sign flips.
pub fn permutation_test(sample: &PairedSample, replicas: u64, seed: u64) -> Result<TestOutcome> {
    let dist = permutation_distribution(sample, replicas, seed)?;
    let d = sample.differences();
    // Same summation order as the replicas, so the all-positive replica
    // reproduces the observed mean bit for bit.
    let observed = FlipTables::new(d).observed_sum() / sample.n() as f64;
    let (p1, p2) = dist.p_values(observed, tolerance(d));
    Ok(TestOutcome {
        test: TestKind::Permutation,
        statistic: observed,
        p1,
        p2,
        replicas: Some(replicas),
        seed: Some(seed),
    })
}

/// Replica means of `replicas` bootstrap resamples of the differences,
/// with the mean of those means recorded as the shift.
pub fn bootstrap_distribution(
    sample: &PairedSample,
    replicas: u64,
    seed: u64,
) -> Result<ResamplingDistribution> {
    check_replicas(replicas)?;
    let d = sample.differences();
    let n = d.len();
    let replica_means = blocked(replicas, seed, |rng, count, out| {
        out.extend((0..count).map(|_| {
            let s: f64 = (0..n).map(|_| d[rng.random_range(0..n)]).sum();
            s / n as f64
        }));
    });
    let shift = replica_means.iter().sum::<f64>() / replica_means.len() as f64;
    Ok(ResamplingDistribution {
        replica_means,
        shift,
    })
}

/// Bootstrap test, shift method: the bootstrap distribution of the mean is
/// recentred at zero and compared with the observed mean.
pub fn bootstrap_shift_test(
    sample: &PairedSample,
    replicas: u64,
    seed: u64,
) -> Result<TestOutcome> {
    let dist = bootstrap_distribution(sample, replicas, seed)?;
    let observed = sample.mean_d();
    let (p1, p2) = dist.p_values(observed, tolerance(sample.differences()));
    Ok(TestOutcome {
        test: TestKind::Bootstrap,
        statistic: observed,
        p1,
        p2,
        replicas: Some(replicas),
        seed: Some(seed),
    })
}

/// Exact permutation p-values `(p1, p2)` over all `2^n` sign assignments.
pub fn exact_permutation_p(sample: &PairedSample) -> Result<(f64, f64)> {
    let d = sample.differences();
    let n = d.len();
    if n > MAX_EXACT_PERMUTATION {
        return Err(Error::EnumerationTooLarge {
            n,
            max: MAX_EXACT_PERMUTATION,
        });
    }
    let observed = d.iter().sum::<f64>() / n as f64;
    let tol = tolerance(d);
    let total = 1u64 << n;
    let mut upper = 0u64;
    let mut both = 0u64;
    for mask in 0..total {
        let s: f64 = d
            .iter()
            .enumerate()
            .map(|(i, &x)| if mask >> i & 1 == 1 { x } else { -x })
            .sum();
        let m = s / n as f64;
        if m >= observed - tol {
            upper += 1;
        }
        if m.abs() >= observed.abs() - tol {
            both += 1;
        }
    }
    Ok((upper as f64 / total as f64, both as f64 / total as f64))
}
