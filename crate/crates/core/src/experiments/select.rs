use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentMode, ScoreMatrix};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Smallest matrix the selection pools are defined for.
pub const MIN_SYSTEMS: usize = 14;

/// How system pairs are drawn from a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRule {
    /// Share of systems, by mean score, eligible at all.
    pub top_fraction: f64,
    /// Share of the eligible pool, from the bottom, that baselines come from.
    pub baseline_bottom_fraction: f64,
    /// Number of systems closest to the target mean that experimental
    /// systems are drawn from.
    pub candidate_pool: usize,
}

impl Default for SelectionRule {
    fn default() -> Self {
        SelectionRule {
            top_fraction: 0.90,
            baseline_bottom_fraction: 0.75,
            candidate_pool: 10,
        }
    }
}

impl SelectionRule {
    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| x > 0.0 && x <= 1.0;
        if !frac(self.top_fraction)
            || !frac(self.baseline_bottom_fraction)
            || self.candidate_pool == 0
        {
            return Err(Error::InvalidConfig(format!(
                "invalid selection rule {self:?}"
            )));
        }
        Ok(())
    }
}

fn share(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction + 1e-9).floor() as usize
}

/// Draws a (baseline, experimental) pair of system indices.
///
/// Type I runs pick two distinct systems uniformly from the top share by
/// mean score. Power and Type III runs pick the baseline from the bottom of
/// that pool and the experimental system among the pool members whose mean
/// is closest to the baseline mean plus `delta`.
pub fn select_system_pair(
    matrix: &ScoreMatrix,
    rule: &SelectionRule,
    mode: ExperimentMode,
    delta: f64,
    seed: u64,
) -> Result<(usize, usize)> {
    let s = matrix.n_systems();
    if s < MIN_SYSTEMS {
        return Err(Error::InsufficientSystems(format!(
            "pair selection needs at least {MIN_SYSTEMS} systems, the matrix has {s}"
        )));
    }
    let means = matrix.system_means();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let pool = &order[..share(s, rule.top_fraction)];
    if pool.len() < 2 {
        return Err(Error::InsufficientSystems(format!(
            "only {} eligible systems",
            pool.len()
        )));
    }
    let mut rng = stream_rng(seed, 0);
    match mode {
        ExperimentMode::Type1 => {
            let i = rng.random_range(0..pool.len());
            let mut j = rng.random_range(0..pool.len() - 1);
            if j >= i {
                j += 1;
            }
            Ok((pool[i], pool[j]))
        }
        ExperimentMode::Power | ExperimentMode::Type3 => {
            let n_base = share(pool.len(), rule.baseline_bottom_fraction);
            if n_base == 0 {
                return Err(Error::InsufficientSystems("empty baseline pool".into()));
            }
            let base = pool[pool.len() - n_base + rng.random_range(0..n_base)];
            let target = means[base] + delta;
            let mut candidates: Vec<usize> = pool.iter().copied().filter(|&c| c != base).collect();
            candidates.sort_by(|&a, &b| {
                (means[a] - target)
                    .abs()
                    .total_cmp(&(means[b] - target).abs())
                    .then(a.cmp(&b))
            });
            candidates.truncate(rule.candidate_pool);
            Ok((base, candidates[rng.random_range(0..candidates.len())]))
        }
    }
}
