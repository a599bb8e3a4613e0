use super::matrix::RR_CUTOFF;
use super::{Measure, ScoreMatrix, MIN_SYSTEMS};
use crate::error::{Error, Result};
use crate::margins::{MarginDistribution, MarginParams};
use crate::rng::{open_uniform, stream_rng};
use crate::special::{norm_cdf, norm_quantile};

/// Weight of the shared per-topic factor in every system's score.
const TOPIC_LOADING: f64 = 0.75;

/// A synthetic score matrix: systems with evenly spread mean scores whose
/// per-topic scores share a topic-difficulty factor. Deterministic given
/// `seed`.
pub fn synth_matrix(
    n_topics: usize,
    n_systems: usize,
    seed: u64,
    measure: Measure,
) -> Result<ScoreMatrix> {
    if n_systems < MIN_SYSTEMS {
        return Err(Error::InsufficientSystems(format!(
            "synthetic matrices need at least {MIN_SYSTEMS} systems, asked for {n_systems}"
        )));
    }
    if n_topics == 0 {
        return Err(Error::InvalidArgument(
            "synthetic matrices need at least one topic".into(),
        ));
    }
    let (lo, hi, precision) = match measure {
        Measure::Ap => (0.10, 0.45, 4.0),
        Measure::Ndcg => (0.20, 0.60, 6.0),
        Measure::Err => (0.10, 0.45, 4.0),
        Measure::P10 => (0.15, 0.60, 3.0),
        Measure::Rr => (0.20, 0.75, 3.0),
    };
    let margins: Vec<MarginDistribution> = (0..n_systems)
        .map(|s| {
            let m = lo + (hi - lo) * s as f64 / (n_systems - 1) as f64;
            let (alpha, beta) = (m * precision, (1.0 - m) * precision);
            let params = match measure {
                Measure::P10 => MarginParams::BetaBinomial { k: 10, alpha, beta },
                _ => MarginParams::Beta { alpha, beta },
            };
            MarginDistribution::new(params)
        })
        .collect::<Result<_>>()?;

    let mut rng = stream_rng(seed, 0);
    let unique = (1.0 - TOPIC_LOADING * TOPIC_LOADING).sqrt();
    let rows = (0..n_topics)
        .map(|_| {
            let z = norm_quantile(open_uniform(&mut rng));
            margins
                .iter()
                .map(|m| {
                    let u = norm_cdf(
                        TOPIC_LOADING * z + unique * norm_quantile(open_uniform(&mut rng)),
                    );
                    let x = m.quantile_unchecked(u);
                    if measure == Measure::Rr {
                        reciprocal_rank(x)
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    let topics = (1..=n_topics).map(|t| format!("T{t:03}")).collect();
    let systems = (1..=n_systems).map(|s| format!("sys{s:02}")).collect();
    ScoreMatrix::from_rows(topics, systems, rows, measure)
}

/// Maps a continuous score to the reciprocal of a rank: the first relevant
/// document sits at rank `ceil(1/x)`, or beyond the cutoff.
fn reciprocal_rank(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = (1.0 / x).ceil();
    if r > RR_CUTOFF as f64 {
        0.0
    } else {
        1.0 / r
    }
}
