//! Mean-shift transform: a one-parameter family through each margin whose
//! mean is monotone in the parameter and whose support never changes.

use super::MarginDistribution;
use crate::error::{Error, Result};
use crate::optimize::bisect_increasing;

pub const DEFAULT_MEAN_TOLERANCE: f64 = 1e-5;
pub const MAX_TILT_ITERATIONS: usize = 200;

/// Base probabilities reweighted by `exp(λ x)` and renormalised.
pub(crate) fn tilted_probs(points: &[f64], base: &[f64], lambda: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return base.to_vec();
    }
    let shift = points
        .iter()
        .zip(base)
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, _)| lambda * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = points
        .iter()
        .zip(base)
        .map(|(x, p)| p * (lambda * x - shift).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub(crate) fn with_target_mean(
    dist: &MarginDistribution,
    target: f64,
    tol: f64,
) -> Result<MarginDistribution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "mean tolerance must be positive, got {tol}"
        )));
    }
    let (lo, hi) = match dist.point_masses() {
        // Points carrying no mass cannot be reached by tilting.
        Some((pts, probs)) => {
            let mut live = pts
                .iter()
                .zip(probs)
                .filter(|(_, q)| **q > 0.0)
                .map(|(x, _)| *x);
            let first = live.next().unwrap_or(pts[0]);
            (first, live.next_back().unwrap_or(first))
        }
        None => dist.support().bounds(),
    };
    if !(target > lo && target < hi) {
        return Err(Error::UnreachableMean { target, lo, hi });
    }
    let current = dist.mean_under(dist.transform());
    if (current - target).abs() <= tol {
        return Ok(dist.clone());
    }
    // Aim well inside the tolerance so the reported mean is safely within it.
    let ftol = (tol * 1e-2).max(1e-12);
    let param = if dist.is_discrete() {
        // λ is additive: tilting an already tilted margin by Δλ.
        let start = dist.transform();
        let f = |l: f64| dist.mean_under(l) - target;
        let (a, b) = expand_bracket(&f, start, |x, k| x + k, 1.0)?;
        bisect_increasing(f, a, b, ftol, MAX_TILT_ITERATIONS)?
    } else {
        // Bisection on log a.
        let start = dist.transform().ln();
        let f = |s: f64| dist.mean_under(s.exp()) - target;
        let (a, b) = expand_bracket(&f, start, |x, k| x + k, 0.5)?;
        bisect_increasing(f, a, b, ftol, MAX_TILT_ITERATIONS)?.exp()
    };
    let out = dist.retransformed(param);
    if (out.mean() - target).abs() > tol {
        return Err(Error::NumericFailure(format!(
            "mean transform reached {} instead of {target}",
            out.mean()
        )));
    }
    Ok(out)
}

/// Grows a bracket `[a, b]` around `start` until `f(a) <= 0 <= f(b)`
/// for increasing `f`, doubling the step each time.
fn expand_bracket<F, S>(f: &F, start: f64, step: S, first: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
    S: Fn(f64, f64) -> f64,
{
    let f0 = f(start);
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let mut prev = start;
    let mut k = first;
    for _ in 0..64 {
        let next = step(start, dir * k);
        let fx = f(next);
        if fx.is_nan() {
            break;
        }
        if (dir > 0.0 && fx >= 0.0) || (dir < 0.0 && fx <= 0.0) {
            return Ok(if dir > 0.0 {
                (prev, next)
            } else {
                (next, prev)
            });
        }
        prev = next;
        k *= 2.0;
    }
    Err(Error::NumericFailure(
        "could not bracket the mean-shift parameter".into(),
    ))
}
