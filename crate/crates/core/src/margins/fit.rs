//! Maximum-likelihood fitting and log-likelihood model selection.

use serde::{Deserialize, Serialize};

use super::continuous::normal_mass;
use super::{beta_binomial_pmf, MarginDistribution, MarginFamily, MarginParams, SupportHint};
use crate::error::{Error, Result};
use crate::optimize::nelder_mead_min;
use crate::special::ln_beta;

pub const MIN_FIT_OBSERVATIONS: usize = 10;

/// Pseudo-count added to every support point of the empirical family.
pub const EMPIRICAL_SMOOTHING: f64 = 0.5;

/// Scores are pulled this far inside `(0, 1)` before evaluating a beta
/// likelihood, which is otherwise infinite or zero at the endpoints.
pub const BETA_EDGE: f64 = 1e-6;

/// Log-likelihood of every candidate family and the one selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub candidates: Vec<(MarginFamily, f64)>,
    pub selected: MarginFamily,
    pub loglik: f64,
}

/// Fits every family compatible with `hint` by maximum likelihood and
/// returns the one with the largest log-likelihood.
pub fn fit_margin(scores: &[f64], hint: &SupportHint) -> Result<(MarginDistribution, FitReport)> {
    if scores.len() < MIN_FIT_OBSERVATIONS {
        return Err(Error::InsufficientSample {
            needed: MIN_FIT_OBSERVATIONS,
            got: scores.len(),
        });
    }
    let data: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            hint.snap(x).ok_or_else(|| {
                Error::InvalidData(format!("score {x} at position {i} is outside the support"))
            })
        })
        .collect::<Result<_>>()?;
    if data.iter().all(|&x| x == data[0]) {
        return Err(Error::DegenerateSample(format!(
            "all {} scores equal {}",
            data.len(),
            data[0]
        )));
    }

    let fitted: Vec<(MarginDistribution, f64)> = match hint {
        SupportHint::Continuous => vec![fit_truncated_normal(&data)?, fit_beta(&data)?],
        SupportHint::Discrete { k } => {
            let points: Vec<f64> = (0..=*k).map(|j| j as f64 / *k as f64).collect();
            vec![
                fit_beta_binomial(&data, *k)?,
                fit_empirical(&data, &points)?,
            ]
        }
        SupportHint::PointSet { points } => {
            let mut points = points.clone();
            points.sort_by(f64::total_cmp);
            points.dedup();
            vec![fit_empirical(&data, &points)?]
        }
    };

    let candidates: Vec<(MarginFamily, f64)> =
        fitted.iter().map(|(d, ll)| (d.family(), *ll)).collect();
    let best = fitted
        .into_iter()
        .reduce(|best, c| if c.1 > best.1 { c } else { best })
        .expect("at least one candidate family");
    let report = FitReport {
        candidates,
        selected: best.0.family(),
        loglik: best.1,
    };
    Ok((best.0, report))
}

fn moments(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let v = data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Runs Nelder–Mead twice, restarting from the first optimum.
fn minimise<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], step: f64) -> (Vec<f64>, f64) {
    let (x, _) = nelder_mead_min(&mut f, start, step, 1e-12, 4000);
    nelder_mead_min(&mut f, &x, step * 0.1, 1e-13, 4000)
}

fn fit_truncated_normal(data: &[f64]) -> Result<(MarginDistribution, f64)> {
    let (m, v) = moments(data);
    let n = data.len() as f64;
    let nll = |p: &[f64]| {
        let (mu, sigma) = (p[0], p[1].exp());
        let z = normal_mass(-mu / sigma, (1.0 - mu) / sigma);
        if !(z > 0.0) || !sigma.is_finite() {
            return f64::INFINITY;
        }
        let ss: f64 = data.iter().map(|x| ((x - mu) / sigma).powi(2)).sum();
        0.5 * ss + n * (sigma.ln() + z.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
    };
    let (p, best) = minimise(nll, &[m, v.sqrt().ln()], 0.2);
    let dist = MarginDistribution::new(MarginParams::TruncatedNormal {
        mu: p[0],
        sigma: p[1].exp(),
    })?;
    Ok((dist, -best))
}

fn fit_beta(data: &[f64]) -> Result<(MarginDistribution, f64)> {
    let clamped: Vec<f64> = data
        .iter()
        .map(|x| x.clamp(BETA_EDGE, 1.0 - BETA_EDGE))
        .collect();
    let n = clamped.len() as f64;
    let s1: f64 = clamped.iter().map(|x| x.ln()).sum();
    let s2: f64 = clamped.iter().map(|x| (1.0 - x).ln()).sum();
    let (m, v) = moments(&clamped);
    let common = m * (1.0 - m) / v - 1.0;
    let start = if common > 0.0 {
        [(m * common).ln(), ((1.0 - m) * common).ln()]
    } else {
        [0.0, 0.0]
    };
    let nll = |p: &[f64]| {
        let (a, b) = (p[0].exp(), p[1].exp());
        -((a - 1.0) * s1 + (b - 1.0) * s2 - n * ln_beta(a, b))
    };
    let (p, best) = minimise(nll, &start, 0.3);
    let dist = MarginDistribution::new(MarginParams::Beta {
        alpha: p[0].exp(),
        beta: p[1].exp(),
    })?;
    Ok((dist, -best))
}

/// Shape parameters are capped at e^12; beyond that the beta-binomial is
/// indistinguishable from a binomial.
const MAX_LOG_SHAPE: f64 = 12.0;

fn fit_beta_binomial(data: &[f64], k: u32) -> Result<(MarginDistribution, f64)> {
    let mut counts = vec![0.0; k as usize + 1];
    for x in data {
        counts[(x * k as f64).round() as usize] += 1.0;
    }
    let (m, v) = moments(data);
    // Method of moments on the proportion scale: var = m(1-m)(1 + (k-1)ρ)/k.
    let kf = k as f64;
    let rho = ((kf * v / (m * (1.0 - m)) - 1.0) / (kf - 1.0).max(1.0)).clamp(1e-3, 0.999);
    let common = 1.0 / rho - 1.0;
    let start = [
        (m * common).max(1e-3).ln(),
        ((1.0 - m) * common).max(1e-3).ln(),
    ];
    let nll = |p: &[f64]| {
        let a = p[0].min(MAX_LOG_SHAPE).exp();
        let b = p[1].min(MAX_LOG_SHAPE).exp();
        let pmf = beta_binomial_pmf(k, a, b);
        -counts
            .iter()
            .zip(&pmf)
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, p)| c * p.ln())
            .sum::<f64>()
    };
    let (p, best) = minimise(nll, &start, 0.3);
    let dist = MarginDistribution::new(MarginParams::BetaBinomial {
        k,
        alpha: p[0].min(MAX_LOG_SHAPE).exp(),
        beta: p[1].min(MAX_LOG_SHAPE).exp(),
    })?;
    Ok((dist, -best))
}

fn fit_empirical(data: &[f64], points: &[f64]) -> Result<(MarginDistribution, f64)> {
    let mut counts = vec![0.0; points.len()];
    for &x in data {
        let i = points
            .iter()
            .position(|p| (p - x).abs() <= super::POINT_TOL)
            .ok_or_else(|| Error::InvalidData(format!("score {x} is not a support point")))?;
        counts[i] += 1.0;
    }
    let total = data.len() as f64 + EMPIRICAL_SMOOTHING * points.len() as f64;
    let probs: Vec<f64> = counts
        .iter()
        .map(|c| (c + EMPIRICAL_SMOOTHING) / total)
        .collect();
    let loglik = counts
        .iter()
        .zip(&probs)
        .map(|(c, p)| c * p.ln())
        .sum::<f64>();
    let dist = MarginDistribution::new(MarginParams::DiscreteEmpirical {
        points: points.to_vec(),
        probs,
    })?;
    Ok((dist, loglik))
}
