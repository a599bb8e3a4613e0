//! Univariate effectiveness-score distributions.
//!
//! Four families are supported: a normal truncated to `[0, 1]`, the beta
//! distribution, the beta-binomial on the grid `{0, 1/k, …, 1}` and a
//! smoothed empirical distribution over an explicit point set. Any of them
//! can be tilted to a different mean while keeping its support: continuous
//! margins use `G(x) = F(x)^a`, discrete ones reweight `p_i ∝ p_i e^{λ x_i}`.

mod continuous;
mod fit;
mod repr;
mod tilt;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::special::ln_beta;

pub use fit::{fit_margin, FitReport, MIN_FIT_OBSERVATIONS};
pub use tilt::{DEFAULT_MEAN_TOLERANCE, MAX_TILT_ITERATIONS};

use continuous::{CdfGrid, ContinuousBase};

/// Tolerance for matching a score against a discrete support point.
pub(crate) const POINT_TOL: f64 = 1e-6;

/// What is known about the support of a measure's scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupportHint {
    /// Any value in `[0, 1]`.
    Continuous,
    /// Multiples of `1/k` in `[0, 1]`, e.g. precision at `k`.
    Discrete { k: u32 },
    /// An explicit finite set of values.
    PointSet { points: Vec<f64> },
}

impl SupportHint {
    /// `{0} ∪ {1/r : r = 1..=cutoff}`, the support of reciprocal rank.
    pub fn reciprocal_rank(cutoff: u32) -> Self {
        let mut points: Vec<f64> = (1..=cutoff).map(|r| 1.0 / r as f64).collect();
        points.push(0.0);
        points.sort_by(f64::total_cmp);
        SupportHint::PointSet { points }
    }

    /// Checks that `x` is a legal score and returns it snapped onto the
    /// support (discrete supports only).
    pub fn snap(&self, x: f64) -> Option<f64> {
        if !x.is_finite() {
            return None;
        }
        match self {
            SupportHint::Continuous => (0.0..=1.0).contains(&x).then_some(x),
            SupportHint::Discrete { k } => {
                let j = (x * *k as f64).round();
                let ok = (0.0..=*k as f64).contains(&j) && (x * *k as f64 - j).abs() <= POINT_TOL;
                ok.then(|| j / *k as f64)
            }
            SupportHint::PointSet { points } => {
                points.iter().copied().find(|p| (p - x).abs() <= POINT_TOL)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginFamily {
    TruncatedNormal,
    Beta,
    BetaBinomial,
    DiscreteEmpirical,
}

impl MarginFamily {
    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            MarginFamily::BetaBinomial | MarginFamily::DiscreteEmpirical
        )
    }
}

/// Family-specific parameters of an untransformed margin.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginParams {
    TruncatedNormal { mu: f64, sigma: f64 },
    Beta { alpha: f64, beta: f64 },
    BetaBinomial { k: u32, alpha: f64, beta: f64 },
    DiscreteEmpirical { points: Vec<f64>, probs: Vec<f64> },
}

impl MarginParams {
    pub fn family(&self) -> MarginFamily {
        match self {
            MarginParams::TruncatedNormal { .. } => MarginFamily::TruncatedNormal,
            MarginParams::Beta { .. } => MarginFamily::Beta,
            MarginParams::BetaBinomial { .. } => MarginFamily::BetaBinomial,
            MarginParams::DiscreteEmpirical { .. } => MarginFamily::DiscreteEmpirical,
        }
    }
}

/// Support of a margin.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Interval { lo: f64, hi: f64 },
    Points(Vec<f64>),
}

impl Support {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Support::Interval { lo, hi } => (*lo, *hi),
            Support::Points(p) => (p[0], p[p.len() - 1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct DiscreteTable {
    points: Vec<f64>,
    base: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
    lambda: f64,
}

impl DiscreteTable {
    fn new(points: Vec<f64>, base: Vec<f64>, lambda: f64) -> Self {
        let probs = tilt::tilted_probs(&points, &base, lambda);
        let mut acc = 0.0;
        let mut cum: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        DiscreteTable {
            points,
            base,
            probs,
            cum,
            lambda,
        }
    }

    fn mean(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Continuous {
        base: ContinuousBase,
        exponent: f64,
        grid: Arc<CdfGrid>,
    },
    Discrete(DiscreteTable),
}

/// A fitted (and possibly mean-shifted) marginal score distribution.
/// Immutable; all queries are pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "repr::MarginRepr", try_from = "repr::MarginRepr")]
pub struct MarginDistribution {
    params: MarginParams,
    shape: Shape,
    mean: f64,
}

impl PartialEq for MarginDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.transform() == other.transform()
    }
}

impl MarginDistribution {
    /// Builds a margin from its parameters with the identity transform.
    pub fn new(params: MarginParams) -> Result<Self> {
        Self::with_transform(params, None)
    }

    /// Builds a margin with an explicit transform: the exponent `a` for
    /// continuous families or the tilt `λ` for discrete ones.
    pub fn with_transform(params: MarginParams, transform: Option<f64>) -> Result<Self> {
        let shape = match &params {
            MarginParams::TruncatedNormal { mu, sigma } => {
                if !(mu.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "truncated normal needs finite mu and sigma > 0 (mu = {mu}, sigma = {sigma})"
                    )));
                }
                Self::continuous_shape(ContinuousBase::truncated_normal(*mu, *sigma)?, transform)?
            }
            MarginParams::Beta { alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "beta needs positive shape parameters (alpha = {alpha}, beta = {beta})"
                    )));
                }
                Self::continuous_shape(
                    ContinuousBase::Beta {
                        alpha: *alpha,
                        beta: *beta,
                    },
                    transform,
                )?
            }
            MarginParams::BetaBinomial { k, alpha, beta } => {
                if *k == 0
                    || !(*alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite())
                {
                    return Err(Error::InvalidModel(format!(
                        "beta-binomial needs k >= 1 and positive shapes (k = {k}, alpha = {alpha}, beta = {beta})"
                    )));
                }
                let points = (0..=*k).map(|j| j as f64 / *k as f64).collect();
                let base = beta_binomial_pmf(*k, *alpha, *beta);
                Self::discrete_shape(points, base, transform)?
            }
            MarginParams::DiscreteEmpirical { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(Error::InvalidModel(
                        "discrete margin needs one probability per support point".into(),
                    ));
                }
                if points.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidModel(
                        "discrete support points must be strictly increasing".into(),
                    ));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::InvalidModel("negative probability".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "discrete probabilities sum to {total}, not 1"
                    )));
                }
                Self::discrete_shape(points.clone(), probs.clone(), transform)?
            }
        };
        let mean = match &shape {
            Shape::Continuous {
                base,
                exponent,
                grid,
            } => {
                if *exponent == 1.0 {
                    base.mean()
                } else {
                    grid.mean(*exponent)
                }
            }
            Shape::Discrete(t) => t.mean(),
        };
        Ok(MarginDistribution {
            params,
            shape,
            mean,
        })
    }

    fn continuous_shape(base: ContinuousBase, transform: Option<f64>) -> Result<Shape> {
        let exponent = transform.unwrap_or(1.0);
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "transform exponent must be positive, got {exponent}"
            )));
        }
        let grid = Arc::new(CdfGrid::new(&base));
        Ok(Shape::Continuous {
            base,
            exponent,
            grid,
        })
    }

    fn discrete_shape(points: Vec<f64>, base: Vec<f64>, transform: Option<f64>) -> Result<Shape> {
        let lambda = transform.unwrap_or(0.0);
        if !lambda.is_finite() {
            return Err(Error::InvalidModel("tilt must be finite".into()));
        }
        Ok(Shape::Discrete(DiscreteTable::new(points, base, lambda)))
    }

    pub fn family(&self) -> MarginFamily {
        self.params.family()
    }

    pub fn params(&self) -> &MarginParams {
        &self.params
    }

    /// Exponent `a` (continuous) or tilt `λ` (discrete) of the mean-shift
    /// transform; 1 and 0 respectively mean untransformed.
    pub fn transform(&self) -> f64 {
        match &self.shape {
            Shape::Continuous { exponent, .. } => *exponent,
            Shape::Discrete(t) => t.lambda,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.shape, Shape::Discrete(_))
    }

    pub fn support(&self) -> Support {
        match &self.shape {
            Shape::Continuous { .. } => Support::Interval { lo: 0.0, hi: 1.0 },
            Shape::Discrete(t) => Support::Points(t.points.clone()),
        }
    }

    /// Support points and their probabilities (discrete margins only).
    pub fn point_masses(&self) -> Option<(&[f64], &[f64])> {
        match &self.shape {
            Shape::Discrete(t) => Some((&t.points, &t.probs)),
            Shape::Continuous { .. } => None,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        match &self.shape {
            Shape::Continuous { exponent, grid, .. } => {
                grid.second_moment(*exponent) - self.mean * self.mean
            }
            Shape::Discrete(t) => t
                .points
                .iter()
                .zip(&t.probs)
                .map(|(x, p)| p * (x - self.mean) * (x - self.mean))
                .sum(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Continuous { base, exponent, .. } => {
                let f = base.cdf(x);
                if *exponent == 1.0 {
                    f
                } else {
                    f.powf(*exponent)
                }
            }
            Shape::Discrete(t) => {
                let idx = t.points.partition_point(|p| *p <= x + POINT_TOL);
                if idx == 0 {
                    0.0
                } else {
                    t.cum[idx - 1]
                }
            }
        }
    }

    /// Log density (continuous) or log mass (discrete) at `x`.
    pub fn log_density(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Continuous { base, exponent, .. } => {
                let ld = base.log_pdf(x);
                if *exponent == 1.0 {
                    ld
                } else {
                    exponent.ln() + (exponent - 1.0) * base.cdf(x).ln() + ld
                }
            }
            Shape::Discrete(t) => match t.points.iter().position(|p| (p - x).abs() <= POINT_TOL) {
                Some(i) => t.probs[i].ln(),
                None => f64::NEG_INFINITY,
            },
        }
    }

    /// Generalised inverse of the cdf. Errors when `u` is outside `[0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidArgument(format!(
                "quantile level must lie in [0, 1], got {u}"
            )));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Continuous { base, exponent, .. } => {
                let w = if *exponent == 1.0 {
                    u
                } else {
                    u.powf(1.0 / exponent)
                };
                base.quantile(w)
            }
            Shape::Discrete(t) => {
                let idx = t.cum.partition_point(|c| *c < u).min(t.points.len() - 1);
                t.points[idx]
            }
        }
    }

    /// `n` draws by inverse-cdf sampling, deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n)
            .map(|_| self.quantile_unchecked(rng.random::<f64>()))
            .collect()
    }

    /// Same base distribution under a different transform, reusing the
    /// quadrature grid.
    pub(crate) fn retransformed(&self, transform: f64) -> Self {
        let (shape, mean) = match &self.shape {
            Shape::Continuous { base, grid, .. } => {
                let mean = if transform == 1.0 {
                    base.mean()
                } else {
                    grid.mean(transform)
                };
                (
                    Shape::Continuous {
                        base: base.clone(),
                        exponent: transform,
                        grid: Arc::clone(grid),
                    },
                    mean,
                )
            }
            Shape::Discrete(t) => {
                let table = DiscreteTable::new(t.points.clone(), t.base.clone(), transform);
                let mean = table.mean();
                (Shape::Discrete(table), mean)
            }
        };
        MarginDistribution {
            params: self.params.clone(),
            shape,
            mean,
        }
    }

    /// Mean under the given transform without building the distribution.
    pub(crate) fn mean_under(&self, transform: f64) -> f64 {
        match &self.shape {
            Shape::Continuous { base, grid, .. } => {
                if transform == 1.0 {
                    base.mean()
                } else {
                    grid.mean(transform)
                }
            }
            Shape::Discrete(t) => tilt::tilted_probs(&t.points, &t.base, transform)
                .iter()
                .zip(&t.points)
                .map(|(p, x)| p * x)
                .sum(),
        }
    }

    /// Same distribution transformed so that its mean is `target` within
    /// `tol`, with the support unchanged.
    pub fn with_target_mean(&self, target: f64, tol: f64) -> Result<Self> {
        tilt::with_target_mean(self, target, tol)
    }
}

/// Probability mass of BetaBinomial(k, α, β) at `j = 0..=k`.
pub fn beta_binomial_pmf(k: u32, alpha: f64, beta: f64) -> Vec<f64> {
    let lb = ln_beta(alpha, beta);
    let kf = k as f64;
    let ln_choose = |j: f64| {
        crate::special::ln_gamma(kf + 1.0)
            - crate::special::ln_gamma(j + 1.0)
            - crate::special::ln_gamma(kf - j + 1.0)
    };
    let mut p: Vec<f64> = (0..=k)
        .map(|j| {
            let j = j as f64;
            (ln_choose(j) + ln_beta(j + alpha, kf - j + beta) - lb).exp()
        })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

#[cfg(test)]
mod tests;
