use crate::error::{Error, Result};
use crate::optimize::gauss_legendre;
use crate::special::{beta_reg, ln_beta, norm_cdf, norm_pdf, norm_quantile, norm_sf};

/// Untransformed continuous margin on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ContinuousBase {
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        /// Standardised bounds and the normalising mass between them.
        a: f64,
        b: f64,
        z: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
}

/// Mass of the standard normal between `a < b`, accurate in both tails.
pub(crate) fn normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        norm_sf(a) - norm_sf(b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

impl ContinuousBase {
    pub(crate) fn truncated_normal(mu: f64, sigma: f64) -> Result<Self> {
        let a = -mu / sigma;
        let b = (1.0 - mu) / sigma;
        let z = normal_mass(a, b);
        if !(z > 1e-300) {
            return Err(Error::InvalidModel(format!(
                "truncated normal (mu = {mu}, sigma = {sigma}) has no mass on [0, 1]"
            )));
        }
        Ok(ContinuousBase::TruncatedNormal { mu, sigma, a, b, z })
    }

    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match *self {
            ContinuousBase::TruncatedNormal {
                mu, sigma, a, z, ..
            } => {
                let t = (x - mu) / sigma;
                let m = if a > 0.0 {
                    norm_sf(a) - norm_sf(t)
                } else {
                    norm_cdf(t) - norm_cdf(a)
                };
                (m / z).clamp(0.0, 1.0)
            }
            ContinuousBase::Beta { alpha, beta } => beta_reg(alpha, beta, x),
        }
    }

    pub(crate) fn log_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            ContinuousBase::TruncatedNormal { mu, sigma, z, .. } => {
                let t = (x - mu) / sigma;
                -0.5 * t * t - 0.5 * (2.0 * std::f64::consts::PI).ln() - sigma.ln() - z.ln()
            }
            ContinuousBase::Beta { alpha, beta } => {
                (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_beta(alpha, beta)
            }
        }
    }

    pub(crate) fn mean(&self) -> f64 {
        match *self {
            ContinuousBase::TruncatedNormal { mu, sigma, a, b, z } => {
                mu + sigma * (norm_pdf(a) - norm_pdf(b)) / z
            }
            ContinuousBase::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    fn initial_guess(&self, u: f64) -> f64 {
        match *self {
            ContinuousBase::TruncatedNormal {
                mu, sigma, a, z, ..
            } => {
                let x = if a > 0.0 {
                    mu + sigma * -norm_quantile(norm_sf(a) - u * z)
                } else {
                    mu + sigma * norm_quantile(norm_cdf(a) + u * z)
                };
                if x.is_finite() {
                    x.clamp(0.0, 1.0)
                } else {
                    0.5
                }
            }
            ContinuousBase::Beta { .. } => self.mean(),
        }
    }

    /// Inverse cdf by safeguarded Newton iteration on `[0, 1]`.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x = self.initial_guess(u);
        for _ in 0..200 {
            let f = self.cdf(x) - u;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.max(1e-300) {
                break;
            }
            let pdf = self.log_pdf(x).exp();
            let mut next = x - f / pdf;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= f64::EPSILON * x.abs().max(1e-300) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Quadrature nodes on `[0, 1]` with the base cdf evaluated once, so the
/// moments of every exponent transform `F^a` are cheap weighted sums.
///
/// The mesh is graded geometrically towards both endpoints, where beta
/// densities and their powers may be singular.
#[derive(Debug, Clone)]
pub(crate) struct CdfGrid {
    nodes: Vec<(f64, f64, f64)>, // (x, weight, F(x))
}

impl CdfGrid {
    pub(crate) fn new(base: &ContinuousBase) -> Self {
        let mut breaks = vec![0.0];
        let mut edge = Vec::new();
        let mut h = 1e-13;
        while h < 0.02 {
            edge.push(h);
            h *= 4.0;
        }
        breaks.extend(edge.iter().copied());
        breaks.extend((1..50).map(|i| i as f64 * 0.02));
        breaks.extend(edge.iter().rev().map(|h| 1.0 - h));
        breaks.push(1.0);
        let rule = gauss_legendre(12);
        let mut nodes = Vec::with_capacity(breaks.len() * rule.len());
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(t, wt) in &rule {
                let x = mid + half * t;
                nodes.push((x, wt * half, base.cdf(x)));
            }
        }
        CdfGrid { nodes }
    }

    /// Mean of `F^a`: `∫ (1 - F(x)^a) dx` over `[0, 1]`.
    pub(crate) fn mean(&self, a: f64) -> f64 {
        1.0 - self
            .nodes
            .iter()
            .map(|&(_, w, f)| w * f.powf(a))
            .sum::<f64>()
    }

    /// Second moment of `F^a`: `∫ 2x (1 - F(x)^a) dx`.
    pub(crate) fn second_moment(&self, a: f64) -> f64 {
        1.0 - self
            .nodes
            .iter()
            .map(|&(x, w, f)| 2.0 * x * w * f.powf(a))
            .sum::<f64>()
    }
}
