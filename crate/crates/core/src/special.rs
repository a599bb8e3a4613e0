//! Special functions needed by the tests and the margin families.
//!
//! The incomplete beta and log-gamma functions come from `statrs`; the
//! distribution functions built on top of them live here so that tail
//! probabilities are computed without catastrophic cancellation.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::{beta, gamma};

pub use gamma::ln_gamma;

/// Regularized incomplete beta function I_x(a, b).
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta::beta_reg(a, b, x)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Cumulative distribution function of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let tail = t_tail(t.abs(), df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Upper tail P(T ≥ t) of Student's t, computed directly from the
/// incomplete beta function so small tail probabilities keep full precision.
pub fn t_upper(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t >= 0.0 {
        t_tail(t, df)
    } else {
        1.0 - t_tail(-t, df)
    }
}

// P(T >= t) for t >= 0.
fn t_tail(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    0.5 * beta_reg(df / 2.0, 0.5, x)
}

/// Upper tail P(X ≥ k) of Binomial(n, 1/2).
///
/// Built from a Pascal row normalised at every step, which is exact in
/// double precision while the binomial coefficients fit in 53 bits.
pub fn binom_half_upper(k: usize, n: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let pmf = binom_half_pmf(n);
    let tail: f64 = pmf[k..].iter().rev().sum();
    tail.min(1.0)
}

/// Probability mass function of Binomial(n, 1/2) over 0..=n.
pub fn binom_half_pmf(n: usize) -> Vec<f64> {
    let mut row = vec![1.0_f64];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (j, &p) in row.iter().enumerate() {
            next[j] += 0.5 * p;
            next[j + 1] += 0.5 * p;
        }
        row = next;
    }
    row
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

pub fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn norm_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of the standard normal cdf. Returns ±∞ at the endpoints.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        // statrs is accurate to ~1e-11; polish with Newton steps.
        let mut x = std_normal().inverse_cdf(p);
        for _ in 0..2 {
            let pdf = norm_pdf(x);
            if pdf < 1e-300 {
                break;
            }
            let err = if x > 0.0 {
                (1.0 - p) - norm_sf(x)
            } else {
                norm_cdf(x) - p
            };
            x -= err / pdf;
        }
        x
    }
}
