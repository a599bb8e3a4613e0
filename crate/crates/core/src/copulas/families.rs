//! Densities, conditional distributions (h-functions) and their inverses
//! for the unrotated one-parameter families.

use crate::optimize::integrate;
use crate::special::{norm_cdf, norm_quantile};

use super::CopulaFamily;

/// `ln(e^p + e^q - e^r)` for `r <= min(p, q)`, without overflow.
fn log_sum_minus(p: f64, q: f64, r: f64) -> f64 {
    let m = p.max(q);
    m + ((p - m).exp() + (q - m).exp() - (r - m).exp()).ln()
}

fn log_sum(p: f64, q: f64) -> f64 {
    let m = p.max(q);
    m + ((p - m).exp() + (q - m).exp()).ln()
}

fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn log_density(family: CopulaFamily, theta: f64, u: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Independence => 0.0,
        CopulaFamily::Gaussian => {
            let rho = theta;
            let (x, y) = (norm_quantile(u), norm_quantile(v));
            let r2 = 1.0 - rho * rho;
            -0.5 * r2.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)
        }
        CopulaFamily::Clayton => {
            let (lu, lv) = (u.ln(), v.ln());
            let l = log_sum_minus(-theta * lu, -theta * lv, 0.0);
            theta.ln_1p() - (1.0 + theta) * (lu + lv) - (2.0 + 1.0 / theta) * l
        }
        CopulaFamily::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            let (lx, ly) = (x.ln(), y.ln());
            let ls = log_sum(theta * lx, theta * ly);
            let a = (ls / theta).exp();
            -a - u.ln() - v.ln()
                + (theta - 1.0) * (lx + ly)
                + (1.0 / theta - 2.0) * ls
                + (a + theta - 1.0).ln()
        }
        CopulaFamily::Frank => {
            if theta < 0.0 {
                return frank_log_density(-theta, 1.0 - u, v);
            }
            frank_log_density(theta, u, v)
        }
    }
}

fn frank_log_density(theta: f64, u: f64, v: f64) -> f64 {
    let d = frank_denominator(theta, u, v);
    theta.ln() + (-(-theta).exp_m1()).ln() - theta * (u + v) - 2.0 * d.ln()
}

// (1 - e^-θ) - (1 - e^-θu)(1 - e^-θv) for θ > 0, in a cancellation-free form.
fn frank_denominator(theta: f64, u: f64, v: f64) -> f64 {
    if theta <= 1.0 {
        -(-theta).exp_m1() - (-theta * u).exp_m1() * (-theta * v).exp_m1()
    } else {
        let (x, y) = ((-theta * u).exp(), (-theta * v).exp());
        x + y - x * y - (-theta).exp()
    }
}

/// `h(v | u) = ∂C(u, v)/∂u`, the conditional cdf of V given U = u.
pub(crate) fn h(family: CopulaFamily, theta: f64, u: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Independence => v,
        CopulaFamily::Gaussian => {
            let rho = theta;
            norm_cdf((norm_quantile(v) - rho * norm_quantile(u)) / (1.0 - rho * rho).sqrt())
        }
        CopulaFamily::Clayton => {
            let (lu, lv) = (u.ln(), v.ln());
            let l = log_sum_minus(-theta * lu, -theta * lv, 0.0);
            (-(1.0 + theta) * lu - (1.0 + 1.0 / theta) * l).exp()
        }
        CopulaFamily::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            let ls = log_sum(theta * x.ln(), theta * y.ln());
            let a = (ls / theta).exp();
            (-a + (1.0 / theta - 1.0) * ls + (theta - 1.0) * x.ln() - u.ln()).exp()
        }
        CopulaFamily::Frank => {
            if theta < 0.0 {
                return frank_h(-theta, 1.0 - u, v);
            }
            frank_h(theta, u, v)
        }
    }
}

fn frank_h(theta: f64, u: f64, v: f64) -> f64 {
    let a = (-theta * u).exp();
    let b = (-theta * v).exp_m1();
    a * b / ((-theta).exp_m1() + (-theta * u).exp_m1() * b)
}

/// Inverse of `h(· | u)`: the `v` with `h(v | u) = w`.
pub(crate) fn h_inverse(family: CopulaFamily, theta: f64, u: f64, w: f64) -> f64 {
    match family {
        CopulaFamily::Independence => w,
        CopulaFamily::Gaussian => {
            let rho = theta;
            norm_cdf(rho * norm_quantile(u) + (1.0 - rho * rho).sqrt() * norm_quantile(w))
        }
        CopulaFamily::Clayton => {
            // v = ((w^{-θ/(1+θ)} - 1) u^{-θ} + 1)^{-1/θ}
            let t = (-theta / (1.0 + theta) * w.ln()).exp_m1();
            let lx = t.ln() - theta * u.ln();
            (-softplus(lx) / theta).exp()
        }
        CopulaFamily::Gumbel => invert_increasing(|v| h(family, theta, u, v), w),
        CopulaFamily::Frank => {
            let (theta, u) = if theta < 0.0 {
                (-theta, 1.0 - u)
            } else {
                (theta, u)
            };
            let a = (-theta * u).exp();
            let b = w * (-theta).exp_m1() / (w + (1.0 - w) * a);
            -b.ln_1p() / theta
        }
    }
}

/// Bisection for the `v` in (0, 1) where the increasing `f` reaches `w`.
fn invert_increasing<F: Fn(f64) -> f64>(f: F, w: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kendall's τ implied by an unrotated family at parameter `theta`.
pub(crate) fn kendall_tau(family: CopulaFamily, theta: f64) -> f64 {
    match family {
        CopulaFamily::Independence => 0.0,
        CopulaFamily::Gaussian => 2.0 / std::f64::consts::PI * theta.asin(),
        CopulaFamily::Clayton => theta / (theta + 2.0),
        CopulaFamily::Gumbel => 1.0 - 1.0 / theta,
        CopulaFamily::Frank => {
            let t = theta.abs();
            let tau = if t < 1e-4 {
                t / 9.0
            } else {
                1.0 - 4.0 / t * (1.0 - debye1(t))
            };
            tau.copysign(theta)
        }
    }
}

/// First Debye function `D1(x) = (1/x) ∫_0^x t / (e^t - 1) dt`.
pub(crate) fn debye1(x: f64) -> f64 {
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    integrate(integrand, 0.0, x, 1e-13) / x
}
