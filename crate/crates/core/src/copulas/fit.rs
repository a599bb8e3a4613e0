use serde::{Deserialize, Serialize};

use super::{copula_loglik, CopulaFamily, CopulaModel, PseudoObservations, Rotation};
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;
use crate::special::norm_quantile;

pub const MIN_COPULA_OBSERVATIONS: usize = 10;

/// Largest Gaussian correlation the fit will return.
const MAX_RHO: f64 = 0.9999;
const THETA_TOL: f64 = 1e-6;

/// Log-likelihood of each fitted candidate and the selected model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaFitReport {
    pub candidates: Vec<(CopulaModel, f64)>,
    pub selected: CopulaModel,
    pub loglik: f64,
}

/// Fits each requested family (and, for Clayton and Gumbel, each rotation)
/// by maximum likelihood and keeps the best.
pub fn fit_copula(
    pobs: &PseudoObservations,
    families: &[CopulaFamily],
) -> Result<(CopulaModel, CopulaFitReport)> {
    if pobs.len() < MIN_COPULA_OBSERVATIONS {
        return Err(Error::InsufficientSample {
            needed: MIN_COPULA_OBSERVATIONS,
            got: pobs.len(),
        });
    }
    if families.is_empty() {
        return Err(Error::InvalidConfig("no copula families to fit".into()));
    }
    let mut candidates = Vec::new();
    for &family in families {
        match family {
            CopulaFamily::Independence => {
                candidates.push((CopulaModel::independence(), 0.0));
            }
            CopulaFamily::Gaussian => {
                let model =
                    CopulaModel::new(family, Rotation::R0, normal_scores_correlation(pobs))?;
                candidates.push((model, copula_loglik(&model, pobs)));
            }
            CopulaFamily::Clayton | CopulaFamily::Gumbel => {
                let (lo, hi) = if family == CopulaFamily::Clayton {
                    (1e-4, 50.0)
                } else {
                    (1.0, 50.0)
                };
                for rotation in Rotation::ALL {
                    candidates.push(fit_one(pobs, family, rotation, lo, hi)?);
                }
            }
            CopulaFamily::Frank => {
                let neg = fit_one(pobs, family, Rotation::R0, -50.0, -1e-4)?;
                let pos = fit_one(pobs, family, Rotation::R0, 1e-4, 50.0)?;
                candidates.push(if pos.1 >= neg.1 { pos } else { neg });
            }
        }
    }
    let (selected, loglik) = candidates
        .iter()
        .copied()
        .reduce(|best, c| if c.1 > best.1 { c } else { best })
        .expect("at least one family");
    Ok((
        selected,
        CopulaFitReport {
            candidates,
            selected,
            loglik,
        },
    ))
}

fn fit_one(
    pobs: &PseudoObservations,
    family: CopulaFamily,
    rotation: Rotation,
    lo: f64,
    hi: f64,
) -> Result<(CopulaModel, f64)> {
    let ll = |theta: f64| match CopulaModel::new(family, rotation, theta) {
        Ok(m) => copula_loglik(&m, pobs),
        Err(_) => f64::NEG_INFINITY,
    };
    let (theta, value) = golden_section_max(ll, lo, hi, THETA_TOL, 200);
    Ok((CopulaModel::new(family, rotation, theta)?, value))
}

/// Pearson correlation of the normal scores, clamped inside (-1, 1).
fn normal_scores_correlation(pobs: &PseudoObservations) -> f64 {
    let x: Vec<f64> = pobs.u.iter().map(|&u| norm_quantile(u)).collect();
    let y: Vec<f64> = pobs.v.iter().map(|&v| norm_quantile(v)).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let r = if sxx > 0.0 && syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        0.0
    };
    r.clamp(-MAX_RHO, MAX_RHO)
}
