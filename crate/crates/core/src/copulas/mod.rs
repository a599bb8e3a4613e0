//! Bivariate copulas for the dependence between two systems' scores.
//!
//! Gaussian, Clayton, Gumbel and Frank families are available, plus the
//! independence copula. Rotations by 90°, 180° and 270° reflect the unit
//! square so that Clayton and Gumbel can express negative dependence or
//! the opposite tail dependence.

mod families;
mod fit;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::MarginDistribution;
use crate::rng::{open_uniform, stream_rng};

pub use fit::{fit_copula, CopulaFitReport, MIN_COPULA_OBSERVATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Independence,
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 5] = [
        CopulaFamily::Independence,
        CopulaFamily::Gaussian,
        CopulaFamily::Clayton,
        CopulaFamily::Gumbel,
        CopulaFamily::Frank,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    /// Maps a point between the rotated and the base copula (an involution).
    fn reflect(self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Rotation::R0 => (u, v),
            Rotation::R90 => (1.0 - u, v),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (u, 1.0 - v),
        }
    }

    fn flips_sign(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }
}

impl TryFrom<u16> for Rotation {
    type Error = String;

    fn try_from(d: u16) -> std::result::Result<Self, Self::Error> {
        match d {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            other => Err(format!("rotation must be 0, 90, 180 or 270, got {other}")),
        }
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}

/// A fitted copula: family, rotation and dependence parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaRepr", into = "CopulaRepr")]
pub struct CopulaModel {
    family: CopulaFamily,
    rotation: Rotation,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct CopulaRepr {
    family: CopulaFamily,
    rotation: Rotation,
    theta: f64,
}

impl TryFrom<CopulaRepr> for CopulaModel {
    type Error = Error;

    fn try_from(r: CopulaRepr) -> Result<Self> {
        CopulaModel::new(r.family, r.rotation, r.theta)
    }
}

impl From<CopulaModel> for CopulaRepr {
    fn from(m: CopulaModel) -> Self {
        CopulaRepr {
            family: m.family,
            rotation: m.rotation,
            theta: m.theta,
        }
    }
}

impl CopulaModel {
    pub fn new(family: CopulaFamily, rotation: Rotation, theta: f64) -> Result<Self> {
        let ok = theta.is_finite()
            && match family {
                CopulaFamily::Independence => true,
                CopulaFamily::Gaussian => theta > -1.0 && theta < 1.0,
                CopulaFamily::Clayton => theta > 0.0,
                CopulaFamily::Gumbel => theta >= 1.0,
                CopulaFamily::Frank => theta != 0.0,
            };
        if !ok {
            return Err(Error::InvalidModel(format!(
                "parameter {theta} is not admissible for the {family:?} copula"
            )));
        }
        let theta = if family == CopulaFamily::Independence {
            0.0
        } else {
            theta
        };
        Ok(CopulaModel {
            family,
            rotation,
            theta,
        })
    }

    pub fn independence() -> Self {
        CopulaModel {
            family: CopulaFamily::Independence,
            rotation: Rotation::R0,
            theta: 0.0,
        }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Kendall's τ implied by the parameter (sign-flipped by 90°/270°).
    pub fn kendall_tau(&self) -> f64 {
        let tau = families::kendall_tau(self.family, self.theta);
        if self.rotation.flips_sign() {
            -tau
        } else {
            tau
        }
    }

    pub fn log_density(&self, u: f64, v: f64) -> f64 {
        let (a, b) = self.rotation.reflect(u, v);
        families::log_density(self.family, self.theta, a, b)
    }

    /// `n` pairs by the conditional-distribution method, deterministic
    /// given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> PseudoObservations {
        let mut rng = stream_rng(seed, 0);
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let a = open_uniform(&mut rng);
            let w = open_uniform(&mut rng);
            let b = families::h_inverse(self.family, self.theta, a, w);
            let (x, y) = self.rotation.reflect(a, b);
            u.push(inside_unit(x));
            v.push(inside_unit(y));
        }
        PseudoObservations { u, v }
    }
}

fn inside_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Paired values on the unit square, one per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservations {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PseudoObservations {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::InvalidData(
                "pseudo-observation lists differ in length".into(),
            ));
        }
        if u.iter().chain(&v).any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::InvalidData(
                "pseudo-observations must lie strictly inside (0, 1)".into(),
            ));
        }
        Ok(PseudoObservations { u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Maps scores through the margins' cdfs and clamps the result into
/// `[1/(2n), 1 - 1/(2n)]`.
pub fn pseudo_observations(
    b: &[f64],
    e: &[f64],
    fb: &MarginDistribution,
    fe: &MarginDistribution,
) -> Result<PseudoObservations> {
    if b.len() != e.len() {
        return Err(Error::InvalidData(format!(
            "paired score lists differ in length ({} vs {})",
            b.len(),
            e.len()
        )));
    }
    if b.is_empty() {
        return Err(Error::InsufficientSample { needed: 1, got: 0 });
    }
    let eps = 1.0 / (2.0 * b.len() as f64);
    let clamp = |x: f64| x.clamp(eps, 1.0 - eps);
    Ok(PseudoObservations {
        u: b.iter().map(|&x| clamp(fb.cdf(x))).collect(),
        v: e.iter().map(|&x| clamp(fe.cdf(x))).collect(),
    })
}

/// Sum of log copula densities; `-inf` when any density is zero.
pub fn copula_loglik(model: &CopulaModel, pobs: &PseudoObservations) -> f64 {
    let mut total = 0.0;
    for (&u, &v) in pobs.u.iter().zip(&pobs.v) {
        let ld = model.log_density(u, v);
        if ld.is_nan() || ld == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += ld;
    }
    total
}

/// Kendall's τ-b of two equally long samples (O(n²), tie-corrected).
pub fn empirical_kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = (x[i] - x[j]).partial_cmp(&0.0).unwrap() as i64;
            let dy = (y[i] - y[j]).partial_cmp(&0.0).unwrap() as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => tx += 1,
                (_, 0) => ty += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let denom = (((concordant + discordant + tx) * (concordant + discordant + ty)) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (concordant - discordant) as f64 / denom
    }
}

#[cfg(test)]
mod tests;
