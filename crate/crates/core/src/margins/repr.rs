//! JSON form of a margin: family tag, parameter array, support descriptor
//! and transform exponent.

use serde::{Deserialize, Serialize};

use super::{MarginDistribution, MarginFamily, MarginParams};
use crate::error::Error;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum SupportRepr {
    Interval { lo: f64, hi: f64 },
    Grid { k: u32 },
    Points { points: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct MarginRepr {
    family: MarginFamily,
    params: Vec<f64>,
    support: SupportRepr,
    transform_exponent: f64,
}

impl From<MarginDistribution> for MarginRepr {
    fn from(m: MarginDistribution) -> Self {
        let transform_exponent = m.transform();
        let family = m.family();
        let (params, support) = match m.params {
            MarginParams::TruncatedNormal { mu, sigma } => {
                (vec![mu, sigma], SupportRepr::Interval { lo: 0.0, hi: 1.0 })
            }
            MarginParams::Beta { alpha, beta } => (
                vec![alpha, beta],
                SupportRepr::Interval { lo: 0.0, hi: 1.0 },
            ),
            MarginParams::BetaBinomial { k, alpha, beta } => {
                (vec![alpha, beta], SupportRepr::Grid { k })
            }
            MarginParams::DiscreteEmpirical { points, probs } => {
                (probs, SupportRepr::Points { points })
            }
        };
        MarginRepr {
            family,
            params,
            support,
            transform_exponent,
        }
    }
}

impl TryFrom<MarginRepr> for MarginDistribution {
    type Error = Error;

    fn try_from(r: MarginRepr) -> Result<Self, Error> {
        let bad = |msg: &str| Error::InvalidModel(format!("{:?} margin: {msg}", r.family));
        let pair = || match r.params[..] {
            [a, b] => Ok((a, b)),
            _ => Err(bad("expected two parameters")),
        };
        let params = match (r.family, &r.support) {
            (MarginFamily::TruncatedNormal, SupportRepr::Interval { lo, hi })
                if *lo == 0.0 && *hi == 1.0 =>
            {
                let (mu, sigma) = pair()?;
                MarginParams::TruncatedNormal { mu, sigma }
            }
            (MarginFamily::Beta, SupportRepr::Interval { lo, hi }) if *lo == 0.0 && *hi == 1.0 => {
                let (alpha, beta) = pair()?;
                MarginParams::Beta { alpha, beta }
            }
            (MarginFamily::BetaBinomial, SupportRepr::Grid { k }) => {
                let (alpha, beta) = pair()?;
                MarginParams::BetaBinomial { k: *k, alpha, beta }
            }
            (MarginFamily::DiscreteEmpirical, SupportRepr::Points { points }) => {
                MarginParams::DiscreteEmpirical {
                    points: points.clone(),
                    probs: r.params.clone(),
                }
            }
            _ => return Err(bad("support descriptor does not match the family")),
        };
        MarginDistribution::with_transform(params, Some(r.transform_exponent))
    }
}
