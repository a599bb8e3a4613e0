//! Stochastic models of two systems' paired scores: two margins joined by a
//! copula, with null and fixed-effect variants whose true means are known.

use serde::{Deserialize, Serialize};

use crate::copulas::{fit_copula, pseudo_observations, CopulaFamily, CopulaFitReport, CopulaModel};
use crate::error::{Error, Result};
use crate::margins::{fit_margin, FitReport, MarginDistribution, SupportHint};
use crate::paired::PairedSample;

/// Absolute tolerance on `μ_E − μ_B − δ` for effect models.
pub const EFFECT_TOLERANCE: f64 = 1e-5;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelMode {
    Fitted,
    Null,
    Effect(f64),
}

impl ModelMode {
    pub fn name(self) -> &'static str {
        match self {
            ModelMode::Fitted => "fitted",
            ModelMode::Null => "null",
            ModelMode::Effect(_) => "effect",
        }
    }
}

/// Two margins and a copula. The true means of both systems are known, so
/// the truth of any hypothesis about their difference is too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct StochasticModel {
    margin_b: MarginDistribution,
    margin_e: MarginDistribution,
    copula: CopulaModel,
    mode: ModelMode,
}

/// Everything the fit considered, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFitReport {
    pub margin_b: FitReport,
    pub margin_e: FitReport,
    pub copula: CopulaFitReport,
}

/// Fits both margins, maps the scores to pseudo-observations and fits the
/// copula over all in-scope families.
pub fn fit_model(b: &[f64], e: &[f64], hint: &SupportHint) -> Result<StochasticModel> {
    fit_model_with_report(b, e, hint, &CopulaFamily::ALL).map(|(m, _)| m)
}

pub fn fit_model_with_report(
    b: &[f64],
    e: &[f64],
    hint: &SupportHint,
    families: &[CopulaFamily],
) -> Result<(StochasticModel, ModelFitReport)> {
    if b.len() != e.len() {
        return Err(Error::InvalidData(format!(
            "paired score lists differ in length ({} vs {})",
            b.len(),
            e.len()
        )));
    }
    let (margin_b, report_b) = fit_margin(b, hint)?;
    let (margin_e, report_e) = fit_margin(e, hint)?;
    let pobs = pseudo_observations(b, e, &margin_b, &margin_e)?;
    let (copula, report_c) = fit_copula(&pobs, families)?;
    let model = StochasticModel {
        margin_b,
        margin_e,
        copula,
        mode: ModelMode::Fitted,
    };
    Ok((
        model,
        ModelFitReport {
            margin_b: report_b,
            margin_e: report_e,
            copula: report_c,
        },
    ))
}

impl StochasticModel {
    pub fn new(
        margin_b: MarginDistribution,
        margin_e: MarginDistribution,
        copula: CopulaModel,
    ) -> Self {
        StochasticModel {
            margin_b,
            margin_e,
            copula,
            mode: ModelMode::Fitted,
        }
    }

    pub fn margin_b(&self) -> &MarginDistribution {
        &self.margin_b
    }

    pub fn margin_e(&self) -> &MarginDistribution {
        &self.margin_e
    }

    pub fn copula(&self) -> &CopulaModel {
        &self.copula
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn mu_b(&self) -> f64 {
        self.margin_b.mean()
    }

    pub fn mu_e(&self) -> f64 {
        self.margin_e.mean()
    }

    /// True difference `μ_E − μ_B`.
    pub fn delta(&self) -> f64 {
        self.mu_e() - self.mu_b()
    }

    /// The experimental margin replaced by the baseline one; the copula is
    /// kept, so both systems are equally effective but still dependent.
    pub fn to_null(&self) -> StochasticModel {
        StochasticModel {
            margin_b: self.margin_b.clone(),
            margin_e: self.margin_b.clone(),
            copula: self.copula,
            mode: ModelMode::Null,
        }
    }

    /// The experimental margin transformed so that `μ_E = μ_B + δ`.
    pub fn with_effect(&self, delta: f64) -> Result<StochasticModel> {
        if let ModelMode::Effect(d) = self.mode {
            return Err(Error::InvalidModel(format!(
                "model already carries an imposed effect of {d}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "effect size must be finite, got {delta}"
            )));
        }
        let margin_e = self
            .margin_e
            .with_target_mean(self.mu_b() + delta, EFFECT_TOLERANCE)?;
        Ok(StochasticModel {
            margin_b: self.margin_b.clone(),
            margin_e,
            copula: self.copula,
            mode: ModelMode::Effect(delta),
        })
    }

    /// `n` new topics: copula draws mapped through the margins' quantile
    /// functions. Deterministic given `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<PairedSample> {
        if n == 0 {
            return Err(Error::InvalidArgument("cannot simulate zero topics".into()));
        }
        let pobs = self.copula.sample(n, seed);
        let b = pobs
            .u
            .iter()
            .map(|&u| self.margin_b.quantile_unchecked(u))
            .collect();
        let e = pobs
            .v
            .iter()
            .map(|&v| self.margin_e.quantile_unchecked(v))
            .collect();
        PairedSample::new(b, e)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    version: u32,
    margin_b: MarginDistribution,
    margin_e: MarginDistribution,
    copula: CopulaModel,
    mode: String,
    delta: f64,
}

impl From<StochasticModel> for ModelRepr {
    fn from(m: StochasticModel) -> Self {
        let delta = match m.mode {
            ModelMode::Effect(d) => d,
            ModelMode::Null => 0.0,
            ModelMode::Fitted => m.delta(),
        };
        ModelRepr {
            version: MODEL_VERSION,
            mode: m.mode.name().to_string(),
            delta,
            margin_b: m.margin_b,
            margin_e: m.margin_e,
            copula: m.copula,
        }
    }
}

impl TryFrom<ModelRepr> for StochasticModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        if r.version != MODEL_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model version {}",
                r.version
            )));
        }
        let mode = match r.mode.as_str() {
            "fitted" => ModelMode::Fitted,
            "null" => {
                if r.margin_e != r.margin_b {
                    return Err(Error::InvalidModel(
                        "null model with distinct margins".into(),
                    ));
                }
                ModelMode::Null
            }
            "effect" => ModelMode::Effect(r.delta),
            other => return Err(Error::InvalidModel(format!("unknown model mode '{other}'"))),
        };
        let model = StochasticModel {
            margin_b: r.margin_b,
            margin_e: r.margin_e,
            copula: r.copula,
            mode,
        };
        if let ModelMode::Effect(d) = mode {
            if !((model.delta() - d).abs() <= EFFECT_TOLERANCE) {
                return Err(Error::InvalidModel(format!(
                    "effect model declares delta {d} but its margins differ by {}",
                    model.delta()
                )));
            }
        }
        Ok(model)
    }
}
