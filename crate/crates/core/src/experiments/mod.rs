//! Type I, power and Type III experiments over simulated trials.
//!
//! Each trial draws a pair of systems from a score matrix, fits a
//! stochastic model to their per-topic scores, forces the truth (no
//! difference, or a fixed difference δ), simulates new topics and records
//! every test's p-values. Reports are exact counts over trials.

mod harness;
mod matrix;
mod select;
mod synth;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paired::{Tails, TestKind, DEFAULT_SIGN_THRESHOLD};

pub use harness::{
    aggregate, run_experiment, run_power, run_type1, run_type3, ConditionalRow, ExperimentReport,
    ReportRow, TrialRecord,
};
pub use matrix::{Measure, ScoreMatrix};
pub use select::{select_system_pair, SelectionRule, MIN_SYSTEMS};
pub use synth::synth_matrix;

/// Replicas per resampling test inside the harness.
pub const HARNESS_REPLICAS: u64 = 10_000;
pub const DEFAULT_TRIALS: u64 = 2000;
/// Redraws of the system pair when a model cannot be built for it.
pub const MAX_PAIR_RETRIES: u32 = 10;
pub const THREADS_ENV: &str = "SIGTESTSIM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentMode {
    Type1,
    Power,
    Type3,
}

impl ExperimentMode {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentMode::Type1 => "type1",
            ExperimentMode::Power => "power",
            ExperimentMode::Type3 => "type3",
        }
    }

    pub fn has_effect(self) -> bool {
        self != ExperimentMode::Type1
    }
}

impl std::fmt::Display for ExperimentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "type1" => Ok(ExperimentMode::Type1),
            "power" | "type2" => Ok(ExperimentMode::Power),
            "type3" => Ok(ExperimentMode::Type3),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub n_topics: Vec<usize>,
    pub trials: u64,
    pub alphas: Vec<f64>,
    /// Ignored by Type I runs.
    pub deltas: Vec<f64>,
    pub tests: Vec<TestKind>,
    pub tails: Tails,
    pub replicas: u64,
    pub master_seed: u64,
    pub sign_h: f64,
    pub selection: SelectionRule,
    pub max_retries: u32,
    /// Worker threads; `None` reads the environment, then uses all cores.
    /// Not serialized: results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(mode: ExperimentMode, master_seed: u64) -> Self {
        let mut alphas = vec![0.001, 0.005];
        alphas.extend((1..=10).map(|i| i as f64 / 100.0));
        ExperimentConfig {
            mode,
            n_topics: vec![50],
            trials: DEFAULT_TRIALS,
            alphas,
            deltas: (1..=10).map(|i| i as f64 / 100.0).collect(),
            tests: TestKind::ALL.to_vec(),
            tails: Tails::Two,
            replicas: HARNESS_REPLICAS,
            master_seed,
            sign_h: DEFAULT_SIGN_THRESHOLD,
            selection: SelectionRule::default(),
            max_retries: MAX_PAIR_RETRIES,
            threads: None,
        }
    }

    /// Checks the grids and, for Type III, forces two tails.
    pub fn validate(&mut self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_topics.is_empty() || self.n_topics.contains(&0) {
            return bad("topic counts must be non-empty and positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("alpha grid must be non-empty with values in [0, 1]".into());
        }
        if self.mode.has_effect()
            && (self.deltas.is_empty() || self.deltas.iter().any(|d| !d.is_finite()))
        {
            return bad("delta grid must be non-empty and finite".into());
        }
        if self.tests.is_empty() {
            return bad("no tests selected".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.sign_h >= 0.0) {
            return bad(format!(
                "sign threshold must be non-negative, got {}",
                self.sign_h
            ));
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        self.selection.validate()?;
        if self.mode == ExperimentMode::Type3 {
            self.tails = Tails::Two;
        }
        Ok(())
    }

    /// The δ grid the harness iterates over; a single zero for Type I.
    pub fn effective_deltas(&self) -> Vec<f64> {
        if self.mode.has_effect() {
            self.deltas.clone()
        } else {
            vec![0.0]
        }
    }
}

/// Parses a comma-separated list whose items are numbers or inclusive
/// ranges `a:b:step`. Range values are rounded to 12 decimals so that
/// `0.01:0.1:0.01` gives clean numbers.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("malformed grid '{spec}'"));
    let round = |x: f64| (x * 1e12).round() / 1e12;
    let num = |s: &str| match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad()),
    };
    let mut out = Vec::new();
    for item in spec.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts[..] {
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if !(step > 0.0) || b < a {
                    return Err(bad());
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                if count > 1_000_000 {
                    return Err(bad());
                }
                out.extend((0..=count).map(|i| round(a + i as f64 * step)));
            }
            [x] => out.push(num(x)?),
            _ => return Err(bad()),
        }
    }
    Ok(out)
}
