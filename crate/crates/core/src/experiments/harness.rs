use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{select_system_pair, ExperimentConfig, ExperimentMode, ScoreMatrix, THREADS_ENV};
use crate::error::{Error, Result};
use crate::paired::{run_test, Tails, TestKind, TestSettings};
use crate::rng::derive_seed;
use crate::simulation::{fit_model, StochasticModel};

/// p-values of one test on one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub test: TestKind,
    pub n: usize,
    pub delta: Option<f64>,
    pub p1: f64,
    pub p2: f64,
    pub mean_d: f64,
    /// Seed the trial's pair selection, simulation and resampling derive from.
    pub seed: u64,
}

/// Rejection count for one (test, n, α, δ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub test: TestKind,
    pub n: usize,
    pub alpha: f64,
    pub delta: Option<f64>,
    pub trials: u64,
    pub rejections: u64,
}

impl ReportRow {
    pub fn rate(&self) -> f64 {
        self.rejections as f64 / self.trials as f64
    }
}

/// Type III errors among significant results only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub test: TestKind,
    pub n: usize,
    pub alpha: f64,
    pub delta: f64,
    pub significant: u64,
    pub type3: u64,
}

impl ConditionalRow {
    /// `None` when nothing was significant.
    pub fn rate(&self) -> Option<f64> {
        (self.significant > 0).then(|| self.type3 as f64 / self.significant as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Filled for Type III runs only.
    pub conditional: Vec<ConditionalRow>,
    pub records: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn master_seed(&self) -> u64 {
        self.config.master_seed
    }

    pub fn row(
        &self,
        test: TestKind,
        n: usize,
        alpha: f64,
        delta: Option<f64>,
    ) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.test == test && r.n == n && r.alpha == alpha && r.delta == delta)
    }
}

pub fn run_type1(config: &ExperimentConfig, matrix: &ScoreMatrix) -> Result<ExperimentReport> {
    expect_mode(config, ExperimentMode::Type1)?;
    run_experiment(config, matrix)
}

pub fn run_power(config: &ExperimentConfig, matrix: &ScoreMatrix) -> Result<ExperimentReport> {
    expect_mode(config, ExperimentMode::Power)?;
    run_experiment(config, matrix)
}

pub fn run_type3(config: &ExperimentConfig, matrix: &ScoreMatrix) -> Result<ExperimentReport> {
    expect_mode(config, ExperimentMode::Type3)?;
    run_experiment(config, matrix)
}

fn expect_mode(config: &ExperimentConfig, mode: ExperimentMode) -> Result<()> {
    if config.mode != mode {
        return Err(Error::InvalidConfig(format!(
            "configuration is for a {} run, not {mode}",
            config.mode
        )));
    }
    Ok(())
}

/// Runs every trial of `config` and aggregates the rejection counts.
pub fn run_experiment(config: &ExperimentConfig, matrix: &ScoreMatrix) -> Result<ExperimentReport> {
    let mut config = config.clone();
    config.validate()?;
    let harness = Harness {
        config: &config,
        matrix,
        deltas: config.effective_deltas(),
        fitted: Mutex::new(HashMap::new()),
        derived: Mutex::new(HashMap::new()),
    };
    let mut units = Vec::new();
    for &n in &config.n_topics {
        for di in 0..harness.deltas.len() {
            for trial in 0..config.trials {
                units.push((n, di, trial));
            }
        }
    }
    let threads = thread_count(&config)?;
    let run = |u: &(usize, usize, u64)| harness.trial(u.0, u.1, u.2);
    let results: Vec<Result<Vec<TrialRecord>>> = if threads == 1 {
        units.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker threads: {e}")))?;
        pool.install(|| units.par_iter().map(run).collect())
    };
    let mut records = Vec::with_capacity(units.len() * config.tests.len());
    for r in results {
        records.extend(r?);
    }
    let (rows, conditional) = aggregate(&config, &records)?;
    Ok(ExperimentReport {
        config,
        rows,
        conditional,
        records,
    })
}

fn thread_count(config: &ExperimentConfig) -> Result<usize> {
    if let Some(t) = config.threads {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::InvalidConfig(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn rejects(mode: ExperimentMode, tails: Tails, alpha: f64, r: &TrialRecord) -> bool {
    match mode {
        ExperimentMode::Type1 | ExperimentMode::Power => {
            let p = if tails == Tails::One { r.p1 } else { r.p2 };
            p <= alpha
        }
        ExperimentMode::Type3 => r.p2 <= alpha && r.mean_d < 0.0,
    }
}

/// Counts rejections per (n, δ, test, α) cell from per-trial records.
/// Rows are ordered by n, then δ, then test, then α.
pub fn aggregate(
    config: &ExperimentConfig,
    records: &[TrialRecord],
) -> Result<(Vec<ReportRow>, Vec<ConditionalRow>)> {
    let deltas = config.effective_deltas();
    let (nn, nd, nt, na) = (
        config.n_topics.len(),
        deltas.len(),
        config.tests.len(),
        config.alphas.len(),
    );
    let mut trials = vec![0u64; nn * nd * nt];
    let mut hits = vec![0u64; nn * nd * nt * na];
    let mut significant = vec![0u64; nn * nd * nt * na];
    for r in records {
        let missing =
            || Error::InvalidData(format!("trial record outside the configured grid: {r:?}"));
        let ni = config
            .n_topics
            .iter()
            .position(|&n| n == r.n)
            .ok_or_else(missing)?;
        let di = match r.delta {
            Some(d) if config.mode.has_effect() => {
                deltas.iter().position(|&x| x == d).ok_or_else(missing)?
            }
            None if !config.mode.has_effect() => 0,
            _ => return Err(missing()),
        };
        let ti = config
            .tests
            .iter()
            .position(|&t| t == r.test)
            .ok_or_else(missing)?;
        let cell = (ni * nd + di) * nt + ti;
        trials[cell] += 1;
        for (ai, &alpha) in config.alphas.iter().enumerate() {
            if rejects(config.mode, config.tails, alpha, r) {
                hits[cell * na + ai] += 1;
            }
            if r.p2 <= alpha {
                significant[cell * na + ai] += 1;
            }
        }
    }
    let mut rows = Vec::with_capacity(hits.len());
    let mut conditional = Vec::new();
    for (ni, &n) in config.n_topics.iter().enumerate() {
        for (di, &d) in deltas.iter().enumerate() {
            for (ti, &test) in config.tests.iter().enumerate() {
                let cell = (ni * nd + di) * nt + ti;
                for (ai, &alpha) in config.alphas.iter().enumerate() {
                    let delta = config.mode.has_effect().then_some(d);
                    rows.push(ReportRow {
                        test,
                        n,
                        alpha,
                        delta,
                        trials: trials[cell],
                        rejections: hits[cell * na + ai],
                    });
                    if config.mode == ExperimentMode::Type3 {
                        conditional.push(ConditionalRow {
                            test,
                            n,
                            alpha,
                            delta: d,
                            significant: significant[cell * na + ai],
                            type3: hits[cell * na + ai],
                        });
                    }
                }
            }
        }
    }
    Ok((rows, conditional))
}

type Cached = Arc<Result<StochasticModel>>;

struct Harness<'a> {
    config: &'a ExperimentConfig,
    matrix: &'a ScoreMatrix,
    deltas: Vec<f64>,
    /// Fitted models per (baseline, experimental) pair.
    fitted: Mutex<HashMap<(usize, usize), Cached>>,
    /// Null or effect models per pair and δ index.
    derived: Mutex<HashMap<(usize, usize, usize), Cached>>,
}

impl Harness<'_> {
    fn fitted(&self, b: usize, e: usize) -> Cached {
        if let Some(m) = self.fitted.lock().unwrap().get(&(b, e)) {
            return Arc::clone(m);
        }
        let hint = self.matrix.measure().support_hint();
        let m = Arc::new(fit_model(
            self.matrix.column(b),
            self.matrix.column(e),
            &hint,
        ));
        Arc::clone(self.fitted.lock().unwrap().entry((b, e)).or_insert(m))
    }

    fn model(&self, b: usize, e: usize, di: usize) -> Cached {
        if let Some(m) = self.derived.lock().unwrap().get(&(b, e, di)) {
            return Arc::clone(m);
        }
        let m = Arc::new(match &*self.fitted(b, e) {
            Ok(fitted) if self.config.mode.has_effect() => fitted.with_effect(self.deltas[di]),
            Ok(fitted) => Ok(fitted.to_null()),
            Err(err) => Err(Error::InvalidModel(err.to_string())),
        });
        Arc::clone(self.derived.lock().unwrap().entry((b, e, di)).or_insert(m))
    }

    fn trial(&self, n: usize, di: usize, trial: u64) -> Result<Vec<TrialRecord>> {
        let cfg = self.config;
        let delta = self.deltas[di];
        let mut last_failure = String::new();
        for retry in 0..=cfg.max_retries {
            let seed = derive_seed(cfg.master_seed, &[n as u64, trial, di as u64, retry as u64]);
            let (b, e) = select_system_pair(self.matrix, &cfg.selection, cfg.mode, delta, seed)?;
            let model = self.model(b, e, di);
            let model = match &*model {
                Ok(m) => m,
                Err(err) => {
                    last_failure = format!(
                        "{} vs {}: {err}",
                        self.matrix.systems()[b],
                        self.matrix.systems()[e]
                    );
                    continue;
                }
            };
            let sample = model.simulate(n, derive_seed(seed, &[1]))?;
            let settings = TestSettings {
                replicas: cfg.replicas,
                seed: derive_seed(seed, &[2]),
                sign_threshold: cfg.sign_h,
            };
            return cfg
                .tests
                .iter()
                .map(|&test| {
                    let (p1, p2) = match run_test(test, &sample, &settings) {
                        Ok(o) => (o.p1, o.p2),
                        // a test that cannot be computed never rejects
                        Err(
                            Error::DegenerateSample(_)
                            | Error::AllTies
                            | Error::InsufficientSample { .. },
                        ) => (1.0, 1.0),
                        Err(err) => return Err(err),
                    };
                    Ok(TrialRecord {
                        trial,
                        test,
                        n,
                        delta: cfg.mode.has_effect().then_some(delta),
                        p1,
                        p2,
                        mean_d: sample.mean_d(),
                        seed,
                    })
                })
                .collect();
        }
        Err(Error::InsufficientSystems(format!(
            "no usable system pair for trial {trial} (delta {delta}) after {} attempts; last failure: {last_failure}",
            cfg.max_retries + 1
        )))
    }
}
