use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use sigtestsim::copulas::CopulaFamily;
use sigtestsim::experiments::{
    parse_grid, run_experiment, synth_matrix, ExperimentConfig, ExperimentMode, Measure,
    ScoreMatrix,
};
use sigtestsim::io;
use sigtestsim::paired::{run_test, PairedSample, Tails, TestKind, TestSettings};
use sigtestsim::rng::derive_seed;
use sigtestsim::simulation::fit_model_with_report;
use sigtestsim::{Error, Result};

use crate::{ExperimentArgs, FitArgs, PairInput, PlotArgs, SimulateArgs, SynthArgs, TestArgs};

/// The given seed, or one drawn from the clock. Printed either way so any
/// run can be repeated.
fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        derive_seed(nanos as u64, &[std::process::id() as u64])
    });
    println!("master seed: {seed}");
    seed
}

fn parse_measure(s: &str) -> Result<Measure> {
    s.parse()
}

fn parse_tests(s: &str) -> Result<Vec<TestKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(TestKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let t: TestKind = part
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("unknown test '{}'", part.trim())))?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("invalid topic count '{}'", p.trim()))
                })
        })
        .collect()
}

/// Baseline and experimental score lists, plus a description of their source.
fn load_pair(input: &PairInput) -> Result<(Vec<f64>, Vec<f64>, Measure, serde_json::Value)> {
    let measure = parse_measure(&input.measure)?;
    match (&input.b, &input.e, &input.matrix) {
        (Some(b), Some(e), None) => {
            let source = json!({ "b": b, "e": e });
            Ok((
                io::load_score_list(b)?,
                io::load_score_list(e)?,
                measure,
                source,
            ))
        }
        (None, None, Some(path)) => {
            let m = io::load_score_matrix(path, measure)?;
            let (bid, eid) = (
                input.baseline.as_deref().unwrap_or(""),
                input.experimental.as_deref().unwrap_or(""),
            );
            let col = |id: &str| {
                m.system_index(id)
                    .map(|i| m.column(i).to_vec())
                    .ok_or_else(|| {
                        Error::InvalidData(format!("system '{id}' is not in {}", path.display()))
                    })
            };
            let source = json!({ "matrix": path, "baseline": bid, "experimental": eid });
            Ok((col(bid)?, col(eid)?, measure, source))
        }
        _ => Err(Error::InvalidArgument(
            "give either --b and --e, or --matrix with --baseline and --experimental".into(),
        )),
    }
}

fn fmt_p(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.6}")
    }
}

pub fn test(a: TestArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let tests = parse_tests(&a.tests)?;
    let tails = Tails::from_count(a.tails)?;
    let (b, e, _, _) = load_pair(&a.input)?;
    let sample = PairedSample::new(b, e)?;
    let settings = TestSettings {
        replicas: a.replicas,
        seed,
        sign_threshold: a.h,
    };
    println!(
        "n = {}, mean difference = {}, sign threshold h = {}",
        sample.n(),
        sample.mean_d(),
        a.h
    );
    println!(
        "{:<12} {:>14} {:>12} {:>12} {:>12} {:>9} {:>20}",
        "test",
        "statistic",
        "p1",
        "p2",
        format!("p({}-tail)", tails.count()),
        "T",
        "seed"
    );
    let mut csv_rows = Vec::new();
    let mut first_error = None;
    for t in tests {
        match run_test(t, &sample, &settings) {
            Ok(o) => {
                let reps = o
                    .replicas
                    .map(|r| r.to_string())
                    .unwrap_or_else(|| "-".into());
                let sd = o.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
                println!(
                    "{:<12} {:>14.6} {:>12} {:>12} {:>12} {:>9} {:>20}",
                    t.name(),
                    o.statistic,
                    fmt_p(o.p1),
                    fmt_p(o.p2),
                    fmt_p(o.p(tails)),
                    reps,
                    sd
                );
                csv_rows.push(format!(
                    "{},{},{},{},{},{}",
                    t.name(),
                    io::fmt_f64(o.statistic),
                    io::fmt_f64(o.p1),
                    io::fmt_f64(o.p2),
                    o.replicas.map(|r| r.to_string()).unwrap_or_default(),
                    o.seed.map(|s| s.to_string()).unwrap_or_default()
                ));
            }
            Err(err) => {
                println!("{:<12} error: {err}", t.name());
                first_error.get_or_insert(err);
            }
        }
    }
    if let Some(path) = &a.out {
        let mut text = String::from("test,statistic,p1,p2,replicas,seed\n");
        for r in &csv_rows {
            text.push_str(r);
            text.push('\n');
        }
        write_file(path, text.as_bytes())?;
        let meta = json!({
            "master_seed": seed,
            "command": "test",
            "replicas": a.replicas,
            "sign_threshold": a.h,
            "tails": a.tails,
            "tests": a.tests,
        });
        io::save_json(&io::sidecar_path(path), &meta)?;
    }
    match first_error {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let (b, e, measure, source) = load_pair(&a.input)?;
    let (model, report) =
        fit_model_with_report(&b, &e, &measure.support_hint(), &CopulaFamily::ALL)?;
    let model = match (a.null, a.delta) {
        (true, _) => model.to_null(),
        (false, Some(d)) => model.with_effect(d)?,
        (false, None) => model,
    };
    for (name, r) in [
        ("baseline", &report.margin_b),
        ("experimental", &report.margin_e),
    ] {
        println!(
            "{name} margin: {:?} (log-likelihood {:.4})",
            r.selected, r.loglik
        );
    }
    let c = model.copula();
    println!(
        "copula: {:?} rotated {} degrees, theta = {:.6}, tau = {:.4} (log-likelihood {:.4})",
        c.family(),
        c.rotation().degrees(),
        c.theta(),
        c.kendall_tau(),
        report.copula.loglik
    );
    println!(
        "mode: {}, mu_b = {:.6}, mu_e = {:.6}, delta = {:.6}",
        model.mode().name(),
        model.mu_b(),
        model.mu_e(),
        model.delta()
    );
    io::save_model(&a.out, &model)?;
    let meta = json!({
        "master_seed": seed,
        "command": "fit",
        "measure": measure,
        "input": source,
        "null": a.null,
        "delta": a.delta,
        "fit": report,
    });
    io::save_json(&io::sidecar_path(&a.out), &meta)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let model = io::load_model(&a.model)?;
    let sample = model.simulate(a.n_topics, seed)?;
    match &a.out {
        Some(path) => {
            let mut buf = Vec::new();
            io::write_paired_sample(&mut buf, &sample)?;
            write_file(path, &buf)?;
            let meta = json!({
                "master_seed": seed,
                "command": "simulate",
                "model": a.model,
                "n_topics": a.n_topics,
            });
            io::save_json(&io::sidecar_path(path), &meta)?;
            println!("wrote {} topics to {}", a.n_topics, path.display());
        }
        None => {
            let stdout = std::io::stdout();
            io::write_paired_sample(stdout.lock(), &sample)?;
        }
    }
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let measure = parse_measure(&a.measure)?;
    let mode: ExperimentMode = a.mode.into();
    let mut config = ExperimentConfig::new(mode, seed);
    config.n_topics = parse_counts(&a.n_topics)?;
    config.trials = a.trials;
    config.alphas = parse_grid(&a.alpha_grid)?;
    config.deltas = parse_grid(&a.delta_grid)?;
    config.tests = parse_tests(&a.tests)?;
    config.tails = Tails::from_count(a.tails)?;
    config.replicas = a.replicas;
    config.sign_h = a.h;
    if mode == ExperimentMode::Type3 && config.tails == Tails::One {
        eprintln!("note: Type III runs always use two-tailed p-values");
    }
    config.validate()?;
    let (matrix, source): (ScoreMatrix, serde_json::Value) = match &a.matrix {
        Some(path) => (
            io::load_score_matrix(path, measure)?,
            json!({ "path": path, "measure": measure }),
        ),
        None => {
            let synth_seed = derive_seed(seed, &[u64::MAX]);
            (
                synth_matrix(50, 20, synth_seed, measure)?,
                json!({ "synthetic": { "n_topics": 50, "n_systems": 20, "seed": synth_seed, "measure": measure } }),
            )
        }
    };
    let report = run_experiment(&config, &matrix)?;
    let files = io::write_experiment_outputs(&a.out, &report, &source)?;

    let alpha = nearest(&report.config.alphas, 0.05);
    println!("rejection rates at alpha = {alpha}:");
    for r in report.rows.iter().filter(|r| r.alpha == alpha) {
        let delta = r.delta.map(|d| format!(" delta = {d}")).unwrap_or_default();
        println!(
            "  {:<12} n = {:<4}{delta}  {}/{} = {:.4}",
            r.test.name(),
            r.n,
            r.rejections,
            r.trials,
            r.rate()
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn nearest(grid: &[f64], target: f64) -> f64 {
    grid.iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(target)
}

pub fn plot(a: PlotArgs) -> Result<()> {
    let rows = io::read_report_csv(fs::File::open(&a.report)?)?;
    let mode: ExperimentMode = a.mode.into();
    let meta_path = a.report.with_file_name("run.json");
    let desc = match fs::read_to_string(&meta_path) {
        Ok(text) => {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            println!("master seed: {}", v["master_seed"]);
            serde_json::to_string(&v)?
        }
        Err(_) => {
            println!("master seed: unknown (no run.json next to the report)");
            json!({ "report": a.report }).to_string()
        }
    };
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(Error::InvalidData(format!(
            "{} has no rows",
            a.report.display()
        )));
    }
    fs::create_dir_all(&a.out)?;
    for n in ns {
        let svg = io::render_chart(&rows, mode, n, a.alpha, &desc)?;
        let path: PathBuf = a.out.join(format!("{mode}_n{n}.svg"));
        fs::File::create(&path)?.write_all(svg.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let measure = parse_measure(&a.measure)?;
    let m = synth_matrix(a.n_topics, a.systems, seed, measure)?;
    io::save_score_matrix(&a.out, &m)?;
    let meta = json!({
        "master_seed": seed,
        "command": "synth",
        "n_topics": a.n_topics,
        "n_systems": a.systems,
        "measure": measure,
    });
    io::save_json(&io::sidecar_path(&a.out), &meta)?;
    println!(
        "wrote {} topics x {} systems to {}",
        a.n_topics,
        a.systems,
        a.out.display()
    );
    Ok(())
}
