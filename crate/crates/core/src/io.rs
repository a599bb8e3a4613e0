//! File formats: score matrices and reports as CSV, models and run
//! metadata as JSON, charts as SVG.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so output
//! does not depend on the locale and reads back bit-exactly.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{ExperimentMode, ExperimentReport, Measure, ReportRow, ScoreMatrix};
use crate::paired::{PairedSample, TestKind};
use crate::simulation::StochasticModel;

pub const REPORT_HEADER: [&str; 7] = [
    "test",
    "n",
    "alpha",
    "delta",
    "trials",
    "rejections",
    "rate",
];
pub const TRIAL_LOG_HEADER: [&str; 9] = [
    "trial", "test", "n", "alpha", "delta", "p1", "p2", "mean_d", "seed",
];
pub const CONDITIONAL_HEADER: [&str; 7] = [
    "test",
    "n",
    "alpha",
    "delta",
    "significant",
    "type3",
    "conditional_rate",
];

/// Shortest representation that parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Reads a score matrix: a `topic` column followed by one column per system.
/// Rows in errors are file line numbers (the header is line 1).
pub fn read_score_matrix<R: Read>(reader: R, measure: Measure) -> Result<ScoreMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0).map(|h| h.to_ascii_lowercase()) != Some("topic".into()) {
        return Err(Error::Parse {
            row: 1,
            column: header.get(0).unwrap_or("").to_string(),
            message: "first column must be named 'topic'".into(),
        });
    }
    let systems: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if systems.is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: "topic".into(),
            message: "no system columns".into(),
        });
    }
    let hint = measure.support_hint();
    let mut topics = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != systems.len() + 1 {
            return Err(Error::Parse {
                row: line,
                column: rec.get(0).unwrap_or("").to_string(),
                message: format!("expected {} cells, found {}", systems.len() + 1, rec.len()),
            });
        }
        let row = systems
            .iter()
            .enumerate()
            .map(|(s, sys)| {
                let cell = &rec[s + 1];
                let err = |message: String| Error::Parse {
                    row: line,
                    column: sys.clone(),
                    message,
                };
                if cell.is_empty() {
                    return Err(err("missing score".into()));
                }
                let x: f64 = cell
                    .parse()
                    .map_err(|_| err(format!("'{cell}' is not a number")))?;
                if hint.snap(x).is_none() {
                    return Err(err(format!("{x} is outside the support of {measure}")));
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>>>()?;
        topics.push(rec[0].to_string());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("score matrix has no topics".into()));
    }
    ScoreMatrix::from_rows(topics, systems, rows, measure)
}

pub fn load_score_matrix(path: &Path, measure: Measure) -> Result<ScoreMatrix> {
    read_score_matrix(File::open(path)?, measure)
}

pub fn write_score_matrix<W: Write>(w: W, matrix: &ScoreMatrix) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(std::iter::once("topic").chain(matrix.systems().iter().map(String::as_str)))?;
    for (t, topic) in matrix.topics().iter().enumerate() {
        let mut rec = vec![topic.clone()];
        rec.extend((0..matrix.n_systems()).map(|s| fmt_f64(matrix.score(t, s))));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_score_matrix(path: &Path, matrix: &ScoreMatrix) -> Result<()> {
    write_score_matrix(create(path)?, matrix)
}

/// One score per line; blank lines, `#` comments and a non-numeric first
/// line (a header) are skipped.
pub fn read_score_list<R: Read>(mut reader: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    row: i + 1,
                    column: "score".into(),
                    message: format!("'{line}' is not a number"),
                })
            }
        }
    }
    Ok(out)
}

pub fn load_score_list(path: &Path) -> Result<Vec<f64>> {
    read_score_list(File::open(path)?)
}

/// Simulated topics as `topic,baseline,experimental`.
pub fn write_paired_sample<W: Write>(w: W, sample: &PairedSample) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["topic", "baseline", "experimental"])?;
    for (i, (b, e)) in sample
        .baseline()
        .iter()
        .zip(sample.experimental())
        .enumerate()
    {
        out.write_record([(i + 1).to_string(), fmt_f64(*b), fmt_f64(*e)])?;
    }
    out.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.write_record([
            r.test.name().to_string(),
            r.n.to_string(),
            fmt_f64(r.alpha),
            opt(r.delta),
            r.trials.to_string(),
            r.rejections.to_string(),
            fmt_f64(r.rate()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-trial p-values. The alpha column is empty: p-values do not depend on
/// the significance level.
pub fn write_trial_log<W: Write>(w: W, report: &ExperimentReport) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TRIAL_LOG_HEADER)?;
    for r in &report.records {
        out.write_record([
            r.trial.to_string(),
            r.test.name().to_string(),
            r.n.to_string(),
            String::new(),
            opt(r.delta),
            fmt_f64(r.p1),
            fmt_f64(r.p2),
            fmt_f64(r.mean_d),
            r.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_conditional_csv<W: Write>(w: W, report: &ExperimentReport) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(CONDITIONAL_HEADER)?;
    for r in &report.conditional {
        out.write_record([
            r.test.name().to_string(),
            r.n.to_string(),
            fmt_f64(r.alpha),
            fmt_f64(r.delta),
            r.significant.to_string(),
            r.type3.to_string(),
            opt(r.rate()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a report CSV written by [`write_report_csv`].
pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(Error::Parse {
            row: 1,
            column: header.join(","),
            message: format!("expected header {}", REPORT_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let err = |col: usize| Error::Parse {
            row: line,
            column: REPORT_HEADER[col].into(),
            message: format!("cannot parse '{}'", &rec[col]),
        };
        let test: TestKind = rec[0].parse().map_err(|_| err(0))?;
        let n = rec[1].parse().map_err(|_| err(1))?;
        let alpha = rec[2].parse().map_err(|_| err(2))?;
        let delta = if rec[3].is_empty() {
            None
        } else {
            Some(rec[3].parse().map_err(|_| err(3))?)
        };
        let trials = rec[4].parse().map_err(|_| err(4))?;
        let rejections = rec[5].parse().map_err(|_| err(5))?;
        rows.push(ReportRow {
            test,
            n,
            alpha,
            delta,
            trials,
            rejections,
        });
    }
    Ok(rows)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn save_model(path: &Path, model: &StochasticModel) -> Result<()> {
    save_json(path, model)
}

pub fn load_model(path: &Path) -> Result<StochasticModel> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

/// Path of the metadata file written next to `path`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    path.with_file_name(name)
}

/// Writes the report, trial log, charts and `run.json` into `dir`.
/// `source` describes where the score matrix came from and is stored in the
/// metadata. Returns the paths written.
pub fn write_experiment_outputs(
    dir: &Path,
    report: &ExperimentReport,
    source: &serde_json::Value,
) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mode = report.config.mode;
    let mut written = Vec::new();
    let path = dir.join(format!("{mode}_report.csv"));
    write_report_csv(create(&path)?, &report.rows)?;
    written.push(path);
    let path = dir.join(format!("{mode}_trials.csv"));
    write_trial_log(create(&path)?, report)?;
    written.push(path);
    if mode == ExperimentMode::Type3 {
        let path = dir.join("type3_conditional.csv");
        write_conditional_csv(create(&path)?, report)?;
        written.push(path);
    }
    let meta = serde_json::json!({
        "master_seed": report.master_seed(),
        "config": report.config,
        "matrix": source,
    });
    let desc = serde_json::to_string(&meta)?;
    let chart_alpha = nearest(&report.config.alphas, 0.05);
    for &n in &report.config.n_topics {
        let path = dir.join(format!("{mode}_n{n}.svg"));
        let svg = render_chart(&report.rows, mode, n, chart_alpha, &desc)?;
        create(&path)?.write_all(svg.as_bytes())?;
        written.push(path);
    }
    let path = dir.join("run.json");
    save_json(&path, &meta)?;
    written.push(path);
    Ok(written)
}

fn nearest(grid: &[f64], target: f64) -> f64 {
    grid.iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(target)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last)
        .map(|i| ((i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

/// Line chart of rejection rates for the rows with `n` topics: against α for
/// Type I runs (with the `y = x` reference line), against δ at level
/// `alpha` otherwise. `desc` is embedded in the `<desc>` element.
pub fn render_chart(
    rows: &[ReportRow],
    mode: ExperimentMode,
    n: usize,
    alpha: f64,
    desc: &str,
) -> Result<String> {
    let mut tests: Vec<TestKind> = Vec::new();
    for r in rows.iter().filter(|r| r.n == n) {
        if !tests.contains(&r.test) {
            tests.push(r.test);
        }
    }
    let point = |r: &ReportRow| match mode {
        ExperimentMode::Type1 => Some((r.alpha, r.rate())),
        _ if r.alpha == alpha => r.delta.map(|d| (d, r.rate())),
        _ => None,
    };
    let series: Vec<(TestKind, Vec<(f64, f64)>)> = tests
        .iter()
        .map(|&t| {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.n == n && r.test == t)
                .filter_map(point)
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (t, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::InvalidData(format!(
            "no report rows to plot for n = {n}"
        )));
    }
    let x_lo = all
        .iter()
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let mut x_hi = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut y_hi = all.iter().map(|p| p.1).fold(0.0, f64::max);
    if mode == ExperimentMode::Type1 {
        y_hi = y_hi.max(x_hi);
    } else {
        y_hi = y_hi.max(0.05);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    y_hi = if mode == ExperimentMode::Type1 {
        y_hi * 1.05
    } else {
        (y_hi * 1.05).min(1.0)
    };
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| MARGIN_T + ph - y / y_hi * ph;
    let (title, x_label, y_label) = match mode {
        ExperimentMode::Type1 => (
            format!("Type I error rate, n = {n}"),
            "alpha",
            "Type I error rate",
        ),
        ExperimentMode::Power => (format!("Power, n = {n}, alpha = {alpha}"), "delta", "power"),
        ExperimentMode::Type3 => (
            format!("Type III error rate, n = {n}, alpha = {alpha}"),
            "delta",
            "Type III error rate",
        ),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&title));
    let _ = writeln!(s, "<desc>{}</desc>", escape(desc));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&title)
    );
    let (x0, y0, x1, y1) = (MARGIN_L, MARGIN_T + ph, MARGIN_L + pw, MARGIN_T);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}"/>"#
    );
    let _ = writeln!(s, "</g>");
    for t in ticks(x_lo, x_hi) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            y0 + 18.0
        );
    }
    for t in ticks(0.0, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            x0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{y_label}</text>"#,
        MARGIN_T + ph / 2.0
    );
    if mode == ExperimentMode::Type1 {
        let d = x_hi.min(y_hi);
        let _ = writeln!(
            s,
            r#"<polyline class="diagonal" fill="none" stroke="gray" stroke-dasharray="4 4" points="{:.2},{:.2} {:.2},{:.2}"/>"#,
            sx(x_lo.max(0.0)),
            sy(x_lo.max(0.0)),
            sx(d),
            sy(d)
        );
    }
    for (i, (test, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-test="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            test.name(),
            points.join(" ")
        );
        let ly = MARGIN_T + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            test.name()
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
