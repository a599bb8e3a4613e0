use std::fs;

use sigtestsim::experiments::{
    run_experiment, synth_matrix, ExperimentConfig, ExperimentMode, Measure,
};
use sigtestsim::io::*;
use sigtestsim::paired::TestKind;
use sigtestsim::simulation::fit_model;
use sigtestsim::Error;

fn small_run(mode: ExperimentMode) -> sigtestsim::experiments::ExperimentReport {
    let m = synth_matrix(30, 16, 4, Measure::Ap).unwrap();
    let mut c = ExperimentConfig::new(mode, 77);
    c.trials = 20;
    c.n_topics = vec![15, 25];
    c.tests = vec![TestKind::T, TestKind::Wilcoxon, TestKind::Bootstrap];
    c.replicas = 200;
    c.deltas = vec![0.02, 0.05];
    run_experiment(&c, &m).unwrap()
}

#[test]
fn reads_a_small_matrix() {
    let text = "topic,runA,runB\n401,0.25,0.5\n402,0.1,0.0\n403,1,0.75\n";
    let m = read_score_matrix(text.as_bytes(), Measure::Ap).unwrap();
    assert_eq!((m.n_topics(), m.n_systems()), (3, 2));
    assert_eq!(m.topics(), ["401", "402", "403"]);
    assert_eq!(m.systems(), ["runA", "runB"]);
    assert_eq!(m.score(2, 1), 0.75);
}

#[test]
fn parse_errors_name_row_and_column() {
    let cases = [
        ("topic,a,b\n1,0.1,0.2\n2,1.2,0.3\n", 3, "a"),
        ("topic,a,b\n1,0.1,\n", 2, "b"),
        ("topic,a,b\n1,0.1,x\n", 2, "b"),
        ("topic,a,b\n1,0.1\n", 2, "1"),
    ];
    for (text, row, col) in cases {
        match read_score_matrix(text.as_bytes(), Measure::P10) {
            Err(Error::Parse { row: r, column, .. }) => {
                assert_eq!((r, column.as_str()), (row, col), "{text}")
            }
            other => panic!("{text}: {other:?}"),
        }
    }
    assert!(read_score_matrix("id,a\n1,0.1\n".as_bytes(), Measure::Ap).is_err());
    assert!(read_score_matrix("topic,a\n1,0.15\n".as_bytes(), Measure::P10).is_err());
    assert!(read_score_matrix("topic,a\n1,0.15\n".as_bytes(), Measure::Ap).is_ok());
    assert!(read_score_matrix("topic,a\n1,0.3\n".as_bytes(), Measure::Rr).is_err());
}

#[test]
fn matrix_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for measure in Measure::ALL {
        let m = synth_matrix(25, 15, 9, measure).unwrap();
        let path = dir.path().join(format!("{measure}.csv"));
        save_score_matrix(&path, &m).unwrap();
        let back = load_score_matrix(&path, measure).unwrap();
        assert_eq!(back, m);
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("topic,sys01,"));
    }
}

#[test]
fn score_lists() {
    let v = read_score_list("ap\n0.1\n\n# comment\n0.25\n".as_bytes()).unwrap();
    assert_eq!(v, vec![0.1, 0.25]);
    assert!(matches!(
        read_score_list("0.1\nfoo\n".as_bytes()),
        Err(Error::Parse { row: 2, .. })
    ));
}

#[test]
fn report_csv_round_trip() {
    for mode in [ExperimentMode::Type1, ExperimentMode::Power] {
        let r = small_run(mode);
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &r.rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("test,n,alpha,delta,trials,rejections,rate\n"));
        let first = text.lines().nth(1).unwrap();
        if mode == ExperimentMode::Type1 {
            assert!(first.starts_with("t,15,0.001,,20,"), "{first}");
        }
        for line in text.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            let (rej, trials): (u64, u64) = (cells[5].parse().unwrap(), cells[4].parse().unwrap());
            assert_eq!(cells[6].parse::<f64>().unwrap(), rej as f64 / trials as f64);
        }
        assert_eq!(read_report_csv(buf.as_slice()).unwrap(), r.rows);
    }
    assert!(read_report_csv("a,b\n".as_bytes()).is_err());
}

#[test]
fn trial_log_reaggregates_to_the_report() {
    let r = small_run(ExperimentMode::Type3);
    let mut buf = Vec::new();
    write_trial_log(&mut buf, &r).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,test,n,alpha,delta,p1,p2,mean_d,seed"
    );
    let records: Vec<sigtestsim::experiments::TrialRecord> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            assert_eq!(c[3], "");
            sigtestsim::experiments::TrialRecord {
                trial: c[0].parse().unwrap(),
                test: c[1].parse().unwrap(),
                n: c[2].parse().unwrap(),
                delta: Some(c[4].parse().unwrap()),
                p1: c[5].parse().unwrap(),
                p2: c[6].parse().unwrap(),
                mean_d: c[7].parse().unwrap(),
                seed: c[8].parse().unwrap(),
            }
        })
        .collect();
    assert_eq!(records, r.records);
    let (rows, cond) = sigtestsim::experiments::aggregate(&r.config, &records).unwrap();
    assert_eq!(rows, r.rows);
    assert_eq!(cond, r.conditional);
}

#[test]
fn charts_have_one_line_per_test() {
    let r = small_run(ExperimentMode::Type1);
    let svg = render_chart(&r.rows, ExperimentMode::Type1, 25, 0.05, "seed 77").unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert_eq!(svg.matches("class=\"diagonal\"").count(), 1);
    assert!(svg.contains("<desc>seed 77</desc>"));
    assert!(svg.contains("data-test=\"wilcoxon\""));

    let r = small_run(ExperimentMode::Power);
    let svg = render_chart(&r.rows, ExperimentMode::Power, 15, 0.05, "").unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert!(!svg.contains("diagonal"));
    assert!(render_chart(&r.rows, ExperimentMode::Power, 99, 0.05, "").is_err());
}

#[test]
fn experiment_outputs_are_reproducible_and_self_describing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = write_experiment_outputs(
        a.path(),
        &small_run(ExperimentMode::Type3),
        &serde_json::json!("synthetic"),
    )
    .unwrap();
    write_experiment_outputs(
        b.path(),
        &small_run(ExperimentMode::Type3),
        &serde_json::json!("synthetic"),
    )
    .unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into())
        .collect();
    assert_eq!(
        names,
        [
            "type3_report.csv",
            "type3_trials.csv",
            "type3_conditional.csv",
            "type3_n15.svg",
            "type3_n25.svg",
            "run.json"
        ]
    );
    for name in &names {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["master_seed"], 77);
    assert_eq!(meta["config"]["mode"], "type3");
    assert_eq!(meta["config"]["tails"], 2);
    let svg = fs::read_to_string(a.path().join("type3_n15.svg")).unwrap();
    assert!(svg.contains("&quot;master_seed&quot;:77"));
}

#[test]
fn model_files_round_trip() {
    let m = synth_matrix(40, 14, 2, Measure::P10).unwrap();
    let model = fit_model(m.column(3), m.column(8), &Measure::P10.support_hint()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&path, &model).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
    assert_eq!(sidecar_path(&path), dir.path().join("model.json.run.json"));
    fs::write(&path, "{\"version\":1}").unwrap();
    assert!(load_model(&path).is_err());
}

#[test]
fn floats_format_locale_free() {
    assert_eq!(fmt_f64(0.05), "0.05");
    assert_eq!(fmt_f64(1.0), "1.0");
    assert_eq!(fmt_f64(1e-9).parse::<f64>().unwrap(), 1e-9);
}
