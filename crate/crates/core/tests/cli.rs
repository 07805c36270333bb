use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    run_with_config(args, None)
}

fn run_with_config(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_prevfuse"));
    cmd.args(args);
    match config {
        Some(path) => cmd.env("PREVFUSE_CONFIG", path),
        None => cmd.env_remove("PREVFUSE_CONFIG"),
    };
    cmd.output().expect("spawn prevfuse")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Workspace {
    dir: TempDir,
    weights: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let weights = dir.path().join("weights.json");
        let o = run(&[
            "weights",
            "--prevalence",
            &fixture("prevalence_averaged.csv"),
            "--out",
            weights.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        Workspace { dir, weights }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn weights(&self) -> &str {
        self.weights.to_str().unwrap()
    }

    fn write(&self, name: &str, body: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, body).unwrap();
        p
    }
}

#[test]
fn weights_to_stdout_prints_json_and_summary() {
    let o = run(&[
        "weights",
        "--prevalence",
        &fixture("prevalence_averaged.csv"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["aggregation"], "mean");
    assert_eq!(
        json["modes"],
        serde_json::json!(["cough", "breath", "fever"])
    );
    let cough = json["weights"]["cough"].as_f64().unwrap();
    assert_eq!(cough, 59.35 / (99.19 + 59.35 + 29.09));
    assert_eq!(json["source_digest"].as_str().unwrap().len(), 64);
    assert_eq!(stderr(&o).trim(), "cough=0.32 breath=0.15 fever=0.53");
}

#[test]
fn weights_single_mode() {
    let o = run(&[
        "weights",
        "--prevalence",
        &fixture("prevalence_averaged.csv"),
        "--modes",
        "cough",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stderr(&o).trim(), "cough=1.00");
}

#[test]
fn weights_population_weighted_differs_from_mean() {
    let mean = run(&[
        "weights",
        "--prevalence",
        &fixture("prevalence_studies.csv"),
    ]);
    let pop = run(&[
        "weights",
        "--prevalence",
        &fixture("prevalence_studies.csv"),
        "--agg",
        "pop-weighted",
    ]);
    assert_eq!(mean.status.code(), Some(0));
    assert_eq!(pop.status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_str(&stdout(&mean)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&pop)).unwrap();
    assert_eq!(b["aggregation"], "population_weighted");
    assert_ne!(a["weights"], b["weights"]);
    assert_eq!(a["source_digest"], b["source_digest"]);
}

#[test]
fn weights_error_paths() {
    let ws = Workspace::new();
    let missing = run(&["weights", "--prevalence", &ws.path("absent.csv")]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("prevfuse:"));

    let bad = ws.write(
        "bad.csv",
        "study_id,population,symptom,prevalence_pct\ns1,0,cough,60\n",
    );
    assert_eq!(
        run(&["weights", "--prevalence", &bad]).status.code(),
        Some(2)
    );

    let header_only = ws.write("empty.csv", "study_id,population,symptom,prevalence_pct\n");
    assert_eq!(
        run(&["weights", "--prevalence", &header_only])
            .status
            .code(),
        Some(2)
    );

    let no_breath = ws.write(
        "nb.csv",
        "study_id,population,symptom,prevalence_pct\ns1,5,cough,60\ns1,5,fever,80\n",
    );
    let o = run(&["weights", "--prevalence", &no_breath]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("breath"));

    assert_eq!(run(&["weights"]).status.code(), Some(1));
    let agg = run(&[
        "weights",
        "--prevalence",
        &fixture("prevalence_averaged.csv"),
        "--agg",
        "median",
    ]);
    assert_eq!(agg.status.code(), Some(1));
    assert_eq!(run(&["weights", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_and_version() {
    for args in [
        &["--help"][..],
        &["--version"],
        &["screen", "--help"],
        &["evaluate", "--version"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(!stdout(&o).is_empty());
    }
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn screen_with_indicators() {
    let ws = Workspace::new();
    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--indicators",
        "cough=1,breath=0,fever=1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    // full-precision weights: 0.3163 + 0.5287
    assert_eq!(
        stdout(&o).trim(),
        "score=0.84 percent=84.5 modes=cough,breath,fever renormalized=false"
    );

    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--rounding",
        "paper",
        "--indicators",
        "cough=1,breath=0,fever=1",
    ]);
    assert_eq!(
        stdout(&o).trim(),
        "score=0.85 percent=85.0 modes=cough,breath,fever renormalized=false"
    );

    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--indicators",
        "cough=0,breath=0,fever=0",
    ]);
    assert!(stdout(&o).starts_with("score=0.00 percent=0.0"));
}

#[test]
fn screen_renormalizes_missing_mode() {
    let ws = Workspace::new();
    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--rounding",
        "paper",
        "--indicators",
        "cough=1,fever=1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o).trim(),
        "score=1.00 percent=100.0 modes=cough,fever renormalized=true"
    );
}

#[test]
fn screen_threshold_exit_codes() {
    let ws = Workspace::new();
    let args = |indicators: &'static str, threshold: &'static str| {
        vec![
            "screen",
            "--weights",
            ws.weights(),
            "--rounding",
            "paper",
            "--indicators",
            indicators,
            "--threshold",
            threshold,
        ]
    };
    assert_eq!(
        run(&args("cough=1,breath=0,fever=1", "85")).status.code(),
        Some(3)
    );
    assert_eq!(
        run(&args("cough=1,breath=0,fever=1", "85.1")).status.code(),
        Some(0)
    );
    assert_eq!(
        run(&args("cough=0,breath=1,fever=0", "50")).status.code(),
        Some(0)
    );
}

#[test]
fn screen_from_observations() {
    let ws = Workspace::new();
    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--observations",
        &fixture("observations.csv"),
        "--subject",
        "p001",
        "--rounding",
        "paper",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("score=0.85 "), "{}", stdout(&o));

    // a stricter tau flips cough to 0, leaving only fever
    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--observations",
        &fixture("observations.csv"),
        "--subject",
        "p001",
        "--rounding",
        "paper",
        "--tau",
        "0.95",
    ]);
    assert!(stdout(&o).starts_with("score=0.53 "), "{}", stdout(&o));

    // p002 has no breath observation
    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--observations",
        &fixture("observations.csv"),
        "--subject",
        "p002",
    ]);
    assert!(stdout(&o).contains("renormalized=true"));
    assert!(stdout(&o).starts_with("score=0.00 "));

    let scores = ws.write(
        "scores.csv",
        "subject_id,mode,score\nx,cough,0.6\nx,breath,0.4\n",
    );
    let o = run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--observations",
        &scores,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("modes=cough,breath renormalized=true"));
}

#[test]
fn screen_error_paths() {
    let ws = Workspace::new();
    let w = ws.weights();
    // neither input
    assert_eq!(run(&["screen", "--weights", w]).status.code(), Some(1));
    // both inputs
    let both = run(&[
        "screen",
        "--weights",
        w,
        "--indicators",
        "cough=1",
        "--observations",
        &fixture("observations.csv"),
    ]);
    assert_eq!(both.status.code(), Some(1));
    // unknown mode
    assert_eq!(
        run(&["screen", "--weights", w, "--indicators", "smell=1"])
            .status
            .code(),
        Some(1)
    );
    // bad label
    assert_eq!(
        run(&["screen", "--weights", w, "--indicators", "cough=yes"])
            .status
            .code(),
        Some(1)
    );
    // several subjects without --subject
    let many = run(&[
        "screen",
        "--weights",
        w,
        "--observations",
        &fixture("observations.csv"),
    ]);
    assert_eq!(many.status.code(), Some(1));
    // unknown subject
    let who = run(&[
        "screen",
        "--weights",
        w,
        "--observations",
        &fixture("observations.csv"),
        "--subject",
        "zz",
    ]);
    assert_eq!(who.status.code(), Some(2));
    // invalid weights file
    let broken = ws.write("broken.json", "{\"modes\": [\"cough\"]}");
    assert_eq!(
        run(&["screen", "--weights", &broken, "--indicators", "cough=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "screen",
            "--weights",
            &ws.path("nope.json"),
            "--indicators",
            "cough=1"
        ])
        .status
        .code(),
        Some(2)
    );
    // temperature outside the physiological range
    let hot = ws.write(
        "hot.csv",
        "subject_id,mode,kind,value\nq,fever,temperature_c,48\n",
    );
    assert_eq!(
        run(&["screen", "--weights", w, "--observations", &hot])
            .status
            .code(),
        Some(2)
    );
    // tau out of range
    let tau = run(&[
        "screen",
        "--weights",
        w,
        "--observations",
        &fixture("observations.csv"),
        "--subject",
        "p001",
        "--tau",
        "1.5",
    ]);
    assert_eq!(tau.status.code(), Some(1));
}

#[test]
fn screening_log_appends_one_line_per_run() {
    let ws = Workspace::new();
    let log = ws.path("screen.jsonl");
    let n = 4;
    for i in 0..n {
        let indicators = if i % 2 == 0 {
            "cough=1,breath=0,fever=1"
        } else {
            "cough=0,fever=1"
        };
        let o = run(&[
            "screen",
            "--weights",
            ws.weights(),
            "--indicators",
            indicators,
            "--subject",
            &format!("s{i}"),
            "--log",
            &log,
        ]);
        assert_eq!(o.status.code(), Some(0));
        let before = std::fs::read_to_string(&log).unwrap();
        assert_eq!(before.lines().count(), i + 1);
    }
    let text = std::fs::read_to_string(&log).unwrap();
    let first_line = text.lines().next().unwrap().to_string();
    let records = prevfuse::cli::read_log(Path::new(&log)).unwrap();
    assert_eq!(records.len(), n);
    assert_eq!(records[0].subject_id, "s0");
    assert!(!records[0].renormalized);
    assert!(records[1].renormalized);
    assert_eq!(records[1].modes_used, ["cough", "fever"]);
    for r in &records {
        assert_eq!(r.percent, r.score * 100.0);
        assert_eq!(r.weights_digest.len(), 64);
    }
    // earlier lines untouched by later runs
    run(&[
        "screen",
        "--weights",
        ws.weights(),
        "--indicators",
        "cough=1",
        "--log",
        &log,
    ]);
    assert_eq!(
        std::fs::read_to_string(&log)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
        first_line
    );
}

#[test]
fn evaluate_table_one() {
    let ws = Workspace::new();
    let dataset = fixture("table1_cases.csv");
    let o = run(&[
        "evaluate",
        "--dataset",
        &dataset,
        "--weights",
        ws.weights(),
        "--rounding",
        "paper",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .take(4)
        .map(|l| l.split_whitespace().collect())
        .collect();
    let f_w: Vec<&str> = rows.iter().map(|r| r[7]).collect();
    let f_r: Vec<&str> = rows.iter().map(|r| r[8]).collect();
    let occ: Vec<&str> = rows.iter().map(|r| r[5]).collect();
    assert_eq!(f_w, ["0.85", "0.15", "0.53", "0.47"]);
    assert_eq!(f_r, ["0.67", "0.33", "0.33", "0.67"]);
    assert_eq!(occ, ["7", "198", "105", "6"]);
    assert!(out.contains("weighted_improvement=55.4%"), "{out}");
    assert!(out.contains("total_samples=316"));
    assert!(out.contains("weights: cough=0.32 breath=0.15 fever=0.53"));
}

#[test]
fn evaluate_full_precision_json() {
    let ws = Workspace::new();
    let o = run(&[
        "evaluate",
        "--dataset",
        &fixture("table1_cases.csv"),
        "--weights",
        ws.weights(),
        "--rounding",
        "full",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["rounding"], "full");
    assert_eq!(json["cases"].as_array().unwrap().len(), 4);
    let f_w = json["cases"][0]["f_w"].as_f64().unwrap();
    assert!((f_w - 0.85).abs() <= 0.01);
    let f_r = json["cases"][0]["f_r"].as_f64().unwrap();
    assert_eq!(f_r, 2.0 / 3.0);
}

#[test]
fn evaluate_csv_to_file() {
    let ws = Workspace::new();
    let out = ws.path("report.csv");
    let o = run(&[
        "evaluate",
        "--dataset",
        &fixture("table1_cases.csv"),
        "--weights",
        ws.weights(),
        "--format",
        "csv",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("case,truth,cough,breath,fever,occurrences"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn evaluate_warns_on_undefined_relative_difference() {
    let ws = Workspace::new();
    let data = ws.write(
        "zeros.csv",
        "subject_id,truth,cough,breath,fever\na,positive,0,0,0\nb,positive,1,0,1\n",
    );
    let o = run(&["evaluate", "--dataset", &data, "--weights", ws.weights()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert!(stdout(&o).contains("excluded"));
}

#[test]
fn evaluate_error_paths() {
    let ws = Workspace::new();
    let empty = ws.write("empty.csv", "subject_id,truth,cough,breath,fever\n");
    assert_eq!(
        run(&["evaluate", "--dataset", &empty, "--weights", ws.weights()])
            .status
            .code(),
        Some(2)
    );
    let two = ws.write("two.csv", "subject_id,truth,cough,fever\na,positive,1,0\n");
    assert_eq!(
        run(&["evaluate", "--dataset", &two, "--weights", ws.weights()])
            .status
            .code(),
        Some(2)
    );
    let ds = fixture("table1_cases.csv");
    assert_eq!(
        run(&[
            "evaluate",
            "--dataset",
            &ds,
            "--weights",
            ws.weights(),
            "--format",
            "xml"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        run(&[
            "evaluate",
            "--dataset",
            &ds,
            "--weights",
            ws.weights(),
            "--rounding",
            "exact"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(run(&["evaluate", "--dataset", &ds]).status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let ws = Workspace::new();
    let cfg = ws.write(
        "config.json",
        &serde_json::json!({
            "weights": ws.weights(),
            "rounding": "paper",
            "indicators": "cough=1,breath=0,fever=1",
        })
        .to_string(),
    );
    let o = run_with_config(&["screen"], Some(Path::new(&cfg)));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("score=0.85 "));

    let o = run_with_config(&["screen", "--rounding", "full"], Some(Path::new(&cfg)));
    assert!(stdout(&o).starts_with("score=0.84 "));

    let o = run_with_config(
        &["screen", "--indicators", "cough=0,breath=1,fever=0"],
        Some(Path::new(&cfg)),
    );
    assert!(stdout(&o).starts_with("score=0.15 "));

    let bad = ws.write("bad.json", "{\"rounding\": ");
    assert_eq!(
        run_with_config(&["screen"], Some(Path::new(&bad)))
            .status
            .code(),
        Some(1)
    );
}
