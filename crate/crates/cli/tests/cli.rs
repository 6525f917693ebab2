use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sadi_core::SaDIConfig;

fn sadi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sadi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Hourly load driven by a daily sine and a temperature bump above 26.
fn write_series(path: &Path, days: usize, with_prediction: Option<f64>) {
    let mut s = String::from("timestamp,load,temperature");
    if with_prediction.is_some() {
        s.push_str(",prediction");
    }
    s.push('\n');
    for i in 0..days * 24 {
        let d = (i / 24) as f64;
        let temp = 22.0 + 6.0 * (d / 9.0).sin() + 3.0 * (d / 2.3).cos();
        let hour = (i % 24) as f64;
        let load = 500.0 + 0.02 * i as f64 + 15.0 * (temp - 26.0).max(0.0) + 40.0 * (std::f64::consts::TAU * hour / 24.0).sin();
        let ts = 1_609_459_200 + 3600 * i as i64;
        let _ = write!(s, "{ts},{load},{temp}");
        if let Some(scale) = with_prediction {
            let _ = write!(s, ",{}", load * scale);
        }
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(
        &path,
        r#"
[features]
nwp_passthrough = ["temperature"]
[[features.rolling]]
window_days = 1
offset_points = 48
aggregations = ["mean", "max"]
[[features.differences]]
covariate = "temperature"
offset_points = 48

[gam]
rounds = 80
[period]
rounds = 80
[baseline]
rounds = 80

[synthetic]
days = 240
"#,
    )
    .unwrap();
    path
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn evaluate_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("perfect.csv");
    write_series(&input, 5, Some(1.0));
    let out = dir.path().join("eval");
    let o = sadi(&["evaluate", "--in", p(&input), "--out", p(&out), "--eta-grid", "0,0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("days = 5\n"));
    assert!(report.contains("nrmse_d = 0\n"));
    assert!(report.contains("\"0\" = 1\n"));
    assert_eq!(files_in(&out), ["per_day.csv", "report.txt", "sr_curve.csv"]);
}

#[test]
fn evaluate_scores_a_uniform_bias() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("biased.csv");
    write_series(&input, 3, Some(1.1));
    let out = dir.path().join("eval");
    assert!(sadi(&["evaluate", "--in", p(&input), "--out", p(&out)]).status.success());
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    let nrmse: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("nrmse_d = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((nrmse - 0.1).abs() < 1e-12);
}

#[test]
fn unknown_lambda_feature_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.csv");
    write_series(&input, 40, None);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[etl.lambdas]\nhumidity = 1.0\n").unwrap();
    let model = dir.path().join("m.model");
    let o = sadi(&["train", "--config", p(&cfg), "--in", p(&input), "--out", p(&model)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error[config.unknown_feature]: "), "{err}");
    assert_eq!(err.lines().count(), 1);
    assert!(!model.exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(sadi(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(sadi(&["frobnicate"]).status.code(), Some(2));
    // required flags are checked before anything is read
    assert_eq!(sadi(&["evaluate", "--in", "/nonexistent.csv"]).status.code(), Some(2));
    assert_eq!(sadi(&["train", "--in", "a", "--out", "b", "--mode", "lstm"]).status.code(), Some(2));
    assert_eq!(sadi(&["benchmark", "--out", "x", "--eta-grid", "0.1,-1"]).status.code(), Some(2));
}

#[test]
fn data_errors_carry_a_class() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.csv");
    std::fs::write(&input, "timestamp,load\n0,1\n3600,2\n3600,3\n").unwrap();
    let o = sadi(&["ingest", "--in", p(&input), "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[data.duplicate_timestamp]"));

    let model = dir.path().join("broken.model");
    std::fs::write(&model, b"sadi-model v1 sha256=00\n{}").unwrap();
    let o = sadi(&["explain", "--model", p(&model), "--out", p(&dir.path().join("ex"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[model.checksum]"));
}

#[test]
fn train_predict_explain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let input = dir.path().join("d.csv");
    write_series(&input, 60, None);
    let model = dir.path().join("m.model");
    let cutoff = "2021-02-25T00:00:00Z";
    let o = sadi(&["train", "--config", p(&cfg), "--in", p(&input), "--out", p(&model), "--cutoff", cutoff]);
    assert!(o.status.success(), "{}", stderr(&o));

    let pred = dir.path().join("p.csv");
    let o = sadi(&["predict", "--config", p(&cfg), "--model", p(&model), "--in", p(&input), "--out", p(&pred), "--cutoff", cutoff]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&pred).unwrap();
    assert!(text.starts_with("timestamp,load,prediction,long_term,short_term,period\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 24);

    let eval = dir.path().join("eval");
    assert!(sadi(&["evaluate", "--in", p(&pred), "--out", p(&eval)]).status.success());
    let report = std::fs::read_to_string(eval.join("report.txt")).unwrap();
    assert!(report.contains("days = 5\n"));

    let ex = dir.path().join("explain");
    let o = sadi(&["explain", "--model", p(&model), "--out", p(&ex)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let shape = std::fs::read_to_string(ex.join("shape_temperature.csv")).unwrap();
    assert!(shape.starts_with("breakpoint,value\n"));
    assert!(shape.trim_end().ends_with(|c: char| c.is_ascii_digit()));
    assert!(shape.lines().last().unwrap().starts_with("inf,"));

    let de = dir.path().join("extremes");
    let o = sadi(&["detect-extremes", "--in", p(&pred), "--out", p(&de)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(files_in(&de), ["bins.csv", "members.csv"]);
}

#[test]
fn decompose_columns_sum_to_the_original() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.csv");
    write_series(&input, 30, None);
    let out = dir.path().join("dec.csv");
    assert!(sadi(&["decompose", "--in", p(&input), "--out", p(&out)]).status.success());
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["timestamp", "original", "long_term", "short_term", "period"]);
    for rec in r.records() {
        let v: Vec<f64> = rec.unwrap().iter().skip(1).map(|x| x.parse().unwrap()).collect();
        assert!((v[1] + v[2] + v[3] - v[0]).abs() <= 1e-9 * v[0].abs());
    }
}

#[test]
fn benchmark_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = sadi(&["benchmark", "--config", p(&cfg), "--seed", "7", "--out", p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let names = files_in(&a);
    assert_eq!(
        names,
        [
            "ablation.csv",
            "comparison.csv",
            "per_bin_rmse.csv",
            "report.txt",
            "sr_curve_evl-gbdt.csv",
            "sr_curve_plain-gbdt.csv",
            "sr_curve_sadi.csv",
        ]
    );
    assert_eq!(files_in(&b), names);
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
    let comparison = std::fs::read_to_string(a.join("comparison.csv")).unwrap();
    assert_eq!(comparison.lines().count(), 4);
}

#[test]
fn reference_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/reference.toml");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(SaDIConfig::from_toml(&text).unwrap(), SaDIConfig::default());
}
