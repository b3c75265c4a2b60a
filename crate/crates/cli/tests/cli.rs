use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wfmgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfmgf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = wfmgf(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// JSON rows of a successful run.
fn rows(args: &[&str]) -> Vec<Value> {
    let mut all = args.to_vec();
    all.extend(["--format", "json", "--no-timestamp"]);
    let doc: Value = serde_json::from_str(&ok(&all)).unwrap();
    doc["rows"].as_array().unwrap().clone()
}

fn meta(csv: &str) -> Value {
    let line = csv.lines().next().unwrap();
    serde_json::from_str(line.strip_prefix("# ").expect("metadata line")).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn second_moment_at_unit_time() {
    let r = rows(&["moments", "--p", "0.5", "--orders", "2", "--times", "1"]);
    assert_eq!(r.len(), 1);
    assert!((f(&r[0]["value"]) - 0.4080301).abs() < 1e-7);
}

#[test]
fn first_moment_is_p() {
    for r in rows(&["moments", "--p", "0.2,0.7", "--orders", "1", "--times", "0:5:0.5"]) {
        assert!((f(&r["value"]) - f(&r["p"])).abs() < 1e-14);
    }
}

#[test]
fn third_moment_at_zero() {
    let r = rows(&["moments", "--p", "0.5", "--orders", "3", "--times", "0"]);
    assert!((f(&r[0]["value"]) - 0.125).abs() < 1e-15);
}

#[test]
fn high_orders_switch_to_wide_precision() {
    let out = ok(&["moments", "--p", "0.3", "--orders", "40", "--times", "0", "--no-timestamp"]);
    assert_eq!(meta(&out)["scalar"], "bigfloat");
    let value: f64 = out.lines().nth(2).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((value / 0.3f64.powi(40) - 1.0).abs() < 1e-12);
}

#[test]
fn heterozygosity_decays_exponentially() {
    let r = rows(&["het", "--p", "0.5", "--times", "1"]);
    assert!((f(&r[0]["value"]) - 0.5 * (-1.0f64).exp()).abs() < 1e-14);
}

#[test]
fn absorption_time_at_half() {
    let r = rows(&["absorption", "--p", "0.5"]);
    assert!((f(&r[0]["value"]) - 2.0 * 2f64.ln()).abs() < 1e-5);
    assert_eq!(r[0]["kmax"], 400);
    assert!(r[0]["last_term"].is_number());
}

#[test]
fn eventual_fixation_and_extinction() {
    let r = rows(&["fixation", "--p", "0.3", "--times", "100"]);
    assert!((f(&r[0]["value"]) - 0.3).abs() < 1e-9);
    assert_eq!(r[0]["status"], "PASS");
    let r = rows(&["extinction", "--p", "0.3", "--times", "100"]);
    assert!((f(&r[0]["value"]) - 0.7).abs() < 1e-9);
}

#[test]
fn truncation_failure_exits_with_check_status() {
    let out = wfmgf(&["fixation", "--p", "0.5", "--times", "0.001", "--kmax", "10", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"));
    assert_eq!(meta(&text)["passed"], false);
}

#[test]
fn implicit_scheme_starts_at_identity() {
    let r = rows(&["master", "--scheme", "a", "--twoN", "2", "--emit", "matrix", "--times", "0"]);
    for (i, row) in r.iter().enumerate() {
        for j in 0..3 {
            assert_eq!(f(&row[j.to_string().as_str()]), if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn wright_fisher_generator_row() {
    let r = rows(&["master", "--scheme", "b", "--twoN", "2", "--emit", "generator"]);
    let row: Vec<f64> = ["0", "1", "2"].iter().map(|k| f(&r[1][*k])).collect();
    assert_eq!(row, vec![0.25, -0.5, 0.25]);
}

#[test]
fn master_moments_match_spectral_moments() {
    let times = "0.1,0.5,1,2";
    let master = rows(&["master", "--scheme", "a", "--twoN", "8", "--i0", "4", "--times", times, "--emit", "moments"]);
    let spectral = rows(&["moments", "--p", "0.5", "--orders", "0,1,2,3,4,5,6,7,8", "--times", times]);
    assert_eq!(master.len(), spectral.len());
    let worst = master.iter().zip(&spectral).map(|(a, b)| (f(&a["value"]) - f(&b["value"])).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst:e}");
}

#[test]
fn master_distribution_sums_to_one() {
    let r = rows(&["master", "--scheme", "aK", "--K", "2", "--twoN", "4", "--emit", "distribution", "--times", "0.5"]);
    assert_eq!(r.len(), 15);
    let total: f64 = r.iter().map(|x| f(&x["probability"])).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn compare_against_implicit_scheme_passes() {
    let r = rows(&["compare", "--against", "master", "--scheme", "a"]);
    assert_eq!(r[0]["status"], "PASS");
    assert!(f(&r[0]["max_error"]) < 1e-7);
}

#[test]
fn compare_against_wright_fisher_halves_error() {
    let r = rows(&["compare", "--against", "master", "--scheme", "b"]);
    let ratios: Vec<&Value> = r.iter().filter(|x| x["quantity"].as_str().unwrap().ends_with("ratio")).collect();
    assert_eq!(ratios.len(), 2);
    for x in ratios {
        assert!((f(&x["max_error"]) - 2.0).abs() < 0.3);
        assert_eq!(x["status"], "PASS");
    }
}

#[test]
fn compare_against_monte_carlo_passes() {
    let r = rows(&["compare", "--against", "mc"]);
    assert_eq!(r.len(), 9);
    assert!(r.iter().all(|x| x["status"] == "PASS"), "{r:?}");
}

#[test]
fn monte_carlo_is_seeded() {
    let args = ["mc", "--twoN", "40", "--i0", "20", "--generations", "20", "--replicates", "500", "--seed", "7"];
    assert_eq!(rows(&args), rows(&args));
    let mut other = args.to_vec();
    other[10] = "8";
    assert_ne!(rows(&args), rows(&other));
}

#[test]
fn output_is_reproducible_without_timestamp() {
    let args =
        ["master", "--scheme", "b", "--twoN", "16", "--times", "3,8", "--emit", "distribution", "--no-timestamp"];
    assert_eq!(ok(&args), ok(&args));
    let stamped = ok(&["het"]);
    assert!(meta(&stamped)["timestamp"].is_string());
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("first.csv");
    let first = ok(&["moments", "--p", "0.1,0.4", "--orders", "1,3", "--times", "0:1:0.5", "--no-timestamp"]);
    let config = dir.path().join("config.json");
    std::fs::write(&config, meta(&first)["config"].to_string()).unwrap();
    ok(&["moments", "--config", config.to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
    assert_eq!(
        std::fs::read_to_string(&out_file).unwrap().lines().skip(1).collect::<Vec<_>>(),
        first.lines().skip(1).collect::<Vec<_>>()
    );
    assert_eq!(ok(&["moments", "--config", config.to_str().unwrap()]), first);
}

#[test]
fn config_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"p": [0.5], "kmax": 10}"#).unwrap();
    let out = wfmgf(&["moments", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kmax"));
}

#[test]
fn help_lists_defaults() {
    for sub in ["moments", "fixation", "absorption", "master", "compare", "mc"] {
        let help = ok(&[sub, "--help"]);
        assert!(help.contains("[default:"), "{sub}");
        assert!(help.contains("--format"), "{sub}");
    }
    let help = ok(&["master", "--help"]);
    assert!(help.contains("--twoN") && help.contains("[default: 8]"));
}

#[test]
fn invalid_input_fails() {
    for args in [
        &["moments", "--p", "1.5"][..],
        &["moments", "--orders", "5", "--nmax", "3"],
        &["moments", "--times=-1"],
        &["master", "--scheme", "a", "--twoN", "8", "--i0", "9"],
        &["master", "--scheme", "a", "--twoN", "7"],
        &["mc", "--i0", "300"],
    ] {
        let out = wfmgf(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
    }
    assert_eq!(wfmgf(&["moments", "--bogus"]).status.code(), Some(2));
}

#[test]
fn writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("het.json");
    let out = wfmgf(&["het", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&path)).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], "het");
}
