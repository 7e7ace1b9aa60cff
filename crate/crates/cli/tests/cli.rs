use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regretforge"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("regretforge-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TWO_ACTIONS: &str =
    r#"{"k": 0, "grid": [0, 1], "actions": [{"e": 0, "probs": [0.5, 0.5]}, {"e": 0.2, "probs": [0, 1]}]}"#;

#[test]
fn minmax_prints_the_closed_form() {
    let v = json(&run(&["minmax", "--alpha", "2", "--ybar", "1"]));
    assert!((v["ell_star"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert!((v["rbar"].as_f64().unwrap() - 0.808708).abs() < 1e-6);
}

#[test]
fn regret_and_solvers_read_files() {
    let dir = scratch("files");
    let tech = dir.join("t.json");
    fs::write(&tech, TWO_ACTIONS).unwrap();
    let reg = dir.join("r.json");
    fs::write(&reg, r#"{"type": "all"}"#).unwrap();
    let t = tech.to_str().unwrap();

    let v = json(&run(&["regret", "--tech", t, "--reg", reg.to_str().unwrap(), "--alpha", "2"]));
    assert!((v["full_info_value"].as_f64().unwrap() - 1.6).abs() < 1e-9);
    assert!((v["profit"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert!((v["worker_surplus"].as_f64().unwrap() - 0.2).abs() < 1e-9);

    let v = json(&run(&["solve-firm", "--tech", t, "--reg", "all"]));
    assert_eq!(v["action_index"], 1);
    assert!((v["implementations"][1]["expected_payment"].as_f64().unwrap() - 0.4).abs() < 1e-9);

    let v = json(&run(&["solve-regulator", "--tech", t, "--alpha", "2"]));
    assert!((v["full_info_value"].as_f64().unwrap() - 1.6).abs() < 1e-9);
    fs::remove_dir_all(dir).ok();
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"k": 0, "grid": [0, 1], "actions": [{"e": 0, "probs": [0.5, 0.4]}]}"#).unwrap();
    let out = run(&["regret", "--tech", bad.to_str().unwrap(), "--reg", "all", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/actions/0/probs"));

    let tech = dir.join("t4.json");
    fs::write(&tech, r#"{"k": 0, "grid": [0, 0.5, 0.8, 1], "actions": [{"e": 0, "probs": [0.25, 0.25, 0.25, 0.25]}]}"#)
        .unwrap();
    let reg = dir.join("img.json");
    fs::write(
        &reg,
        r#"{"type": "image", "grid": [0, 0.5, 0.8, 1], "intervals": [[[0, 0]], [[0, 0.1], [0.2, 0.5]], [[0, 0.8]], [[0, 1]]]}"#,
    )
    .unwrap();
    let out = run(&["regret", "--tech", tech.to_str().unwrap(), "--reg", reg.to_str().unwrap(), "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(run(&["minmax", "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["necessity", "--reg", "mpr:1.2", "--alpha", "2"]).status.code(), Some(2));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn sweep_csv_layout() {
    let out = run(&["sweep-alpha", "--alphas", "1,2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,ell_star,rbar,branch_no_production,branch_extraction");
    assert!(lines[1].starts_with("1,0,0.36787944117144233,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn worst_case_repeats_and_records_provenance() {
    let args = ["worst-case", "--reg", "mpr:0.3333", "--alpha", "2", "--budget", "300", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["provenance"]["seed"], 42);
    assert_eq!(v["provenance"]["budget"], 300);
    let tech = serde_json::to_string(&v["technology"]).unwrap();
    assert!(regretforge::io::parse_technology_json(&tech).is_ok());
}

#[test]
fn curves_and_necessity() {
    let dir = scratch("curves");
    let curve = dir.join("curve.csv");
    json(&run(&["minmax", "--alpha", "2", "--curve", curve.to_str().unwrap()]));
    let text = fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().count(), 102);
    let v = json(&run(&["necessity", "--reg", "mpr:0.3333333333333333", "--alpha", "2"]));
    assert_eq!(v["all_ok"], true);
    let v = json(&run(&["necessity", "--reg", "mpr:0.2", "--alpha", "2"]));
    assert_eq!(v["all_ok"], false);
    fs::remove_dir_all(dir).ok();
}
