use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_painleve")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

#[test]
fn integrate_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "i0.json", r#"{"time": 0, "coords": [[0.2, 0.1]], "momenta": [[-0.3, 0.2]]}"#);
    let out = run(
        &[
            "integrate",
            "--equation",
            "p1",
            "--side",
            "painleve",
            "--initial",
            "i0.json",
            "--t-end",
            "1",
            "--out",
            "tr.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("tr.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "re_t,im_t,re_l1,im_l1,re_m1,im_m1");
    assert!(csv.lines().count() > 3);
}

#[test]
fn missing_equation_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["integrate", "--initial", "i0.json", "--t-end", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--equation"));
}

#[test]
fn pole_gives_partial_output_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "i0.json", r#"{"time": 0, "coords": [3], "momenta": [6]}"#);
    let out =
        run(&["integrate", "--equation", "p1", "--initial", "i0.json", "--t-end", "1", "--out", "tr.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("tr.json")).unwrap()).unwrap();
    assert_eq!(v["termination"]["kind"], "pole_detected");
    let t = v["termination"]["time"][0].as_f64().unwrap();
    assert!(t > 0.0 && t < 1.0);
    let samples = v["samples"].as_array().unwrap();
    assert!(samples.len() > 1);
    assert!(samples.last().unwrap()["t"][0].as_f64().unwrap() < 1.0);
}

fn params(eq: &str, aux: &str) -> (Option<i32>, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["params", "--equation", eq, "--aux", aux], dir.path());
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr))
}

#[test]
fn params_examples() {
    let (code, text) = params("p6", "kappa0=1,kappa1=1,theta=1,kappa=0");
    assert_eq!(code, Some(0));
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v, json!({"alpha": [2.0, 0.0], "beta": [-0.5, 0.0], "gamma": [0.5, 0.0], "delta": [0.0, 0.0]}));

    let (code, text) = params("p2", "alpha=0.3-1.5i");
    assert_eq!(code, Some(0));
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), json!({"alpha": [0.3, -1.5]}));

    let (code, text) = params("p3", "eta_inf=1,theta_inf=1,eta0=1,theta0=1");
    assert_eq!(code, Some(0));
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v, json!({"alpha": [-4.0, 0.0], "beta": [8.0, 0.0], "gamma": [4.0, 0.0], "delta": [-4.0, 0.0]}));
}

#[test]
fn params_from_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "aux.json", r#"{"kappa0": 1, "kappa1": 1, "theta": 1, "kappa": [0, 0]}"#);
    let out = run(&["params", "--equation", "p6", "--aux", "aux.json", "--out", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(v["alpha"], json!([2.0, 0.0]));
}

#[test]
fn params_missing_keys_listed() {
    let (code, text) = params("p6", "kappa0=1");
    assert_eq!(code, Some(1));
    for key in ["kappa0", "kappa1", "theta", "kappa"] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn verify_bogus_suite() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--suite", "bogus"], dir.path()).status.code(), Some(1));
}

#[test]
fn verify_identities_is_json_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&["verify", "--suite", "identities", "--seed", "7"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["passed"] == true));
    let b = run(&["verify", "--suite", "identities", "--seed", "7"], dir.path());
    assert_eq!(a.stdout, b.stdout);

    let c = run(&["verify", "--suite", "identities", "--seed", "7", "--out", "r.json"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("r.json")).unwrap(), a.stdout);
    let summary = String::from_utf8_lossy(&c.stdout);
    assert_eq!(summary.lines().count(), v.as_array().unwrap().len());
}

#[test]
fn csv_and_json_agree_to_the_bit() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "i0.json",
        r#"{"time": [0.2, 0.1], "coords": [[0.3, 0.1], [-0.4, 0.2]], "momenta": [[0.1, 0], [0.2, -0.1]]}"#,
    );
    write(dir.path(), "aux.json", r#"{"alpha": 0.5}"#);
    for (file, fmt) in [("tr.csv", "csv"), ("tr.json", "json")] {
        let out = run(
            &[
                "integrate",
                "--equation",
                "p2",
                "--rank",
                "2",
                "--params",
                "aux.json",
                "--initial",
                "i0.json",
                "--t-end",
                "0.8+0.3i",
                "--out",
                file,
                "--format",
                fmt,
            ],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("tr.json")).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("tr.csv")).unwrap();
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(rows.len(), samples.len());
    for (row, s) in rows.iter().zip(samples) {
        let mut flat: Vec<f64> = s["t"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        for key in ["coords", "momenta"] {
            for z in s[key].as_array().unwrap() {
                flat.extend(z.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()));
            }
        }
        assert_eq!(row, &flat);
    }
}
