use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adiabat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SCHWINGER: &str = r#"{
  "schedule": {"t_span": [0, 20], "model": {"kind": "schwinger", "omega0": 1, "theta": 0.3, "omega_l": 0.2}},
  "grid": {"n_min": 401},
  "tasks": ["simulate", "criteria", "bounds"]
}"#;

#[test]
fn preset_listing_and_show() {
    let o = adiabat(&["preset", "--list"]);
    assert!(o.status.success());
    let names: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(str::to_owned).collect();
    assert_eq!(names.len(), adiabat::scenario::PRESET_NAMES.len());
    assert!(names.iter().any(|n| n == "cycling-localization"));

    let o = adiabat(&["preset", "zeno-saturation", "--show"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["schedule"]["model"]["kind"], "schwinger");

    let o = adiabat(&["preset", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("known:"), "{}", stderr(&o));
}

#[test]
fn run_prints_report_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCHWINGER);
    let out = dir.path().join("out");
    let o = adiabat(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["dim"], 2);
    assert!(report["verdicts"].as_array().unwrap().len() >= 3);
    for file in ["report.json", "trajectory.csv", "frames.csv", "criteria.csv"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let header = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(header, "t,psi0_re,psi0_im,psi1_re,psi1_im,b0_abs2,b1_abs2,norm_drift");
}

#[test]
fn single_task_subcommands_restrict_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCHWINGER);
    let o = adiabat(&["criteria", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["criteria"].is_object());
    assert!(report["simulation"].is_null());

    let o = adiabat(&["simulate", &cfg]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["criteria"].is_null());
    assert!(report["simulation"]["norm_drift"].as_f64().unwrap() < 1e-9);
}

#[test]
fn json_format_writes_one_document() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCHWINGER);
    let out = dir.path().join("json");
    let o = adiabat(&["run", &cfg, "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 1, "{files:?}");
}

#[test]
fn unknown_key_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &SCHWINGER.replace("\"omega0\"", "\"omega_0\""));
    let o = adiabat(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("schedule.model") && msg.contains("omega_0"), "{msg}");
}

#[test]
fn syntax_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"tasks\": [\"simulate\",]\n}");
    let o = adiabat(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = adiabat(&["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/config.json"));
}

#[test]
fn tolerance_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCHWINGER);
    let o = adiabat(&["simulate", &cfg, "--tol", "1e-3"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("tol"));
}

#[test]
fn degenerate_spectrum_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "deg.json",
        r#"{"schedule": {"t_span": [0, 6.283185307179586], "model": {"kind": "cycling", "alpha": 1, "omega": 1, "rabi": 0}},
            "tasks": ["criteria"]}"#,
    );
    let o = adiabat(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("degenerate"), "{}", stderr(&o));
}

#[test]
fn seed_override_changes_random_schedules() {
    let run = |seed: &str| {
        let o = adiabat(&["criteria", "--seed", seed, "--tol", "1e-8", "/dev/null"]);
        o
    };
    // /dev/null is not a scenario: the parse error must name the document.
    assert_eq!(run("1").status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"schedule": {"t_span": [0, 20], "model": {"kind": "random_smooth", "dim": 3, "seed": 1}},
            "grid": {"n_min": 401, "refine_tv": false}, "tasks": ["criteria"]}"#,
    );
    let a0 = |seed: &str| {
        let o = adiabat(&["criteria", &cfg, "--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["criteria"]["a0_level_sum_max"].as_f64().unwrap()
    };
    assert_eq!(a0("1"), a0("1"));
    assert_ne!(a0("1"), a0("2"));
}

#[test]
fn sweep_writes_csv_with_parameter_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{
          "base": {"schedule": {"t_span": [0, 20], "model": {"kind": "schwinger", "omega0": 1, "theta": 0.3, "omega_l": 0.2}},
                   "grid": {"n_min": 401, "refine_tv": false}, "tasks": ["criteria"]},
          "axes": [{"param": "theta", "values": [0.2, 0.1]}, {"param": "t_end", "start": 10, "stop": 20, "count": 2}]
        }"#,
    );
    let out = dir.path().join("sw");
    let o = adiabat(&["sweep", &cfg, "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "theta");
    assert_eq!(&headers[1], "t_end");
    assert!(headers.iter().any(|h| h == "a0_max"));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].to_string(), r[1].to_string())).collect();
    assert_eq!(keys[0], ("0.1".into(), "10".into()));
    assert_eq!(keys[3], ("0.2".into(), "20".into()));
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"preset": "schwinger", "axes": [{"param": "omega_x", "values": [1]}]}"#,
    );
    let o = adiabat(&["sweep", &cfg]);
    // unknown parameters surface per row; the sweep itself completes
    assert!(o.status.success(), "{}", stderr(&o));
    let table: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let err = table["rows"][0]["error"].as_str().unwrap();
    assert!(err.contains("omega_x"), "{err}");
}
