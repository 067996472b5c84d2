use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn geophase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geophase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spin_loop_writes_trace_and_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spin.csv");
    let o = geophase(&[
        "spin-loop",
        "m=1",
        "delta=1e-3",
        "samples=20000",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS spin-loop"));

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,phi,theta,accumulated_phase,abs_overlap_i,abs_overlap_j"
    );
    assert_eq!(lines.count(), 20_001);

    let env: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("spin.result.json")).unwrap())
            .unwrap();
    for key in [
        "scenario",
        "parameters",
        "expected",
        "computed",
        "tolerance",
        "pass",
        "trace_file",
    ] {
        assert!(env.get(key).is_some(), "missing {key}");
    }
    assert_eq!(env["pass"], true);
    assert_eq!(env["computed"]["n"], -2);
    assert_eq!(env["parameters"]["m"], 1.0);
}

#[test]
fn csv_values_carry_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let o = geophase(&["wuyang", "--segments", "8", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    // phi = 2 pi / 8 written with 17 significant digits
    assert_eq!(row[0], "7.8539816339744828e-1");
    assert_eq!(row[0].parse::<f64>().unwrap(), std::f64::consts::FRAC_PI_4);
}

#[test]
fn identical_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = geophase(&[
            "--scenario",
            "offdiag",
            "dim=3",
            "trials=20",
            "--seed",
            "11",
            "--out",
            path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let ea = fs::read_to_string(dir.path().join("a.result.json")).unwrap();
    let eb = fs::read_to_string(dir.path().join("b.result.json")).unwrap();
    // Only the trace path differs.
    assert_eq!(ea.replace("a.csv", "x"), eb.replace("b.csv", "x"));

    let c = dir.path().join("c.csv");
    geophase(&[
        "offdiag",
        "dim=3",
        "trials=20",
        "--seed",
        "12",
        "--out",
        path_str(&c),
    ]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn json_trace_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fringe.json");
    let o = geophase(&[
        "interfere",
        "--counts",
        "10000",
        "--format",
        "json",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["columns"][0], "chi");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 16);
    assert!(dir.path().join("fringe.result.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("t.csv");
    fs::write(
        &cfg,
        format!(
            r#"{{"scenario": "tangency", "parameters": {{"order": 2, "samples": 2001}}, "out": "{}"}}"#,
            path_str(&out).replace('\\', "\\\\")
        ),
    )
    .unwrap();
    let o = geophase(&["--config", path_str(&cfg), "--order", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("tangency order 3"));
    let env: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.result.json")).unwrap())
            .unwrap();
    assert_eq!(env["parameters"]["order"], 3.0);
    assert_eq!(env["parameters"]["samples"], 2001.0);
}

#[test]
fn exit_codes() {
    let unknown_key = geophase(&["wuyang", "phi=1"]);
    assert_eq!(unknown_key.status.code(), Some(2));
    assert!(stderr(&unknown_key).contains("`phi`"));

    assert_eq!(geophase(&["no-such-scenario"]).status.code(), Some(2));
    assert_eq!(geophase(&["spin-loop", "m=abc"]).status.code(), Some(2));
    assert_eq!(geophase(&[]).status.code(), Some(2));

    // Default covering threshold cannot see |<m|psi>| ~ 1e-13 at m = 2.
    let covering = geophase(&["spin-loop", "m=2", "threshold=1e-10"]);
    assert_eq!(covering.status.code(), Some(3));
    assert!(
        stderr(&covering).contains("covering"),
        "{}",
        stderr(&covering)
    );

    let fail = geophase(&["wuyang", "tolerance=0"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(stdout(&fail).starts_with("FAIL wuyang"));
}

#[test]
fn help_lists_scenarios_and_columns() {
    let o = geophase(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for s in [
        "spin-loop",
        "chern-finite",
        "pi-jump",
        "tangency",
        "offdiag",
        "interfere",
        "bargmann-area",
        "wuyang",
        "verify-all",
    ] {
        assert!(text.contains(s), "help lacks {s}");
    }
    assert!(text.contains("CSV columns: t,phi,theta,accumulated_phase,abs_overlap_i,abs_overlap_j"));
}

#[test]
fn verify_all_passes() {
    let o = geophase(&["verify-all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 8);
}
