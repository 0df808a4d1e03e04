use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ymforms"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_bpst_passes() {
    let o = run(&["verify", scenario("bpst.json").to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    for check in ["asd", "bianchi", "vacuum-current", "eb-bpst"] {
        assert!(text.lines().any(|l| l.contains("[pass]") && l.contains(check)), "{check} missing in\n{text}");
    }
}

#[test]
fn verify_json_records_seed() {
    let o = run(&["--json", "--points", "5", "verify", scenario("dirac-monopole.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["overall"], "pass");
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);
    assert_eq!(v["checks"][0]["points"], 5);
}

#[test]
fn reports_are_deterministic() {
    let args = ["--json", "--points", "10", "verify", "x"];
    let path = scenario("stationary-sd.json");
    let mut a = args.map(String::from);
    a[4] = path.to_string_lossy().into_owned();
    let first = bin().args(&a).output().unwrap().stdout;
    let second = bin().args(&a).output().unwrap().stdout;
    assert_eq!(first, second);
}

#[test]
fn tampered_stationary_fails_with_exit_1() {
    let o = run(&["verify", scenario("stationary-sd-tampered.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.contains("[FAIL]") && l.contains("sdm")), "{text}");
}

#[test]
fn bundled_scenarios_pass() {
    for name in ["stationary-sd.json", "constant.json", "custom-eta.json"] {
        let o = run(&["--points", "20", "verify", scenario(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
}

#[test]
fn star_table_minkowski_volume() {
    let o = run(&["star-table", "--metric", "minkowski"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("*(dz1^dz2^dzb1^dzb2) = (-4) 1"));
    let o = run(&["--json", "star-table"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["metric"], "euclidean");
    assert_eq!(v["table"].as_array().unwrap().len(), 16);
}

#[test]
fn missing_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn schema_violations_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "mismatch.json",
            r#"{"name": "m", "connection": {"builtin": "constant",
                "a1": [[[1,0],[0,0]],[[0,0],[1,0]]], "a2": [[[1,0]]]}, "checks": ["bianchi"]}"#,
            "connection.a2",
        ),
        (
            "builtin.json",
            r#"{"name": "b", "connection": {"builtin": "instanton"}, "checks": ["bianchi"]}"#,
            "bpst",
        ),
        ("syntax.json", "{ not json", "scenario"),
    ];
    for (file, text, needle) in cases {
        let path = dir.path().join(file);
        std::fs::write(&path, text).unwrap();
        let o = run(&["verify", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{file}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{file}: {err}");
    }
}

#[test]
fn fields_csv_has_eb_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fields.csv");
    let o = run(&["--points", "3", "fields", scenario("bpst.json").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "point,x1,y1,x2,y2,component,row,col,re,im");
    // 6 fields × 4 entries + 1 inner product per point
    assert_eq!(lines.len(), 1 + 3 * 25);
    for row in lines.iter().filter(|l| l.contains(",EB,")) {
        let re: f64 = row.split(',').nth(8).unwrap().parse().unwrap();
        assert!(re < 0.0, "{row}");
    }
}

#[test]
fn current_csv_vanishes_for_monopole() {
    let o = run(&["--points", "4", "current", scenario("dirac-monopole.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 1 + 4 * 16);
    for row in csv.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').skip(8).map(|x| x.parse().unwrap()).collect();
        assert!(cols.iter().all(|x| x.abs() < 1e-10), "{row}");
    }
}

#[test]
fn functional_json_splits() {
    let o = run(&[
        "--json",
        "--radius",
        "1",
        "--nodes",
        "6",
        "functional",
        scenario("dirac-monopole.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["split_gap"].as_f64().unwrap() < 1e-12);
    assert!(v["total"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_flag_value_is_input_error() {
    let o = run(&["star-table", "--metric", "lorentzian"]);
    assert_eq!(o.status.code(), Some(2));
}
