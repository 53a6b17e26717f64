use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reebflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn profile_prints_sigma_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["profile", "--family", "example1", "--depth", "16", "--out", d]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "sigma = 1");
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("y,f,fstar"));
    assert!(lines.any(|l| l == "0.5,1,0"));

    let out = run(&["profile", "--family", "monotone", "--depth", "4"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("y,f,fstar\n"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma = 0"));
}

#[test]
fn rigidity_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["rigidity", "--beta", "0.6180339887", "--depth", "1000", "--resolution", "0.01", "--out", d]);
    assert_eq!(code(&out), 0);
    let v = json(&dir.path().join("rigidity.json"));
    assert_eq!(v["verdict"], "forced-to-rotations");
    assert!(v["max_gap"].as_f64().unwrap() < 0.01);
    assert_eq!(v["constraints"].as_array().unwrap().len(), 1000);

    let out = run(&["rigidity", "--family", "example1", "--depth", "20"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "rotation-conjugate");
    assert_eq!(v["alpha"], 0.0);

    assert_eq!(code(&run(&["rigidity", "--family", "monotone"])), 1);
}

#[test]
fn verify_subcommands() {
    let out = run(&["verify", "pi-identity", "--family", "monotone"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["check"], "pi-identity");
    assert!(v["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["seed"], 0);

    assert_eq!(code(&run(&["verify", "group-law", "--samples", "200"])), 0);
    assert_eq!(code(&run(&["verify", "commutation"])), 0);
    assert_eq!(code(&run(&["verify", "horizontal-points", "--count", "6", "--depth", "8"])), 0);
}

#[test]
fn invariant_violations_exit_2_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["verify", "commutation", "--action", "vertical-pair", "--out", d]);
    assert_eq!(code(&out), 2);
    let v = json(&dir.path().join("report.json"));
    assert_eq!(v["pass"], false);
    assert!(v["residual"].as_f64().unwrap() > 1e-3);

    let out = run(&["example1", "--family", "example2", "--out", d]);
    assert_eq!(code(&out), 2);
    let v = json(&dir.path().join("report.json"));
    assert_eq!(v["check"], "glue-constraint");
    assert!((v["worst_sample"]["c"].as_f64().unwrap() - 0.618_033_988_749_894_8).abs() < 1e-12);

    let out = run(&["extend-standard", "--base-x", "3", "--out", d]);
    assert_eq!(code(&out), 2);
    let v = json(&dir.path().join("report.json"));
    assert!(v["worst_sample"]["sample"].is_number());
}

#[test]
fn passing_builders() {
    let out = run(&["example1", "--depth", "8", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let checks: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    assert_eq!(checks, ["boundary-0", "boundary-1", "group-law", "commutation", "half-turn-involution"]);
    assert_eq!(code(&run(&["extend-standard"])), 0);
    assert_eq!(code(&run(&["extend-standard", "--breaks", "3", "--seed", "5"])), 0);
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(code(&run(&["profile", "--depth", "0"])), 1);
    assert_eq!(code(&run(&["profile", "--family", "example2", "--beta", "1.5"])), 1);
    assert_eq!(code(&run(&["profile", "--family", "nonsense"])), 1);
    assert_eq!(code(&run(&["verify", "pi-identity", "--tol", "0"])), 1);
    assert_eq!(code(&run(&["nonsense"])), 1);
    assert_eq!(code(&run(&["realize", "--family", "example1", "--depth", "1"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run(&["profile", "--profile", bad.to_str().unwrap()])), 1);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["profile", "--profile", missing.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn profile_json_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    fs::write(&path, r#"{"family":"example2","beta":0.25,"depth":6}"#).unwrap();
    let out = run(&["profile", "--profile", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sigma = 1") && stderr.contains("1/4"), "{stderr}");
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let d = dir.path().to_str().unwrap();
        assert_eq!(code(&run(&["realize", "--family", "example2", "--depth", "6", "--seed", "9", "--out", d])), 0);
    }
    for name in ["orbit.csv", "band.svg", "foliation.svg", "report.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
    let first = stdout(&run(&["verify", "group-law", "--seed", "4", "--samples", "100"]));
    let second = stdout(&run(&["verify", "group-law", "--seed", "4", "--samples", "100"]));
    assert_eq!(first, second);
    let orbit = fs::read_to_string(a.path().join("orbit.csv")).unwrap();
    assert!(orbit.starts_with("t,chart,x,y\n"));
}
