use std::path::Path;
use std::process::{Command, Output};

fn kpv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpv"))
        .args(args)
        .output()
        .expect("kpv runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn appendix_report_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = kpv(&["verify", "appendix", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["suite"], "appendix");
    assert!(v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["anchor"].as_str().is_some_and(|a| !a.is_empty())));
    assert!(!text.contains("runtime_ms"));
    // keys are emitted in sorted order
    assert!(text.find("\"checks\"").unwrap() < text.find("\"config\"").unwrap());
}

#[test]
fn csv_report_header() {
    let o = kpv(&["verify", "section4", "--format", "csv", "--timings"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("check,status,anchor,runtime_ms"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "section4.schur-closed-forms");
    assert_eq!(row[1], "pass");
    assert!(row[3].parse::<u64>().is_ok());
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let o = kpv(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown suite"));
}

#[test]
fn failing_check_sets_exit_status() {
    // the rotated form is not proportional to the complex route
    let o = kpv(&["verify", "theorem2", "--depth", "3", "--M", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "fail");
    assert!(String::from_utf8_lossy(&o.stderr).contains("rotated-form-proportional"));
}

#[test]
fn infeasible_caps_are_refused_with_an_estimate() {
    let o = kpv(&["verify", "theorem2", "--depth", "12"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pairings") && err.contains("budget"), "{err}");
}

#[test]
fn expand_zn_rows() {
    let o = kpv(&[
        "expand", "zn", "--M", "1", "--N", "0", "--lambda", "1", "--depth", "3", "--format", "csv",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("eps,value"));
    assert!(out.lines().any(|l| l == "3,5/24"), "{out}");
    let o = kpv(&[
        "expand", "zn", "--M", "1", "--N", "1", "--depth", "0", "--format", "csv",
    ]);
    assert_eq!(stdout(&o), "eps,value\n0,1\n");
}

#[test]
fn expand_extension_matches_zn() {
    let args = |m: &str| {
        [
            "expand", m, "--N", "2", "--lambda", "1", "--depth", "3", "--format", "csv",
        ]
        .map(String::from)
    };
    let ext = kpv(&args("znext").iter().map(String::as_str).collect::<Vec<_>>());
    let zn = kpv(&args("zn").iter().map(String::as_str).collect::<Vec<_>>());
    assert!(ext.status.success() && zn.status.success());
    assert_eq!(stdout(&ext), stdout(&zn));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kpv.conf");
    std::fs::write(&cfg, "# defaults\nformat = csv\ndepth = 2\nlambda = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = kpv(&["expand", "zn", "--config", c]);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("eps,value"));
    assert!(out
        .lines()
        .skip(1)
        .all(|l| l.split(',').next().unwrap().parse::<i32>().unwrap() <= 2));
    let o = kpv(&[
        "expand", "zn", "--config", c, "--format", "json", "--depth", "4",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lambda"][0], "2");
    assert_eq!(v["caps"]["eps"], 4);
    let o = kpv(&[
        "expand",
        "zn",
        "--config",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
