use std::fs;
use std::process::Command;

fn sdt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdt"))
}

#[test]
fn compatibility_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"experiment": "compatibility", "mesh": {"nx": 4, "ny": 4}, "t_final": 0.05, "dt": 0.01}"#)
        .unwrap();
    let out = dir.path().join("out");
    let res = sdt().args(["run", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "stdout: {stdout}\nstderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(!stdout.contains("FAIL"));
    let report = fs::read_to_string(out.join("compatibility_report.txt")).unwrap();
    let hash_line = report.lines().next().unwrap();
    assert!(hash_line.starts_with("# config sha256 "));
    assert!(stdout.contains(hash_line.trim_start_matches("# ")));
    assert!(report.contains("result PASS"));
}

#[test]
fn same_config_same_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"experiment": "custom", "mesh": {"nx": 4, "ny": 4}, "k": 2, "ell": 1, "t_final": 0.02, "dt": 0.01}"#,
    )
    .unwrap();
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let res = sdt().args(["run", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        files.push((fs::read(out.join("conservation.csv")).unwrap(), fs::read(out.join("flow.vtk")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn bad_config_exits_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"experiment": "compatibility", "beta_c": -1}"#).unwrap();
    let res = sdt().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("beta_c"));
    let res = sdt().args(["run", "--config"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}
