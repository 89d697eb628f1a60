use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netcodccn"))
}

#[test]
fn missing_topology_fails_with_message() {
    let out = cli().args(["run", "--scenario", "file:/nonexistent.topo", "--seeds", "1"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error:"), "{err}");
}

#[test]
fn bad_sweep_axis_rejected() {
    let out = cli().args(["run", "--sweep", "colour=1,2", "--seeds", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = cli()
        .args(["run", "--variant", "ccn", "--strategy", "ls", "--sweep", "pipeline=2,8", "--seeds", "2", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# axis=pipeline"), "{meta}");
    lines.next().unwrap();
    // 2 values, 2 seeds, 2 clients
    assert_eq!(lines.count(), 8, "{text}");

    let again = dir.path().join("s.csv");
    cli()
        .args(["run", "--variant", "ccn", "--strategy", "ls", "--sweep", "pipeline=2,8", "--seeds", "2", "--out"])
        .arg(&again)
        .status()
        .unwrap();
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}
