use std::process::Command;

fn stcl(args: &[&str], out: &std::path::Path) -> (i32, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_stcl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .unwrap();
    (output.status.code().unwrap(), String::from_utf8_lossy(&output.stdout).into_owned())
}

#[test]
fn solve_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = stcl(&["solve", "--cells", "32", "--tmax", "0.1", "--ic", "riemann(1,0)"], dir.path());
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x_j,u_j"));
    assert_eq!(lines.count() % 32, 0);
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = stcl(&["contraction", "--cells", "64", "--seed", "5"], dir.path());
    assert_eq!(code, 0);
    assert!(stdout.starts_with("PASS contraction-flat-burgers"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("contraction-flat-burgers.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("contraction-flat-burgers,5,64,"));

    // the bump profile misses the sup-norm condition
    let (code, stdout) = stcl(&["verify-mollifier", "--delta", "0.2,0.1", "--grid", "8"], dir.path());
    assert_eq!(code, 1, "{stdout}");
    let rows = std::fs::read_to_string(dir.path().join("verify-mollifier-minkowski.csv")).unwrap();
    assert!(rows.starts_with("scenario,seed,delta,profile,condition,residual,constant,resolution\n"));

    assert_eq!(stcl(&["frobnicate"], dir.path()).0, 2);
    assert_eq!(stcl(&["solve", "--cfl", "1.5"], dir.path()).0, 2);
    assert_eq!(stcl(&["run", "--scenario", "nope"], dir.path()).0, 2);
    assert_eq!(stcl(&["estimate", "--delta-grid", "log:1:0.1:x"], dir.path()).0, 2);
}
