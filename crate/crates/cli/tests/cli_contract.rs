//! Exit-code contract: 0 pass, 2 fail, 3 inconclusive, 1 runtime error,
//! 64 usage error — asserted per subcommand with small workloads.

use std::process::Command;

fn run(args: &[&str]) -> (Option<i32>, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_germlab"))
        .args(args)
        .output()
        .expect("spawn germlab");
    (
        out.status.code(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn expect_code(args: &[&str], want: i32) -> String {
    let (code, stdout, stderr) = run(args);
    assert_eq!(
        code,
        Some(want),
        "germlab {:?}: expected exit {want}, got {code:?}\nstdout:\n{stdout}\nstderr:\n{stderr}",
        args
    );
    stdout
}

#[test]
fn usage_errors_exit_64() {
    expect_code(&[], 64);
    expect_code(&["definitely-not-a-subcommand"], 64);
    expect_code(&["lne"], 64); // missing required germ argument
    expect_code(&["dim-cone", "plane", "--trials", "not-a-number"], 64);
}

#[test]
fn help_and_version_exit_0() {
    let help = expect_code(&["--help"], 0);
    assert!(help.contains("germlab"));
    expect_code(&["--version"], 0);
    expect_code(&["lne", "--help"], 0);
}

#[test]
fn runtime_errors_exit_1() {
    let (code, _, stderr) = run(&["lne", "no_such_germ"]);
    assert_eq!(code, Some(1), "stderr: {stderr}");
    let (code, _, _) = run(&["validate", "/nonexistent/germ.json"]);
    assert_eq!(code, Some(1));
}

#[test]
fn catalog_exits_0() {
    let out = expect_code(&["catalog"], 0);
    for name in ["line", "plane", "parabola_pair", "log_cone", "circle_cone"] {
        assert!(out.contains(name), "catalog missing {name}");
    }
}

#[test]
fn validate_distinguishes_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"name":"diag","ambient_dim":2,"kind":"graph","base_dim":1,"expressions":["u1"]}"#,
    )
    .unwrap();
    expect_code(&["validate", good.to_str().unwrap()], 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name":"broken","ambient_dim":2,"kind":"no_such_kind"}"#).unwrap();
    let (code, _, _) = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, Some(2));
}

#[test]
fn link_topology_pass_exits_0() {
    let out = expect_code(&["link-topology", "circle_cone", "--r", "0.1"], 0);
    assert!(out.contains("\"b1\": 1"), "report: {out}");
}

#[test]
fn compare_links_exits_0() {
    expect_code(&["compare-links", "plane", "circle_cone", "--r", "0.1"], 0);
}

#[test]
fn st_volume_small_run_exits_0() {
    expect_code(
        &[
            "st-volume", "line", "--d", "1.5", "--trials", "2000", "--radii", "0.003:0.1",
            "--rungs", "10",
        ],
        0,
    );
}

#[test]
fn dim_cone_small_run_exits_0() {
    expect_code(
        &[
            "dim-cone", "line", "--d", "1.5", "--trials", "5000", "--radii", "0.003:0.1",
            "--rungs", "10",
        ],
        0,
    );
}

#[test]
fn extend_graph_check_exits_0() {
    expect_code(
        &[
            "extend", "--map", "example1", "--alpha", "0.9", "--check", "graph",
            "--points", "300",
        ],
        0,
    );
}

#[test]
fn tangent_cone_writes_cone_spec() {
    let dir = tempfile::tempdir().unwrap();
    let cone = dir.path().join("cone.json");
    expect_code(
        &[
            "tangent-cone", "line", "--r-start", "0.1", "--decades", "2", "--points", "200",
            "--out", cone.to_str().unwrap(),
        ],
        0,
    );
    // the emitted cone must itself be a valid germ file
    expect_code(&["validate", cone.to_str().unwrap()], 0);
}

#[test]
fn reports_are_deterministic_across_runs() {
    let a = expect_code(&["link-topology", "circle_cone", "--r", "0.1", "--seed", "5"], 0);
    let b = expect_code(&["link-topology", "circle_cone", "--r", "0.1", "--seed", "5"], 0);
    assert_eq!(a, b, "same manifest must give byte-identical reports");
}
