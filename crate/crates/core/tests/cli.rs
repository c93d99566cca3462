//! End-to-end checks of the `apk` binary: exit codes, JSON determinism,
//! the SVG flag, and manifest handling. Windows are kept small so the
//! whole file runs in a few seconds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn apk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apk"))
}

fn run(args: &[&str]) -> Output {
    apk().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

// Negative bounds must use the attached `--region=lo,hi` form: a detached
// value like `-300,80` is not a bare number, so clap treats it as a flag.
fn gen_lattice(dir: &Path, lo: i64, hi: i64) -> PathBuf {
    let path = dir.join(format!("lattice_{lo}_{hi}.json"));
    let region = format!("--region={lo},{hi}");
    let out = run(&[
        "gen",
        "--family",
        "lattice",
        &region,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn gen_fibonacci(dir: &Path) -> PathBuf {
    let path = dir.join("fib.json");
    let out = run(&[
        "gen",
        "--family",
        "fibonacci-cps",
        "--region=-300,300",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn gen_output_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&[
            "gen",
            "--family",
            "fibonacci-cps",
            "--region=-80,80",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        // The result goes to the file; stdout stays quiet.
        assert!(out.stdout.is_empty());
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "same invocation must produce identical bytes");

    let v: Value = serde_json::from_slice(&bytes_a).unwrap();
    assert_eq!(v["arith"], "exact");
    assert!(v["scheme"].is_object(), "model-set family embeds its scheme");
}

#[test]
fn stripe_verify_exit_codes_and_witness() {
    let dir = TempDir::new().unwrap();
    let lat = gen_lattice(dir.path(), -200, 200);
    let lat = lat.to_str().unwrap();

    // Incommensurate band on the integer lattice: violations, exit 1,
    // and the first witness sits at the sqrt2 band distance.
    let out = run(&[
        "stripe-verify", lat, "--a", "1", "--L1", "sqrt2", "--L2", "0.1", "--R", "2",
        "--off-anchors", "50",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert!(v["violations_total"].as_u64().unwrap() > 0);
    let bd = v["violations"][0]["band_distance"].as_f64().unwrap();
    assert!((bd - (2f64.sqrt() - 1.0)).abs() < 1e-9, "witness distance {bd}");

    // The lattice's own period is a clean band: exit 0.
    let out = run(&[
        "stripe-verify", lat, "--a", "1", "--L1", "1", "--L2", "0.1", "--R", "2",
        "--off-anchors", "50",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["violations_total"], 0);
}

#[test]
fn stripe_search_failure_is_exit_3() {
    let dir = TempDir::new().unwrap();
    let lat = gen_lattice(dir.path(), -150, 150);
    let out = run(&[
        "stripe-search",
        lat.to_str().unwrap(),
        "--target-period",
        "1.41421356",
        "--target-halfwidth",
        "0.1",
        "--eps",
        "0.01",
        "--off-anchors",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert!(v["error"]["kind"].is_string(), "{v}");
}

#[test]
fn search_then_round_trip_on_fibonacci() {
    let dir = TempDir::new().unwrap();
    let fib = gen_fibonacci(dir.path());
    let cert = dir.path().join("cert.json");

    let out = run(&[
        "stripe-search",
        fib.to_str().unwrap(),
        "--target-period",
        "3.618",
        "--target-halfwidth",
        "0.3",
        "--off-anchors",
        "200",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(&cert).unwrap()).unwrap();
    let l1 = v["spec"]["l1"].as_f64().unwrap();
    assert!((l1 - 3.618).abs() < 0.05, "period {l1}");
    assert_eq!(v["violations_total"], 0);

    let out = run(&[
        "round-trip",
        fib.to_str().unwrap(),
        cert.to_str().unwrap(),
        "--eps-grid",
        "0.2,0.1,0.05,0.02",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["band_max"].as_f64().unwrap() < 0.25);
    assert_eq!(v["locator"]["relatively_dense"], true);
    let rec = 1.0 / v["character"]["a"][0].as_f64().unwrap().abs();
    assert!((rec - l1).abs() < 0.1, "recovered period {rec} vs {l1}");
}

#[test]
fn usage_errors_are_exit_2() {
    let dir = TempDir::new().unwrap();
    let lat = gen_lattice(dir.path(), -10, 10);

    // Unknown family.
    let out = run(&["gen", "--family", "penrose", "--region", "0,10"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert!(v["error"]["kind"].is_string());

    // Zero period is rejected before any work happens.
    let out = run(&[
        "stripe-verify",
        lat.to_str().unwrap(),
        "--a", "1", "--L1", "0", "--L2", "0.1", "--R", "2",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // poisson-control without a seed is not reproducible, so it refuses.
    let out = run(&[
        "gen", "--family", "poisson-control", "--region", "0,50", "--r", "0.4", "--R", "2",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // clap's own usage failure keeps the same class.
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn svg_flag_writes_figures_only_where_supported() {
    let dir = TempDir::new().unwrap();
    let fig = dir.path().join("set.svg");
    let set = dir.path().join("set.json");
    let out = run(&[
        "gen",
        "--family",
        "silver-mean",
        "--region=-50,50",
        "--out",
        set.to_str().unwrap(),
        "--svg",
        fig.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let svg = std::fs::read_to_string(&fig).unwrap();
    assert!(svg.starts_with("<?xml"), "figure is an svg document");
    assert!(svg.contains("<svg "));
    assert!(svg.trim_end().ends_with("</svg>"));

    // report has no figure; asking for one is a usage error.
    let out = run(&[
        "report",
        set.to_str().unwrap(),
        "--svg",
        dir.path().join("no.svg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifest_goes_to_stderr_or_file() {
    let dir = TempDir::new().unwrap();
    let set = dir.path().join("set.json");

    // Default: one compact manifest line on stderr, stdout untouched.
    let out = run(&[
        "gen",
        "--family",
        "lattice",
        "--region",
        "0,20",
        "--out",
        set.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().find(|l| l.starts_with('{')).expect("manifest line");
    let m: Value = serde_json::from_str(line).unwrap();
    assert_eq!(m["subcommand"], "gen");
    assert_eq!(m["config"]["family"], "lattice");

    // --manifest redirects it to a file and records input digests.
    let mf = dir.path().join("manifest.json");
    let out = run(&[
        "report",
        set.to_str().unwrap(),
        "--manifest",
        mf.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("subcommand"));
    let m: Value = serde_json::from_slice(&std::fs::read(&mf).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "report");
    assert_eq!(m["inputs"][0]["path"], set.to_str().unwrap());
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_ms"].is_u64());
}

#[test]
fn eigenvalues_and_axioms_subcommands() {
    let dir = TempDir::new().unwrap();
    let fib = gen_fibonacci(dir.path());

    let out = run(&[
        "eigenvalues",
        fib.to_str().unwrap(),
        "--phys-max",
        "10",
        "--internal-max",
        "10",
        "--limit",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["total"].as_u64().unwrap() > 3);
    assert_eq!(v["characters"].as_array().unwrap().len(), 3);

    let out = run(&["axioms-test", "--cases", "60", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["cases"], 60);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
}
