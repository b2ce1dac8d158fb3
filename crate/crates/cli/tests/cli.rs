use std::fs;
use std::process::Command;

use hornheat_cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hornheat").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Same fields; numbers may differ in the last few bits.
fn assert_matches_golden(actual: &str, golden: &str) {
    let (a, g): (Vec<_>, Vec<_>) = (actual.lines().collect(), golden.lines().collect());
    assert_eq!(a.len(), g.len(), "line count\n{actual}");
    assert_eq!(a[0], g[0], "header");
    for (la, lg) in a.iter().zip(&g).skip(1) {
        let (fa, fg): (Vec<_>, Vec<_>) = (la.split(',').collect(), lg.split(',').collect());
        assert_eq!(fa.len(), fg.len(), "{la}");
        for (x, y) in fa.iter().zip(&fg) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => assert!((u - v).abs() <= 1e-10 * v.abs().max(1.0), "{x} vs {y}"),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn envelope_row_matches_golden() {
    let (code, out, _) = call(&["envelope", "--t", "1", "--x", "5,0", "--y", "5,0.1"]);
    assert_eq!(code, 0);
    assert_matches_golden(&out, include_str!("golden/envelope.csv"));
}

#[test]
fn asymptotics_matches_golden() {
    let (code, out, _) = call(&["asymptotics"]);
    assert_eq!(code, 0);
    assert_matches_golden(&out, include_str!("golden/asymptotics.csv"));
}

#[test]
fn log_power_table_matches_golden() {
    let args = [
        "example-table",
        "--t",
        "0.5",
        "--kind",
        "log_power",
        "--theta",
        "2",
        "--x",
        "20,0",
        "--y",
        "20,0",
    ];
    let (code, out, _) = call(&args);
    assert_eq!(code, 0);
    assert_matches_golden(&out, include_str!("golden/example_table.csv"));
}

#[test]
fn headers_follow_dimension() {
    let (code, out, _) = call(&["--dim", "3", "regime", "--t", "0.1", "--x", "2,0,0", "--y", "2,0.1,0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("t,x1,x2,x3,y1,y2,y3,regime,t0_x,t0_y\n"), "{out}");
    assert!(out.lines().nth(1).unwrap().contains(",ShortTime,"));
}

#[test]
fn usage_errors_exit_one() {
    let cases: [&[&str]; 6] = [
        &["envelope", "--t", "1", "--x", "5,0"],
        &["envelope", "--t", "1", "--x", "5,0", "--y", "5,0", "--bogus", "1"],
        &["--set", "nope=1", "asymptotics"],
        &["envelope", "--t", "1", "--x", "5,0,0", "--y", "5,0"],
        &["envelope", "--t", "-1", "--x", "5,0", "--y", "5,0"],
        &["--config", "/nonexistent/hornheat.cfg", "asymptotics"],
    ];
    for args in cases {
        let (code, out, err) = call(args);
        assert_eq!(code, 1, "{args:?}");
        assert!(out.is_empty() && !err.is_empty(), "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("simulate"));
}

#[test]
fn simulate_is_reproducible() {
    let a = call(&["simulate", "--mode", "survival", "--seed", "7"]);
    let b = call(&["simulate", "--mode", "survival", "--seed", "7"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let row: Vec<&str> = a.1.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "survival");
    let est: f64 = row[row.len() - 3].parse().unwrap();
    assert!(est > 0.0 && est <= 1.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "mc.paths = 50\nmc.seed = 3\n").unwrap();
    let path = cfg.to_str().unwrap();
    let (code, out, _) = call(&["--config", path, "simulate", "--mode", "intensity", "--paths", "80"]);
    assert_eq!(code, 0);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[6], row[8]), ("80", "3"));
}

#[test]
fn verify_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.cfg");
    fs::write(
        &spec,
        "t_grid = 0.05, 0.1\npair = 1,0 ; 1,0\npair = 2,0 ; 2,0.1\nmc.paths = 2000\nmc.step = 0.005\nmc.box_radius = 0.1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let (code, out, err) = call(&[
        "verify",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x1,x2,y1,y2,regime,log_lower,log_upper,log_mc,std_error,ratio_lo,ratio_hi,censored"
    );
    assert_eq!(lines.count(), 4);
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert_eq!(summary, out);
}

fn binary(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hornheat"))
        .args(args)
        .env("HORNHEAT_THREADS", threads)
        .output()
        .unwrap()
}

#[test]
fn binary_output_is_thread_independent() {
    let args = [
        "--set",
        "mc.threads=4",
        "simulate",
        "--mode",
        "kernel",
        "--t",
        "0.05",
        "--x",
        "1,0",
        "--y",
        "1,0.1",
        "--paths",
        "20000",
        "--box-radius",
        "0.1",
        "--seed",
        "11",
    ];
    let one = binary(&args, "1");
    let four = binary(&args, "4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn binary_exit_codes() {
    assert_eq!(binary(&["envelope", "--t", "1"], "1").status.code(), Some(1));
    assert_eq!(binary(&["--version"], "1").status.code(), Some(0));
    assert_eq!(binary(&["asymptotics"], "zero").status.code(), Some(0));
    assert_eq!(
        binary(&["simulate", "--mode", "intensity", "--paths", "10"], "zero")
            .status
            .code(),
        Some(1)
    );
}
