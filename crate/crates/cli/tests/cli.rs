use std::path::Path;
use std::process::Command;

use phi4_cli::table::parse_ftle_csv;
use phi4_cli::{run_config, run_sweep, ExperimentSpec};

fn phi4(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_phi4"))
        .args(args)
        .env_remove("PHI4_WORKERS")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn small_sweep() -> ExperimentSpec {
    ExperimentSpec::from_json_str(
        r#"{"mode": "sweep",
            "solver": {"cutoff": 4, "dt": 0.01, "horizon": 0.2},
            "alphas": [-1.0, 2.0], "seeds": {"start": 10, "count": 4}, "burn_in": 0.1}"#,
    )
    .unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn empty_sweep_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"mode": "sweep", "alphas": [], "seeds": [1]}"#).unwrap();
    assert_eq!(run_config(&cfg), 2);
    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(run_config(&cfg), 2);
    assert_eq!(run_config(&dir.path().join("missing.json")), 2);
}

#[test]
fn minimal_config_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"mode": "wick-check", "solver": {{"cutoff": 2}}, "wick": {{"cutoffs": [2], "samples": 50}},
                "out_dir": {:?}}}"#,
            out
        ),
    )
    .unwrap();
    assert_eq!(run_config(&cfg), 0);
    let m: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(m["mode"], "wick-check");
    assert_eq!(m["config"]["wick"]["samples"], 50);
    assert!(m["version"].is_string() && m["seeds"].is_array());
    assert!(read(&out.join("wick.csv")).starts_with("N,m,C_N,emp_var,se,zscore\r\n"));
}

#[test]
fn degenerate_noise_gives_lambda_alpha() {
    // σ = 0 keeps Φ ≡ 0, so q ≡ 0 and λ_T = α
    let mut spec = small_sweep();
    spec.solver.noise_amplitude = 0.0;
    spec.alphas = vec![-20.0];
    spec.seeds = Some(phi4_cli::spec::SeedSet::List(vec![0]));
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&spec, dir.path(), 1).unwrap();
    let t = parse_ftle_csv(&read(&dir.path().join("ftle.csv"))).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!((t.rows[0].lambda + 20.0).abs() < 1e-10);
}

#[test]
fn rerun_adds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_sweep();
    let first = run_sweep(&spec, dir.path(), 2).unwrap();
    assert_eq!((first.jobs, first.written), (8, 8));
    let before = read(&dir.path().join("ftle.csv"));
    let again = run_sweep(&spec, dir.path(), 2).unwrap();
    assert_eq!((again.skipped, again.written), (8, 0));
    assert_eq!(read(&dir.path().join("ftle.csv")), before);
}

#[test]
fn interrupted_sweep_resumes_to_the_same_table() {
    let spec = small_sweep();
    let whole = tempfile::tempdir().unwrap();
    run_sweep(&spec, whole.path(), 1).unwrap();
    let want = read(&whole.path().join("ftle.csv"));

    // a kill leaves a prefix, possibly ending mid-line
    let cut = tempfile::tempdir().unwrap();
    let lines: Vec<&str> = want.split_inclusive('\n').collect();
    let mut partial: String = lines[..4].concat();
    partial.push_str(&lines[4][..lines[4].len() / 2]);
    std::fs::write(cut.path().join("ftle.csv"), partial).unwrap();
    let s = run_sweep(&spec, cut.path(), 3).unwrap();
    assert_eq!((s.skipped, s.written), (3, 5));
    assert_eq!(read(&cut.path().join("ftle.csv")), want);
}

#[test]
fn table_does_not_depend_on_workers() {
    let spec = small_sweep();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep(&spec, a.path(), 1).unwrap();
    run_sweep(&spec, b.path(), 4).unwrap();
    for f in ["ftle.csv", "failures.csv", "manifest.json"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn failed_jobs_are_recorded_and_skipped() {
    let mut spec = small_sweep();
    spec.solver.dt = 0.05;
    spec.solver.horizon = 0.5;
    spec.burn_in = Some(0.05);
    spec.alphas = vec![1.0, 400.0];
    let dir = tempfile::tempdir().unwrap();
    let s = run_sweep(&spec, dir.path(), 2).unwrap();
    assert_eq!((s.written, s.failed), (4, 4));
    let failures = read(&dir.path().join("failures.csv"));
    assert_eq!(failures.lines().count(), 5);
    assert!(failures.lines().skip(1).all(|l| l.starts_with("400.0,") && l.contains("non-finite")));
    let again = run_sweep(&spec, dir.path(), 2).unwrap();
    assert_eq!(again.skipped, 8);
}

#[test]
fn corrupt_table_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ftle.csv"), "alpha,seed\r\n1,2\r\n").unwrap();
    let e = run_sweep(&small_sweep(), dir.path(), 1).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn verbs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let cfg = d("c.json");
    std::fs::write(
        &cfg,
        r#"{"solver": {"cutoff": 4, "dt": 0.01, "horizon": 0.1, "snapshot_stride": 5}, "burn_in": 0.1}"#,
    )
    .unwrap();

    assert_eq!(phi4(&["--config", &cfg, "--out", &d("st"), "stationary"]).0, 0);
    let q = d("st/q.path");
    let (code, _) = phi4(&["--config", &cfg, "--out", &d("f"), "ftle", "--alpha=-1,2", "--input", &q]);
    assert_eq!(code, 0);
    let table = read(&dir.path().join("f/ftle.csv"));
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["alpha", "T", "seed", "lambda_T", "iters", "residual", "converged"]);
    // shifting α by 3 shifts λ_T by 3
    let l: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((l[1] - l[0] - 3.0).abs() < 1e-9);

    let (code, stdout) = phi4(&["--out", &d("b"), "besov", "--input", &d("st/phi.path"), "--beta", "-0.1"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("block -1"));
    assert_eq!(phi4(&["--config", &cfg, "--out", &d("s"), "simulate"]).0, 0);
    assert!(read(&dir.path().join("s/diagnostics.csv")).starts_with("step,t,r_regular"));

    let (code, _) = phi4(&["--out", &d("t"), "steer", "--alpha", "-2", "--lambdas", "-1,1"]);
    assert_eq!(code, 0);
    assert_eq!(read(&dir.path().join("t/steer.csv")).lines().count(), 3);

    assert_eq!(phi4(&["--out", &d("t"), "steer", "--lambdas", "1,x"]).0, 2);
    assert_eq!(phi4(&["--out", &d("x"), "besov"]).0, 2);
    assert_eq!(phi4(&["--config", &cfg, "--out", &d("x"), "run"]).0, 2);
}
