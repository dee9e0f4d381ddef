use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str], out_dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conserved-rd"))
        .args(args)
        .arg("--output-dir")
        .arg(out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn equilibrium_prints_regime_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference_q4.json");
    let o = run(
        &["equilibrium", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("regime: Q4"), "{text}");
    assert!(text.contains("I3c  1160 >= 528"), "{text}");
    assert!(text.contains("I4c  928 >= 660"), "{text}");
    assert!(text.contains("D1=132"));
    for v in [
        "13.5757575758",
        "6.4242424242",
        "8.7878787879",
        "7.0303030303",
        "4.3939393939",
    ] {
        assert!(text.contains(v), "missing {v}");
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.lines().any(|l| l == "regime=Q4"));
}

#[test]
fn simulate_at_equilibrium_exits_zero_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("at_equilibrium.json");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("steady_time=0\n"));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("t,sup_dist_to_equilibrium,mass_u,mass_v,combo1_drift,combo2_drift,min_field_value,branch_pattern")
    );
    assert!(lines.next().unwrap().ends_with(",GG"));
    let snap = std::fs::read_to_string(dir.path().join("snapshot_0.csv")).unwrap();
    assert!(snap.starts_with("x,u1,u2,v1,v2,v3,v4\n"));
    assert_eq!(snap.lines().count(), 129);
}

#[test]
fn simulate_reports_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("reference_q4.json")).unwrap())
            .unwrap();
    cfg["t_max"] = serde_json::json!(0.5);
    cfg["grid"]["n_cells"] = serde_json::json!(32);
    let path = dir.path().join("short.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = run(
        &["simulate", "--config", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("steady=false"));
}

#[test]
fn iterate_reports_order_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference_q4.json");
    let o = run(
        &["iterate", "--config", cfg.to_str().unwrap(), "--csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(
        text.contains("verdict: stopped: bracket order violated at iteration 1"),
        "{text}"
    );
    let csv = std::fs::read_to_string(dir.path().join("bracket.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn sweep_is_deterministic_and_clean() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg = config("reference_q4.json");
    let args = [
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "1000",
        "--seed",
        "7",
    ];
    let a = run(&args, dir_a.path());
    let b = run(&args, dir_b.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let sa = std::fs::read(dir_a.path().join("summary.txt")).unwrap();
    let sb = std::fs::read(dir_b.path().join("summary.txt")).unwrap();
    assert_eq!(sa, sb);
    let text = String::from_utf8(sa).unwrap();
    assert!(text.contains("samples=1000\n"));
    assert!(text.contains("no_regime=0\n"));
    assert!(text.contains("residual_failures=0\n"));
    let counted: usize = text
        .lines()
        .filter(|l| l.starts_with("regime_Q"))
        .map(|l| l.split('=').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, 1000);
}

#[test]
fn collapsed_sweep_is_all_q4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference_q4.json");
    let o = run(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--samples",
            "20",
            "--collapse",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("regime_Q4=20\n"));
}

#[test]
fn verify_flags_the_bracket_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("reference_q4.json")).unwrap())
            .unwrap();
    cfg["grid"]["n_cells"] = serde_json::json!(32);
    let path = dir.path().join("coarse.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = run(&["verify", "--config", path.to_str().unwrap()], dir.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(3), "{text}");
    for check in [
        "equilibrium_residual",
        "steady_state",
        "conservation",
        "branch_lock",
        "positivity_boundedness",
    ] {
        assert!(text.contains(&format!("PASS {check}")), "{check}: {text}");
    }
    assert!(text.contains("FAIL bracket_convergence"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(
        &["equilibrium", "--config", "/nonexistent.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"params": {"a1": -1}}"#).unwrap();
    let o = run(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
