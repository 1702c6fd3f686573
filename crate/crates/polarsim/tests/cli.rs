//! Runs the `polarsim` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn polarsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .to_string()
}

const FAILING: &str = r#"
[model]
kind = "model4"
D = 1.0
tau = 1.0
b = 50.0
gamma = 1.0
k = 1.0
k0 = 1.0
delta = 50.0

[grid]
n = 32

[solver]
dt = 1.0
t_end = 10.0
retry_limit = 0

[initial]
kind = "expression"
u = "1 + 0.5 * cos(pi * x)"
v = "1"
"#;

#[test]
fn convergent_scenario_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("model4_convergent.cfg");
    let out = polarsim(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(value(&summary, "status"), "completed");
    assert_eq!(value(&summary, "omega_in_f_lambda"), "pass");
    assert!(value(&summary, "decay_rate").parse::<f64>().unwrap() > 0.0);
    for file in [
        "diagnostics.txt",
        "conditions.txt",
        "summary.txt",
        "final.txt",
        "snapshots/snap_000000.txt",
    ] {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(
            text.contains(&format!(
                "config_hash = {}",
                value(&summary.replace("# ", ""), "config_hash")
            )),
            "{file}"
        );
    }
}

#[test]
fn negative_rate_is_a_config_error_naming_the_field() {
    let cfg = scenario("model4_convergent.cfg");
    let out = polarsim(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "delta=-1",
        "--out",
        "/nonexistent",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("delta"), "{}", stderr(&out));
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, FAILING.replace("n = 32", "n = 32\nspacing = 3")).unwrap();
    let out = polarsim(&["check", "--config", path.to_str().unwrap(), "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("spacing"), "{}", stderr(&out));
    let out = polarsim(&[
        "simulate",
        "--config",
        dir.path().join("missing.cfg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fail.cfg");
    fs::write(&path, FAILING).unwrap();
    let out_dir = dir.path().join("out");
    let out = polarsim(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    for file in [
        "diagnostics.txt",
        "conditions.txt",
        "summary.txt",
        "last_good.txt",
    ] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(value(&summary, "status").starts_with("failed"));
}

#[test]
fn equilibrium_command() {
    let cfg = scenario("model4_convergent.cfg");
    let cfg = cfg.to_str().unwrap();
    let out = polarsim(&["equilibrium", "--config", cfg]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(value(&text, "residual").parse::<f64>().unwrap().abs() <= 1e-12);
    assert_eq!(value(&text, "sign_changes"), "1");

    let out = polarsim(&["equilibrium", "--config", cfg, "--lambda", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lambda"));

    let out = polarsim(&["equilibrium", "--config", cfg, "--param", "gamma=0"]);
    let text = stdout(&out);
    assert!(
        value(&text, "constant_a_difference")
            .parse::<f64>()
            .unwrap()
            <= 1e-12
    );
}

#[test]
fn ode_check_and_scan_commands() {
    let cfg = scenario("model4_convergent.cfg");
    let cfg = cfg.to_str().unwrap();
    let out = polarsim(&["ode", "--config", cfg, "--u0", "0.5", "--t-end", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).lines().filter(|l| !l.starts_with('#')).count() > 100);

    let out = polarsim(&["check", "--config", cfg, "--mu2", "discrete", "--c4", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("technical") && text.contains("discrete"));

    let out = polarsim(&[
        "scan",
        "--config",
        cfg,
        "--param",
        "gamma=0",
        "--parameter",
        "D",
        "--from",
        "0.01",
        "--to",
        "10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("# roots: 0"));

    let out = polarsim(&[
        "scan",
        "--config",
        cfg,
        "--parameter",
        "tau",
        "--from",
        "0.1",
        "--to",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = scenario("model4_perturbed.cfg");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = polarsim(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--param",
            "t_end=5",
            "--seed",
            "3",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for file in [
        "diagnostics.txt",
        "summary.txt",
        "final.txt",
        "conditions.txt",
    ] {
        assert_eq!(
            fs::read(dirs[0].path().join(file)).unwrap(),
            fs::read(dirs[1].path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn single_point_sweep_matches_simulate() {
    let cfg = scenario("model1_lyapunov.cfg");
    let cfg = cfg.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let sweep = dir.path().join("sweep");
    let out = polarsim(&[
        "simulate",
        "--config",
        cfg,
        "--param",
        "D=0.4",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = polarsim(&[
        "sweep",
        "--config",
        cfg,
        "--vary",
        "D",
        "--values",
        "0.4",
        "--out",
        sweep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(sim.join("diagnostics.txt")).unwrap(),
        fs::read(sweep.join("run_000/diagnostics.txt")).unwrap()
    );
}

#[test]
fn sweeps_are_sorted_deterministic_and_survive_failures() {
    let cfg = scenario("model2_lyapunov.cfg");
    let cfg = cfg.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("s{i}"));
        let out = Command::new(env!("CARGO_BIN_EXE_polarsim"))
            .args([
                "sweep",
                "--config",
                cfg,
                "--vary",
                "D",
                "--values",
                "0.3,-1,0.1,0.2",
                "--param",
                "t_end=1",
            ])
            .args(["--out", out_dir.to_str().unwrap()])
            .env("POLARSIM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        summaries.push(fs::read_to_string(out_dir.join("sweep_summary.txt")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
    let rows: Vec<&str> = summaries[0]
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].contains(" failed "), "{}", rows[0]);
    let values: Vec<f64> = rows
        .iter()
        .map(|r| r.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!(rows[1..].iter().all(|r| r.contains(" ok ")));
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let cfg = scenario("model2_lyapunov.cfg");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_polarsim"))
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--vary",
            "D",
            "--values",
            "0.3",
        ])
        .args(["--out", dir.path().to_str().unwrap()])
        .env("POLARSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
