//! End-to-end tests of the `geogame` binary: exit codes, file emission,
//! and byte determinism across runs and worker counts.

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_geogame");

const BASE_MODEL: &str = r#"
[model]
rho = 0.05
n_agents = 4

[model.agent]
gamma = 0.1
mu = 0.2
nu = 0.1
theta = 1.0
eta = 0.5
q0 = 1.0
"#;

fn write_config(dir: &Path, name: &str, head: &str, tail: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("{head}\n{BASE_MODEL}\n{tail}")).unwrap();
    path
}

fn run(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => {
            cmd.env("GEOGAME_THREADS", t);
        }
        None => {
            cmd.env_remove("GEOGAME_THREADS");
        }
    }
    cmd.output().expect("binary runs")
}

#[test]
fn validate_accepts_good_config_and_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(
        dir.path(),
        "good.toml",
        "schema_version = 1\nscenario = \"equilibria\"\nseed = 1",
        "",
    );
    let out = run(&["validate", good.to_str().unwrap()], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config ok"));

    // Missing rho: deserialization failure, exit 1, no files.
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "schema_version = 1\nscenario = \"equilibria\"\nseed = 1\n[model]\nn_agents = 2\n[model.agent]\ngamma = 0.1\nmu = 0.1\nnu = 0.1\ntheta = 1.0\neta = 0.1\nq0 = 1.0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("never");
    let out = run(
        &["run", bad.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "no partial files on parse failure");
}

#[test]
fn equilibria_csv_carries_the_baseline_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.toml");
    std::fs::write(
        &cfg,
        r#"
schema_version = 1
scenario = "equilibria"
seed = 42

[model]
rho = 0.05
n_agents = 10

[model.agent]
gamma = 0.1
mu = 0.2
nu = 0.1
theta = 1.0
eta = 0.5
q0 = 1.0
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(
        &["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        None,
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("equilibria.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# geogame"));
    assert_eq!(
        lines.next().unwrap(),
        "agent,alpha_cl,alpha_ol,alpha_sp,tau,growth"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let parse = |s: &str| s.parse::<f64>().unwrap();
    assert!((parse(first[1]) - 0.05 / 2.05).abs() < 1e-15);
    assert!((parse(first[2]) - 0.025).abs() < 1e-15);
    assert!((parse(first[3]) - 0.02).abs() < 1e-15);
    assert!((parse(first[4]) - 9.0).abs() < 1e-12);
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"ordering_ok\": true"));
}

#[test]
fn invariant_violations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "neg.toml",
        "schema_version = 1\nscenario = \"equilibria\"\nseed = 1",
        "",
    );
    let text = std::fs::read_to_string(&cfg).unwrap().replace("gamma = 0.1", "gamma = -1.0");
    std::fs::write(&cfg, text).unwrap();
    let out = run(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn unwritable_output_directory_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "eq.toml",
        "schema_version = 1\nscenario = \"equilibria\"\nseed = 1",
        "",
    );
    // A file where the directory should go.
    let blocker = dir.path().join("blocked");
    std::fs::write(&blocker, b"x").unwrap();
    let out = run(
        &["run", cfg.to_str().unwrap(), "--out", blocker.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_mode_flags_tolerance_breaches_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // Ns too small for the welfare-gap slope to be within -1 +/- 0.01:
    // the small-N curvature pushes the fitted slope away from -1.
    let cfg = write_config(
        dir.path(),
        "poa.toml",
        "schema_version = 1\nscenario = \"tax_poa\"\nseed = 1",
        "[controls]\nns = [2, 3, 4]\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--check",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    // Without --check the same run completes with exit 0.
    let out = run(
        &["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_mode_passes_on_a_sound_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "conv.toml",
        "schema_version = 1\nscenario = \"convergence\"\nseed = 5",
        "[controls]\nns = [10, 100, 1000]\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--check",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let slope = std::fs::read_to_string(out_dir.join("slope.json")).unwrap();
    assert!(slope.contains("\"slope_pass\": true"));
}

fn read_all_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn outputs_are_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.toml",
        "schema_version = 1\nscenario = \"mc_validate\"\nseed = 97",
        "[controls]\nn_draws = 4\nn_paths = 1500\nn_steps = 192\nspill = true\n",
    );
    let mut snapshots = Vec::new();
    for (label, threads) in [("a1", Some("1")), ("a4", Some("4")), ("a16", Some("16")), ("b1", Some("1"))] {
        let out_dir = dir.path().join(label);
        let out = run(
            &["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
            threads,
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        snapshots.push(read_all_outputs(&out_dir));
    }
    for other in &snapshots[1..] {
        assert_eq!(snapshots[0].len(), other.len());
        for ((name_a, bytes_a), (name_b, bytes_b)) in snapshots[0].iter().zip(other) {
            assert_eq!(name_a, name_b);
            assert_eq!(bytes_a, bytes_b, "file {name_a} differs between runs");
        }
    }
}

#[test]
fn spilled_ensemble_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.toml",
        "schema_version = 1\nscenario = \"mc_validate\"\nseed = 11",
        "[controls]\nn_draws = 2\nn_paths = 500\nn_steps = 64\nspill = true\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(
        &["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        None,
    );
    assert!(out.status.success());
    let (sidecar, data) = geogame_cli::spill::read_ensemble(&out_dir, "ensemble").unwrap();
    assert_eq!(sidecar.shape[2], 4);
    assert_eq!(data.len(), sidecar.shape.iter().product::<usize>());
    assert!(data.iter().all(|v| v.is_finite()));
    assert_eq!(sidecar.seed, 11);
}
