use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spikelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikelab"))
        .args(args)
        .env_remove("SPIKELAB_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn file_names(m: &Value) -> Vec<String> {
    m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_horizon_gives_one_row() {
    let tmp = TempDir::new().unwrap();
    let out = spikelab(&["twostate", "--gamma", "400", "--T", "0", "--q0", "0.25", "--output-dir", s(tmp.path())]);
    ok(&out);
    let csv = fs::read_to_string(tmp.path().join("twostate_0000.csv")).unwrap();
    assert_eq!(csv, "t,q\n0.0000000000000000e0,2.5000000000000000e-1\n");
    let m = manifest(tmp.path());
    assert_eq!(m["mode"], "twostate");
    assert_eq!(m["files"][0]["bytes"].as_u64().unwrap(), csv.len() as u64);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let base = ["twostate", "--gamma", "100", "--T", "1", "--trajectories", "4", "--seed", "11"];
    let mut args_a = base.to_vec();
    args_a.extend(["--workers", "1", "--output-dir", s(a.path())]);
    let mut args_b = base.to_vec();
    args_b.extend(["--workers", "3", "--output-dir", s(b.path())]);
    ok(&spikelab(&args_a));
    ok(&spikelab(&args_b));
    let ma = manifest(a.path());
    let names = file_names(&ma);
    assert_eq!(names.len(), 4);
    for name in names.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    // different trajectories differ
    assert_ne!(
        fs::read(a.path().join("twostate_0000.csv")).unwrap(),
        fs::read(a.path().join("twostate_0001.csv")).unwrap()
    );
}

#[test]
fn config_file_flags_and_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    let from_file = tmp.path().join("from-file");
    let from_env = tmp.path().join("from-env");
    fs::write(
        &cfg,
        format!(
            "mode = \"twostate\"\nseed = 5\noutput_dir = \"{}\"\n[params]\ngamma = 50\nT = 0.5\ndt = 1e-3\n",
            s(&from_file)
        ),
    )
    .unwrap();
    // the environment overrides the file
    let out = Command::new(env!("CARGO_BIN_EXE_spikelab"))
        .args(["twostate", "--config", s(&cfg), "--T", "0.25"])
        .env("SPIKELAB_OUTPUT_DIR", &from_env)
        .output()
        .unwrap();
    ok(&out);
    assert!(!from_file.exists());
    let m = manifest(&from_env);
    assert_eq!(m["seed"], 5);
    // the flag overrides the file
    assert_eq!(m["config"]["params"]["T"], 0.25);
    assert_eq!(m["config"]["params"]["gamma"], 50);
    let rows = fs::read_to_string(from_env.join("twostate_0000.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 251);
}

#[test]
fn invalid_configs_name_the_problem() {
    let tmp = TempDir::new().unwrap();
    let out = spikelab(&["twostate", "--T", "1", "--output-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing required key `gamma`"));

    let out = spikelab(&["twostate", "--gamma", "1", "--T", "1", "--p", "1.5", "--output-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`p`"));

    let out = spikelab(&["twostate", "--set", "gama=3", "--output-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `gama`"));
}

#[test]
fn coupled_sweep_then_hausdorff_sweep() {
    let tmp = TempDir::new().unwrap();
    let sweep_dir = tmp.path().join("sweep");
    ok(&spikelab(&[
        "coupled-sweep", "--gammas", "100,1000,10000", "--L", "20", "--dt_eff", "1e-5", "--delta", "1e-2",
        "--output-dir", s(&sweep_dir),
    ]));
    let m = manifest(&sweep_dir);
    let names = file_names(&m);
    for g in ["1e2", "1e3", "1e4"] {
        assert!(names.contains(&format!("path_gamma_{g}.csv")), "{names:?}");
        assert!(names.contains(&format!("tinv_gamma_{g}.csv")));
    }
    for name in ["beta.csv", "clock.csv", "limit_graph.csv", "limit_set.csv", "chain.csv", "hausdorff.csv"] {
        assert!(names.contains(&name.to_string()), "{name}");
    }
    let table = fs::read_to_string(sweep_dir.join("hausdorff.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("gamma,hausdorff,sup_tinv_minus_clock,tinv_end,phi_capped\n"));

    // distances recomputed from the written files match the table
    let h = m["results"]["horizon"].as_f64().unwrap();
    let out_dir = tmp.path().join("hs");
    let graph = |g: &str| s(&sweep_dir.join(format!("graph_gamma_{g}.csv"))).to_string();
    let (g2, g4) = (graph("1e2"), graph("1e4"));
    ok(&spikelab(&[
        "hausdorff-sweep", "--reference", s(&sweep_dir.join("limit_set.csv")), "--candidates", &g2, &g4,
        "--H", &format!("{h:e}"), "--deltas", "1e-2", "--output-dir", s(&out_dir),
    ]));
    let rows: Vec<Vec<String>> = fs::read_to_string(out_dir.join("hausdorff_sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let written: Vec<f64> = m["results"]["hausdorff"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), written[0]);
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), written[2]);
}

#[test]
fn belavkin_from_a_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("b.toml");
    fs::write(
        &cfg,
        "[params]\ndim = 2\ngamma = 4.0\namplitudes = [0, 0, 0.5, 0, 0.8, 0, 0, 0]\nn_values = [0.5, 0, -0.5, 0]\nenergies = [0.5, -0.5]\npopulations = [0.4, 0.6]\ndt = 1e-3\nT = 0.1\n",
    )
    .unwrap();
    ok(&spikelab(&["belavkin", "--config", s(&cfg), "--output-dir", s(tmp.path())]));
    let csv = fs::read_to_string(tmp.path().join("belavkin_0000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,re_rho_11,im_rho_11,re_rho_12,im_rho_12,re_rho_21,im_rho_21,re_rho_22,im_rho_22"
    );
    assert_eq!(lines.count(), 101);
    assert!(manifest(tmp.path())["results"]["trajectories"][0]["max_trace_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn limit_sample_writes_chain_and_spikes() {
    let tmp = TempDir::new().unwrap();
    ok(&spikelab(&["limit-sample", "--H", "5", "--x0", "0.4", "--trajectories", "2", "--output-dir", s(tmp.path())]));
    for i in 0..2 {
        let chain = fs::read_to_string(tmp.path().join(format!("chain_{i:04}.csv"))).unwrap();
        assert!(chain.starts_with("t,state\n"));
        let spikes = fs::read_to_string(tmp.path().join(format!("spikes_{i:04}.csv"))).unwrap();
        let mut rows = spikes.lines();
        assert_eq!(rows.next(), Some("t,state,m"));
        // the spike at time 0 starts the chain in its own state
        let first: Vec<&str> = rows.next().unwrap().split(',').collect();
        let state0 = chain.lines().nth(1).unwrap().split(',').nth(1).unwrap();
        assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(first[1], state0);
    }
}

#[test]
fn validate_writes_a_report() {
    let tmp = TempDir::new().unwrap();
    let out = spikelab(&["validate", "--criteria", "2,6,9", "--output-dir", s(tmp.path())]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS] criterion")).count(), 3, "{stdout}");
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["criteria"].as_array().unwrap().len(), 3);
    assert_eq!(report["failed"], 0);
    assert_eq!(report["config"]["seed"], 20240611u64);

    let out = spikelab(&["validate", "--criteria", "12", "--output-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}
