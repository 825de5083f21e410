use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIO: &str = r#"name = "tiny"
duration = 12
seed = 7
motion = { sigma = 0.1, sigma_u = 0.0 }

[[objects]]
birth = 0
death = 12
initial = { x = 500.0, vx = 3.0, y = -200.0, vy = 2.0, omega = 0.0 }

[[objects]]
birth = 4
death = 10
initial = { x = 1100.0, vx = -2.0, y = 400.0, vy = 1.0, omega = 0.0 }
"#;

fn ddptrack(args: &[&str]) -> Output {
    // run next to the config so a relative output_dir stays inside the temp dir
    let cwd = args
        .windows(2)
        .find(|w| w[0] == "--config")
        .and_then(|w| Path::new(w[1]).parent())
        .map_or_else(std::env::temp_dir, Path::to_path_buf);
    Command::new(env!("CARGO_BIN_EXE_ddptrack"))
        .current_dir(cwd)
        .args(args)
        .env_remove("DDPTRACK_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A temp workspace holding the tiny scenario and an experiment config.
fn workspace(model: &str, runs: usize, extra: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), SCENARIO).unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        format!(
            "scenario = \"tiny.toml\"\nmodel = \"{model}\"\nmc_runs = {runs}\nroot_seed = 99\nsweeps = 6\nburn_in = 2\noutput_dir = \"out\"\n{extra}"
        ),
    )
    .unwrap();
    (dir, config)
}

fn run_ok(args: &[&str]) -> String {
    let o = ddptrack(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_shipped_scenarios() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let out = run_ok(&["scenario", "validate", s(&path)]);
        assert!(out.contains(": ok"), "{out}");
    }
}

#[test]
fn validate_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "name = \"bad\"\nduration = 10\n\n[[objects]]\nbirth = 8\ndeath = 3\ninitial = { x = 100.0, vx = 0.0, y = 0.0, vy = 0.0, omega = 0.0 }\n").unwrap();
    let o = ddptrack(&["scenario", "validate", s(&path)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains(&format!("{}:4:", path.display())), "{}", stderr(&o));
}

#[test]
fn bad_experiment_config_is_line_anchored() {
    let (dir, config) = workspace("ddp", 0, "");
    let o = ddptrack(&["run", "--config", s(&config)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains(&format!("{}:3:", config.display())), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_scene_reports_zero_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.toml");
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/empty.toml");
    fs::write(
        &config,
        format!("scenario = {:?}\nmodel = \"ddp\"\nmc_runs = 1\nsweeps = 4\nburn_in = 1\n", s(&scenario)),
    )
    .unwrap();
    let out = dir.path().join("res");
    run_ok(&["run", "--config", s(&config), "--out", s(&out)]);
    let card = fs::read_to_string(out.join("runs/run_0000/cardinality.csv")).unwrap();
    let mut lines = card.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let est = header.iter().position(|h| *h == "estimated").unwrap();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        assert_eq!(row.split(',').nth(est), Some("0"), "{row}");
    }
}

#[test]
fn fifty_runs_produce_a_full_inventory() {
    let (dir, config) = workspace("ddp", 50, "");
    run_ok(&["run", "--config", s(&config)]);
    let out = dir.path().join("out");
    let runs: Vec<_> = fs::read_dir(out.join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 50);
    for r in 0..50 {
        let run = out.join(format!("runs/run_{r:04}"));
        for f in ["estimates.csv", "cardinality.csv", "ospa.csv", "record.json"] {
            assert!(run.join(f).is_file(), "missing {}", run.join(f).display());
        }
    }
    assert_eq!(fs::read_to_string(out.join("aggregate.csv")).unwrap().lines().count(), 13);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let seeds = manifest["seeds"].as_array().unwrap();
    assert_eq!(seeds.len(), 50);
    let mut unique: Vec<u64> = seeds.iter().map(|v| v.as_u64().unwrap()).collect();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), 50);
}

#[test]
fn manifest_hashes_every_output_file() {
    use sha2::{Digest, Sha256};
    let (dir, config) = workspace("ddp", 3, "");
    run_ok(&["run", "--config", s(&config)]);
    let out = dir.path().join("out");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    let mut listed = Vec::new();
    for f in files {
        let rel = f["path"].as_str().unwrap();
        let bytes = fs::read(out.join(rel)).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{rel}");
        listed.push(rel.replace('\\', "/"));
    }
    // every file on disk apart from the manifest itself is listed
    let mut stack = vec![out.clone()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(&out).unwrap().to_str().unwrap().replace('\\', "/");
                assert!(listed.contains(&rel), "{rel} not in manifest");
            }
        }
    }
}

#[test]
fn zero_discount_dpy_matches_ddp_bit_for_bit() {
    let (dir, config) = workspace("ddp", 4, "[hyper]\nalpha_prior = { shape = 1.0, rate = 0.5 }\ndiscount = 0.0\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["run", "--config", s(&config), "--out", s(&a)]);
    run_ok(&["run", "--config", s(&config), "--model", "dpy", "--out", s(&b)]);
    assert_eq!(fs::read(a.join("aggregate.csv")).unwrap(), fs::read(b.join("aggregate.csv")).unwrap());
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let (dir, config) = workspace("dpy", 3, "[hyper]\nalpha_prior = { shape = 1.0, rate = 0.5 }\ndiscount = 0.2\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["run", "--config", s(&config), "--out", s(&a)]);
    run_ok(&["run", "--config", s(&config), "--out", s(&b)]);
    for f in ["aggregate.csv", "summary.json", "runs/run_0002/estimates.csv", "runs/run_0001/ospa.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_results() {
    let (dir, config) = workspace("ddp", 2, "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["run", "--config", s(&config), "--out", s(&a)]);
    run_ok(&["run", "--config", s(&config), "--seed", "5", "--out", s(&b)]);
    assert_ne!(fs::read(a.join("aggregate.csv")).unwrap(), fs::read(b.join("aggregate.csv")).unwrap());
}

#[test]
fn comparing_a_directory_with_itself_gives_zero() {
    let (dir, config) = workspace("ddp", 3, "");
    let out = dir.path().join("out");
    run_ok(&["run", "--config", s(&config)]);
    let cmp = dir.path().join("cmp");
    let stdout = run_ok(&["compare", "--a", s(&out), "--b", s(&out), "--out", s(&cmp)]);
    assert!(stdout.contains("not significant"), "{stdout}");
    let csv = fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "difference").unwrap();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    for row in rows {
        let d: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
        assert_eq!(d, 0.0);
    }
}

#[test]
fn baseline_comparison_emits_a_signed_series() {
    let (dir, config) = workspace("ddp", 3, "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["run", "--config", s(&config), "--out", s(&a)]);
    run_ok(&["run", "--config", s(&config), "--model", "dpm-baseline", "--out", s(&b)]);
    run_ok(&["compare", "--a", s(&a), "--b", s(&b)]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("comparison/comparison.json")).unwrap()).unwrap();
    assert_eq!(json["runs"], 3);
    assert_eq!(json["resamples"], 1000);
    assert!(json["ci_low"].as_f64().unwrap() <= json["ci_high"].as_f64().unwrap());
}

#[test]
fn compare_names_the_missing_aggregate() {
    let (dir, config) = workspace("ddp", 1, "");
    let out = dir.path().join("out");
    run_ok(&["run", "--config", s(&config)]);
    let missing = dir.path().join("nowhere");
    let o = ddptrack(&["compare", "--a", s(&out), "--b", s(&missing)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains(s(&missing.join("aggregate.csv"))), "{}", stderr(&o));
}

#[test]
fn compare_rejects_mismatched_steps() {
    let (dir, config) = workspace("ddp", 1, "");
    let a = dir.path().join("a");
    run_ok(&["run", "--config", s(&config), "--out", s(&a)]);
    fs::write(dir.path().join("tiny.toml"), SCENARIO.replace("duration = 12", "duration = 13")).unwrap();
    let b = dir.path().join("b");
    run_ok(&["run", "--config", s(&config), "--out", s(&b)]);
    let o = ddptrack(&["compare", "--a", s(&a), "--b", s(&b)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("step counts differ"), "{}", stderr(&o));
}

#[test]
fn interrupted_runs_resume() {
    let (dir, config) = workspace("ddp", 3, "");
    let out = dir.path().join("out");
    run_ok(&["run", "--config", s(&config)]);
    let first = fs::read(out.join("aggregate.csv")).unwrap();
    // simulate a crash that lost one run
    fs::remove_dir_all(out.join("runs/run_0001")).unwrap();
    run_ok(&["run", "--config", s(&config)]);
    assert_eq!(fs::read(out.join("aggregate.csv")).unwrap(), first);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["resumed_runs"].as_array().unwrap().len(), 2);
}

#[test]
fn output_root_environment_variable_is_honoured() {
    let (dir, config) = workspace("ddp", 1, "");
    let root = dir.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_ddptrack"))
        .current_dir(dir.path())
        .args(["run", "--config", s(&config)])
        .env("DDPTRACK_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("out/aggregate.csv").is_file());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn scenario_generate_exports_csvs() {
    let (dir, _) = workspace("ddp", 1, "");
    let out = dir.path().join("gen");
    run_ok(&["scenario", "generate", s(&dir.path().join("tiny.toml")), "--seed", "3", "--out", s(&out)]);
    let truth = fs::read_to_string(out.join("truth.csv")).unwrap();
    let meas = fs::read_to_string(out.join("measurements.csv")).unwrap();
    // 12 + 6 live object-steps
    assert_eq!(truth.lines().count(), 19);
    assert_eq!(meas.lines().count(), 19);
}
