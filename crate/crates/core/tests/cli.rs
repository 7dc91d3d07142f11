use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_actpc");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p
}

fn corridor_config(extra: &str) -> String {
    format!(
        r#"{{
  "name": "tiny",
  "env": {{ "type": "corridor" }},
  "trainer": {{
    "iterations": 60,
    "initial_rules": [
      "(State ?s) => (State ?s) (Action Right)",
      "(State ?s) => (State ?s) (Action Left)"
    ]
  }},
  "eval_episodes": 2{extra}
}}"#
    )
}

fn actpc(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("ACTPC_SEED");
    if let Some(s) = seed_env {
        cmd.env("ACTPC_SEED", s);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_per_seed_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(r#", "repeat": 2"#));
    let out = tmp.path().join("out");
    let o = actpc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in ["5", "6"] {
        let d = out.join("tiny").join(seed);
        let metrics = format!("metrics_seed{seed}.csv");
        for f in [metrics.as_str(), "snapshot.sexp", "config.json"] {
            assert!(d.join(f).is_file(), "missing {}", d.join(f).display());
        }
    }
    assert!(out.join("tiny/summary.csv").is_file());
    assert!(!out.join("tiny/0").exists());
}

#[test]
fn seed_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(""));
    let out = tmp.path().join("out");
    let o = actpc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], Some("11"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("tiny/11/metrics_seed11.csv").is_file());
}

#[test]
fn geometry_dump_is_optional() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(""));
    let plain = tmp.path().join("plain");
    let geo = tmp.path().join("geo");
    assert!(actpc(&["run", cfg.to_str().unwrap(), "--out", plain.to_str().unwrap()], None).status.success());
    let o = actpc(&["run", cfg.to_str().unwrap(), "--out", geo.to_str().unwrap(), "--dump-geometry"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let count = |d: &Path| fs::read_dir(d.join("tiny/0")).unwrap().count();
    assert!(count(&geo) > count(&plain));
}

#[test]
fn malformed_config_exits_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{ "name": "bad", "env": { "type": "corridor" }, "trainer": { "iterations": "many" } }"#,
    );
    let o = actpc(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trainer.iterations"), "{}", stderr(&o));

    let cfg = write_config(tmp.path(), r#"{ "name": "bad", "env": { "type": "corridor" }, "tranier": {} }"#);
    let o = actpc(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tranier"), "{}", stderr(&o));
}

#[test]
fn compare_needs_two_updaters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(r#", "updaters": ["natural"]"#));
    let o = actpc(&["compare", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("updaters"), "{}", stderr(&o));
}

#[test]
fn compare_tags_files_by_updater() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(r#", "updaters": ["naive", "natural"]"#));
    let out = tmp.path().join("out");
    let o = actpc(&["compare", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("naive") && text.contains("natural"));
    let d = out.join("tiny/0");
    for f in ["snapshot_naive.sexp", "snapshot_natural.sexp", "metrics_seed0_naive.csv", "config_natural.json"] {
        assert!(d.join(f).is_file(), "missing {f}");
    }
    assert!(out.join("tiny/comparison.csv").is_file());
}

#[test]
fn eval_zero_episodes_prints_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(""));
    let out = tmp.path().join("out");
    assert!(actpc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None).status.success());
    let snap = out.join("tiny/0/snapshot.sexp");
    let o = actpc(&["eval", snap.to_str().unwrap(), "--episodes", "0"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("episodes,"));

    let o = actpc(&["eval", snap.to_str().unwrap(), "--episodes", "3"], None);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 2);
    assert!(!stderr(&o).contains("warning"));
}

#[test]
fn eval_warns_on_config_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &corridor_config(""));
    let out = tmp.path().join("out");
    assert!(actpc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None).status.success());
    let snap = out.join("tiny/0/snapshot.sexp");
    let other = tmp.path().join("other.json");
    fs::write(&other, corridor_config(r#", "threshold": 0.5"#)).unwrap();
    let o = actpc(
        &["eval", snap.to_str().unwrap(), "--episodes", "1", "--config", other.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}
