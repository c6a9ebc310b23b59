use std::path::Path;
use std::process::{Command, Output};

fn rsma(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rsma"));
    cmd.args(args).env_remove("RSMA_SEED").env_remove("RSMA_JOBS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn list_shows_every_kind() {
    let a = rsma(&["list"], &[]);
    assert!(a.status.success());
    for k in ["ic2_sweep", "rate_region", "mmf_sweep", "ee_sweep", "region_map", "uplink_region", "multicell_eval"] {
        assert!(stdout(&a).lines().any(|l| l == k), "{k}");
    }
    assert_eq!(stdout(&a), stdout(&rsma(&[], &[])));
}

#[test]
fn selftest_passes() {
    let o = rsma(&["selftest"], &[]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn unknown_kind_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "kind = \"warp_drive\"\n").unwrap();
    let out = dir.path().join("out");
    let o = rsma(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = rsma(&["run", dir.path().join("missing.toml").to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
}

fn header_hash(dir: &Path) -> String {
    let csv = std::fs::read_to_string(dir.join("uplink_region.csv")).unwrap();
    csv.lines().next().unwrap().to_string()
}

#[test]
fn env_overrides_seed_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("up.json");
    std::fs::write(&cfg, r#"{"kind": "uplink_region", "params": {"instances": 2, "points": 5}}"#).unwrap();
    let run = |name: &str, env: &[(&str, &str)], extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(rsma(&args, env).status.success());
        out
    };
    let a = run("a", &[], &[]);
    let b = run("b", &[("RSMA_SEED", "17"), ("RSMA_JOBS", "2")], &[]);
    let c = run("c", &[], &["--seed", "17", "--jobs", "3"]);
    assert_ne!(header_hash(&a), header_hash(&b));
    assert_eq!(std::fs::read(b.join("uplink_region.csv")).unwrap(), std::fs::read(c.join("uplink_region.csv")).unwrap());
    let manifest: String = std::fs::read_to_string(b.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"base\": 17"));
}
