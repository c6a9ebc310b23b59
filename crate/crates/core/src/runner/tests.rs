use super::*;

fn cfg(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (head, body)
}

#[test]
fn number_formatting() {
    assert_eq!(fmt_num(0.0), "0");
    assert_eq!(fmt_num(-0.0), "0");
    assert_eq!(fmt_num(1.0), "1.0");
    assert_eq!(fmt_num(0.1), "0.1");
    assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
    assert_eq!(fmt_num(2.0f64.sqrt() * 1e-9), "1.41421356237e-9");
    assert_eq!(fmt_num(123456789.123457), "123456789.123");
}

#[test]
fn toml_and_json_agree() {
    let a = resolve(&cfg("kind = \"ic2_sweep\"\nseed = 3\n[params]\npoints = 5\n"), None).unwrap();
    let b = resolve(&cfg(r#"{"kind": "ic2_sweep", "seed": 3, "params": {"points": 5}}"#), None).unwrap();
    assert_eq!(a.hash, b.hash);
    let c = resolve(&cfg("kind = \"ic2_sweep\"\nseed = 3\n[params]\npoints = 5\n"), Some(4)).unwrap();
    assert_ne!(a.hash, c.hash);
}

#[test]
fn config_errors_exit_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let opts = RunOptions { out_dir: out.clone(), ..Default::default() };
    for text in [
        "kind = \"nope\"\n",
        "kind = \"ic2_sweep\"\n[params]\nbogus = 1\n",
        "kind = \"ic2_sweep\"\ncolour = 1\n",
        "kind = \"mmf_sweep\"\n[params]\nsnr_db = [10.0, 5.0]\n",
        "kind = \"rate_region\"\n[params]\nrx = [1, 1, 1]\nvariances = [1.0, 1.0, 1.0]\n",
        "kind = \"mmf_sweep\"\n[params]\nlayouts = [\"noma_g9\"]\n",
        "kind = \"ic2_sweep\"\n[optimizer]\ngrid_points = 1\n",
        "not toml at all [",
    ] {
        let err = RunConfig::parse(text).and_then(|c| run_config(&c, &opts)).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
        assert!(!out.exists());
    }
    assert_eq!(RunError::Numerical("x".into()).exit_code(), 3);
    let e: RunError = RsmaError::Numerical("x".into()).into();
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn ic2_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out_dir: dir.path().to_path_buf(), jobs: Some(2), seed: None };
    let s = run_config(&cfg("kind = \"ic2_sweep\"\n[params]\npoints = 40\n"), &opts).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("ic2_sweep.csv")).unwrap();
    assert!(csv.starts_with(&format!("# config_hash={}\n", s.config_hash)));
    assert!(csv.contains("# orthogonal_power=same_power\n"));
    assert!(!csv.contains('\r'));
    let (head, body) = rows(&csv);
    assert_eq!(head, ["inr_over_snr", "rs", "tin", "decode", "orthogonal", "regime"]);
    assert_eq!(body.len(), 40);
    for r in &body {
        let v: Vec<f64> = r[1..5].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[0] >= v[1].max(v[2]).max(v[3]) - 1e-9);
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&s.manifest).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], s.config_hash);
    assert_eq!(manifest["config"]["params"]["points"], 40);
    assert_eq!(manifest["outputs"][0], "ic2_sweep.csv");
}

#[test]
fn output_independent_of_jobs() {
    let c = cfg("kind = \"region_map\"\n[params]\ngamma_db = [0.0, -20.0]\nrho = [0.0, 1.0]\n[optimizer]\ntier = \"grid\"\n");
    let r = resolve(&c, None).unwrap();
    assert_eq!(render(&r, Some(1)).unwrap(), render(&r, Some(4)).unwrap());
}

#[test]
fn region_map_reduces_to_baselines() {
    let c = cfg("kind = \"region_map\"\n[params]\ngamma_db = [0.0, -20.0]\nrho = [0.0, 1.0]\n[optimizer]\ntier = \"grid\"\n");
    let out = render(&resolve(&c, None).unwrap(), None).unwrap();
    let (head, body) = rows(&out[0].contents);
    assert_eq!(head[7], "best_baseline");
    for r in &body {
        let v: Vec<f64> = r[2..7].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[0] >= v[1].max(v[2]).max(v[3]) - 1e-9);
        if r[0] == "0" && r[1] == "1.0" {
            assert!(v[4] < 0.01);
        }
    }
}

#[test]
fn small_sweeps_run() {
    let c = cfg(
        "kind = \"mmf_sweep\"\n[params]\ntx = 3\nrx = [1, 1, 1]\nvariances = [1.0, 1.0, 1.0]\nsnr_db = [0.0, 10.0]\n\
         csit_alpha = -0.5\nsamples = 3\nlayouts = [\"rs\", \"sdma\", \"noma_g1\", { scheme = \"hrs\", label = \"hrs2\", groups = [[0, 1], [2]] }]\n\
         [optimizer]\ntier = \"grid\"\ngrid_points = 11\n",
    );
    let out = render(&resolve(&c, Some(5)).unwrap(), Some(2)).unwrap();
    let names: Vec<&str> = out.iter().map(|o| o.name.as_str()).collect();
    assert_eq!(names, ["mmf_sweep.csv", "mmf_sweep_rs.csv", "mmf_sweep_sdma.csv", "mmf_sweep_noma_g1.csv", "mmf_sweep_hrs2.csv"]);
    let (head, body) = rows(&out[0].contents);
    assert_eq!(head, ["snr_db", "rs", "sdma", "noma_g1", "hrs2"]);
    assert_eq!(body.len(), 2);

    let c = cfg("kind = \"ee_sweep\"\n[params]\nsnr_db = [0.0, 20.0]\nsamples = 2\n[optimizer]\ntier = \"grid\"\n");
    assert_eq!(render(&resolve(&c, None).unwrap(), None).unwrap().len(), 4);

    let c = cfg("kind = \"rate_region\"\n[params]\nsamples = 2\nweights = 3\n[optimizer]\ntier = \"grid\"\n");
    let out = render(&resolve(&c, None).unwrap(), None).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(rows(&out[0].contents).1.len(), 3);

    let c = cfg("kind = \"multicell_eval\"\n[params]\nsnr_db = [10.0]\nsamples = 3\n[optimizer]\ntier = \"grid\"\n");
    let out = render(&resolve(&c, None).unwrap(), None).unwrap();
    let (_, body) = rows(&out[0].contents);
    let v: Vec<f64> = body[0][1..].iter().map(|x| x.parse().unwrap()).collect();
    assert!(v[0] >= v[2]);
}

#[test]
fn uplink_region_reaches_face() {
    let c = cfg("kind = \"uplink_region\"\n[params]\ninstances = 2\npoints = 11\n");
    let out = render(&resolve(&c, Some(9)).unwrap(), None).unwrap();
    let (_, body) = rows(&out[0].contents);
    assert_eq!(body.len(), 22);
    for r in &body {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!(f(8) >= f(4) - 1e-6 && f(9) >= f(5) - 1e-6);
        assert!((f(10) - f(11)).abs() < 1e-9);
    }
}

#[test]
fn catalog() {
    let a = list_scenarios();
    assert_eq!(a, list_scenarios());
    for k in ScenarioKind::ALL {
        assert!(a.lines().any(|l| l == k.as_str()));
    }
    let rr = a.split("rate_region\n").nth(1).unwrap();
    assert!(rr.lines().next().unwrap().contains("M=4, K=2"));
}

#[test]
fn selftest_passes() {
    for c in selftest() {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}
