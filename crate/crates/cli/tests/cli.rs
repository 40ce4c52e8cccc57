use lyapunov_lab::estimators::{GleEstimate, LeEstimate};
use lyapunov_lab::processes::telegraph_cgf_oracle;
use lyapunov_lab_cli::config::{preset, EtaGridSpec, ExperimentConfig, Format, Overrides, Workers, PRESETS};
use lyapunov_lab_cli::error::CliError;
use lyapunov_lab_cli::output::{check_digests, RunManifest};
use lyapunov_lab_cli::run::{run_dump_path, run_gle, run_le, run_legendre, run_predict, LegendreInput, ResultDocument};
use std::path::Path;
use std::process::Command;

fn in_dir(mut cfg: ExperimentConfig, dir: &Path) -> ExperimentConfig {
    cfg.apply(&Overrides {
        output_dir: Some(dir.to_path_buf()),
        ..Overrides::default()
    });
    cfg
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn presets_parse_and_round_trip() {
    for (name, _) in PRESETS {
        let cfg = preset(name).unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back, "{name}");
    }
    assert!(matches!(preset("nope"), Err(CliError::Config { .. })));
}

#[test]
fn null_noise_gives_zero_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_le(&in_dir(preset("null-noise").unwrap(), dir.path())).unwrap();
    assert!(run.result.lambda.iter().all(|l| l.abs() < 1e-14));
    assert!(run.result.stderr.iter().all(|s| *s == 0.0));
}

#[test]
fn constant_generator_recovers_its_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_le(&in_dir(preset("constant-diag").unwrap(), dir.path())).unwrap();
    assert!((run.result.lambda[0] - 3.0).abs() < 1e-5, "{:?}", run.result.lambda);
    assert!((run.result.lambda[1] - 1.0).abs() < 1e-5, "{:?}", run.result.lambda);
}

fn check_scalar(name: &str, oracle: impl Fn(f64) -> f64) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = in_dir(preset(name).unwrap(), dir.path());
    cfg.n_realizations = 4000;
    cfg.eta_grid = Some(EtaGridSpec::Product(vec![vec![-1.0, -0.5, 0.0, 0.5, 1.0]]));
    let g = run_gle(&cfg).unwrap().result;
    for (i, eta) in g.eta_grid.iter().enumerate() {
        let expect = oracle(eta[0]);
        let tol = (4.0 * g.ci_half_width(i)).max(0.1 * expect.abs()).max(1e-12);
        assert!((g.w[i] - expect).abs() <= tol, "{name} at {eta:?}: {} vs {expect}", g.w[i]);
    }
}

#[test]
fn scalar_presets_reproduce_their_cgf() {
    check_scalar("scalar-ou-gle", |e| 0.5 * e * e);
    check_scalar("telegraph-gle", |e| telegraph_cgf_oracle(1.0, 1.0, e));
}

#[test]
fn outputs_match_manifest_digests() {
    let dir = tempfile::tempdir().unwrap();
    run_le(&in_dir(preset("null-noise").unwrap(), dir.path())).unwrap();
    let m = read_manifest(dir.path());
    let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
    assert_eq!(files, ["le.json", "le.csv", "le.columns.txt"]);
    check_digests(&m, dir.path()).unwrap();
    assert_eq!(m.rng_version, lyapunov_lab::rng::RNG_VERSION);

    std::fs::write(dir.path().join("le.csv"), "tampered\n").unwrap();
    assert!(check_digests(&m, dir.path()).is_err());
}

#[test]
fn csv_only_format() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = in_dir(preset("null-noise").unwrap(), dir.path());
    cfg.outputs.formats = vec![Format::Csv];
    run_le(&cfg).unwrap();
    assert!(dir.path().join("le.csv").exists());
    assert!(!dir.path().join("le.json").exists());
}

#[test]
fn rerun_from_manifest_is_bit_identical_across_worker_counts() {
    let first = tempfile::tempdir().unwrap();
    let mut cfg = in_dir(preset("gaussian-d2-gle").unwrap(), first.path());
    cfg.n_realizations = 64;
    cfg.horizons = Some(vec![1.0, 2.0]);
    cfg.gle.bootstrap_resamples = 40;
    cfg.workers = Workers::Count(1);
    run_gle(&cfg).unwrap();

    let second = tempfile::tempdir().unwrap();
    let mut again = ExperimentConfig::load(&first.path().join("manifest.json")).unwrap();
    again.apply(&Overrides {
        workers: Some(3),
        output_dir: Some(second.path().to_path_buf()),
        ..Overrides::default()
    });
    run_gle(&again).unwrap();

    for f in ["gle.json", "gle.csv"] {
        let a = std::fs::read(first.path().join(f)).unwrap();
        let b = std::fs::read(second.path().join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let doc: ResultDocument<GleEstimate> = serde_json::from_slice(&std::fs::read(first.path().join("gle.json")).unwrap()).unwrap();
    assert_eq!(doc.schema, "lyapunov-lab-gle/1");
    assert_eq!(doc.result.dim, 2);
}

#[test]
fn le_result_document_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_le(&in_dir(preset("constant-diag").unwrap(), dir.path())).unwrap();
    let doc: ResultDocument<LeEstimate> = serde_json::from_slice(&std::fs::read(dir.path().join("le.json")).unwrap()).unwrap();
    assert_eq!(doc.result, run.result);
}

#[test]
fn config_errors_carry_field_paths() {
    let text = preset("null-noise").unwrap().to_json();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["dt"] = serde_json::json!("fast");
    match ExperimentConfig::from_json(&v.to_string()) {
        Err(CliError::Config { path, .. }) => assert_eq!(path, "dt"),
        other => panic!("{other:?}"),
    }

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["process"]["kernel"]["bogus"] = serde_json::json!(1);
    match ExperimentConfig::from_json(&v.to_string()) {
        Err(CliError::Config { path, message }) => assert!(path.starts_with("process"), "{path}: {message}"),
        other => panic!("{other:?}"),
    }

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["eta_grid"] = serde_json::json!({ "points": [[0.0, 0.0, 0.0], [1.0, 0.0]] });
    match ExperimentConfig::from_json(&v.to_string()) {
        Err(CliError::Config { path, .. }) => assert_eq!(path, "eta_grid[1]"),
        other => panic!("{other:?}"),
    }

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["schema"] = serde_json::json!("other/2");
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(CliError::Config { path, .. }) if path == "schema"));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["workers"] = serde_json::json!("many");
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(CliError::Config { path, .. }) if path == "workers"));
}

#[test]
fn predict_gaussian_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let p = run_predict(&in_dir(preset("gaussian-d2-gle").unwrap(), dir.path())).unwrap().result;
    let at = |eta: &[f64]| p.gle.iter().find(|q| q.eta == eta).unwrap().w;
    assert!((at(&[1.0, 0.0]) - 0.75).abs() < 1e-12);
    assert_eq!(at(&[0.0, 0.0]), 0.0);
    let l = p.lambda.unwrap();
    assert!((l[0] - 0.5).abs() < 1e-12 && (l[1] + 0.5).abs() < 1e-12);
}

#[test]
fn legendre_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.csv");
    let mut body = String::from("x,f\n");
    for i in 0..=40 {
        let x = -2.0 + 0.1 * i as f64;
        body.push_str(&format!("{x},{}\n", 0.5 * x * x));
    }
    std::fs::write(&input, body).unwrap();
    let t = LegendreInput::from_csv(&input).unwrap();
    let r = run_legendre(&t, Some(vec![-1.0, 0.0, 1.0]), dir.path(), &[Format::Json, Format::Csv]).unwrap();
    for (a, v) in r.result.query.iter().zip(&r.result.values) {
        assert!((v - 0.5 * a * a).abs() < 1e-12);
    }
    assert!(dir.path().join("legendre.csv").exists());
}

#[test]
fn dump_path_writes_path_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_dump_path(&in_dir(preset("gaussian-d3-traceless").unwrap(), dir.path()), 2, Some(50), true, 10).unwrap();
    assert_eq!(r.result.steps, 50);
    let path = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(path.lines().count(), 52);
    assert!(dir.path().join("trajectory.csv").exists());
    check_digests(&r.manifest, dir.path()).unwrap();
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lyapunov-lab"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let ok = bin().args(["le", "--preset", "null-noise", "--output-dir", out]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("lambda"));

    let bad = bin().args(["le", "--preset", "missing"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema": "lyapunov-lab-config/1", "dt": 0.1}"#).unwrap();
    let bad = bin().args(["le", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    // every realization hits a singular Cayley step
    let mut c = preset("constant-diag").unwrap();
    c.process = lyapunov_lab::processes::ProcessSpec::constant(2, vec![200.0, 0.0, 0.0, 200.0]);
    c.dt = 0.01;
    std::fs::write(&cfg, c.to_json()).unwrap();
    let rejected = bin().args(["le", "--config", cfg.to_str().unwrap(), "--output-dir", out]).output().unwrap();
    assert_eq!(rejected.status.code(), Some(3), "{}", String::from_utf8_lossy(&rejected.stderr));

    let v = bin().args(["verify", "legendre"]).output().unwrap();
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).starts_with("PASS criterion  9"));

    let unknown = bin().args(["verify", "nothing"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));

    let lg = bin().args(["legendre", "--telegraph", "1,1", "--query=-0.5,0,0.5", "--output-dir", out]).output().unwrap();
    assert_eq!(lg.status.code(), Some(0), "{}", String::from_utf8_lossy(&lg.stderr));
    let bad = bin().args(["legendre", "--telegraph", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let listed = bin().arg("presets").output().unwrap();
    assert!(String::from_utf8_lossy(&listed.stdout).lines().any(|l| l == "telegraph-gle"));
}

#[test]
fn unknown_process_keys_are_rejected() {
    let text = preset("null-noise").unwrap().to_json();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["process"]["epsilon"] = serde_json::json!(0.3);
    match ExperimentConfig::from_json(&v.to_string()) {
        Err(CliError::Config { path, .. }) => assert_eq!(path, "process.epsilon"),
        other => panic!("{other:?}"),
    }
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["gle"] = serde_json::json!({ "eta_cap": 1.0, "bootstrap": 10 });
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(CliError::Config { path, .. }) if path.starts_with("gle")));
}
