use std::path::Path;
use std::process::{Command, Output};

use bidisc_cli::{execute, validate, CliError, ExperimentConfig, Overrides};

fn bidisc(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_bidisc"))
        .arg("--config")
        .arg(&path)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn reflect_check_prints_the_knese_numerator() {
    let dir = tempfile::tempdir().unwrap();
    let out = bidisc(dir.path(), "experiment = \"reflect-check\"\nsymbol = \"knese\"\n", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let first = &json["result"]["coordinates"][0];
    assert_eq!(first["reflection_text"], "2z1z2 - z1 - z2");
    assert_eq!(first["numerator_is_reflection"], true);
    assert!(stderr(&out).starts_with("reflect-check:"));
}

#[test]
fn volume_lemma_writes_a_csv_and_fits_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("vol.csv");
    let out = bidisc(
        dir.path(),
        "experiment = \"volume-lemma\"\nbeta = 1.0\nscales = [1e-1, 1e-2, 1e-3]\n",
        &["--format", "csv", "--output", csv.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("vol.csv"), "{summary}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("delta,exact,mc,se\n"));
    assert_eq!(text.lines().count(), 6);

    let cfg = ExperimentConfig::from_toml("experiment = \"volume-lemma\"\nbeta = 1.0\nscales = [1e-1, 1e-2, 1e-3]\n")
        .unwrap();
    let report = execute(cfg, &Overrides::default()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.body).unwrap();
    let q = json["result"]["fit_mc"]["exponent"].as_f64().unwrap();
    assert!((q - 2.0).abs() <= 0.05, "{q}");
}

#[test]
fn beta_too_small_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = bidisc(
        dir.path(),
        "experiment = \"certificate\"\nsymbol = \"knese-pair\"\nbeta = 3.0\nq = 2.0\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("BetaTooSmall"));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("experiment = \"certificate\"\n", "InvalidConfig"),
        ("experiment = \"volume-lemma\"\nbeta = -1.0\n", "UnsupportedWeight"),
        ("experiment = \"nope\"\n", "InvalidConfig"),
        ("experiment = \"sweep\"\nbeta = 1.0\n", "InvalidConfig"),
        ("experiment = \"zero-set\"\nsymbol = \"cube\"\n", "InvalidConfig"),
        ("experiment = \"zero-set\"\ncolour = 1\n", "InvalidConfig"),
        ("experiment = \"box-scaling\"\nscales = [3.0]\n", "InvalidConfig"),
        ("experiment = \"certificate\"\nbeta = 8.0\nsamples = 10\n", "InvalidConfig"),
        ("experiment = \"zero-set\"\nseed = \"banana\"\n", "InvalidInput"),
        ("not toml at all [[", "InvalidConfig"),
    ];
    for (config, name) in cases {
        let out = bidisc(dir.path(), config, &[]);
        assert_eq!(out.status.code(), Some(2), "{config}: {}", stderr(&out));
        assert!(stderr(&out).contains(name), "{config}: {}", stderr(&out));
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_bidisc"))
        .args(["--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let workers = bidisc(dir.path(), "experiment = \"nt-limit\"\n", &["--workers", "0"]);
    assert_eq!(workers.status.code(), Some(2));
}

#[test]
fn validation_precedes_computation() {
    let cfg = ExperimentConfig::from_toml("experiment = \"sweep\"\nbeta = 2.0\n").unwrap();
    assert!(matches!(validate(&cfg), Err(CliError::Config(_))));
    let cfg = ExperimentConfig::from_toml("experiment = \"lojasiewicz\"\nbins = 3\n").unwrap();
    assert!(matches!(validate(&cfg), Err(CliError::Config(_))));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"box-scaling\"\nsamples = 20000\nseed = 5\n";
    let a = bidisc(dir.path(), cfg, &["--seed", "7"]);
    let b = bidisc(dir.path(), &cfg.replace("seed = 5", "seed = 7"), &[]);
    let c = bidisc(dir.path(), cfg, &[]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn explicit_symbols_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let z1 = "{ monomial_powers = [1, 0], bidegree = [0, 0], coeffs = [[1.0, 0.0]] }";
    let table = format!("experiment = \"nt-limit\"\ncenters = [[0.5, 1.0]]\n[symbol]\nfirst = {z1}\nsecond = {z1}\n");
    let json = r#"{"first": {"monomial_powers": [1, 0], "bidegree": [0, 0], "coeffs": [[1.0, 0.0]]},
        "second": {"monomial_powers": [1, 0], "bidegree": [0, 0], "coeffs": [[1.0, 0.0]]}}"#;
    let inline = format!("experiment = \"nt-limit\"\ncenters = [[0.5, 1.0]]\nsymbol = '''{json}'''\n");
    for config in [table, inline] {
        let out = bidisc(dir.path(), &config, &["--format", "csv"]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = String::from_utf8(out.stdout).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert!((row[3].parse::<f64>().unwrap() - 0.5f64.cos()).abs() < 1e-8, "{text}");
    }
}
