use std::process::{Command, Output};

use hrsim_core::config::ExperimentConfig;
use hrsim_core::csv::CsvTable;

fn hrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrsim"))
        .args(args)
        .env_remove("HRSIM_SEED")
        .env_remove("HRSIM_TRIALS")
        .env_remove("HRSIM_CONFIG")
        .output()
        .expect("spawn hrsim")
}

fn table(out: &Output) -> CsvTable {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    CsvTable::parse(&String::from_utf8(out.stdout.clone()).unwrap()).unwrap()
}

fn value(t: &CsvTable, quantity: &str) -> f64 {
    let row = t.rows.iter().find(|r| r[0].to_string() == quantity).unwrap();
    row[1].to_string().parse().unwrap()
}

#[test]
fn link_budget_header_and_values() {
    let out = hrsim(&["link-budget"]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("# hrsim csv v1 link-budget\n"), "{text}");
    let t = table(&out);
    assert_eq!(t.rows.len(), 14);
    assert!((value(&t, "distance") - 15.0).abs() < 1e-12);
    let a = value(&t, "tag_amplitude");
    assert!((a - 0.0637).abs() < 0.002, "{a}");
}

#[test]
fn sweep_distance_rows() {
    let t = table(&hrsim(&["sweep-distance", "--min", "1", "--max", "15", "--points", "5"]));
    let d = t.floats("distance_m").unwrap();
    assert_eq!(d.len(), 5);
    assert!((d[4] - 15.0).abs() < 1e-9);
    let p = t.floats("p_rec_quadratic_dbm").unwrap();
    // sixth-power law: 10·6·log10(15) dB between 1 m and 15 m
    assert!((p[0] - p[4] - 60.0 * 15f64.log10()).abs() < 1e-6);
}

#[test]
fn pdf_alpha_normalised() {
    let t = table(&hrsim(&["pdf-alpha", "--slot", "2", "--gamma2-dB", "0", "--points-per-unit", "500"]));
    let cdf = t.floats("cdf").unwrap();
    assert!((cdf.last().unwrap() - 1.0).abs() < 1e-6);
    let (x, f, g) = (t.floats("alpha").unwrap(), t.floats("pdf").unwrap(), t.floats("closed_form").unwrap());
    // the density blows up at both ends of its support
    let worst = (0..x.len())
        .filter(|&k| x[k] > 0.05 && x[k] < 1.95)
        .map(|k| (f[k] - g[k]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn seed_from_environment_matches_flag() {
    let run = |env: Option<&str>, flag: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hrsim"));
        c.env_remove("HRSIM_SEED").args(["montecarlo", "--trials", "200"]).args(flag);
        if let Some(s) = env {
            c.env("HRSIM_SEED", s);
        }
        c.output().unwrap()
    };
    let a = run(Some("7"), &[]);
    let b = run(None, &["--seed", "7"]);
    let c = run(None, &["--seed", "8"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(table(&a).rows.len(), 200);
}

#[test]
fn montecarlo_writes_trials_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.csv");
    let o = hrsim(&["montecarlo", "--trials", "100", "--trace", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trials = CsvTable::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(trials.rows.len(), 100);
    assert!(trials.column("phi_err_1").is_some());
    assert!(dir.path().join("mc.summary.csv").exists());
}

#[test]
fn config_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let toml = dir.path().join("cfg.toml");
    let json = dir.path().join("cfg.json");
    assert!(hrsim(&["config", "--seed", "99", "--out", toml.to_str().unwrap()]).status.success());
    let o = hrsim(&["config", "--format", "json", "--config", toml.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = ExperimentConfig::load(&toml).unwrap();
    let b = ExperimentConfig::load(&json).unwrap();
    assert_eq!(a.run.seed, 99);
    // --out is recorded in the emitted config, so compare everything else
    let strip = |mut c: ExperimentConfig| {
        c.run.output = None;
        c
    };
    assert_eq!(strip(a), strip(b));
}

#[test]
fn bad_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "[system]\ncarrier_frequency = -1\n").unwrap();
    let o = hrsim(&["link-budget", "--config", p.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = hrsim(&["link-budget", "--preset", "no-such-preset"]);
    assert!(!o.status.success());
}
