//! Acceptance suite, experiment half: the four experiment families run on
//! their default (acceptance) configurations. Each criterion is one test
//! that prints its PASS line with the measured figures.

use std::time::Instant;

use contavg_cli::config::{Experiment, ExperimentConfig};
use contavg_cli::experiments::run_experiment;

fn config_for(experiment: Experiment, out: &str) -> ExperimentConfig {
    let name = match experiment {
        Experiment::E1RemainderDecay => "E1_remainder_decay",
        Experiment::E2Smoothing => "E2_smoothing",
        Experiment::E3Splitting => "E3_splitting",
        Experiment::E4MultifreqScaling => "E4_multifreq_scaling",
    };
    let dir = std::env::temp_dir().join(format!("contavg_acceptance_{out}"));
    let text = format!(
        r#"{{"schema_version": 1, "experiment": "{name}", "output_dir": {:?}}}"#,
        dir.to_str().unwrap()
    );
    ExperimentConfig::from_json(&text).expect("default config is valid")
}

#[test]
fn criterion_4_e1_remainder_decay() {
    let start = Instant::now();
    let mut cfg = config_for(Experiment::E1RemainderDecay, "e1");
    cfg.e1.truncation_check = true;
    let outcome = run_experiment(&cfg).expect("E1 runs");
    let elapsed = start.elapsed().as_secs_f64();
    for line in &outcome.lines {
        println!("  {line}");
    }
    assert!(outcome.passed, "E1 assertions failed: {:?}", outcome.lines);
    assert!(elapsed < 600.0, "runtime {elapsed:.0}s over the 10 min budget");
    let fit = outcome.fit.expect("fit present");
    println!(
        "PASS criterion 4 (E1 remainder decay): alpha = {:.4} vs c_target = {}, R² = {:.5}, {elapsed:.1}s",
        -fit.slope, cfg.e1.c_target, fit.r2
    );
}

#[test]
fn criterion_5_e2_smoothing() {
    let start = Instant::now();
    let cfg = config_for(Experiment::E2Smoothing, "e2");
    let outcome = run_experiment(&cfg).expect("E2 runs");
    let elapsed = start.elapsed().as_secs_f64();
    for line in &outcome.lines {
        println!("  {line}");
    }
    assert!(outcome.passed, "E2 assertions failed: {:?}", outcome.lines);
    assert!(elapsed < 60.0, "runtime {elapsed:.1}s over the 1 min budget");
    println!("PASS criterion 5 (E2 smoothing): K = {}, s0 = {}, {elapsed:.2}s", cfg.e2.k_max, cfg.e2.s0);
}

#[test]
fn criterion_6_e3_splitting() {
    let start = Instant::now();
    let cfg = config_for(Experiment::E3Splitting, "e3");
    let outcome = run_experiment(&cfg).expect("E3 runs");
    let elapsed = start.elapsed().as_secs_f64();
    for line in &outcome.lines {
        println!("  {line}");
    }
    assert!(outcome.passed, "E3 assertions failed: {:?}", outcome.lines);
    assert!(elapsed < 900.0, "runtime {elapsed:.0}s over the 15 min budget");
    let fit = outcome.fit.expect("fit present");
    println!(
        "PASS criterion 6 (E3 splitting): slope = {:.5} (target -π/2), amplitude = {:.4} (target 2), {elapsed:.1}s",
        fit.slope,
        fit.intercept.exp()
    );

    // Reference point: eps = 0.2, B = 0.01 → area_paper ≈ 9.76e-4.
    let csv = std::fs::read_to_string(&outcome.files[0]).unwrap();
    let row = csv
        .lines()
        .find(|l| l.starts_with("2.000000000000e-1"))
        .expect("eps = 0.2 row present");
    let area_paper: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!(
        (area_paper - 9.757e-4).abs() / 9.757e-4 < 1e-3,
        "reference area_paper {area_paper}"
    );
}

#[test]
fn criterion_8_e4_multifreq_scaling() {
    let start = Instant::now();
    let cfg = config_for(Experiment::E4MultifreqScaling, "e4");
    let outcome = run_experiment(&cfg).expect("E4 runs");
    let elapsed = start.elapsed().as_secs_f64();
    for line in &outcome.lines {
        println!("  {line}");
    }
    assert!(outcome.passed, "E4 assertions failed: {:?}", outcome.lines);
    assert!(elapsed < 1200.0, "runtime {elapsed:.0}s over the 20 min budget");
    let fit = outcome.fit.expect("fit present");
    println!(
        "PASS criterion 8 (E4 multifreq, optional tier): R² = {:.5}, fitted q̄ = {:.4}, {elapsed:.1}s",
        fit.r2, -fit.slope
    );
}
