//! Experiment dispatch: each family maps a validated config to CSV tables,
//! fits, and pass/fail assertion lines.

mod e1;
mod e2;
mod e3;
mod e4;

pub use e1::run_e1;
pub use e2::run_e2;
pub use e3::run_e3;
pub use e4::run_e4;

use std::path::PathBuf;

use crate::config::{Experiment, ExperimentConfig};
use crate::fit::FitResult;

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub passed: bool,
    /// Human-readable summary; one line per assertion, prefixed PASS/FAIL.
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub fit: Option<FitResult>,
}

impl ExperimentOutcome {
    pub(crate) fn new() -> Self {
        ExperimentOutcome {
            passed: true,
            lines: Vec::new(),
            files: Vec::new(),
            fit: None,
        }
    }

    pub(crate) fn check(&mut self, ok: bool, what: impl std::fmt::Display) {
        self.passed &= ok;
        self.lines
            .push(format!("{} {}", if ok { "PASS" } else { "FAIL" }, what));
    }

    pub(crate) fn note(&mut self, what: impl std::fmt::Display) {
        self.lines.push(format!("     {what}"));
    }
}

/// Deterministic 64-bit mix for mode phases (splitmix64 step).
pub(crate) fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Uniform phase in [0, 2π) from a seed and a key.
pub(crate) fn phase_from(seed: u64, key: u64) -> f64 {
    let h = mix64(seed ^ mix64(key));
    (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
}

pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentOutcome> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let threads = cfg.effective_parallelism();
    let run = || match cfg.experiment {
        Experiment::E1RemainderDecay => run_e1(cfg),
        Experiment::E2Smoothing => run_e2(cfg),
        Experiment::E3Splitting => run_e3(cfg),
        Experiment::E4MultifreqScaling => run_e4(cfg),
    };
    if threads == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        pool.install(run)
    }
}
