//! Versioned JSON experiment configuration with validation. Assertion
//! thresholds live here with defaults equal to the acceptance-criteria
//! values, so a run is reproducible from its config alone.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.into(),
    }
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    /// Output directory for CSV artifacts.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for independent grid cells; 0 = library default.
    /// The CONTAVG_THREADS environment variable overrides this.
    #[serde(default)]
    pub parallelism: usize,
    /// Seed for deterministic pseudo-random pieces (mode phases).
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub e1: E1Config,
    #[serde(default)]
    pub e2: E2Config,
    #[serde(default)]
    pub e3: E3Config,
    #[serde(default)]
    pub e4: E4Config,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "E1_remainder_decay")]
    E1RemainderDecay,
    #[serde(rename = "E2_smoothing")]
    E2Smoothing,
    #[serde(rename = "E3_splitting")]
    E3Splitting,
    #[serde(rename = "E4_multifreq_scaling")]
    E4MultifreqScaling,
}

/// Remainder decay of the averaged forced pendulum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E1Config {
    pub eps_grid: Vec<f64>,
    pub c_target: f64,
    pub b: f64,
    pub k_max: usize,
    pub deg_max: usize,
    pub rho: f64,
    pub q: f64,
    pub drop_eps: f64,
    pub ds: f64,
    /// Rerun with doubled Fourier cutoff and compare the fitted rate.
    pub truncation_check: bool,
    /// Write the per-step engine run report of each cell.
    pub dump_reports: bool,
    /// |fitted rate - c_target| / c_target must stay below this.
    pub slope_rel_tol: f64,
    /// remainder(s = c/ε) at the probe ε must fall by at least this factor.
    pub min_attenuation: f64,
    pub attenuation_probe_eps: f64,
    /// Allowed fitted-rate drift when K doubles (truncation check).
    pub truncation_drift_tol: f64,
}

impl Default for E1Config {
    fn default() -> Self {
        E1Config {
            eps_grid: vec![0.05, 1.0 / 15.0, 0.1, 0.2],
            c_target: 0.8,
            b: 0.1,
            k_max: 6,
            deg_max: 14,
            rho: 0.5,
            q: 0.0,
            drop_eps: 1e-26,
            ds: 0.02,
            truncation_check: false,
            dump_reports: false,
            slope_rel_tol: 0.15,
            min_attenuation: 1e3,
            attenuation_probe_eps: 0.1,
            truncation_drift_tol: 0.05,
        }
    }
}

/// Fourier smoothing of power-law initial data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E2Config {
    pub k_max: usize,
    pub power: f64,
    pub s0: f64,
    pub eps: f64,
    pub deg_max: usize,
    pub ds: f64,
    /// Envelope C·k^{-power}·e^{-rate·k} parameters of the assertion.
    pub envelope_factor: f64,
    pub envelope_rate: f64,
}

impl Default for E2Config {
    fn default() -> Self {
        E2Config {
            k_max: 32,
            power: 2.0,
            s0: 0.1,
            eps: 0.05,
            deg_max: 2,
            ds: 0.0,
            envelope_factor: 2.0,
            envelope_rate: 0.09,
        }
    }
}

/// Separatrix splitting on the forced pendulum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E3Config {
    pub eps_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub section_phase: f64,
    pub n_points: usize,
    pub map_tol: f64,
    /// per-cell |area - melnikov| / melnikov bound, and it must decrease
    /// with ε.
    pub melnikov_rel_tol: f64,
    /// Deviations below this are at the measurement floor: the decrease-
    /// with-ε requirement does not compare them. (At B = 0.01 the true
    /// Melnikov defect is O(B²) ~ 1e-4 and the decrease is invisible.)
    pub monotonicity_floor: f64,
    /// fitted exponent must be within this of -π/2 (relative).
    pub slope_rel_tol: f64,
    /// extrapolated amplitude must be within this of 2 (relative).
    pub intercept_rel_tol: f64,
    /// Optionally dump manifold polylines per cell.
    pub dump_manifolds: bool,
}

impl Default for E3Config {
    fn default() -> Self {
        E3Config {
            eps_grid: vec![0.15, 0.2, 0.25, 0.3],
            b_grid: vec![0.01],
            section_phase: 0.0,
            n_points: 48,
            map_tol: 1e-13,
            melnikov_rel_tol: 0.25,
            monotonicity_floor: 1e-3,
            slope_rel_tol: 0.10,
            intercept_rel_tol: 0.20,
            dump_manifolds: false,
        }
    }
}

/// Two-fast-phase scaling with the golden-mean frequency vector. The
/// multi-frequency ξ (sign⟨k,ω⟩) is a generalization of the single-phase
/// operator; outputs are labeled accordingly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct E4Config {
    pub eps_grid: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
    /// e^{-q‖k‖} decay of the initial mode profile.
    pub q_profile: f64,
    /// ‖k‖^{-rho} power of the initial mode profile.
    pub rho_profile: f64,
    /// Overall amplitude of the perturbation (carries the ε scaling).
    pub amplitude: f64,
    pub k_box: i32,
    pub deg_y: usize,
    pub ds: f64,
    pub r2_min: f64,
    pub exponent_lo: f64,
    pub exponent_hi: f64,
}

impl Default for E4Config {
    fn default() -> Self {
        E4Config {
            eps_grid: vec![0.02, 0.03, 0.045, 0.07, 0.1],
            gamma: 1.0,
            alpha: 1.0,
            q_profile: 0.4,
            rho_profile: 1.0,
            amplitude: 0.02,
            k_box: 10,
            deg_y: 2,
            ds: 0.2,
            r2_min: 0.98,
            exponent_lo: 0.4,
            exponent_hi: 0.6,
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            // serde reports the offending field in its message
            err("<schema>", e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        match self.experiment {
            Experiment::E1RemainderDecay => self.validate_e1(),
            Experiment::E2Smoothing => self.validate_e2(),
            Experiment::E3Splitting => self.validate_e3(),
            Experiment::E4MultifreqScaling => self.validate_e4(),
        }
    }

    fn validate_e1(&self) -> Result<(), ConfigError> {
        let c = &self.e1;
        if c.eps_grid.len() < 4 {
            return Err(err("e1.eps_grid", "need at least 4 epsilon values"));
        }
        if c.eps_grid.iter().any(|&e| !(0.0 < e && e < 1.0)) {
            return Err(err("e1.eps_grid", "epsilon values must lie in (0, 1)"));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&c.c_target) {
            return Err(err("e1.c_target", "must lie in [0, π/2)"));
        }
        if !(c.b >= 0.0) {
            return Err(err("e1.b", "must be nonnegative"));
        }
        if c.k_max < 1 || c.deg_max < 2 {
            return Err(err("e1.k_max", "need K >= 1 and N >= 2"));
        }
        if !(c.ds > 0.0) {
            return Err(err("e1.ds", "must be positive"));
        }
        if !(c.rho > 0.0) || !(c.q >= 0.0) {
            return Err(err("e1.rho", "need rho > 0 and q >= 0"));
        }
        Ok(())
    }

    fn validate_e2(&self) -> Result<(), ConfigError> {
        let c = &self.e2;
        if c.k_max < 32 {
            return Err(err("e2.k_max", "smoothing experiment needs K >= 32"));
        }
        if !(c.s0 >= 0.0) {
            return Err(err("e2.s0", "must be nonnegative"));
        }
        if !(c.power > 0.0) {
            return Err(err("e2.power", "must be positive"));
        }
        if !(0.0 < c.eps && c.eps < 1.0) {
            return Err(err("e2.eps", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn validate_e3(&self) -> Result<(), ConfigError> {
        let c = &self.e3;
        if c.eps_grid.is_empty() {
            return Err(err("e3.eps_grid", "must not be empty"));
        }
        if c.eps_grid.iter().any(|&e| !(0.15..=0.3).contains(&e)) {
            return Err(err(
                "e3.eps_grid",
                "double-precision splitting is validated for eps in [0.15, 0.3]",
            ));
        }
        if c.b_grid.is_empty() {
            return Err(err("e3.b_grid", "must not be empty"));
        }
        if c.b_grid.iter().any(|&b| !(0.0..=0.02).contains(&b)) {
            return Err(err("e3.b_grid", "B must lie in [0, 0.02]"));
        }
        if !(c.map_tol > 0.0) {
            return Err(err("e3.map_tol", "must be positive"));
        }
        if c.n_points < 8 {
            return Err(err("e3.n_points", "need at least 8 points per domain"));
        }
        Ok(())
    }

    fn validate_e4(&self) -> Result<(), ConfigError> {
        let c = &self.e4;
        if c.eps_grid.len() < 4 {
            return Err(err("e4.eps_grid", "need at least 4 epsilon values"));
        }
        if c.eps_grid.iter().any(|&e| !(0.0 < e && e < 1.0)) {
            return Err(err("e4.eps_grid", "epsilon values must lie in (0, 1)"));
        }
        if c.gamma != 1.0 {
            return Err(err("e4.gamma", "the golden-mean benchmark fixes gamma = 1"));
        }
        if !(c.alpha > 0.0) || !(c.q_profile > 0.0) {
            return Err(err("e4.alpha", "need alpha > 0 and q_profile > 0"));
        }
        if c.rho_profile <= c.gamma / (c.gamma + 1.0) {
            return Err(err(
                "e4.rho_profile",
                "mode-profile power must exceed gamma/(gamma+1)",
            ));
        }
        if c.k_box < 3 {
            return Err(err("e4.k_box", "need a mode box of at least 3"));
        }
        if !(c.ds > 0.0) {
            return Err(err("e4.ds", "must be positive"));
        }
        Ok(())
    }

    /// Effective worker count: CONTAVG_THREADS beats the config value.
    pub fn effective_parallelism(&self) -> usize {
        std::env::var("CONTAVG_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(self.parallelism)
    }
}
