//! E2 — smoothing: power-law Fourier data |k|^{-p} gains a uniform
//! exponential envelope after any positive flow time s₀.

use num_complex::Complex64;

use contavg::engine::{self, AveragingState, FieldState, Stepper, Variant};
use contavg::ft::{mode_norms_field, TruncationPolicy, VectorFieldFT};

use crate::config::ExperimentConfig;
use crate::report::{fmt, write_csv};

use super::{phase_from, ExperimentOutcome};

pub fn run_e2(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentOutcome> {
    let e2 = &cfg.e2;
    let mut out = ExperimentOutcome::new();
    let k_max = e2.k_max;
    let policy = TruncationPolicy::new(k_max, e2.deg_max, 0.0, 1.0, 0.0)
        .map_err(|e| anyhow::anyhow!("policy: {e}"))?;

    // m = 1 field: û⁰ = ε·0.3·z plus modes with per-mode weighted norm
    // exactly ε·k^{-p}; the 0.6/0.4 split puts some z-dependence in every
    // mode so the convolution terms act.
    let eps = e2.eps;
    let mut field = VectorFieldFT::zero(1, k_max, e2.deg_max);
    field
        .component_mut(0)
        .set(0, &[1], Complex64::new(0.3 * eps, 0.0))?;
    for k in 1..=k_max {
        let amp = eps * (k as f64).powf(-e2.power);
        let phi = phase_from(cfg.seed, k as u64);
        let c0 = Complex64::from_polar(0.6 * amp, phi);
        let c1 = Complex64::from_polar(0.4 * amp, phase_from(cfg.seed, 1000 + k as u64));
        field.component_mut(0).set(k, &[0], c0)?;
        field.component_mut(0).set(k, &[1], c1)?;
    }

    let initial_norms = mode_norms_field(&field, &policy);
    let state = AveragingState::new(FieldState::Vector(field), Variant::Nonautonomous, eps, policy)
        .map_err(|e| anyhow::anyhow!("state: {e}"))?
        .with_stepper(Stepper::ExponentialRk4);
    let ds = if e2.ds > 0.0 {
        e2.ds
    } else {
        (0.1 / k_max as f64).min(0.01)
    };
    let (end, _) = engine::run_to(&state, e2.s0, ds).map_err(|e| anyhow::anyhow!("run: {e}"))?;
    let final_norms = end.field.mode_norms(&end.policy);

    // Normalized so that mode k starts exactly at k^{-p}.
    let scale = initial_norms[1]; // = ε·1^{-p}
    let mut rows = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut all_under_fixed = true;
    let k1_ratio = (final_norms[1] / scale) / (-e2.envelope_rate).exp();
    let c_contract = 2.0 * k1_ratio;
    let mut all_under_contract = true;
    for k in 1..=k_max {
        let n0 = initial_norms[k] / scale;
        let n1 = final_norms[k] / scale;
        let envelope = e2.envelope_factor * (k as f64).powf(-e2.power)
            * (-e2.envelope_rate * k as f64).exp();
        let env_contract =
            c_contract * (k as f64).powf(-e2.power) * (-e2.envelope_rate * k as f64).exp();
        all_under_fixed &= n1 <= envelope;
        all_under_contract &= n1 <= env_contract;
        worst_margin = worst_margin.min(envelope / n1);
        rows.push(vec![
            k.to_string(),
            fmt(n0),
            fmt(n1),
            fmt(envelope),
            ((n1 <= envelope) as u8).to_string(),
        ]);
    }

    let csv_path = cfg.output_dir.join("e2_smoothing.csv");
    write_csv(
        &csv_path,
        "k,norm_initial,norm_final,envelope,under_envelope",
        rows.into_iter(),
    )?;
    out.files.push(csv_path);

    if e2.s0 == 0.0 {
        // trivial flow: the envelope is the initial power law itself
        let preserved = (1..=k_max).all(|k| {
            (final_norms[k] - initial_norms[k]).abs() <= 1e-14 * initial_norms[k].max(1e-300)
        });
        out.check(preserved, "s0 = 0: mode norms equal the initial power law");
        return Ok(out);
    }

    out.check(
        all_under_fixed,
        format!(
            "all {} modes under {}·k^(-{})·e^(-{}k) after s0 = {} (worst margin factor {:.3})",
            k_max, e2.envelope_factor, e2.power, e2.envelope_rate, e2.s0, worst_margin
        ),
    );
    out.check(
        all_under_contract,
        format!("all modes under the 2×(k=1 ratio) envelope (C = {c_contract:.4})"),
    );
    Ok(out)
}
