//! E4 — multi-frequency scaling (optional tier): two fast phases with the
//! golden-mean frequency vector. The mode damping rate |⟨k,ω⟩| is
//! Diophantine-limited, so the remainder at s = α/ε scales like
//! e^{-q̄·ε^{-1/(γ+1)}}; with γ = 1 the fitted abscissa is ε^{-1/2}.
//!
//! The multi-frequency ξ (mode multiplier i·sign⟨k,ω⟩) is a natural
//! generalization of the single-phase operator, and is labeled as such in
//! the output.

use num_complex::Complex64;
use rayon::prelude::*;

use contavg::engine::multifreq::{diophantine_gamma0, run_multifreq, MfField};

use crate::config::ExperimentConfig;
use crate::fit::{best_exponent, fit_line};
use crate::report::{fmt, write_csv};

use super::{phase_from, ExperimentOutcome};

const GOLDEN_OMEGA: [f64; 2] = [1.0, 1.618033988749894848];

fn initial_field(cfg: &ExperimentConfig, eps: f64) -> anyhow::Result<MfField> {
    let e4 = &cfg.e4;
    let mut v = MfField::zero(e4.k_box, e4.deg_y, GOLDEN_OMEGA);
    // slow drift w̄: constant y-rate of order ε
    v.set(2, (0, 0), 0, Complex64::new(0.05 * eps, 0.0))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let modes: Vec<(i32, i32)> = v.stored_modes().to_vec();
    for k in modes {
        if k == (0, 0) {
            continue;
        }
        let norm = (k.0.abs().max(k.1.abs())) as f64;
        let amp = e4.amplitude * eps * norm.powf(-e4.rho_profile) * (-e4.q_profile * norm).exp();
        for comp in 0..3usize {
            let key = (k.0 as i64 as u64)
                .wrapping_mul(0x1_0000_0001)
                .wrapping_add(k.1 as i64 as u64)
                .wrapping_add((comp as u64) << 48);
            let phi = phase_from(cfg.seed, key);
            // split the amplitude between a constant and a linear-in-y part
            v.set(comp, k, 0, Complex64::from_polar(0.7 * amp, phi))
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            if e4.deg_y >= 1 {
                let phi2 = phase_from(cfg.seed, key ^ 0xABCD);
                v.set(comp, k, 1, Complex64::from_polar(0.3 * amp, phi2))
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
            }
        }
    }
    Ok(v)
}

pub fn run_e4(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentOutcome> {
    let e4 = &cfg.e4;
    let mut out = ExperimentOutcome::new();
    out.note("E4 uses the multi-frequency xi (i·sign⟨k,ω⟩), a generalization of the single-phase operator");

    let mut cells: Vec<(f64, f64, f64)> = e4
        .eps_grid
        .par_iter()
        .map(|&eps| -> anyhow::Result<(f64, f64, f64)> {
            let v0 = initial_field(cfg, eps)?;
            let s_target = e4.alpha / eps;
            let end = run_multifreq(&v0, s_target, e4.ds).map_err(|e| anyhow::anyhow!("{e}"))?;
            // Remainder normalized by the initial oscillatory mass: the
            // ε·amplitude prefactor drops out of the decay exponent.
            let r0 = v0.coefficient_norm(1.0, true);
            let r = end.coefficient_norm(1.0, true) / r0;
            Ok((eps, s_target, r))
        })
        .collect::<anyhow::Result<_>>()?;
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));

    let csv_path = cfg.output_dir.join("e4_multifreq.csv");
    write_csv(
        &csv_path,
        "eps,s_target,remainder_normalized",
        cells.iter().map(|c| vec![fmt(c.0), fmt(c.1), fmt(c.2)]),
    )?;
    out.files.push(csv_path);

    let eps: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let y: Vec<f64> = cells.iter().map(|c| c.2.ln()).collect();
    let x_half: Vec<f64> = eps.iter().map(|e| e.powf(-0.5)).collect();
    let fit = fit_line(&x_half, &y).map_err(|e| anyhow::anyhow!(e))?;
    out.check(
        fit.r2 >= e4.r2_min,
        format!(
            "log remainder vs eps^(-1/2) linear with R² = {:.5} (need >= {})",
            fit.r2, e4.r2_min
        ),
    );
    let p = best_exponent(&eps, &y, 0.15, 1.25).map_err(|e| anyhow::anyhow!(e))?;
    out.check(
        (e4.exponent_lo..=e4.exponent_hi).contains(&p),
        format!(
            "fitted eps-exponent {:.3} inside [{}, {}] (gamma = 1 predicts 1/2)",
            p, e4.exponent_lo, e4.exponent_hi
        ),
    );

    let gamma0 = diophantine_gamma0(GOLDEN_OMEGA, e4.k_box, e4.gamma);
    let qbar_pred = (1.0 + 1.0 / e4.gamma)
        * (e4.gamma * gamma0 * e4.alpha * e4.q_profile.powf(e4.gamma))
            .powf(1.0 / (e4.gamma + 1.0));
    out.note(format!(
        "fitted q̄ = {:.4} vs (1 + 1/γ)(γ·γ₀·α·q^γ)^(1/(γ+1)) = {:.4} with γ₀ = {:.4} on this box (reported, not asserted)",
        -fit.slope, qbar_pred, gamma0
    ));
    out.fit = Some(fit);
    Ok(out)
}
