//! E1 — remainder decay of the averaged forced pendulum: run the
//! normal-form reduction to s = c/ε over an ε grid and fit the decay rate
//! of the oscillatory remainder against 1/ε.

use rayon::prelude::*;

use contavg::engine::{EngineError, Stepper};
use contavg::ft::TruncationPolicy;
use contavg::splitting::{normal_form_reduce, PendulumParams, SplittingError};

use crate::config::ExperimentConfig;
use crate::fit::fit_line;
use crate::report::{fmt, write_csv};

use super::ExperimentOutcome;

struct Cell {
    eps: f64,
    s_target: f64,
    remainder: f64,
    remainder_scaled: f64,
    remainder_initial: f64,
    blown_up: bool,
    s_reached: f64,
}

fn run_grid(
    cfg: &ExperimentConfig,
    k_max: usize,
) -> anyhow::Result<Vec<Cell>> {
    let e1 = &cfg.e1;
    let policy = TruncationPolicy::new(k_max, e1.deg_max, e1.drop_eps, e1.rho, e1.q)
        .map_err(|e| anyhow::anyhow!("policy: {e}"))?;
    let mut cells: Vec<Cell> = cfg
        .e1
        .eps_grid
        .par_iter()
        .map(|&eps| {
            let params = PendulumParams::new(eps, e1.b)?;
            // remainder at s = 0 for the attenuation figure
            let initial = normal_form_reduce(&params, 0.0, &policy, e1.ds, Stepper::ExponentialRk4)?
                .remainder;
            match normal_form_reduce(&params, e1.c_target, &policy, e1.ds, Stepper::ExponentialRk4)
            {
                Ok(out) => {
                    if e1.dump_reports {
                        let path = cfg
                            .output_dir
                            .join(format!("e1_report_eps{eps}_K{k_max}.csv"));
                        if let Ok(f) = std::fs::File::create(&path) {
                            let _ = out.report.write_csv(std::io::BufWriter::new(f));
                        }
                    }
                    Ok(Cell {
                        eps,
                        s_target: e1.c_target / eps,
                        remainder: out.remainder,
                        remainder_scaled: out.remainder / eps,
                        remainder_initial: initial,
                        blown_up: false,
                        s_reached: out.s_reached,
                    })
                }
                Err(SplittingError::Engine(EngineError::BlowUp { s, .. })) => Ok(Cell {
                    eps,
                    s_target: e1.c_target / eps,
                    remainder: f64::NAN,
                    remainder_scaled: f64::NAN,
                    remainder_initial: initial,
                    blown_up: true,
                    s_reached: s,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, SplittingError>>()?;
    cells.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    Ok(cells)
}

pub fn run_e1(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentOutcome> {
    let e1 = &cfg.e1;
    let mut out = ExperimentOutcome::new();
    let cells = run_grid(cfg, e1.k_max)?;

    let csv_path = cfg.output_dir.join("e1_remainder.csv");
    write_csv(
        &csv_path,
        "eps,s_target,s_reached,remainder,remainder_scaled,remainder_initial,blown_up",
        cells.iter().map(|c| {
            vec![
                fmt(c.eps),
                fmt(c.s_target),
                fmt(c.s_reached),
                fmt(c.remainder),
                fmt(c.remainder_scaled),
                fmt(c.remainder_initial),
                (c.blown_up as u8).to_string(),
            ]
        }),
    )?;
    out.files.push(csv_path);

    let good: Vec<&Cell> = cells.iter().filter(|c| !c.blown_up).collect();
    for c in cells.iter().filter(|c| c.blown_up) {
        out.note(format!(
            "cell eps = {} blew up at s = {:.3} (excluded from the fit)",
            c.eps, c.s_reached
        ));
    }
    if good.len() < 4 {
        out.check(false, format!("only {} usable cells, need 4 for the fit", good.len()));
        return Ok(out);
    }

    let x: Vec<f64> = good.iter().map(|c| 1.0 / c.eps).collect();
    let y: Vec<f64> = good.iter().map(|c| c.remainder_scaled.ln()).collect();
    let fit = fit_line(&x, &y).map_err(|e| anyhow::anyhow!(e))?;
    let alpha_fit = -fit.slope;
    if e1.c_target == 0.0 {
        // identity decomposition: nothing decays
        out.check(
            alpha_fit.abs() <= 0.01,
            format!("fitted decay rate {alpha_fit:.2e} ~ 0 at c_target = 0"),
        );
    } else {
        let rel = (alpha_fit - e1.c_target).abs() / e1.c_target;
        out.check(
            rel <= e1.slope_rel_tol,
            format!(
                "fitted decay rate {:.4} within {:.0}% of c_target {} (off by {:.1}%, R² = {:.5})",
                alpha_fit,
                e1.slope_rel_tol * 100.0,
                e1.c_target,
                rel * 100.0,
                fit.r2
            ),
        );
    }

    if e1.c_target == 0.0 {
        let preserved = good
            .iter()
            .all(|c| (c.remainder - c.remainder_initial).abs() <= 1e-12 * c.remainder_initial);
        out.check(
            preserved,
            "c_target = 0: remainder equals the initial forcing norm for every eps",
        );
    } else if let Some(probe) = good
        .iter()
        .find(|c| (c.eps - e1.attenuation_probe_eps).abs() < 1e-9)
    {
        let factor = probe.remainder_initial / probe.remainder;
        out.check(
            factor >= e1.min_attenuation,
            format!(
                "remainder at eps = {} attenuated by {:.3e} (need >= {:.0e})",
                probe.eps, factor, e1.min_attenuation
            ),
        );
    } else {
        out.note(format!(
            "attenuation probe eps = {} not in the grid; skipped",
            e1.attenuation_probe_eps
        ));
    }

    if e1.truncation_check {
        let refined = run_grid(cfg, e1.k_max * 2)?;
        let good2: Vec<&Cell> = refined.iter().filter(|c| !c.blown_up).collect();
        if good2.len() >= 4 {
            let x2: Vec<f64> = good2.iter().map(|c| 1.0 / c.eps).collect();
            let y2: Vec<f64> = good2.iter().map(|c| c.remainder_scaled.ln()).collect();
            let fit2 = fit_line(&x2, &y2).map_err(|e| anyhow::anyhow!(e))?;
            let drift = ((-fit2.slope) - alpha_fit).abs() / alpha_fit;
            out.check(
                drift <= e1.truncation_drift_tol,
                format!(
                    "doubling K changes the fitted rate by {:.2}% (tolerance {:.0}%)",
                    drift * 100.0,
                    e1.truncation_drift_tol * 100.0
                ),
            );
        } else {
            out.check(false, "truncation check lost too many cells to blow-up");
        }
    }

    out.fit = Some(fit);
    Ok(out)
}
