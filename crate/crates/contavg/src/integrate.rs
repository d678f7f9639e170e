//! Adaptive high-order ODE integration: a 13-stage embedded 7(8)
//! Runge-Kutta-Fehlberg pair with PI-free step control, shared by the
//! oracle trajectory checks and the separatrix laboratory.

/// Coefficients of the Fehlberg 7(8) pair (NASA TR R-287).
const STAGES: usize = 13;

const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        -25.0 / 108.0,
        0.0,
        0.0,
        125.0 / 108.0,
        -65.0 / 27.0,
        125.0 / 54.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        31.0 / 300.0,
        0.0,
        0.0,
        0.0,
        61.0 / 225.0,
        -2.0 / 9.0,
        13.0 / 900.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.0,
        0.0,
        0.0,
        -53.0 / 6.0,
        704.0 / 45.0,
        -107.0 / 9.0,
        67.0 / 90.0,
        3.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

/// 8th-order weights; k0/k10 are replaced by k11/k12 relative to the
/// 7th-order solution, so the error estimate is 41/840·(k0 + k10 - k11 - k12).
const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local tolerance; both absolute and relative.
    pub tol: f64,
    /// Initial step magnitude; estimated from the field when None.
    pub h0: Option<f64>,
    /// Abort threshold for the step magnitude.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-13,
            h0: None,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("trajectory escaped the validity region at t = {t}")]
    Escape { t: f64 },
    #[error("tolerance must be positive")]
    BadTolerance,
}

/// One RKF78 step from (t, y) with step h. Returns the 8th-order solution
/// and the embedded error estimate per component.
pub fn rkf78_step<F>(f: &F, t: f64, y: &[f64], h: f64, y_out: &mut [f64], err: &mut [f64])
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; STAGES];
    let mut work = vec![0.0; n];

    f(t, y, &mut k[0]);
    for s in 1..STAGES {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    acc += a * kj[i];
                }
            }
            work[i] = y[i] + h * acc;
        }
        let (head, tail) = k.split_at_mut(s);
        let _ = head;
        f(t + C[s] * h, &work, &mut tail[0]);
    }

    for i in 0..n {
        let mut acc = 0.0;
        for (s, ks) in k.iter().enumerate() {
            if B8[s] != 0.0 {
                acc += B8[s] * ks[i];
            }
        }
        y_out[i] = y[i] + h * acc;
        err[i] = h * 41.0 / 840.0 * (k[0][i] + k[10][i] - k[11][i] - k[12][i]);
    }
}

/// Integrate dy/dt = f(t, y) from t0 to t1 (either direction) with adaptive
/// steps. `escape` aborts the trajectory early (domain guard). `observe` is
/// called after every accepted step with (t, y).
pub fn integrate_observed<F>(
    f: &F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &OdeOptions,
    mut escape: Option<&mut dyn FnMut(&[f64]) -> bool>,
    mut observe: Option<&mut dyn FnMut(f64, &[f64])>,
) -> Result<Vec<f64>, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(opts.tol > 0.0) {
        return Err(OdeError::BadTolerance);
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    if t0 == t1 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut h = match opts.h0 {
        Some(h0) => h0.abs().min(span),
        None => {
            let mut dy = vec![0.0; n];
            f(t0, &y, &mut dy);
            let scale = dy.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-8);
            (opts.tol.powf(1.0 / 8.0) / scale).clamp(1e-6, span.min(0.1))
        }
    };

    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    for _ in 0..opts.max_steps {
        if (t - t1).abs() <= 1e-15 * span.max(1.0) {
            return Ok(y);
        }
        let remaining = (t1 - t).abs();
        let h_eff = h.min(remaining);
        rkf78_step(f, t, &y, dir * h_eff, &mut y_new, &mut err);
        if y_new.iter().any(|v| !v.is_finite()) {
            // Retry smaller before giving up.
            h *= 0.25;
            if h < opts.h_min {
                return Err(OdeError::NonFinite { t });
            }
            continue;
        }
        let mut e = 0.0f64;
        for i in 0..n {
            let scale = opts.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            e = e.max(err[i].abs() / scale);
        }
        if e <= 1.0 {
            t += dir * h_eff;
            y.copy_from_slice(&y_new);
            if let Some(esc) = escape.as_deref_mut() {
                if esc(&y) {
                    return Err(OdeError::Escape { t });
                }
            }
            if let Some(obs) = observe.as_deref_mut() {
                obs(t, &y);
            }
            if (t - t1).abs() <= 1e-15 * span.max(1.0) || h_eff >= remaining {
                return Ok(y);
            }
        }
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-1.0 / 8.0)).clamp(0.2, 5.0)
        };
        h = (h_eff * factor).min(span);
        if h < opts.h_min {
            return Err(OdeError::StepUnderflow { t });
        }
    }
    Err(OdeError::MaxSteps { t })
}

/// Integrate without observers.
pub fn integrate<F>(f: &F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions) -> Result<Vec<f64>, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    integrate_observed(f, t0, t1, y0, opts, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_to_tolerance() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let out = integrate(&f, 0.0, 1.0, &[1.0], &OdeOptions::with_tol(1e-13)).unwrap();
        assert!((out[0] - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn zero_field_is_identity() {
        let f = |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0;
        let out = integrate(&f, 0.0, 5.0, &[0.7], &OdeOptions::default()).unwrap();
        assert_eq!(out[0], 0.7);
    }

    #[test]
    fn backward_integration() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let out = integrate(&f, 1.0, 0.0, &[std::f64::consts::E], &OdeOptions::with_tol(1e-13)).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eighth_order_convergence() {
        // Fixed-step error on y' = cos(t)·y should drop by ~2^8 per
        // halving; step sizes large enough to stay above the roundoff floor.
        let f = |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = t.cos() * y[0];
        let exact = |t: f64| (t.sin()).exp();
        let run = |h: f64| {
            let mut t = 0.0;
            let mut y = vec![1.0];
            let mut y_new = vec![0.0];
            let mut err = vec![0.0];
            let steps = (4.0 / h).round() as usize;
            for _ in 0..steps {
                rkf78_step(&f, t, &y, h, &mut y_new, &mut err);
                y.copy_from_slice(&y_new);
                t += h;
            }
            (y[0] - exact(t)).abs()
        };
        let e1 = run(0.5);
        let e2 = run(0.25);
        let ratio = e1 / e2;
        assert!(
            ratio > 2f64.powi(7),
            "order collapse: e(0.5) / e(0.25) = {ratio} ({e1} vs {e2})"
        );
    }

    #[test]
    fn pendulum_energy_drift() {
        // H0 = y²/2 + cos x along a libration orbit, 20 time units.
        let f = |_t: f64, z: &[f64], dz: &mut [f64]| {
            dz[0] = z[1];
            dz[1] = z[0].sin();
        };
        let h0 = |z: &[f64]| z[1] * z[1] / 2.0 + z[0].cos();
        let z0 = [std::f64::consts::PI - 1.0, 0.0];
        let out = integrate(&f, 0.0, 20.0, &z0, &OdeOptions::with_tol(1e-13)).unwrap();
        assert!((h0(&out) - h0(&z0)).abs() <= 1e-12);
    }

    #[test]
    fn escape_guard_fires() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let mut guard = |y: &[f64]| y[0] > 10.0;
        let r = integrate_observed(
            &f,
            0.0,
            10.0,
            &[1.0],
            &OdeOptions::default(),
            Some(&mut guard),
            None,
        );
        assert!(matches!(r, Err(OdeError::Escape { .. })));
    }
}
