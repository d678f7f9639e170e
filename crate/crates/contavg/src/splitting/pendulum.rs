//! The forced pendulum H = ε(y²/2 + (1 + 2B cos t) cos x): canonical flow,
//! Poincaré section map, variational and complex-step Jacobians, hyperbolic
//! fixed point with eigen-data, and the unperturbed separatrix orbit.

use num_complex::Complex64;

use super::SplittingError;
use crate::integrate::{integrate_observed, OdeError, OdeOptions};

pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;
/// Trajectories with |y| beyond this are treated as escaped.
pub const ESCAPE_Y: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub eps: f64,
    pub b: f64,
}

impl PendulumParams {
    pub fn new(eps: f64, b: f64) -> Result<Self, SplittingError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SplittingError::BadParams(format!(
                "eps = {eps} outside (0, 1)"
            )));
        }
        if !(b >= 0.0) {
            return Err(SplittingError::BadParams(format!("B = {b} negative")));
        }
        Ok(PendulumParams { eps, b })
    }

    /// ẋ = εy, ẏ = ε(1 + 2B cos t) sin x.
    #[inline]
    pub fn field(&self, t: f64, z: &[f64], dz: &mut [f64]) {
        dz[0] = self.eps * z[1];
        dz[1] = self.eps * (1.0 + 2.0 * self.b * t.cos()) * z[0].sin();
    }

    /// Unperturbed energy H₀ = y²/2 + cos x.
    pub fn h0(z: &[f64]) -> f64 {
        z[1] * z[1] / 2.0 + z[0].cos()
    }
}

fn ode_opts(tol: f64) -> OdeOptions {
    OdeOptions::with_tol(tol)
}

fn map_escape(e: OdeError) -> SplittingError {
    match e {
        OdeError::Escape { t } => SplittingError::Escape { t },
        other => SplittingError::Integration(other),
    }
}

/// Time-2π flow map from section phase t0 (direction ±1 for P or P⁻¹).
pub fn poincare_map(
    params: &PendulumParams,
    z: [f64; 2],
    t0: f64,
    dir: i8,
    tol: f64,
) -> Result<[f64; 2], SplittingError> {
    let f = |t: f64, z: &[f64], dz: &mut [f64]| params.field(t, z, dz);
    let t1 = t0 + f64::from(dir) * PERIOD;
    let mut guard = |z: &[f64]| z[1].abs() > ESCAPE_Y;
    let out = integrate_observed(&f, t0, t1, &z, &ode_opts(tol), Some(&mut guard), None)
        .map_err(map_escape)?;
    Ok([out[0], out[1]])
}

/// Map together with the transported tangent vector (variational flow).
pub fn poincare_with_tangent(
    params: &PendulumParams,
    z: [f64; 2],
    v: [f64; 2],
    t0: f64,
    dir: i8,
    tol: f64,
) -> Result<([f64; 2], [f64; 2]), SplittingError> {
    let f = |t: f64, w: &[f64], dw: &mut [f64]| {
        let c = params.eps * (1.0 + 2.0 * params.b * t.cos()) * w[0].cos();
        dw[0] = params.eps * w[1];
        dw[1] = params.eps * (1.0 + 2.0 * params.b * t.cos()) * w[0].sin();
        dw[2] = params.eps * w[3];
        dw[3] = c * w[2];
    };
    let t1 = t0 + f64::from(dir) * PERIOD;
    let y0 = [z[0], z[1], v[0], v[1]];
    let mut guard = |w: &[f64]| w[1].abs() > ESCAPE_Y;
    let out = integrate_observed(&f, t0, t1, &y0, &ode_opts(tol), Some(&mut guard), None)
        .map_err(map_escape)?;
    Ok(([out[0], out[1]], [out[2], out[3]]))
}

/// Jacobian of the section map by the variational equations (both tangent
/// directions in one pass).
pub fn poincare_jacobian(
    params: &PendulumParams,
    z: [f64; 2],
    t0: f64,
    tol: f64,
) -> Result<[[f64; 2]; 2], SplittingError> {
    let f = |t: f64, w: &[f64], dw: &mut [f64]| {
        let c = params.eps * (1.0 + 2.0 * params.b * t.cos()) * w[0].cos();
        dw[0] = params.eps * w[1];
        dw[1] = params.eps * (1.0 + 2.0 * params.b * t.cos()) * w[0].sin();
        // columns of the tangent matrix
        dw[2] = params.eps * w[3];
        dw[3] = c * w[2];
        dw[4] = params.eps * w[5];
        dw[5] = c * w[4];
    };
    let y0 = [z[0], z[1], 1.0, 0.0, 0.0, 1.0];
    let mut guard = |w: &[f64]| w[1].abs() > ESCAPE_Y;
    let out = integrate_observed(&f, t0, t0 + PERIOD, &y0, &ode_opts(tol), Some(&mut guard), None)
        .map_err(map_escape)?;
    Ok([[out[2], out[4]], [out[3], out[5]]])
}

/// Jacobian by complex-step differentiation: a finite difference in the
/// imaginary direction, free of subtractive cancellation, run through the
/// complexified field. Independent of the variational route.
pub fn poincare_jacobian_complex_step(
    params: &PendulumParams,
    z: [f64; 2],
    t0: f64,
    h: f64,
    tol: f64,
) -> Result<[[f64; 2]; 2], SplittingError> {
    let f = |t: f64, w: &[f64], dw: &mut [f64]| {
        let x = Complex64::new(w[0], w[1]);
        let y = Complex64::new(w[2], w[3]);
        let force = params.eps * (1.0 + 2.0 * params.b * t.cos());
        let dx = params.eps * y;
        let dy = force * x.sin();
        dw[0] = dx.re;
        dw[1] = dx.im;
        dw[2] = dy.re;
        dw[3] = dy.im;
    };
    let mut jac = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut w0 = [z[0], 0.0, z[1], 0.0];
        w0[2 * col + 1] = h;
        let mut guard = |w: &[f64]| w[2].abs() > ESCAPE_Y;
        let out =
            integrate_observed(&f, t0, t0 + PERIOD, &w0, &ode_opts(tol), Some(&mut guard), None)
                .map_err(map_escape)?;
        jac[0][col] = out[1] / h;
        jac[1][col] = out[3] / h;
    }
    Ok(jac)
}

/// Hyperbolic fixed point of the section map with eigenvalues and unit
/// eigenvectors; Newton from (0, 0).
#[derive(Debug, Clone)]
pub struct FixedPointData {
    pub point: [f64; 2],
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub v_u: [f64; 2],
    pub v_s: [f64; 2],
    pub residual: f64,
}

pub fn hyperbolic_fixed_point(
    params: &PendulumParams,
    t0: f64,
    tol: f64,
) -> Result<FixedPointData, SplittingError> {
    if params.b > 0.2 {
        return Err(SplittingError::BadParams(format!(
            "B = {} beyond the persistence bound 0.2",
            params.b
        )));
    }
    let mut z = [0.0f64, 0.0];
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let pz = poincare_map(params, z, t0, 1, tol)?;
        let g = [pz[0] - z[0], pz[1] - z[1]];
        residual = g[0].abs().max(g[1].abs());
        if residual <= 1e-13 {
            break;
        }
        let dp = poincare_jacobian(params, z, t0, tol)?;
        // solve (DP - I) δ = -g
        let a = [[dp[0][0] - 1.0, dp[0][1]], [dp[1][0], dp[1][1] - 1.0]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < 1e-14 {
            return Err(SplittingError::NewtonFailed {
                what: "fixed point (singular DP - I)".into(),
                residual,
            });
        }
        z[0] -= (g[0] * a[1][1] - g[1] * a[0][1]) / det;
        z[1] -= (g[1] * a[0][0] - g[0] * a[1][0]) / det;
    }
    if residual > 1e-12 {
        return Err(SplittingError::NewtonFailed {
            what: "fixed point".into(),
            residual,
        });
    }

    let dp = poincare_jacobian(params, z, t0, tol)?;
    let tr = dp[0][0] + dp[1][1];
    let disc = tr * tr - 4.0 * (dp[0][0] * dp[1][1] - dp[0][1] * dp[1][0]);
    if disc <= 0.0 {
        return Err(SplittingError::NewtonFailed {
            what: "fixed point not hyperbolic".into(),
            residual: disc,
        });
    }
    let root = disc.sqrt();
    let l1 = (tr + root) / 2.0;
    let l2 = (tr - root) / 2.0;
    let (lambda_u, lambda_s) = if l1.abs() > l2.abs() { (l1, l2) } else { (l2, l1) };
    let eigvec = |lambda: f64| -> [f64; 2] {
        // rows of (DP - λ) are parallel; use the better-conditioned one
        let r1 = [dp[0][0] - lambda, dp[0][1]];
        let r2 = [dp[1][0], dp[1][1] - lambda];
        let v = if r1[0].abs().max(r1[1].abs()) > r2[0].abs().max(r2[1].abs()) {
            [-r1[1], r1[0]]
        } else {
            [-r2[1], r2[0]]
        };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
        [sign * v[0] / n, sign * v[1] / n]
    };
    Ok(FixedPointData {
        point: z,
        lambda_u,
        lambda_s,
        v_u: eigvec(lambda_u),
        v_s: eigvec(lambda_s),
        residual,
    })
}

/// Closed-form unperturbed separatrix of H₀ = y²/2 + cos x:
/// x(τ) = 4·arctan(e^τ), y(τ) = 2/cosh(τ); H₀ ≡ 1.
#[derive(Debug, Clone, Copy)]
pub struct SeparatrixOrbit;

impl SeparatrixOrbit {
    pub fn x(tau: f64) -> f64 {
        4.0 * tau.exp().atan()
    }

    pub fn y(tau: f64) -> f64 {
        2.0 / tau.cosh()
    }

    /// y·sin x along the orbit: -4 sinh τ / cosh³ τ.
    pub fn y_sin_x(tau: f64) -> f64 {
        -4.0 * tau.sinh() / tau.cosh().powi(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-13;

    #[test]
    fn separatrix_stays_on_unit_energy() {
        for i in -40..=40 {
            let tau = i as f64 * 0.5;
            let z = [SeparatrixOrbit::x(tau), SeparatrixOrbit::y(tau)];
            assert!((PendulumParams::h0(&z) - 1.0).abs() < 1e-14);
            // the closed form of y·sin x
            let direct = z[1] * z[0].sin();
            assert!((direct - SeparatrixOrbit::y_sin_x(tau)).abs() < 1e-13);
        }
    }

    #[test]
    fn autonomous_map_conserves_energy() {
        let params = PendulumParams::new(0.2, 0.0).unwrap();
        for z0 in [[1.0, 0.3], [2.5, 1.0], [0.4, -0.8], [3.0, 2.1]] {
            let z1 = poincare_map(&params, z0, 0.0, 1, TOL).unwrap();
            assert!(
                (PendulumParams::h0(&z1) - PendulumParams::h0(&z0)).abs() <= 1e-11,
                "energy drift at {z0:?}"
            );
        }
    }

    #[test]
    fn origin_is_fixed_for_all_b() {
        for b in [0.0, 0.01, 0.1, 0.2] {
            let params = PendulumParams::new(0.17, b).unwrap();
            let z1 = poincare_map(&params, [0.0, 0.0], 0.0, 1, TOL).unwrap();
            assert!(z1[0].abs() <= 1e-12 && z1[1].abs() <= 1e-12, "B = {b}");
        }
    }

    #[test]
    fn map_inverse_round_trip() {
        let params = PendulumParams::new(0.2, 0.05).unwrap();
        let z0 = [1.2, 0.7];
        let z1 = poincare_map(&params, z0, 0.0, 1, TOL).unwrap();
        let back = poincare_map(&params, z1, PERIOD, -1, TOL).unwrap();
        assert!((back[0] - z0[0]).abs() < 1e-11 && (back[1] - z0[1]).abs() < 1e-11);
    }

    #[test]
    fn escape_detection() {
        let params = PendulumParams::new(0.9, 0.0).unwrap();
        let r = poincare_map(&params, [1.5, 9.99], 0.0, 1, 1e-10);
        assert!(matches!(r, Err(SplittingError::Escape { .. })));
    }

    #[test]
    fn fixed_point_at_b_zero_matches_linear_theory() {
        // linearization ẋ = εy, ẏ = εx over one period: λ_u = e^{2πε}.
        let eps = 0.2;
        let params = PendulumParams::new(eps, 0.0).unwrap();
        let fp = hyperbolic_fixed_point(&params, 0.0, TOL).unwrap();
        assert!(fp.point[0].abs() < 1e-12 && fp.point[1].abs() < 1e-12);
        let want = (PERIOD * eps).exp();
        assert!((fp.lambda_u - want).abs() < 1e-9 * want);
        // eigenvectors (1, ±1)/√2
        let s = 0.5f64.sqrt();
        assert!((fp.v_u[0] - s).abs() < 1e-9 && (fp.v_u[1] - s).abs() < 1e-9);
        assert!((fp.v_s[0] - s).abs() < 1e-9 && (fp.v_s[1] + s).abs() < 1e-9);
    }

    #[test]
    fn fixed_point_with_forcing_stays_at_origin() {
        // odd symmetry x → -x pins the fixed point to (0, 0)
        let params = PendulumParams::new(0.2, 0.01).unwrap();
        let fp = hyperbolic_fixed_point(&params, 0.0, TOL).unwrap();
        assert!(fp.point[0].abs() < 1e-8 && fp.point[1].abs() < 1e-8);
        assert!((fp.lambda_u * fp.lambda_s - 1.0).abs() < 1e-10);
        assert!(fp.residual <= 1e-12);
        // persistence bound enforced
        let bad = PendulumParams::new(0.2, 0.21).unwrap();
        assert!(hyperbolic_fixed_point(&bad, 0.0, TOL).is_err());
    }

    #[test]
    fn jacobian_routes_agree_and_are_symplectic() {
        let params = PendulumParams::new(0.25, 0.01).unwrap();
        let z = [1.1, 0.6];
        let var = poincare_jacobian(&params, z, 0.0, TOL).unwrap();
        let cs = poincare_jacobian_complex_step(&params, z, 0.0, 1e-100, TOL).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (var[i][j] - cs[i][j]).abs() < 1e-11,
                    "entry ({i},{j}): {} vs {}",
                    var[i][j],
                    cs[i][j]
                );
            }
        }
        let det = cs[0][0] * cs[1][1] - cs[0][1] * cs[1][0];
        assert!((det - 1.0).abs() <= 1e-10, "det = {det}");
        // plain central differences agree at their own accuracy
        let h = 1e-6;
        let mut fd = [[0.0; 2]; 2];
        for col in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[col] += h;
            zm[col] -= h;
            let a = poincare_map(&params, zp, 0.0, 1, TOL).unwrap();
            let b = poincare_map(&params, zm, 0.0, 1, TOL).unwrap();
            fd[0][col] = (a[0] - b[0]) / (2.0 * h);
            fd[1][col] = (a[1] - b[1]) / (2.0 * h);
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((fd[i][j] - cs[i][j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn reversibility_conjugacy() {
        // (x, y) → (x, -y) conjugates the t0 = 0 map to its inverse.
        let params = PendulumParams::new(0.2, 0.05).unwrap();
        for z0 in [[1.0, 0.4], [2.0, -0.3], [0.7, 1.1]] {
            let p = poincare_map(&params, z0, 0.0, 1, TOL).unwrap();
            let rp = [p[0], -p[1]];
            let prp = poincare_map(&params, rp, 0.0, 1, TOL).unwrap();
            let rprp = [prp[0], -prp[1]];
            assert!(
                (rprp[0] - z0[0]).abs() <= 1e-10 && (rprp[1] - z0[1]).abs() <= 1e-10,
                "reversor defect at {z0:?}: {rprp:?}"
            );
        }
    }
}
