//! Independent ground truth for the averaging engine: closed-form solutions
//! of the linearized mode equations on benchmark families, their
//! complex-time flows, and brute-force conjugacy verification by trajectory
//! integration.
//!
//! The mode equation du^k/ds = -|k|u^k + iεσ_k[u⁰, u^k] is solved by the
//! pullback of û^k under the complex-time flow of û⁰:
//!
//! ```text
//! u^k(s, z) = e^{-|k|s} · (Dg^ζ(z))⁻¹ · û^k(g^ζ(z)),   ζ = iεσ_k s
//! ```
//!
//! The differential factor (Dg^ζ)⁻¹ is what makes this the exact solution of
//! the commutator equation (for û⁰ constant it reduces to plain
//! composition). Benchmark families are restricted to flows with g^ζ in
//! closed form.

use num_complex::Complex64;

use crate::ft::{FtError, VectorFieldFT};
use crate::integrate::{self, OdeError, OdeOptions};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("complex-time flow singular before s = {s}: {detail}")]
    SingularFlow { s: f64, detail: String },
    #[error("probe point left the validity box (|z| > {radius})")]
    OutOfDomain { radius: f64 },
    #[error("coordinate change failed: {0}")]
    ChangeFailed(String),
    #[error(transparent)]
    Series(#[from] FtError),
    #[error(transparent)]
    Integration(#[from] OdeError),
}

/// Unperturbed flows g^ζ available in closed form.
#[derive(Debug, Clone)]
pub enum FlowKind {
    /// û⁰ = 0: g = identity.
    Zero,
    /// û⁰(z) = Az: g^ζ(z) = e^{Aζ}z.
    Linear { a: Vec<Vec<f64>> },
    /// m = 1, û⁰(z) = z²: g^ζ(z) = z/(1 - ζz).
    Riccati,
}

/// A benchmark system: closed-form û⁰ plus polynomial perturbation modes
/// û^k stored in an FT field (whose own mode 0 is ignored).
#[derive(Debug, Clone)]
pub struct BenchmarkFamily {
    pub kind: FlowKind,
    pub perturbation: VectorFieldFT,
}

impl BenchmarkFamily {
    pub fn new(kind: FlowKind, perturbation: VectorFieldFT) -> Result<Self, FtError> {
        let m = perturbation.m();
        match &kind {
            FlowKind::Zero => {}
            FlowKind::Linear { a } => {
                if a.len() != m || a.iter().any(|row| row.len() != m) {
                    return Err(FtError::ShapeMismatch {
                        left: (m, 0, 0),
                        right: (a.len(), 0, 0),
                    });
                }
            }
            FlowKind::Riccati => {
                if m != 1 {
                    return Err(FtError::ShapeMismatch {
                        left: (1, 0, 0),
                        right: (m, 0, 0),
                    });
                }
            }
        }
        Ok(BenchmarkFamily { kind, perturbation })
    }

    pub fn m(&self) -> usize {
        self.perturbation.m()
    }

    /// û⁰ evaluated pointwise.
    pub fn base_field(&self, z: &[Complex64]) -> Vec<Complex64> {
        match &self.kind {
            FlowKind::Zero => vec![Complex64::default(); z.len()],
            FlowKind::Linear { a } => a
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(z.iter())
                        .map(|(&aij, &zj)| aij * zj)
                        .sum()
                })
                .collect(),
            FlowKind::Riccati => vec![z[0] * z[0]],
        }
    }

    /// The full initial field û(z, t) = û⁰(z) + oscillatory modes, as an FT
    /// object suitable for seeding the engine.
    pub fn initial_field(&self) -> Result<VectorFieldFT, FtError> {
        let m = self.m();
        let k_max = self.perturbation.k_max();
        let deg_max = self.perturbation.deg_max();
        let mut out = self.perturbation.oscillatory_part();
        match &self.kind {
            FlowKind::Zero => {}
            FlowKind::Linear { a } => {
                for (i, row) in a.iter().enumerate() {
                    for (j, &aij) in row.iter().enumerate() {
                        if aij == 0.0 {
                            continue;
                        }
                        let mut alpha = vec![0u8; m];
                        alpha[j] = 1;
                        let prev = out.component(i).coeff(0, &alpha);
                        out.component_mut(i)
                            .set(0, &alpha, prev + Complex64::new(aij, 0.0))?;
                    }
                }
            }
            FlowKind::Riccati => {
                if deg_max < 2 || k_max < 1 {
                    return Err(FtError::InvalidPolicy(
                        "riccati base field needs N >= 2 and K >= 1",
                    ));
                }
                let prev = out.component(0).coeff(0, &[2]);
                out.component_mut(0)
                    .set(0, &[2], prev + Complex64::new(1.0, 0.0))?;
            }
        }
        Ok(out)
    }

    /// Complex-time shift g^ζ(z) and the inverse differential (Dg^ζ)⁻¹.
    fn flow_with_differential(
        &self,
        zeta: Complex64,
        z: &[Complex64],
    ) -> Result<(Vec<Complex64>, CMatrix), OracleError> {
        match &self.kind {
            FlowKind::Zero => Ok((z.to_vec(), CMatrix::identity(z.len()))),
            FlowKind::Linear { a } => {
                let ac = CMatrix::from_real(a);
                let fw = ac.exp_scaled(zeta);
                let bw = ac.exp_scaled(-zeta);
                Ok((fw.apply(z), bw))
            }
            FlowKind::Riccati => {
                let den = Complex64::new(1.0, 0.0) - zeta * z[0];
                if den.norm() < 1e-12 {
                    return Err(OracleError::SingularFlow {
                        s: zeta.norm(),
                        detail: format!("1 - ζz vanished at z = {}", z[0]),
                    });
                }
                let g = z[0] / den;
                let mut dinv = CMatrix::identity(1);
                dinv.data[0] = den * den;
                Ok((vec![g], dinv))
            }
        }
    }

    /// Closed-form solution of the linearized mode equation at (k, ε, s, z).
    pub fn explicit_solution(
        &self,
        k: i64,
        eps: f64,
        s: f64,
        z: &[Complex64],
    ) -> Result<Vec<Complex64>, OracleError> {
        if k == 0 {
            // Mode 0 is stationary in the linearized system.
            return Ok(self.base_field(z));
        }
        let bound = self.singularity_bound(eps, k, z);
        if s >= bound {
            return Err(OracleError::SingularFlow {
                s,
                detail: format!("s beyond the singularity bound {bound}"),
            });
        }
        let sigma = if k > 0 { 1.0 } else { -1.0 };
        let zeta = Complex64::new(0.0, eps * sigma * s);
        let (gz, dinv) = self.flow_with_differential(zeta, z)?;
        let uk = self.perturbation.eval_mode(k, &gz)?;
        let decay = (-(k.unsigned_abs() as f64) * s).exp();
        Ok(dinv.apply(&uk).into_iter().map(|v| v * decay).collect())
    }

    /// Supremum of s for which g^{iεσ_k s} stays finite at z; infinity for
    /// the zero and linear kinds (entire flows).
    pub fn singularity_bound(&self, eps: f64, k: i64, z: &[Complex64]) -> f64 {
        match &self.kind {
            FlowKind::Zero | FlowKind::Linear { .. } => f64::INFINITY,
            FlowKind::Riccati => {
                // 1 - iεσs·z = 0 has a real positive root s only for
                // purely imaginary z with σ·Im z < 0.
                if eps == 0.0 || k == 0 {
                    return f64::INFINITY;
                }
                let sigma = if k > 0 { 1.0 } else { -1.0 };
                if z[0].re == 0.0 && sigma * z[0].im < 0.0 {
                    1.0 / (eps * (-(sigma) * z[0].im))
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Small dense complex matrix, just enough for e^{Aζ} on benchmark sizes.
#[derive(Debug, Clone)]
struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::default(); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        CMatrix { n, data }
    }

    fn from_real(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut data = Vec::with_capacity(n * n);
        for row in a {
            for &v in row {
                data.push(Complex64::new(v, 0.0));
            }
        }
        CMatrix { n, data }
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![Complex64::default(); n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[l * n + j];
                }
            }
        }
        CMatrix { n, data }
    }

    /// e^{A·ζ} by scaling and squaring with a Taylor series.
    fn exp_scaled(&self, zeta: Complex64) -> Self {
        let n = self.n;
        let norm: f64 = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (self.data[i * n + j] * zeta).norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scale = zeta / 2f64.powi(squarings as i32);
        let mut scaled = self.clone();
        for v in &mut scaled.data {
            *v *= scale;
        }
        let mut result = CMatrix::identity(n);
        let mut term = CMatrix::identity(n);
        for j in 1..=24 {
            term = term.mul(&scaled);
            for v in &mut term.data {
                *v /= j as f64;
            }
            for (r, t) in result.data.iter_mut().zip(term.data.iter()) {
                *r += t;
            }
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }

    fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * z[j]).sum())
            .collect()
    }
}

/// Sample points and horizon for brute-force conjugacy verification.
#[derive(Debug, Clone)]
pub struct ConjugacyProbe {
    pub points: Vec<Vec<f64>>,
    pub horizon: f64,
    pub tol: f64,
    /// Trajectories beyond this radius abort with OutOfDomain.
    pub escape_radius: f64,
}

impl ConjugacyProbe {
    pub fn new(points: Vec<Vec<f64>>, horizon: f64, tol: f64) -> Self {
        ConjugacyProbe {
            points,
            horizon,
            tol,
            escape_radius: 1e3,
        }
    }
}

/// Verify that `change` conjugates the `original` system to the
/// `transformed` one: for each probe point, flow both systems to the
/// horizon and compare the transported endpoints. Returns the maximum
/// deviation over the probe set.
pub fn conjugacy_check<C>(
    original: &VectorFieldFT,
    transformed: &VectorFieldFT,
    change: C,
    probe: &ConjugacyProbe,
) -> Result<f64, OracleError>
where
    C: Fn(&[f64], f64) -> Result<Vec<f64>, OracleError>,
{
    let opts = OdeOptions::with_tol(probe.tol);
    let mut max_dev = 0.0f64;
    for z0 in &probe.points {
        let radius = probe.escape_radius;
        let rhs_orig = |t: f64, z: &[f64], dz: &mut [f64]| {
            let v = original.evaluate_real(z, t).expect("field evaluation");
            dz.copy_from_slice(&v);
        };
        let rhs_new = |t: f64, z: &[f64], dz: &mut [f64]| {
            let v = transformed.evaluate_real(z, t).expect("field evaluation");
            dz.copy_from_slice(&v);
        };
        let mut guard = |z: &[f64]| z.iter().any(|v| v.abs() > radius);
        let z_end = integrate::integrate_observed(
            &rhs_orig,
            0.0,
            probe.horizon,
            z0,
            &opts,
            Some(&mut guard),
            None,
        )
        .map_err(|e| match e {
            OdeError::Escape { .. } => OracleError::OutOfDomain { radius },
            other => OracleError::Integration(other),
        })?;

        let z_cap = change(z0, 0.0)?;
        let mut guard2 = |z: &[f64]| z.iter().any(|v| v.abs() > radius);
        let z_cap_end = integrate::integrate_observed(
            &rhs_new,
            0.0,
            probe.horizon,
            &z_cap,
            &opts,
            Some(&mut guard2),
            None,
        )
        .map_err(|e| match e {
            OdeError::Escape { .. } => OracleError::OutOfDomain { radius },
            other => OracleError::Integration(other),
        })?;

        let want = change(&z_end, probe.horizon)?;
        let dev = z_cap_end
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

/// Adaptive trajectory integration with the shared embedded 7(8) pair.
pub fn ode_integrate<F>(
    field: F,
    z0: &[f64],
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Vec<f64>, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    integrate::integrate(&field, t0, t1, z0, &OdeOptions::with_tol(tol))
}
