//! Vector fields and Hamiltonians over Fourier-Taylor series, with the
//! commutator and canonical-bracket algebra the averaging flow is built on.
//!
//! Sign conventions (see docs/conventions.md):
//!   [u1, u2] = ∂_{u1}u2 - ∂_{u2}u1
//!   {h1, h2} = ∂x h1 ∂y h2 - ∂y h1 ∂x h2
//!   J∇h      = (∂h/∂y, -∂h/∂x)
//! which together satisfy J∇{h1,h2} = -[J∇h1, J∇h2].

use num_complex::Complex64;

use super::series::FourierTaylorSeries;
use super::FtError;

/// m-component vector field; all components share (m, K, N).
#[derive(Debug, Clone)]
pub struct VectorFieldFT {
    components: Vec<FourierTaylorSeries>,
}

impl VectorFieldFT {
    pub fn new(components: Vec<FourierTaylorSeries>) -> Result<Self, FtError> {
        let m = components.len();
        if m == 0 {
            return Err(FtError::EmptyField);
        }
        for c in &components {
            if c.m() != m {
                return Err(FtError::ShapeMismatch {
                    left: (m, components[0].k_max(), components[0].deg_max()),
                    right: (c.m(), c.k_max(), c.deg_max()),
                });
            }
            components[0].shape_check(c)?;
        }
        Ok(VectorFieldFT { components })
    }

    pub fn zero(m: usize, k_max: usize, deg_max: usize) -> Self {
        VectorFieldFT {
            components: vec![FourierTaylorSeries::zero(m, k_max, deg_max); m],
        }
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn k_max(&self) -> usize {
        self.components[0].k_max()
    }

    pub fn deg_max(&self) -> usize {
        self.components[0].deg_max()
    }

    pub fn component(&self, i: usize) -> &FourierTaylorSeries {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut FourierTaylorSeries {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[FourierTaylorSeries] {
        &self.components
    }

    pub fn shape_check(&self, other: &Self) -> Result<(), FtError> {
        if self.m() != other.m() {
            return Err(FtError::ShapeMismatch {
                left: (self.m(), self.k_max(), self.deg_max()),
                right: (other.m(), other.k_max(), other.deg_max()),
            });
        }
        self.components[0].shape_check(&other.components[0])
    }

    fn map(&self, f: impl Fn(&FourierTaylorSeries) -> FourierTaylorSeries) -> Self {
        VectorFieldFT {
            components: self.components.iter().map(f).collect(),
        }
    }

    fn zip(
        &self,
        other: &Self,
        f: impl Fn(&FourierTaylorSeries, &FourierTaylorSeries) -> Result<FourierTaylorSeries, FtError>,
    ) -> Result<Self, FtError> {
        self.shape_check(other)?;
        let components = self
            .components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| f(a, b))
            .collect::<Result<_, _>>()?;
        Ok(VectorFieldFT { components })
    }

    pub fn add(&self, other: &Self) -> Result<Self, FtError> {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FtError> {
        self.zip(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    pub fn xi(&self) -> Self {
        self.map(|c| c.xi())
    }

    pub fn d_dt(&self) -> Self {
        self.map(|c| c.d_dt())
    }

    pub fn mode_damping(&self) -> Self {
        self.map(|c| c.mode_damping())
    }

    pub fn average_part(&self) -> Self {
        self.map(|c| c.average_part())
    }

    pub fn oscillatory_part(&self) -> Self {
        self.map(|c| c.oscillatory_part())
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    pub fn drop_small(&mut self, drop_eps: f64) -> f64 {
        self.components
            .iter_mut()
            .map(|c| c.drop_small(drop_eps))
            .sum()
    }

    pub(crate) fn realify_average(&mut self) {
        for c in &mut self.components {
            c.realify_average();
        }
    }

    /// Directional derivative ∂_along self: component i is Σ_j along_j ∂_j self_i.
    pub fn directional_derivative(&self, along: &Self) -> Result<Self, FtError> {
        self.shape_check(along)?;
        let m = self.m();
        let mut components = Vec::with_capacity(m);
        for i in 0..m {
            let mut acc = FourierTaylorSeries::zero(self.components[i].m(), self.k_max(), self.deg_max());
            for j in 0..m {
                let term = self.components[i].partial(j).mul(&along.components[j])?;
                acc = acc.add(&term)?;
            }
            components.push(acc);
        }
        Ok(VectorFieldFT { components })
    }

    pub fn evaluate(&self, z: &[Complex64], t: f64) -> Result<Vec<Complex64>, FtError> {
        self.components.iter().map(|c| c.evaluate(z, t)).collect()
    }

    pub fn evaluate_real(&self, z: &[f64], t: f64) -> Result<Vec<f64>, FtError> {
        self.components
            .iter()
            .map(|c| c.evaluate_real(z, t))
            .collect()
    }

    /// Pointwise value of the mode-k polynomial field.
    pub fn eval_mode(&self, k: i64, z: &[Complex64]) -> Result<Vec<Complex64>, FtError> {
        self.components.iter().map(|c| c.eval_mode(k, z)).collect()
    }
}

/// Vector commutator [u1, u2] = ∂_{u1}u2 - ∂_{u2}u1, truncated to the
/// shared (K, N).
pub fn commutator(u1: &VectorFieldFT, u2: &VectorFieldFT) -> Result<VectorFieldFT, FtError> {
    let a = u2.directional_derivative(u1)?;
    let b = u1.directional_derivative(u2)?;
    let mut out = a.sub(&b)?;
    out.realify_average();
    Ok(out)
}

/// Scalar Hamiltonian on a canonical pair (x, y); m = 2 enforced.
#[derive(Debug, Clone)]
pub struct HamiltonianFT {
    h: FourierTaylorSeries,
}

impl HamiltonianFT {
    pub fn new(h: FourierTaylorSeries) -> Result<Self, FtError> {
        if h.m() != 2 {
            return Err(FtError::ShapeMismatch {
                left: (2, h.k_max(), h.deg_max()),
                right: (h.m(), h.k_max(), h.deg_max()),
            });
        }
        Ok(HamiltonianFT { h })
    }

    pub fn zero(k_max: usize, deg_max: usize) -> Self {
        HamiltonianFT {
            h: FourierTaylorSeries::zero(2, k_max, deg_max),
        }
    }

    pub fn series(&self) -> &FourierTaylorSeries {
        &self.h
    }

    pub fn series_mut(&mut self) -> &mut FourierTaylorSeries {
        &mut self.h
    }

    pub fn into_series(self) -> FourierTaylorSeries {
        self.h
    }

    /// Induced canonical field J∇h = (∂h/∂y, -∂h/∂x); exactly
    /// divergence-free on truncated polynomials.
    pub fn to_field(&self) -> VectorFieldFT {
        let hy = self.h.partial(1);
        let hx = self.h.partial(0).scale(-1.0);
        VectorFieldFT {
            components: vec![hy, hx],
        }
    }
}

/// Canonical bracket {h1, h2} = ∂x h1 ∂y h2 - ∂y h1 ∂x h2.
pub fn poisson_bracket(h1: &HamiltonianFT, h2: &HamiltonianFT) -> Result<HamiltonianFT, FtError> {
    h1.h.shape_check(&h2.h)?;
    let term1 = h1.h.partial(0).mul(&h2.h.partial(1))?;
    let term2 = h1.h.partial(1).mul(&h2.h.partial(0))?;
    let mut s = term1.sub(&term2)?;
    s.realify_average();
    Ok(HamiltonianFT { h: s })
}

/// J∇h as a standalone operation.
pub fn hamiltonian_to_field(h: &HamiltonianFT) -> VectorFieldFT {
    h.to_field()
}

/// Divergence Σ_i ∂_i u_i; diagnostic for the Hamiltonian-mode invariant.
pub fn divergence(u: &VectorFieldFT) -> Result<FourierTaylorSeries, FtError> {
    let mut acc = FourierTaylorSeries::zero(u.m(), u.k_max(), u.deg_max());
    for i in 0..u.m() {
        acc = acc.add(&u.component(i).partial(i))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Linear field z ↦ Mz as an FT object.
    pub(crate) fn linear_field(mat: &[[f64; 2]; 2], k_max: usize, deg_max: usize) -> VectorFieldFT {
        let mut components = Vec::new();
        for row in mat {
            let mut s = FourierTaylorSeries::zero(2, k_max, deg_max);
            s.set(0, &[1, 0], Complex64::new(row[0], 0.0)).unwrap();
            s.set(0, &[0, 1], Complex64::new(row[1], 0.0)).unwrap();
            components.push(s);
        }
        VectorFieldFT::new(components).unwrap()
    }

    #[test]
    fn commutator_of_linear_fields_is_matrix_commutator() {
        // [Az, Bz] = (BA - AB)z
        let a = [[0.3, -1.1], [0.7, 0.2]];
        let b = [[-0.5, 0.9], [1.3, 0.4]];
        let ua = linear_field(&a, 1, 2);
        let ub = linear_field(&b, 1, 2);
        let got = commutator(&ua, &ub).unwrap();
        let mut want = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    want[i][j] += b[i][l] * a[l][j] - a[i][l] * b[l][j];
                }
            }
        }
        let wf = linear_field(&want, 1, 2);
        assert!(got.sub(&wf).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn commutator_rejects_shape_mismatch() {
        let a = linear_field(&[[0.3, -1.1], [0.7, 0.2]], 1, 2);
        let b = linear_field(&[[0.3, -1.1], [0.7, 0.2]], 2, 2);
        assert!(commutator(&a, &b).is_err());
        let mut z = [Complex64::new(0.1, 0.0); 1];
        assert!(a.evaluate(&z, 0.0).is_err()); // wrong dimension
        z[0] = Complex64::new(f64::INFINITY, 0.0);
        let z2 = [z[0], Complex64::new(0.0, 0.0)];
        assert!(a.evaluate(&z2, 0.0).is_err()); // non-finite input
    }

    #[test]
    fn commutator_self_is_zero() {
        let u = linear_field(&[[0.3, -1.1], [0.7, 0.2]], 1, 2);
        assert!(commutator(&u, &u).unwrap().is_zero());
    }

    #[test]
    fn commutator_polynomial_example() {
        // u1 = (z1², 0), u2 = (0, z1) ⇒ [u1, u2] = (0, z1²)
        let mut c0 = FourierTaylorSeries::zero(2, 0, 3);
        c0.set(0, &[2, 0], Complex64::new(1.0, 0.0)).unwrap();
        let u1 = VectorFieldFT::new(vec![c0, FourierTaylorSeries::zero(2, 0, 3)]).unwrap();
        let mut c1 = FourierTaylorSeries::zero(2, 0, 3);
        c1.set(0, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let u2 = VectorFieldFT::new(vec![FourierTaylorSeries::zero(2, 0, 3), c1]).unwrap();
        let got = commutator(&u1, &u2).unwrap();
        assert_eq!(got.component(0).max_abs(), 0.0);
        assert!((got.component(1).coeff(0, &[2, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // Everything else zero.
        let mut want1 = FourierTaylorSeries::zero(2, 0, 3);
        want1.set(0, &[2, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(got.component(1).sub(&want1).unwrap().is_zero());
    }

    #[test]
    fn commutator_matches_finite_difference_directional_derivatives() {
        // Independent oracle: [u1,u2](z) ≈ Du2(z)u1(z) - Du1(z)u2(z) with
        // Jacobians from central differences of pointwise evaluation.
        // K = 2 and N = 3 make the bracket of these inputs truncation-exact,
        // so the pointwise oracle applies.
        let mut c0 = FourierTaylorSeries::zero(2, 2, 3);
        c0.set(0, &[2, 0], Complex64::new(0.8, 0.0)).unwrap();
        c0.set(0, &[0, 1], Complex64::new(-0.3, 0.0)).unwrap();
        c0.set(1, &[1, 1], Complex64::new(0.2, 0.1)).unwrap();
        let mut c1 = FourierTaylorSeries::zero(2, 2, 3);
        c1.set(0, &[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        c1.set(1, &[0, 2], Complex64::new(-0.15, 0.35)).unwrap();
        let u1 = VectorFieldFT::new(vec![c0.clone(), c1.clone()]).unwrap();
        let u2 = VectorFieldFT::new(vec![c1, c0]).unwrap();
        let bracket = commutator(&u1, &u2).unwrap();

        let h = 1e-5;
        let t = 0.37;
        let fd_jacobian = |u: &VectorFieldFT, z: &[f64; 2]| -> [[f64; 2]; 2] {
            let mut jac = [[0.0; 2]; 2];
            for j in 0..2 {
                let mut zp = *z;
                let mut zm = *z;
                zp[j] += h;
                zm[j] -= h;
                let fp = u.evaluate_real(&zp, t).unwrap();
                let fm = u.evaluate_real(&zm, t).unwrap();
                for i in 0..2 {
                    jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            jac
        };

        let points: Vec<[f64; 2]> = (0..10)
            .map(|i| {
                let a = 0.1 + 0.05 * i as f64;
                [a * (1.7 * a).cos(), 0.3 - a * (0.9 * a).sin()]
            })
            .collect();
        for z in &points {
            let v1 = u1.evaluate_real(z, t).unwrap();
            let v2 = u2.evaluate_real(z, t).unwrap();
            let j1 = fd_jacobian(&u1, z);
            let j2 = fd_jacobian(&u2, z);
            let want = [
                j2[0][0] * v1[0] + j2[0][1] * v1[1] - (j1[0][0] * v2[0] + j1[0][1] * v2[1]),
                j2[1][0] * v1[0] + j2[1][1] * v1[1] - (j1[1][0] * v2[0] + j1[1][1] * v2[1]),
            ];
            let got = bracket.evaluate_real(z, t).unwrap();
            for i in 0..2 {
                assert!(
                    (got[i] - want[i]).abs() < 5e-9,
                    "point {z:?} component {i}: {} vs {}",
                    got[i],
                    want[i]
                );
            }
        }
    }

    #[test]
    fn poisson_canonical_pair() {
        // {x, y} = 1
        let mut hx = FourierTaylorSeries::zero(2, 0, 2);
        hx.set(0, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let mut hy = FourierTaylorSeries::zero(2, 0, 2);
        hy.set(0, &[0, 1], Complex64::new(1.0, 0.0)).unwrap();
        let b = poisson_bracket(
            &HamiltonianFT::new(hx).unwrap(),
            &HamiltonianFT::new(hy).unwrap(),
        )
        .unwrap();
        assert!((b.series().coeff(0, &[0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let mut one = FourierTaylorSeries::zero(2, 0, 2);
        one.set(0, &[0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(b.series().sub(&one).unwrap().is_zero());
    }

    /// cos(z_var) truncated at the series degree.
    pub(crate) fn cos_series(k_max: usize, deg_max: usize, var: usize) -> FourierTaylorSeries {
        let mut s = FourierTaylorSeries::zero(2, k_max, deg_max);
        let mut alpha = [0u8; 2];
        let mut sign = 1.0;
        let mut fact = 1.0;
        let mut d = 0usize;
        while d <= deg_max {
            alpha[var] = d as u8;
            s.set(0, &alpha, Complex64::new(sign / fact, 0.0)).unwrap();
            sign = -sign;
            fact *= ((d + 1) * (d + 2)) as f64;
            d += 2;
        }
        s
    }

    #[test]
    fn poisson_kinetic_with_cosine() {
        // {y²/2, cos x} = y sin x
        let deg = 9;
        let mut kin = FourierTaylorSeries::zero(2, 0, deg);
        kin.set(0, &[0, 2], Complex64::new(0.5, 0.0)).unwrap();
        let h1 = HamiltonianFT::new(kin).unwrap();
        let h2 = HamiltonianFT::new(cos_series(0, deg, 0)).unwrap();
        let b = poisson_bracket(&h1, &h2).unwrap();
        // y·sin x = Σ y·(-1)^j x^{2j+1}/(2j+1)!
        let mut want = FourierTaylorSeries::zero(2, 0, deg);
        let mut sign = 1.0;
        let mut fact = 1.0;
        let mut d = 1usize;
        while d + 1 <= deg {
            want.set(0, &[d as u8, 1], Complex64::new(sign / fact, 0.0))
                .unwrap();
            sign = -sign;
            fact *= ((d + 1) * (d + 2)) as f64;
            d += 2;
        }
        assert!(b.series().sub(&want).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn bracket_field_correspondence_sign() {
        // J∇{h1, h2} = -[J∇h1, J∇h2], pinned on h1 = x²/2, h2 = y²/2.
        let mut a = FourierTaylorSeries::zero(2, 0, 4);
        a.set(0, &[2, 0], Complex64::new(0.5, 0.0)).unwrap();
        let mut b = FourierTaylorSeries::zero(2, 0, 4);
        b.set(0, &[0, 2], Complex64::new(0.5, 0.0)).unwrap();
        let h1 = HamiltonianFT::new(a).unwrap();
        let h2 = HamiltonianFT::new(b).unwrap();
        let lhs = poisson_bracket(&h1, &h2).unwrap().to_field();
        let rhs = commutator(&h1.to_field(), &h2.to_field())
            .unwrap()
            .scale(-1.0);
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_field_is_divergence_free() {
        let mut s = FourierTaylorSeries::zero(2, 2, 5);
        s.set(0, &[0, 2], Complex64::new(0.5, 0.0)).unwrap();
        s.set(0, &[3, 1], Complex64::new(-0.7, 0.0)).unwrap();
        s.set(1, &[2, 2], Complex64::new(0.3, -0.6)).unwrap();
        s.set(2, &[1, 0], Complex64::new(0.11, 0.02)).unwrap();
        let h = HamiltonianFT::new(s).unwrap();
        let div = divergence(&h.to_field()).unwrap();
        assert!(div.is_zero());
    }

    #[test]
    fn hamiltonian_to_field_pendulum() {
        // h = y²/2 + cos x ⇒ J∇h = (y, sin x)
        let deg = 11;
        let mut s = cos_series(0, deg, 0);
        let prev = s.coeff(0, &[0, 2]);
        s.set(0, &[0, 2], prev + Complex64::new(0.5, 0.0)).unwrap();
        let f = HamiltonianFT::new(s).unwrap().to_field();
        // component 0 = y
        let mut y = FourierTaylorSeries::zero(2, 0, deg);
        y.set(0, &[0, 1], Complex64::new(1.0, 0.0)).unwrap();
        assert!(f.component(0).sub(&y).unwrap().is_zero());
        // component 1 = sin x (to degree deg-1)
        let got = f.component(1).evaluate_real(&[0.4, 0.0], 0.0).unwrap();
        assert!((got - 0.4f64.sin()).abs() < 1e-8);
    }
}
