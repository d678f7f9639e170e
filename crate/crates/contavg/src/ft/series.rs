//! Truncated Fourier-Taylor series: Fourier modes in time crossed with a
//! multivariate Taylor polynomial in the phase variables.
//!
//! Only modes k ≥ 0 are stored; the coefficient of e^{-ikt} is the complex
//! conjugate of the stored mode k, so real-valued series are real by
//! construction and the conjugate-symmetry invariant cannot drift. Mode 0
//! carries real coefficients.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::table::{taylor_table, TaylorTable};
use super::FtError;

#[derive(Debug, Clone)]
pub struct FourierTaylorSeries {
    m: usize,
    k_max: usize,
    deg_max: usize,
    table: Arc<TaylorTable>,
    /// `modes[k][j]`: Fourier mode k ≥ 0, Taylor slot j in graded-lex order.
    modes: Vec<Vec<Complex64>>,
}

impl FourierTaylorSeries {
    pub fn zero(m: usize, k_max: usize, deg_max: usize) -> Self {
        let table = taylor_table(m, deg_max);
        let modes = vec![vec![Complex64::default(); table.len()]; k_max + 1];
        FourierTaylorSeries {
            m,
            k_max,
            deg_max,
            table,
            modes,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn deg_max(&self) -> usize {
        self.deg_max
    }

    pub fn table(&self) -> &Arc<TaylorTable> {
        &self.table
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.m == other.m && self.k_max == other.k_max && self.deg_max == other.deg_max
    }

    pub(crate) fn shape_check(&self, other: &Self) -> Result<(), FtError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(FtError::ShapeMismatch {
                left: (self.m, self.k_max, self.deg_max),
                right: (other.m, other.k_max, other.deg_max),
            })
        }
    }

    /// Coefficient at (k, α) for any sign of k; negative modes are
    /// synthesized by conjugation.
    pub fn coeff(&self, k: i64, alpha: &[u8]) -> Complex64 {
        let Some(j) = self.table.index_of(alpha) else {
            return Complex64::default();
        };
        self.coeff_at(k, j)
    }

    #[inline]
    pub(crate) fn coeff_at(&self, k: i64, j: usize) -> Complex64 {
        let ka = k.unsigned_abs() as usize;
        if ka > self.k_max {
            return Complex64::default();
        }
        let c = self.modes[ka][j];
        if k < 0 {
            c.conj()
        } else {
            c
        }
    }

    /// Set the stored coefficient at (k ≥ 0, α). Setting a mode-0
    /// coefficient with an imaginary part violates the reality invariant.
    pub fn set(&mut self, k: usize, alpha: &[u8], c: Complex64) -> Result<(), FtError> {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(FtError::NonFinite);
        }
        if k > self.k_max {
            return Err(FtError::IndexOutOfRange {
                what: "Fourier index",
                got: k as i64,
                max: self.k_max as i64,
            });
        }
        let j = self
            .table
            .index_of(alpha)
            .ok_or(FtError::IndexOutOfRange {
                what: "Taylor multi-index",
                got: alpha.iter().map(|&a| a as i64).sum(),
                max: self.deg_max as i64,
            })?;
        if k == 0 && c.im != 0.0 {
            return Err(FtError::NonRealAverage);
        }
        self.modes[k][j] = c;
        Ok(())
    }

    pub(crate) fn mode(&self, k: usize) -> &[Complex64] {
        &self.modes[k]
    }

    /// Zero the imaginary part of mode 0. Mathematically exact for any
    /// quantity produced from real series; removes roundoff drift.
    pub(crate) fn realify_average(&mut self) {
        for c in &mut self.modes[0] {
            c.im = 0.0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.iter().all(|c| c.re == 0.0 && c.im == 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self, FtError> {
        self.shape_check(other)?;
        let mut out = self.clone();
        for (om, sm) in out.modes.iter_mut().zip(other.modes.iter()) {
            for (o, s) in om.iter_mut().zip(sm.iter()) {
                *o += s;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FtError> {
        self.shape_check(other)?;
        let mut out = self.clone();
        for (om, sm) in out.modes.iter_mut().zip(other.modes.iter()) {
            for (o, s) in om.iter_mut().zip(sm.iter()) {
                *o -= s;
            }
        }
        Ok(out)
    }

    /// Scale by a real factor (complex factors would break the reality
    /// convention for mode 0).
    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            for c in m.iter_mut() {
                *c *= factor;
            }
        }
        out
    }

    /// Multiply each stored mode k by f(k); the caller is responsible for
    /// ensuring f(-k) = conj(f(k)) so that reality is preserved. f(0) must
    /// be real.
    pub(crate) fn mode_multiplier(&self, f: impl Fn(i64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (k, m) in out.modes.iter_mut().enumerate() {
            let factor = f(k as i64);
            for c in m.iter_mut() {
                *c *= factor;
            }
        }
        out.realify_average();
        out
    }

    /// Hilbert-transform multiplier: mode k ↦ i·sign(k)·mode k. The time
    /// average (k = 0) is annihilated.
    pub fn xi(&self) -> Self {
        self.mode_multiplier(|k| {
            if k > 0 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::default()
            }
        })
    }

    /// Partial derivative in t: mode k ↦ ik·mode k.
    pub fn d_dt(&self) -> Self {
        self.mode_multiplier(|k| Complex64::new(0.0, k as f64))
    }

    /// Diagonal damping -|k|·mode k, the Fourier form of (ξ·)_t.
    pub fn mode_damping(&self) -> Self {
        self.mode_multiplier(|k| Complex64::new(-(k as f64).abs(), 0.0))
    }

    /// Keep only the time average (mode 0).
    pub fn average_part(&self) -> Self {
        let mut out = Self::zero(self.m, self.k_max, self.deg_max);
        out.modes[0].copy_from_slice(&self.modes[0]);
        out
    }

    /// Zero the time average, keeping the oscillatory modes.
    pub fn oscillatory_part(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.modes[0] {
            *c = Complex64::default();
        }
        out
    }

    /// Partial derivative in phase variable `var`.
    pub fn partial(&self, var: usize) -> Self {
        assert!(var < self.m, "variable index out of range");
        let mut out = Self::zero(self.m, self.k_max, self.deg_max);
        for (k, m) in self.modes.iter().enumerate() {
            for (j, &c) in m.iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                if let Some((down, factor)) = self.table.deriv(var, j) {
                    out.modes[k][down] += c * factor;
                }
            }
        }
        out
    }

    /// Product of two series, truncated back to the shared (K, N): Fourier
    /// modes convolve (negative modes synthesized by conjugation), Taylor
    /// monomials multiply through the shared product table.
    pub fn mul(&self, other: &Self) -> Result<Self, FtError> {
        self.shape_check(other)?;
        let kk = self.k_max as i64;
        let mut out = Self::zero(self.m, self.k_max, self.deg_max);
        for k in 0..=kk {
            let target = &mut out.modes[k as usize];
            for l in -kk..=kk {
                let r = k - l;
                if r.unsigned_abs() as usize > self.k_max {
                    continue;
                }
                let a = &self.modes[l.unsigned_abs() as usize];
                let b = &other.modes[r.unsigned_abs() as usize];
                let conj_a = l < 0;
                let conj_b = r < 0;
                for (i, &ca) in a.iter().enumerate() {
                    if ca.re == 0.0 && ca.im == 0.0 {
                        continue;
                    }
                    let ca = if conj_a { ca.conj() } else { ca };
                    for (j, &cb) in b.iter().enumerate() {
                        if cb.re == 0.0 && cb.im == 0.0 {
                            continue;
                        }
                        let Some(p) = self.table.prod(i, j) else {
                            continue;
                        };
                        let cb = if conj_b { cb.conj() } else { cb };
                        target[p] += ca * cb;
                    }
                }
            }
        }
        out.realify_average();
        Ok(out)
    }

    /// Evaluate at a (possibly complex) phase point and a real time.
    pub fn evaluate(&self, z: &[Complex64], t: f64) -> Result<Complex64, FtError> {
        if z.len() != self.m {
            return Err(FtError::ShapeMismatch {
                left: (self.m, self.k_max, self.deg_max),
                right: (z.len(), self.k_max, self.deg_max),
            });
        }
        if !t.is_finite() || z.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(FtError::NonFinite);
        }
        let mut acc = self.table.eval(self.mode(0), z);
        for k in 1..=self.k_max {
            let vk = self.table.eval(self.mode(k), z);
            let phase = Complex64::from_polar(1.0, k as f64 * t);
            // conj acts on the Taylor coefficients, not on z.
            let vmk = {
                let conj: Vec<Complex64> = self.mode(k).iter().map(|c| c.conj()).collect();
                self.table.eval(&conj, z)
            };
            acc += vk * phase + vmk * phase.conj();
        }
        Ok(acc)
    }

    /// Evaluate at a real phase point and real time; the result of a series
    /// satisfying the reality invariant is real up to roundoff.
    pub fn evaluate_real(&self, z: &[f64], t: f64) -> Result<f64, FtError> {
        let zc: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(self.evaluate(&zc, t)?.re)
    }

    /// Evaluate the Taylor polynomial of a single Fourier mode at a
    /// (possibly complex) phase point. Negative modes use the conjugated
    /// coefficients; conjugation acts on the coefficients, not on z.
    pub fn eval_mode(&self, k: i64, z: &[Complex64]) -> Result<Complex64, FtError> {
        if z.len() != self.m {
            return Err(FtError::ShapeMismatch {
                left: (self.m, self.k_max, self.deg_max),
                right: (z.len(), self.k_max, self.deg_max),
            });
        }
        let ka = k.unsigned_abs() as usize;
        if ka > self.k_max {
            return Ok(Complex64::default());
        }
        if k >= 0 {
            Ok(self.table.eval(self.mode(ka), z))
        } else {
            let conj: Vec<Complex64> = self.mode(ka).iter().map(|c| c.conj()).collect();
            Ok(self.table.eval(&conj, z))
        }
    }

    /// Sum of |c| over stored coefficients (unweighted diagnostic).
    pub fn l1(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.iter().map(|c| c.norm()).sum::<f64>())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.modes
            .iter()
            .flat_map(|m| m.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
    }

    /// Zero stored coefficients with |c| < drop_eps; returns the dropped
    /// absolute mass.
    pub fn drop_small(&mut self, drop_eps: f64) -> f64 {
        if drop_eps <= 0.0 {
            return 0.0;
        }
        let mut dropped = 0.0;
        for m in &mut self.modes {
            for c in m.iter_mut() {
                let n = c.norm();
                if n != 0.0 && n < drop_eps {
                    dropped += n;
                    *c = Complex64::default();
                }
            }
        }
        dropped
    }

    /// Copy into a (possibly different) truncation shape, discarding
    /// whatever falls outside.
    pub fn resize(&self, k_max: usize, deg_max: usize) -> Self {
        let mut out = Self::zero(self.m, k_max, deg_max);
        for k in 0..=self.k_max.min(k_max) {
            for (j, &c) in self.modes[k].iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                if let Some(jj) = out.table.index_of(self.table.exp(j)) {
                    out.modes[k][jj] = c;
                }
            }
        }
        out
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, &[u8], Complex64)> + '_ {
        self.modes.iter().enumerate().flat_map(move |(k, m)| {
            m.iter().enumerate().filter_map(move |(j, &c)| {
                (c.re != 0.0 || c.im != 0.0).then(|| (k, self.table.exp(j), c))
            })
        })
    }
}

/// JSON document for series exchange: only k ≥ 0 coefficients are stored.
#[derive(Debug, Serialize, Deserialize)]
pub struct SeriesJson {
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub coeffs: Vec<(usize, Vec<u8>, f64, f64)>,
}

impl FourierTaylorSeries {
    pub fn to_json(&self) -> SeriesJson {
        let coeffs = self
            .iter_nonzero()
            .map(|(k, alpha, c)| (k, alpha.to_vec(), c.re, c.im))
            .collect();
        SeriesJson {
            m: self.m,
            k: self.k_max,
            n: self.deg_max,
            coeffs,
        }
    }

    pub fn from_json(doc: &SeriesJson) -> Result<Self, FtError> {
        let mut out = Self::zero(doc.m, doc.k, doc.n);
        for (k, alpha, re, im) in &doc.coeffs {
            out.set(*k, alpha, Complex64::new(*re, *im))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_series() -> FourierTaylorSeries {
        // cos t · z1 on m=2, K=2, N=3
        let mut s = FourierTaylorSeries::zero(2, 2, 3);
        s.set(1, &[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        s
    }

    #[test]
    fn xi_on_cos_gives_minus_sin() {
        // ξ(cos t · v) = -sin t · v: mode +1 coefficient 1/2 ↦ i/2, and
        // e^{it}·i/2 + e^{-it}·(-i/2) = -sin t.
        let s = x_series();
        let xs = s.xi();
        let z = [Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.0)];
        for &t in &[0.0, 0.3, 1.9, 4.4] {
            let got = xs.evaluate(&z, t).unwrap();
            let want = -t.sin() * 0.7;
            assert!((got.re - want).abs() < 1e-14);
            assert!(got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn xi_annihilates_time_independent() {
        let mut s = FourierTaylorSeries::zero(1, 3, 2);
        s.set(0, &[2], Complex64::new(1.25, 0.0)).unwrap();
        assert!(s.xi().is_zero());
    }

    #[test]
    fn xi_on_sin_gives_cos() {
        // sin t stored as mode +1 coefficient -i/2.
        let mut s = FourierTaylorSeries::zero(1, 1, 1);
        s.set(1, &[0], Complex64::new(0.0, -0.5)).unwrap();
        let xs = s.xi();
        for &t in &[0.0, 0.5, 2.2] {
            let got = xs.evaluate_real(&[0.3], t).unwrap();
            assert!((got - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn d_dt_examples() {
        let mut c = FourierTaylorSeries::zero(1, 2, 1);
        c.set(0, &[0], Complex64::new(3.0, 0.0)).unwrap();
        assert!(c.d_dt().is_zero());

        let mut e = FourierTaylorSeries::zero(1, 2, 1);
        e.set(1, &[0], Complex64::new(0.4, -0.2)).unwrap();
        let de = e.d_dt();
        let want = Complex64::new(0.0, 1.0) * Complex64::new(0.4, -0.2);
        assert!((de.coeff(1, &[0]) - want).norm() < 1e-15);

        // d/dt ξ(cos t · v) = -cos t · v
        let s = x_series();
        let ds = s.xi().d_dt();
        let got = ds.evaluate_real(&[1.0, 0.0], 0.9).unwrap();
        assert!((got - (-0.9f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn xi_squared_is_minus_oscillatory_projection() {
        let mut s = FourierTaylorSeries::zero(1, 3, 2);
        s.set(0, &[1], Complex64::new(1.0, 0.0)).unwrap();
        s.set(1, &[0], Complex64::new(0.3, 0.7)).unwrap();
        s.set(2, &[2], Complex64::new(-0.2, 0.1)).unwrap();
        s.set(3, &[0], Complex64::new(0.05, -0.4)).unwrap();
        let twice = s.xi().xi();
        let want = s.oscillatory_part().scale(-1.0);
        let diff = twice.sub(&want).unwrap();
        assert_eq!(diff.max_abs(), 0.0);
    }

    #[test]
    fn evaluation_is_real_on_real_input() {
        let mut s = FourierTaylorSeries::zero(2, 3, 4);
        s.set(0, &[1, 1], Complex64::new(0.6, 0.0)).unwrap();
        s.set(1, &[2, 0], Complex64::new(0.3, -0.8)).unwrap();
        s.set(2, &[0, 1], Complex64::new(-0.1, 0.25)).unwrap();
        s.set(3, &[1, 2], Complex64::new(0.05, 0.02)).unwrap();
        let z = [Complex64::new(0.9, 0.0), Complex64::new(-0.4, 0.0)];
        for &t in &[0.0, 0.7, 2.9, 5.5] {
            let v = s.evaluate(&z, t).unwrap();
            assert!(v.im.abs() <= 1e-14 * v.re.abs().max(1.0));
        }
    }

    #[test]
    fn evaluate_polynomial_exactly() {
        // z² at z=2 → 4
        let mut s = FourierTaylorSeries::zero(1, 0, 2);
        s.set(0, &[2], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(s.evaluate_real(&[2.0], 0.0).unwrap(), 4.0);
    }

    #[test]
    fn set_rejects_bad_input() {
        let mut s = FourierTaylorSeries::zero(1, 1, 1);
        assert!(s.set(0, &[0], Complex64::new(0.0, 1.0)).is_err());
        assert!(s.set(2, &[0], Complex64::new(1.0, 0.0)).is_err());
        assert!(s.set(0, &[2], Complex64::new(1.0, 0.0)).is_err());
        assert!(s
            .set(0, &[0], Complex64::new(f64::NAN, 0.0))
            .is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut s = FourierTaylorSeries::zero(2, 2, 3);
        s.set(0, &[1, 0], Complex64::new(0.1 + 0.2, 0.0)).unwrap();
        s.set(1, &[0, 2], Complex64::new(1.0 / 3.0, -2.0 / 7.0))
            .unwrap();
        s.set(2, &[1, 1], Complex64::new(f64::MIN_POSITIVE, 1e300))
            .unwrap();
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back = FourierTaylorSeries::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!(s.sub(&back).unwrap().is_zero());
    }
}
