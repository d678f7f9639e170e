//! Two-fast-phase averaging: fields on T² × R with Fourier indices k ∈ Z²
//! and polynomial dependence on the slow variable.
//!
//! For the slow-fast system ż = ω̄ + V with ω̄ = (ω₁, ω₂, 0), removing the
//! fast phases with f = ξV, where ξ multiplies mode k by i·sign⟨k,ω⟩, gives
//!
//! ```text
//! V_s = -[ξV, ω̄] - [ξV, V],    [ξV, ω̄]^k = |⟨k,ω⟩| V^k,
//! ```
//!
//! so each mode is damped at the rate |⟨k,ω⟩| — small denominators slow the
//! damping of near-resonant modes, which is what produces the
//! ε^{-1/(γ+1)} exponent in the remainder. This module is the natural
//! generalization of the single-phase ξ; the driving experiment labels it
//! as such.

use num_complex::Complex64;
use std::collections::HashMap;

use super::EngineError;

/// Number of components: two phase rates and one slow rate.
const COMPS: usize = 3;

/// Field on T² × R: modes k in the box |k₁|,|k₂| ≤ k_box, coefficients are
/// degree ≤ deg polynomials in y. Only lexicographically positive modes are
/// stored; mode -k is the conjugate of mode k.
#[derive(Debug, Clone)]
pub struct MfField {
    pub k_box: i32,
    pub deg: usize,
    pub omega: [f64; 2],
    modes: Vec<(i32, i32)>,
    index: HashMap<(i32, i32), usize>,
    /// `data[mode][comp * (deg+1) + power]`
    data: Vec<Vec<Complex64>>,
}

fn lex_positive(k: (i32, i32)) -> bool {
    k.0 > 0 || (k.0 == 0 && k.1 > 0)
}

impl MfField {
    pub fn zero(k_box: i32, deg: usize, omega: [f64; 2]) -> Self {
        let mut modes = vec![(0, 0)];
        for k1 in -k_box..=k_box {
            for k2 in -k_box..=k_box {
                if lex_positive((k1, k2)) {
                    modes.push((k1, k2));
                }
            }
        }
        let index = modes.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let data = vec![vec![Complex64::default(); COMPS * (deg + 1)]; modes.len()];
        MfField {
            k_box,
            deg,
            omega,
            modes,
            index,
            data,
        }
    }

    pub fn divisor(&self, k: (i32, i32)) -> f64 {
        k.0 as f64 * self.omega[0] + k.1 as f64 * self.omega[1]
    }

    pub fn stored_modes(&self) -> &[(i32, i32)] {
        &self.modes
    }

    /// Set the stored coefficient of component `comp`, mode k (must be 0 or
    /// lex-positive), y-power `p`.
    pub fn set(
        &mut self,
        comp: usize,
        k: (i32, i32),
        p: usize,
        c: Complex64,
    ) -> Result<(), EngineError> {
        if !(k == (0, 0) || lex_positive(k)) {
            return Err(EngineError::Contract(
                "store only lex-positive modes; negatives are conjugates".into(),
            ));
        }
        if k == (0, 0) && c.im != 0.0 {
            return Err(EngineError::Contract("mode (0,0) must be real".into()));
        }
        let i = *self
            .index
            .get(&k)
            .ok_or_else(|| EngineError::Contract(format!("mode {k:?} outside the box")))?;
        if p > self.deg {
            return Err(EngineError::Contract("y-power beyond degree".into()));
        }
        self.data[i][comp * (self.deg + 1) + p] = c;
        Ok(())
    }

    pub fn coeff(&self, comp: usize, k: (i32, i32), p: usize) -> Complex64 {
        let positive = k == (0, 0) || lex_positive(k);
        let kk = if positive { k } else { (-k.0, -k.1) };
        match self.index.get(&kk) {
            None => Complex64::default(),
            Some(&i) => {
                let c = self.data[i][comp * (self.deg + 1) + p];
                if positive {
                    c
                } else {
                    c.conj()
                }
            }
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.k_box == other.k_box && self.deg == other.deg && self.omega == other.omega
    }

    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        debug_assert!(self.same_shape(other));
        let mut out = self.clone();
        for (om, sm) in out.data.iter_mut().zip(other.data.iter()) {
            for (o, s) in om.iter_mut().zip(sm.iter()) {
                *o += s * factor;
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.data {
            for c in m.iter_mut() {
                *c *= factor;
            }
        }
        out
    }

    /// Multiply mode k by e^{-|⟨k,ω⟩|·ds}: exact flow of the damping.
    pub fn exact_decay(&self, ds: f64) -> Self {
        let mut out = self.clone();
        for (i, &k) in self.modes.iter().enumerate() {
            let f = (-self.divisor(k).abs() * ds).exp();
            for c in &mut out.data[i] {
                *c *= f;
            }
        }
        out
    }

    pub fn damping(&self) -> Self {
        let mut out = self.clone();
        for (i, &k) in self.modes.iter().enumerate() {
            let f = -self.divisor(k).abs();
            for c in &mut out.data[i] {
                *c *= f;
            }
        }
        out
    }

    fn realify_average(&mut self) {
        for c in &mut self.data[0] {
            c.im = 0.0;
        }
    }

    /// Sum over all signed modes of Σ_p |c|·rho^p (oscillatory part only if
    /// `oscillatory`); stored modes count twice except (0,0).
    pub fn coefficient_norm(&self, rho: f64, oscillatory: bool) -> f64 {
        let mut acc = 0.0;
        for (i, &k) in self.modes.iter().enumerate() {
            if k == (0, 0) {
                if oscillatory {
                    continue;
                }
                acc += self.data[i]
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c.norm() * rho.powi((j % (self.deg + 1)) as i32))
                    .sum::<f64>();
            } else {
                acc += 2.0
                    * self.data[i]
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c.norm() * rho.powi((j % (self.deg + 1)) as i32))
                        .sum::<f64>();
            }
        }
        acc
    }

    /// Largest |⟨k,ω⟩| mode norm at a given k (per signed mode, unweighted).
    pub fn mode_l1(&self, k: (i32, i32)) -> f64 {
        let positive = k == (0, 0) || lex_positive(k);
        let kk = if positive { k } else { (-k.0, -k.1) };
        match self.index.get(&kk) {
            None => 0.0,
            Some(&i) => self.data[i].iter().map(|c| c.norm()).sum(),
        }
    }

    /// Commutator [self, other] over (x₁, x₂, y): phase derivatives act as
    /// i·k_j multipliers, the slow derivative differentiates the polynomial.
    /// The result is truncated to the shared mode box and degree.
    pub fn commutator(&self, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        let mut out = Self::zero(self.k_box, self.deg, self.omega);
        self.accumulate_directional(other, &mut out, 1.0);
        other.accumulate_directional(self, &mut out, -1.0);
        out.realify_average();
        out
    }

    /// out += sign · ∂_{self} other.
    fn accumulate_directional(&self, other: &Self, out: &mut Self, sign: f64) {
        let deg1 = self.deg + 1;
        // Gather signed nonzero modes of both operands.
        let signed =
            |f: &MfField| -> Vec<((i32, i32), Vec<Complex64>)> {
                let mut v = Vec::new();
                for (i, &k) in f.modes.iter().enumerate() {
                    if f.data[i].iter().any(|c| c.re != 0.0 || c.im != 0.0) {
                        v.push((k, f.data[i].clone()));
                        if k != (0, 0) {
                            let conj: Vec<Complex64> =
                                f.data[i].iter().map(|c| c.conj()).collect();
                            v.push(((-k.0, -k.1), conj));
                        }
                    }
                }
                v
            };
        let lhs = signed(self);
        let rhs = signed(other);
        for (l, ldata) in &lhs {
            for (r, rdata) in &rhs {
                let k = (l.0 + r.0, l.1 + r.1);
                if k.0.abs() > self.k_box || k.1.abs() > self.k_box {
                    continue;
                }
                let positive = k == (0, 0) || lex_positive(k);
                let store = if positive { k } else { (-k.0, -k.1) };
                let idx = out.index[&store];
                // (∂_{V} W)_i = Σ_j V_j ∂_j W_i; ∂_1, ∂_2 are i·r_j on the
                // mode of W, ∂_3 is d/dy.
                for i in 0..COMPS {
                    for pj in 0..deg1 {
                        for (j, mult) in [(0usize, r.0), (1usize, r.1)] {
                            if mult == 0 {
                                continue;
                            }
                            let vj = ldata[j * deg1 + pj];
                            if vj.re == 0.0 && vj.im == 0.0 {
                                continue;
                            }
                            let der = Complex64::new(0.0, mult as f64);
                            for pi in 0..deg1 {
                                let wi = rdata[i * deg1 + pi];
                                if wi.re == 0.0 && wi.im == 0.0 {
                                    continue;
                                }
                                let p = pi + pj;
                                if p > self.deg {
                                    continue;
                                }
                                let mut c = sign * vj * der * wi;
                                if !positive {
                                    c = c.conj();
                                }
                                out.data[idx][i * deg1 + p] += c;
                            }
                        }
                        // slow derivative: V_3 · dW_i/dy
                        let v3 = ldata[2 * deg1 + pj];
                        if v3.re == 0.0 && v3.im == 0.0 {
                            continue;
                        }
                        for pi in 1..deg1 {
                            let wi = rdata[i * deg1 + pi];
                            if wi.re == 0.0 && wi.im == 0.0 {
                                continue;
                            }
                            let p = pi - 1 + pj;
                            if p > self.deg {
                                continue;
                            }
                            let mut c = sign * v3 * wi * pi as f64;
                            if !positive {
                                c = c.conj();
                            }
                            out.data[idx][i * deg1 + p] += c;
                        }
                    }
                }
            }
        }
    }

    /// ξ: mode k multiplied by i·sign⟨k,ω⟩; the average is annihilated.
    pub fn xi(&self) -> Self {
        let mut out = self.clone();
        for (i, &k) in self.modes.iter().enumerate() {
            let f = if k == (0, 0) {
                Complex64::default()
            } else {
                Complex64::new(0.0, self.divisor(k).signum())
            };
            for c in &mut out.data[i] {
                *c *= f;
            }
        }
        out
    }
}

/// Smallest |⟨k,ω⟩|·‖k‖_∞^γ over the nonzero modes of the box: the sharp
/// Diophantine constant γ₀ on this truncation.
pub fn diophantine_gamma0(omega: [f64; 2], k_box: i32, gamma: f64) -> f64 {
    let mut best = f64::INFINITY;
    for k1 in -k_box..=k_box {
        for k2 in -k_box..=k_box {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let div = (k1 as f64 * omega[0] + k2 as f64 * omega[1]).abs();
            let norm = (k1.abs().max(k2.abs())) as f64;
            best = best.min(div * norm.powf(gamma));
        }
    }
    best
}

/// Full averaging flow V_s = damping - [ξV, V] with exact diagonal decay
/// (Lawson RK4); returns the state at s_target.
pub fn run_multifreq(v0: &MfField, s_target:f64, ds: f64) -> Result<MfField, EngineError> {
    if s_target < 0.0 || ds <= 0.0 {
        return Err(EngineError::Contract("need s_target ≥ 0 and ds > 0".into()));
    }
    let nonlin = |v: &MfField| -> MfField { v.xi().commutator(v).scale(-1.0) };
    let mut v = v0.clone();
    let mut s = 0.0;
    while s < s_target - 1e-12 * s_target.max(1.0) {
        let h = ds.min(s_target - s);
        let e_half = |f: &MfField| f.exact_decay(h / 2.0);
        let k1 = nonlin(&v);
        let k2 = nonlin(&e_half(&v.add_scaled(&k1, h / 2.0)));
        let k3 = nonlin(&e_half(&v).add_scaled(&k2, h / 2.0));
        let k4 = nonlin(&e_half(&e_half(&v)).add_scaled(&e_half(&k3), h));
        let mut acc = e_half(&e_half(&k1));
        acc = acc.add_scaled(&e_half(&k2), 2.0);
        acc = acc.add_scaled(&e_half(&k3), 2.0);
        acc = acc.add_scaled(&k4, 1.0);
        v = e_half(&e_half(&v)).add_scaled(&acc, h / 6.0);
        v.realify_average();
        s += h;
        if !v.coefficient_norm(1.0, false).is_finite() {
            return Err(EngineError::Contract(format!(
                "multifreq flow diverged at s = {s}"
            )));
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 1.618033988749894848;

    #[test]
    fn fixed_point_of_phase_independent_field() {
        let mut v = MfField::zero(3, 2, [1.0, GOLDEN]);
        v.set(2, (0, 0), 1, Complex64::new(0.4, 0.0)).unwrap();
        let out = run_multifreq(&v, 1.0, 0.05).unwrap();
        // ξV = 0 for a phase-independent field: nothing moves.
        assert!((out.coeff(2, (0, 0), 1) - Complex64::new(0.4, 0.0)).norm() < 1e-14);
        assert!((out.coefficient_norm(1.0, false) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn single_mode_decays_at_divisor_rate() {
        // A single mode in the slow component with no y-dependence has
        // [ξV, V] = 0 (no phase-rate components, nothing to differentiate),
        // so the decay is purely diagonal at rate |⟨k,ω⟩|.
        let mut v = MfField::zero(3, 1, [1.0, GOLDEN]);
        let k = (1, -1);
        let c = Complex64::new(0.02, -0.01);
        v.set(2, k, 0, c).unwrap();
        let s = 2.0;
        let out = run_multifreq(&v, s, 0.05).unwrap();
        let rate = (1.0 - GOLDEN).abs();
        let want = c * (-rate * s).exp();
        let got = out.coeff(2, k, 0);
        assert!(
            (got - want).norm() < 1e-10 * want.norm(),
            "{got} vs {want}"
        );
    }

    #[test]
    fn commutator_antisymmetry_and_reality() {
        let mut a = MfField::zero(2, 2, [1.0, GOLDEN]);
        a.set(0, (1, 0), 1, Complex64::new(0.3, 0.1)).unwrap();
        a.set(2, (1, -1), 0, Complex64::new(-0.2, 0.4)).unwrap();
        a.set(1, (0, 0), 2, Complex64::new(0.5, 0.0)).unwrap();
        let mut b = MfField::zero(2, 2, [1.0, GOLDEN]);
        b.set(2, (0, 1), 1, Complex64::new(0.7, -0.3)).unwrap();
        b.set(0, (2, 1), 0, Complex64::new(0.1, 0.2)).unwrap();
        let ab = a.commutator(&b);
        let ba = b.commutator(&a);
        let sum = ab.add_scaled(&ba, 1.0);
        assert!(sum.coefficient_norm(1.0, false) < 1e-14);
        // mode (0,0) real
        for comp in 0..3 {
            for p in 0..=2 {
                assert_eq!(ab.coeff(comp, (0, 0), p).im, 0.0);
            }
        }
    }

    #[test]
    fn golden_mean_gamma0() {
        let g0 = diophantine_gamma0([1.0, GOLDEN], 13, 1.0);
        // minimum over the box is at k = (1, -1): |1 - φ| ≈ 0.618
        assert!((g0 - (GOLDEN - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn run_to_zero_is_identity() {
        let mut v = MfField::zero(2, 1, [1.0, GOLDEN]);
        v.set(0, (1, 1), 0, Complex64::new(0.2, -0.3)).unwrap();
        let r0 = v.coefficient_norm(1.0, true);
        let out = run_multifreq(&v, 0.0, 0.1).unwrap();
        assert_eq!(out.coefficient_norm(1.0, true), r0);
    }

    #[test]
    fn single_phase_support_collapses_to_integer_damping() {
        // Modes on the (k₁, 0) sublattice have ⟨k,ω⟩ = k₁: the flow reduces
        // to the one-frequency damping e^{-|k₁|s}, the exponent of the
        // single-phase theory.
        let mut v = MfField::zero(3, 1, [1.0, GOLDEN]);
        let c = Complex64::new(0.01, 0.005);
        v.set(2, (1, 0), 0, c).unwrap();
        v.set(2, (2, 0), 0, c * 0.5).unwrap();
        let s = 1.5;
        let out = run_multifreq(&v, s, 0.05).unwrap();
        let d1 = (out.coeff(2, (1, 0), 0) - c * (-s).exp()).norm();
        let d2 = (out.coeff(2, (2, 0), 0) - c * 0.5 * (-2.0 * s).exp()).norm();
        assert!(d1 < 1e-12 && d2 < 1e-12, "d1 {d1}, d2 {d2}");
    }
}
