//! Truncation policy and weighted coefficient norms.
//!
//! The weighted norm Σ |c|·rho^{|α|}·e^{q|k|} dominates the supremum of the
//! series on the polydisk of radius rho crossed with the complex strip
//! |Im t| ≤ q. It is used as a diagnostic throughout the engine, not as
//! proof machinery.

use serde::{Deserialize, Serialize};

use super::field::VectorFieldFT;
use super::series::FourierTaylorSeries;
use super::FtError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Fourier cutoff: modes with |k| > K are dropped.
    pub k_max: usize,
    /// Taylor cutoff: monomials with |α| > N are dropped.
    pub deg_max: usize,
    /// Coefficients with |c| < drop_eps are zeroed after each operation.
    pub drop_eps: f64,
    /// Taylor weight: polydisk radius (dimensionless).
    pub rho: f64,
    /// Fourier weight: analyticity-strip half-width in t (radians).
    pub q: f64,
}

impl TruncationPolicy {
    pub fn new(k_max: usize, deg_max: usize, drop_eps: f64, rho: f64, q: f64) -> Result<Self, FtError> {
        let p = TruncationPolicy {
            k_max,
            deg_max,
            drop_eps,
            rho,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FtError> {
        if self.k_max < 1 {
            return Err(FtError::InvalidPolicy("K must be at least 1"));
        }
        if self.deg_max < 1 {
            return Err(FtError::InvalidPolicy("N must be at least 1"));
        }
        if !(self.drop_eps >= 0.0) {
            return Err(FtError::InvalidPolicy("drop_eps must be nonnegative"));
        }
        if !(self.rho > 0.0) {
            return Err(FtError::InvalidPolicy("rho must be positive"));
        }
        if !(self.q >= 0.0) {
            return Err(FtError::InvalidPolicy("q must be nonnegative"));
        }
        Ok(())
    }
}

/// Weighted-norm value; `saturated` flags overflow of the e^{q|k|} weights
/// (the value is then clamped to f64::MAX).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub saturated: bool,
}

impl NormValue {
    fn from_raw(raw: f64) -> Self {
        if raw.is_finite() {
            NormValue {
                value: raw,
                saturated: false,
            }
        } else {
            NormValue {
                value: f64::MAX,
                saturated: true,
            }
        }
    }
}

/// Σ over stored (k ≥ 0, α) of |c|·rho^{|α|}·e^{q k}. Zero iff the series
/// is zero. Stored modes are counted once; see `remainder_norm` for the
/// physical ±k count.
pub fn weighted_norm(s: &FourierTaylorSeries, policy: &TruncationPolicy) -> NormValue {
    let mut acc = 0.0f64;
    for k in 0..=s.k_max() {
        let w_k = (policy.q * k as f64).exp();
        acc += w_k * mode_taylor_sum(s, k, policy.rho);
    }
    NormValue::from_raw(acc)
}

/// Weighted norm of a vector field: sum over components.
pub fn weighted_norm_field(u: &VectorFieldFT, policy: &TruncationPolicy) -> NormValue {
    let mut acc = 0.0f64;
    let mut saturated = false;
    for c in u.components() {
        let n = weighted_norm(c, policy);
        acc += n.value;
        saturated |= n.saturated;
    }
    let mut out = NormValue::from_raw(acc);
    out.saturated |= saturated;
    out
}

/// Per-stored-mode weighted norms: entry k is e^{qk}·Σ_α |c_{k,α}| rho^{|α|}.
pub fn mode_norms(s: &FourierTaylorSeries, policy: &TruncationPolicy) -> Vec<f64> {
    (0..=s.k_max())
        .map(|k| (policy.q * k as f64).exp() * mode_taylor_sum(s, k, policy.rho))
        .collect()
}

pub fn mode_norms_field(u: &VectorFieldFT, policy: &TruncationPolicy) -> Vec<f64> {
    let mut acc = vec![0.0; u.k_max() + 1];
    for c in u.components() {
        for (k, v) in mode_norms(c, policy).into_iter().enumerate() {
            acc[k] += v;
        }
    }
    acc
}

fn mode_taylor_sum(s: &FourierTaylorSeries, k: usize, rho: f64) -> f64 {
    let table = s.table().clone();
    s.mode(k)
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if c.re == 0.0 && c.im == 0.0 {
                0.0
            } else {
                c.norm() * rho.powi(table.degree(j) as i32)
            }
        })
        .sum()
}

/// Weighted norm of the oscillatory part, counting modes ±k for k ≥ 1 —
/// the quantity bounded by the averaging-remainder estimate.
pub fn remainder_norm(s: &FourierTaylorSeries, policy: &TruncationPolicy) -> NormValue {
    let mut acc = 0.0f64;
    for k in 1..=s.k_max() {
        let w_k = (policy.q * k as f64).exp();
        acc += 2.0 * w_k * mode_taylor_sum(s, k, policy.rho);
    }
    NormValue::from_raw(acc)
}

pub fn remainder_norm_field(u: &VectorFieldFT, policy: &TruncationPolicy) -> NormValue {
    let mut acc = 0.0f64;
    let mut saturated = false;
    for c in u.components() {
        let n = remainder_norm(c, policy);
        acc += n.value;
        saturated |= n.saturated;
    }
    let mut out = NormValue::from_raw(acc);
    out.saturated |= saturated;
    out
}

/// Zero coefficients below drop_eps and restrict to the policy's (K, N);
/// returns the truncated series and the dropped absolute mass.
pub fn truncate(s: &FourierTaylorSeries, policy: &TruncationPolicy) -> (FourierTaylorSeries, f64) {
    let mut out = if s.k_max() == policy.k_max && s.deg_max() == policy.deg_max {
        s.clone()
    } else {
        s.resize(policy.k_max, policy.deg_max)
    };
    let mut dropped = 0.0;
    // Mass outside the new shape counts as dropped.
    if s.k_max() > policy.k_max || s.deg_max() > policy.deg_max {
        for (k, alpha, c) in s.iter_nonzero() {
            let deg: usize = alpha.iter().map(|&a| a as usize).sum();
            if k > policy.k_max || deg > policy.deg_max {
                dropped += c.norm();
            }
        }
    }
    dropped += out.drop_small(policy.drop_eps);
    (out, dropped)
}
