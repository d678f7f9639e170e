//! First-order Melnikov oracle for the forced pendulum, with the
//! sinh-integral closed form as a cross-check.
//!
//! Along the unperturbed separatrix x(τ) = 4 arctan e^τ, y(τ) = 2/cosh τ
//! (slow time τ = εt), the splitting function of the section map is
//!
//! ```text
//! M(τ₀) = ∫ 2B · y(τ) sin x(τ) · cos((τ + τ₀)/ε) dτ
//!       = (4πB/(ε² sinh(π/(2ε)))) · sin(τ₀/ε),
//! ```
//!
//! using y sin x = -4 sinh τ/cosh³τ and
//! ∫ sinh τ sin(ωτ)/cosh³τ dτ = πω²/(2 sinh(πω/2)). Integrating M between
//! consecutive zeros (τ₀ from 0 to πε) gives the lobe area
//!
//! ```text
//! A_mel = 16πB e^{-π/(2ε)} / (ε (1 - e^{-π/ε})),
//! ```
//!
//! whose ε → 0 limit is (8π/ε)e^{-π/(2ε)}·2B — the leading asymptotic with
//! the value 2 of the amplitude function at B = 0 (see docs/melnikov.md for
//! the full derivation). All areas are in the canonical (x, y) plane of the
//! section map.

use super::pendulum::{PendulumParams, SeparatrixOrbit};
use super::{manifolds, SplittingError};

/// Exponential-tail truncation of the τ integral; the integrand decays as
/// e^{-2|τ|}.
const TAU_CUT: f64 = 40.0;

/// Melnikov function M(τ₀) by composite Gauss-Legendre quadrature, τ₀ in
/// slow-time units.
pub fn melnikov_function(params: &PendulumParams, tau0: f64) -> f64 {
    let eps = params.eps;
    let b = params.b;
    // Panel width ~ one radian of the fast oscillation keeps the 16-node
    // panels spectrally accurate.
    let width = eps.min(0.5);
    let panels = (2.0 * TAU_CUT / width).ceil() as usize;
    let nodes = gauss_legendre_16();
    let mut acc = 0.0;
    for p in 0..panels {
        let a = -TAU_CUT + 2.0 * TAU_CUT * p as f64 / panels as f64;
        let c = -TAU_CUT + 2.0 * TAU_CUT * (p + 1) as f64 / panels as f64;
        let half = (c - a) / 2.0;
        let mid = (c + a) / 2.0;
        for &(x, w) in nodes.iter() {
            let tau = mid + half * x;
            acc += w * half * SeparatrixOrbit::y_sin_x(tau) * ((tau + tau0) / eps).cos();
        }
    }
    2.0 * b * acc
}

/// Lobe area as the integral of M between two consecutive zeros, both found
/// by bisection on the quadrature values.
pub fn melnikov_lobe(params: &PendulumParams) -> Result<f64, SplittingError> {
    if params.b == 0.0 {
        return Ok(0.0);
    }
    let eps = params.eps;
    let period = 2.0 * std::f64::consts::PI * eps;
    // Anchor at the peak of |M|: the zeros bounding its lobe are bracketed
    // by the first sign changes on either side (a scan from τ₀ = 0 is
    // unreliable because M(0) is itself a zero up to quadrature noise).
    let n = 64;
    let step = period / n as f64;
    let mut t_peak = 0.0;
    let mut m_peak = 0.0f64;
    for i in 0..n {
        let t = step * i as f64;
        let v = melnikov_function(params, t);
        if v.abs() > m_peak.abs() {
            m_peak = v;
            t_peak = t;
        }
    }
    if m_peak == 0.0 {
        return Ok(0.0);
    }
    let zero_side = |dir: f64| -> Result<f64, SplittingError> {
        let mut t_in = t_peak;
        for i in 1..=n {
            let t_out = t_peak + dir * step * i as f64;
            let v = melnikov_function(params, t_out);
            if v * m_peak < 0.0 {
                let (lo, hi) = if t_out < t_in { (t_out, t_in) } else { (t_in, t_out) };
                return Ok(bisect_zero(params, lo, hi, melnikov_function(params, lo)));
            }
            t_in = t_out;
        }
        Err(SplittingError::Quadrature(
            "no Melnikov sign change within one period of the peak".into(),
        ))
    };
    let (a, c) = (zero_side(-1.0)?, zero_side(1.0)?);
    let nodes = gauss_legendre_16();
    let panels = 8;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + (c - a) * p as f64 / panels as f64;
        let hi = a + (c - a) * (p + 1) as f64 / panels as f64;
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        for &(x, w) in nodes.iter() {
            acc += w * half * melnikov_function(params, mid + half * x);
        }
    }
    Ok(acc.abs())
}

fn bisect_zero(params: &PendulumParams, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..80 {
        let mid = (lo + hi) / 2.0;
        let fm = melnikov_function(params, mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    (lo + hi) / 2.0
}

/// Closed form of the Melnikov lobe area:
/// 16πB e^{-π/(2ε)} / (ε(1 - e^{-π/ε})).
pub fn melnikov_closed_form(params: &PendulumParams) -> f64 {
    let eps = params.eps;
    let pi = std::f64::consts::PI;
    16.0 * pi * params.b * (-pi / (2.0 * eps)).exp() / (eps * (1.0 - (-pi / eps).exp()))
}

/// Leading-order asymptotic (8π/ε)·e^{-π/(2ε)}·2B.
pub fn paper_asymptotic_area(params: &PendulumParams) -> f64 {
    let eps = params.eps;
    let pi = std::f64::consts::PI;
    8.0 * pi / eps * (-pi / (2.0 * eps)).exp() * 2.0 * params.b
}

fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    use std::sync::OnceLock;
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(|| {
        let mut out = [(0.0, 0.0); 16];
        let n = 16usize;
        for k in 0..n {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = manifolds::legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = manifolds::legendre(n, x);
            out[k] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}
