//! Exact truncated algebra of Fourier-Taylor series and vector fields:
//! arithmetic, differentiation, commutator, Poisson bracket, the
//! Hilbert-transform multiplier ξ, and weighted norms.

mod field;
mod policy;
mod series;
mod table;

pub use field::{
    commutator, divergence, hamiltonian_to_field, poisson_bracket, HamiltonianFT, VectorFieldFT,
};
pub use policy::{
    mode_norms, mode_norms_field, remainder_norm, remainder_norm_field, truncate, weighted_norm,
    weighted_norm_field, NormValue, TruncationPolicy,
};
pub use series::{FourierTaylorSeries, SeriesJson};
pub use table::{taylor_table, TaylorTable};

/// Errors from the series algebra.
#[derive(Debug, thiserror::Error)]
pub enum FtError {
    #[error("shape mismatch: (m, K, N) = {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },
    #[error("{what} {got} outside stored range (max {max})")]
    IndexOutOfRange {
        what: &'static str,
        got: i64,
        max: i64,
    },
    #[error("mode-0 coefficients must be real")]
    NonRealAverage,
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("a vector field needs at least one component")]
    EmptyField,
}
