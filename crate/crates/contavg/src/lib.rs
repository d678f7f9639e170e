//! Continuous averaging for periodically forced analytic ODEs on truncated
//! Fourier-Taylor vector fields, closed-form oracles for the linearized
//! flow, and a separatrix-splitting laboratory for the forced pendulum.

pub mod engine;
pub mod ft;
pub mod integrate;
pub mod oracle;
pub mod splitting;

pub use ft::{FourierTaylorSeries, HamiltonianFT, TruncationPolicy, VectorFieldFT};
