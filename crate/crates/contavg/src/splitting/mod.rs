//! Separatrix-splitting laboratory for the forced pendulum: Poincaré map,
//! hyperbolic fixed point, invariant manifolds, homoclinic points, lobe
//! area, the Melnikov oracle, and the normal-form reduction driven by the
//! averaging engine.

mod manifolds;
mod melnikov;
mod normal_form;
mod pendulum;

pub use manifolds::{
    homoclinic_and_lobe, homoclinic_convergence, lobe_segments, manifold_segment, measure_lobe,
    Branch, LobeOutcome, LobeRecord, ManifoldChart, ManifoldSegment,
};
pub use melnikov::{melnikov_closed_form, melnikov_function, melnikov_lobe, paper_asymptotic_area};
pub use normal_form::{normal_form_reduce, NormalFormResult};
pub use pendulum::{
    hyperbolic_fixed_point, poincare_jacobian, poincare_jacobian_complex_step, poincare_map,
    poincare_with_tangent, FixedPointData, PendulumParams, SeparatrixOrbit, ESCAPE_Y, PERIOD,
};

use crate::integrate::OdeError;

#[derive(Debug, thiserror::Error)]
pub enum SplittingError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("trajectory escaped (|y| > {ESCAPE_Y}) at t = {t}")]
    Escape { t: f64 },
    #[error("Newton iteration failed for {what} (residual {residual:.3e})")]
    NewtonFailed { what: String, residual: f64 },
    #[error("manifold seeding failed: defect {defect:.3e} at the delta floor {delta:.3e}")]
    SeedingFailed { delta: f64, defect: f64 },
    #[error("no transversal crossing bracket found: {0}")]
    NoCrossing(String),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Series(#[from] crate::ft::FtError),
}
