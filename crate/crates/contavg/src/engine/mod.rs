//! Integration of the continuous-averaging Cauchy problems in the auxiliary
//! parameter s: the autonomous flow u_s = -[ξu, u], the nonautonomous flow
//! u_s = (ξu)_t - [ξu, u], and the linearized per-mode system
//! u^k_s = -|k|u^k + iεσ_k[u⁰, u^k].
//!
//! Hamiltonian mode evolves the scalar generating function instead:
//! h_s = (ξh)_t + {ξh, h} (the sign flips relative to the field flow
//! because J∇{h1,h2} = -[J∇h1, J∇h2]).

pub mod multifreq;

use crate::ft::{
    self, commutator, poisson_bracket, FtError, HamiltonianFT, NormValue, TruncationPolicy,
    VectorFieldFT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// u_s = -[ξu, u]
    Autonomous,
    /// u_s = (ξu)_t - [ξu, u]
    Nonautonomous,
    /// u^k_s = -|k|u^k + iεσ_k[u⁰, u^k] (convolution term skipped); ε is
    /// taken from the state rather than the coefficients.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Classical explicit RK4 on coefficient space. The stiff -|k| damping
    /// bounds ds·K ≲ 2.7 for stability.
    Rk4,
    /// Integrating-factor RK4: the diagonal -|k| damping is applied exactly,
    /// removing the stability bound for large K.
    ExponentialRk4,
}

#[derive(Debug, Clone)]
pub enum FieldState {
    Vector(VectorFieldFT),
    Hamiltonian(HamiltonianFT),
}

impl FieldState {
    fn zip(
        &self,
        other: &FieldState,
        fv: impl Fn(&VectorFieldFT, &VectorFieldFT) -> Result<VectorFieldFT, FtError>,
        fh: impl Fn(
            &crate::ft::FourierTaylorSeries,
            &crate::ft::FourierTaylorSeries,
        ) -> Result<crate::ft::FourierTaylorSeries, FtError>,
    ) -> Result<FieldState, EngineError> {
        match (self, other) {
            (FieldState::Vector(a), FieldState::Vector(b)) => Ok(FieldState::Vector(fv(a, b)?)),
            (FieldState::Hamiltonian(a), FieldState::Hamiltonian(b)) => Ok(FieldState::Hamiltonian(
                HamiltonianFT::new(fh(a.series(), b.series())?)?,
            )),
            _ => Err(EngineError::MixedFieldKinds),
        }
    }

    pub fn add(&self, other: &FieldState) -> Result<FieldState, EngineError> {
        self.zip(other, |a, b| a.add(b), |a, b| a.add(b))
    }

    pub fn add_scaled(&self, other: &FieldState, c: f64) -> Result<FieldState, EngineError> {
        self.zip(other, |a, b| a.add(&b.scale(c)), |a, b| a.add(&b.scale(c)))
    }

    pub fn scale(&self, c: f64) -> FieldState {
        match self {
            FieldState::Vector(v) => FieldState::Vector(v.scale(c)),
            FieldState::Hamiltonian(h) => {
                FieldState::Hamiltonian(HamiltonianFT::new(h.series().scale(c)).expect("shape kept"))
            }
        }
    }

    /// Multiply mode k by e^{-|k|·ds}: the exact flow of the damping part.
    pub fn exact_decay(&self, ds: f64) -> FieldState {
        let factor = |k: i64| num_complex::Complex64::new((-(k.abs() as f64) * ds).exp(), 0.0);
        match self {
            FieldState::Vector(v) => {
                let components = v
                    .components()
                    .iter()
                    .map(|c| c.mode_multiplier(factor))
                    .collect();
                FieldState::Vector(VectorFieldFT::new(components).expect("shape kept"))
            }
            FieldState::Hamiltonian(h) => FieldState::Hamiltonian(
                HamiltonianFT::new(h.series().mode_multiplier(factor)).expect("shape kept"),
            ),
        }
    }

    fn realify(&mut self) {
        match self {
            FieldState::Vector(v) => v.realify_average(),
            FieldState::Hamiltonian(h) => h.series_mut().realify_average(),
        }
    }

    fn drop_small(&mut self, drop_eps: f64) -> f64 {
        match self {
            FieldState::Vector(v) => v.drop_small(drop_eps),
            FieldState::Hamiltonian(h) => h.series_mut().drop_small(drop_eps),
        }
    }

    pub fn weighted_norm(&self, policy: &TruncationPolicy) -> NormValue {
        match self {
            FieldState::Vector(v) => ft::weighted_norm_field(v, policy),
            FieldState::Hamiltonian(h) => ft::weighted_norm(h.series(), policy),
        }
    }

    pub fn mode_norms(&self, policy: &TruncationPolicy) -> Vec<f64> {
        match self {
            FieldState::Vector(v) => ft::mode_norms_field(v, policy),
            FieldState::Hamiltonian(h) => ft::mode_norms(h.series(), policy),
        }
    }

    /// Weighted norm of the oscillatory (k ≠ 0) part, modes ±k both counted.
    pub fn remainder_norm(&self, policy: &TruncationPolicy) -> NormValue {
        match self {
            FieldState::Vector(v) => ft::remainder_norm_field(v, policy),
            FieldState::Hamiltonian(h) => ft::remainder_norm(h.series(), policy),
        }
    }

    /// The auxiliary field f = ξu driving the coordinate change; in
    /// Hamiltonian mode f = J∇(ξh).
    pub fn xi_field(&self) -> VectorFieldFT {
        match self {
            FieldState::Vector(v) => v.xi(),
            FieldState::Hamiltonian(h) => HamiltonianFT::new(h.series().xi())
                .expect("shape kept")
                .to_field(),
        }
    }

    pub fn as_vector(&self) -> Option<&VectorFieldFT> {
        match self {
            FieldState::Vector(v) => Some(v),
            FieldState::Hamiltonian(_) => None,
        }
    }

    pub fn as_hamiltonian(&self) -> Option<&HamiltonianFT> {
        match self {
            FieldState::Hamiltonian(h) => Some(h),
            FieldState::Vector(_) => None,
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            FieldState::Vector(v) => (v.k_max(), v.deg_max()),
            FieldState::Hamiltonian(h) => (h.series().k_max(), h.series().deg_max()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("weighted norm {norm:.3e} exceeded the blow-up bound at s = {s}")]
    BlowUp {
        s: f64,
        norm: f64,
        /// Last state with a finite norm.
        last: Box<AveragingState>,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("cannot mix vector and Hamiltonian fields")]
    MixedFieldKinds,
    #[error("coordinate change left the validity box (radius {radius})")]
    OutOfDomain { radius: f64 },
    #[error(transparent)]
    Series(#[from] FtError),
}

/// Snapshot of the averaging Cauchy problem.
#[derive(Debug, Clone)]
pub struct AveragingState {
    pub s: f64,
    pub eps: f64,
    pub variant: Variant,
    pub policy: TruncationPolicy,
    pub field: FieldState,
    pub stepper: Stepper,
    /// Blow-up when the weighted norm exceeds this multiple of the initial one.
    pub blow_up_factor: f64,
    initial_norm: f64,
}

impl AveragingState {
    pub fn new(
        field: FieldState,
        variant: Variant,
        eps: f64,
        policy: TruncationPolicy,
    ) -> Result<Self, EngineError> {
        policy.validate()?;
        if eps < 0.0 {
            return Err(EngineError::Contract("eps must be nonnegative".into()));
        }
        let (k, n) = field.shape();
        if k != policy.k_max || n != policy.deg_max {
            return Err(EngineError::Contract(format!(
                "field truncation ({k}, {n}) disagrees with policy ({}, {})",
                policy.k_max, policy.deg_max
            )));
        }
        let initial_norm = field.weighted_norm(&policy).value.max(f64::MIN_POSITIVE);
        Ok(AveragingState {
            s: 0.0,
            eps,
            variant,
            policy,
            field,
            stepper: Stepper::Rk4,
            blow_up_factor: 1e6,
            initial_norm,
        })
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    /// Default step: ds = min(0.01, 0.1/K).
    pub fn default_ds(&self) -> f64 {
        (0.1 / self.policy.k_max as f64).min(0.01)
    }

    /// The stopping rule s = α/ε of the averaging method.
    pub fn s_target_for(&self, alpha: f64) -> f64 {
        alpha / self.eps
    }

    fn check_blow_up(&self) -> Option<f64> {
        let n = self.field.weighted_norm(&self.policy);
        if n.saturated || n.value > self.blow_up_factor * self.initial_norm {
            Some(n.value)
        } else {
            None
        }
    }
}

/// The right-hand side du/ds for the state's variant.
pub fn rhs(state: &AveragingState) -> Result<FieldState, EngineError> {
    if let Some(norm) = state.check_blow_up() {
        return Err(EngineError::BlowUp {
            s: state.s,
            norm,
            last: Box::new(state.clone()),
        });
    }
    match state.variant {
        Variant::Autonomous => nonlinear_part(state),
        Variant::Nonautonomous | Variant::Linearized => {
            let damped = damping_part(&state.field);
            damped.add(&nonlinear_part(state)?)
        }
    }
}

/// The diagonal (ξu)_t term: mode k multiplied by -|k|.
fn damping_part(field: &FieldState) -> FieldState {
    match field {
        FieldState::Vector(v) => FieldState::Vector(v.mode_damping()),
        FieldState::Hamiltonian(h) => FieldState::Hamiltonian(
            HamiltonianFT::new(h.series().mode_damping()).expect("shape kept"),
        ),
    }
}

/// Everything except the diagonal damping: the bracket terms.
fn nonlinear_part(state: &AveragingState) -> Result<FieldState, EngineError> {
    match (&state.field, state.variant) {
        (FieldState::Vector(u), Variant::Autonomous | Variant::Nonautonomous) => {
            let f = u.xi();
            let mut b = commutator(&f, u)?.scale(-1.0);
            b.realify_average();
            Ok(FieldState::Vector(b))
        }
        (FieldState::Vector(u), Variant::Linearized) => {
            let avg = u.average_part();
            let mut b = commutator(&avg, u)?.xi().scale(state.eps);
            b.realify_average();
            Ok(FieldState::Vector(b))
        }
        (FieldState::Hamiltonian(h), Variant::Autonomous | Variant::Nonautonomous) => {
            let f = HamiltonianFT::new(h.series().xi())?;
            let mut b = poisson_bracket(&f, h)?;
            b.series_mut().realify_average();
            Ok(FieldState::Hamiltonian(b))
        }
        (FieldState::Hamiltonian(h), Variant::Linearized) => {
            let avg = HamiltonianFT::new(h.series().average_part())?;
            let b = poisson_bracket(&avg, h)?;
            let s = b.series().xi().scale(-state.eps);
            Ok(FieldState::Hamiltonian(HamiltonianFT::new(s)?))
        }
    }
}

/// One explicit step of size ds ≥ 0; local truncation error O(ds⁵) in
/// coefficient space. Reality is re-enforced and the drop threshold applied;
/// returns the advanced state and the dropped coefficient mass.
pub fn step(state: &AveragingState, ds: f64) -> Result<(AveragingState, f64), EngineError> {
    if ds < 0.0 {
        return Err(EngineError::Contract("ds must be nonnegative".into()));
    }
    if ds == 0.0 {
        return Ok((state.clone(), 0.0));
    }
    let mut next = state.clone();
    let u = &state.field;

    let mut field = match (state.stepper, state.variant) {
        (Stepper::Rk4, _) | (Stepper::ExponentialRk4, Variant::Autonomous) => {
            let k1 = rhs(state)?;
            let k2 = rhs(&state.at_field(u.add_scaled(&k1, ds / 2.0)?))?;
            let k3 = rhs(&state.at_field(u.add_scaled(&k2, ds / 2.0)?))?;
            let k4 = rhs(&state.at_field(u.add_scaled(&k3, ds)?))?;
            let mut acc = k1;
            acc = acc.add_scaled(&k2, 2.0)?.add_scaled(&k3, 2.0)?.add(&k4)?;
            u.add_scaled(&acc.scale(1.0 / 6.0), ds)?
        }
        (Stepper::ExponentialRk4, _) => {
            // Lawson RK4: v = e^{-sL}u turns u_s = Lu + N(u) into
            // v_s = e^{-sL}N(e^{sL}v); the decay factors below are the
            // transported stage combinations.
            let e_half = |f: &FieldState| f.exact_decay(ds / 2.0);
            let k1 = nonlinear_part(state)?;
            let k2 = nonlinear_part(&state.at_field(e_half(&u.add_scaled(&k1, ds / 2.0)?)))?;
            let k3 = nonlinear_part(&state.at_field(e_half(u).add_scaled(&k2, ds / 2.0)?))?;
            let k4 = nonlinear_part(
                &state.at_field(e_half(&e_half(u)).add_scaled(&e_half(&k3), ds)?),
            )?;
            let mut acc = e_half(&e_half(&k1));
            acc = acc
                .add_scaled(&e_half(&k2), 2.0)?
                .add_scaled(&e_half(&k3), 2.0)?
                .add(&k4)?;
            e_half(&e_half(u)).add_scaled(&acc.scale(1.0 / 6.0), ds)?
        }
    };

    field.realify();
    let dropped = field.drop_small(state.policy.drop_eps);
    next.field = field;
    next.s = state.s + ds;
    if let Some(norm) = next.check_blow_up() {
        return Err(EngineError::BlowUp {
            s: next.s,
            norm,
            last: Box::new(state.clone()),
        });
    }
    Ok((next, dropped))
}

impl AveragingState {
    fn at_field(&self, field: FieldState) -> AveragingState {
        AveragingState {
            field,
            ..self.clone()
        }
    }
}

/// Per-step diagnostics of a run.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub s: f64,
    pub ds: f64,
    /// Weighted norm per stored Fourier mode.
    pub mode_norms: Vec<f64>,
    pub dropped_mass: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub steps: Vec<StepRecord>,
}

impl RunReport {
    /// CSV with columns s, k, weighted_mode_norm, dropped_mass.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,k,weighted_mode_norm,dropped_mass")?;
        for rec in &self.steps {
            for (k, norm) in rec.mode_norms.iter().enumerate() {
                writeln!(w, "{:.12e},{},{:.12e},{:.12e}", rec.s, k, norm, rec.dropped_mass)?;
            }
        }
        Ok(())
    }
}

/// Recorded ξu snapshots on the integrator's s-grid, for the transported
/// coordinate change.
#[derive(Debug, Clone)]
pub struct SnapshotPath {
    pub s_values: Vec<f64>,
    pub fields: Vec<VectorFieldFT>,
    /// Points beyond this radius raise OutOfDomain during transport.
    pub domain_radius: f64,
}

/// Repeatedly step until s_target; returns the final state and the report.
pub fn run_to(
    state: &AveragingState,
    s_target: f64,
    ds: f64,
) -> Result<(AveragingState, RunReport), EngineError> {
    let (state, report, _) = run_averaging(state, s_target, ds, false)?;
    Ok((state, report))
}

/// Like `run_to`, also recording ξu on the s-grid for `transported_change`.
pub fn run_to_recorded(
    state: &AveragingState,
    s_target: f64,
    ds: f64,
) -> Result<(AveragingState, RunReport, SnapshotPath), EngineError> {
    let (state, report, path) = run_averaging(state, s_target, ds, true)?;
    Ok((state, report, path.expect("snapshots requested")))
}

fn run_averaging(
    state: &AveragingState,
    s_target: f64,
    ds: f64,
    record: bool,
) -> Result<(AveragingState, RunReport, Option<SnapshotPath>), EngineError> {
    if s_target < state.s {
        return Err(EngineError::Contract(format!(
            "s_target {} below current s {}",
            s_target, state.s
        )));
    }
    if ds <= 0.0 && s_target > state.s {
        return Err(EngineError::Contract("ds must be positive".into()));
    }
    let mut current = state.clone();
    let mut report = RunReport::default();
    let mut path = record.then(|| SnapshotPath {
        s_values: vec![current.s],
        fields: vec![current.field.xi_field()],
        domain_radius: 1e6,
    });
    while current.s < s_target - 1e-12 * s_target.max(1.0) {
        let h = ds.min(s_target - current.s);
        let (next, dropped) = step(&current, h)?;
        report.steps.push(StepRecord {
            s: next.s,
            ds: h,
            mode_norms: next.field.mode_norms(&next.policy),
            dropped_mass: dropped,
        });
        if let Some(p) = path.as_mut() {
            p.s_values.push(next.s);
            p.fields.push(next.field.xi_field());
        }
        current = next;
    }
    Ok((current, report, path))
}

/// Weighted norm of the t-dependent part of the state's field — the
/// quantity the averaging estimates bound by C·e^{-α/ε}.
pub fn remainder_norm(state: &AveragingState, policy: &TruncationPolicy) -> f64 {
    state.field.remainder_norm(policy).value
}

/// The coordinate change z ↦ Z: integrate dZ/ds = ξu(Z, t, s) across the
/// recorded snapshot grid at frozen t, with linear interpolation in s.
pub fn transported_change(
    path: &SnapshotPath,
    z0: &[f64],
    t: f64,
) -> Result<Vec<f64>, EngineError> {
    let n = path.s_values.len();
    if n == 0 {
        return Ok(z0.to_vec());
    }
    let mut z = z0.to_vec();
    let radius = path.domain_radius;
    let check = |z: &[f64]| -> Result<(), EngineError> {
        if z.iter().any(|v| !v.is_finite() || v.abs() > radius) {
            Err(EngineError::OutOfDomain { radius })
        } else {
            Ok(())
        }
    };
    check(&z)?;
    for i in 0..n.saturating_sub(1) {
        let s0 = path.s_values[i];
        let s1 = path.s_values[i + 1];
        let h = s1 - s0;
        if h == 0.0 {
            continue;
        }
        let f0 = &path.fields[i];
        let f1 = &path.fields[i + 1];
        // Linear interpolation of the field is linear in its coefficients,
        // so interpolating pointwise values is equivalent.
        let eval = |frac: f64, z: &[f64]| -> Result<Vec<f64>, EngineError> {
            let a = f0.evaluate_real(z, t)?;
            let b = f1.evaluate_real(z, t)?;
            Ok(a.iter()
                .zip(b.iter())
                .map(|(va, vb)| va + frac * (vb - va))
                .collect())
        };
        let k1 = eval(0.0, &z)?;
        let z2: Vec<f64> = z.iter().zip(&k1).map(|(zi, ki)| zi + 0.5 * h * ki).collect();
        let k2 = eval(0.5, &z2)?;
        let z3: Vec<f64> = z.iter().zip(&k2).map(|(zi, ki)| zi + 0.5 * h * ki).collect();
        let k3 = eval(0.5, &z3)?;
        let z4: Vec<f64> = z.iter().zip(&k3).map(|(zi, ki)| zi + h * ki).collect();
        let k4 = eval(1.0, &z4)?;
        for (j, zj) in z.iter_mut().enumerate() {
            *zj += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        check(&z)?;
    }
    Ok(z)
}
