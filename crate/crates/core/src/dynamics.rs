//! Fixed-step RK4 integration of the canonical 4D flow, the gauge-field
//! flow, and the 3D reference flow, with constraint and energy diagnostics.
//!
//! Lab time `t` is the integration parameter. `r⁰` and `π₀` are integrated
//! alongside the spatial block even though `ṙ⁰ = c` and `π̇₀ = −c⁻¹∂ₜH` are
//! known in closed form, so their drift shows up in the diagnostics.

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::em_field::{force_term, FieldConfig, FieldError, GaugePotentials};
use crate::geometry::PhasePoint;
use crate::hamiltonians::{HamiltonianModel, ModelError, ModifiedHamiltonian};
use crate::Vec3;

pub mod convergence;

pub const TRAJECTORY_CSV_HEADER: &str = "t,r0,x,y,z,pi0,pix,piy,piz,constraint,energy";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("dt must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("n_steps must be at least 1")]
    NoSteps,
    #[error("initial state has non-finite components")]
    NonFiniteInitial,
    #[error("step {step} failed at t = {t}, r = {r:?}: {source}")]
    Step {
        step: usize,
        t: f64,
        r: [f64; 3],
        #[source]
        source: StepError,
    },
    #[error("diagnostics at step {step} are not finite")]
    NonFiniteDiagnostics { step: usize },
    #[error("trajectories are not comparable: {0}")]
    Mismatch(String),
}

/// Which right-hand side the 4D integrator uses.
#[derive(Debug, Clone, Copy)]
pub enum Flow<'a> {
    /// `ṙ^α = ∂ℋ/∂π_α`, `π̇_α = −∂ℋ/∂r^α` with canonical momentum.
    Canonical,
    /// Adds `(e/c)F_{αβ}ṙ^β` to `π̇_α`; momentum is kinetic.
    Gauge { field: &'a FieldConfig, charge: f64 },
}

/// RK4 increment `dt·(k1 + 2k2 + 2k3 + k4)/6`.
fn rk4<const N: usize, E>(
    t: f64,
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
) -> Result<[f64; N], E> {
    let stage = |k: &[f64; N], a: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &stage(&k1, half))?;
    let k3 = f(t + half, &stage(&k2, half))?;
    let k4 = f(t + dt, &stage(&k3, dt))?;
    // The weighted mean is formed before scaling by dt so that a constant
    // rate c contributes exactly fl(c·dt) when 6c is representable.
    Ok(std::array::from_fn(|i| dt * ((k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0)))
}

fn add<const N: usize>(y: &[f64; N], inc: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + inc[i])
}

/// Neumaier-compensated running sum of time and state. Keeps `r⁰` and
/// `c·t` within a few ulps over long runs for any `c`, where plain
/// accumulation drifts by ~√n ulps.
struct Accumulator<const N: usize> {
    t: f64,
    y: [f64; N],
    ct: f64,
    cy: [f64; N],
}

impl<const N: usize> Accumulator<N> {
    fn new(t: f64, y: [f64; N]) -> Self {
        Self { t, y, ct: 0.0, cy: [0.0; N] }
    }

    fn sum(s: &mut f64, comp: &mut f64, x: f64) {
        let t = *s + x;
        *comp += if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
        *s = t;
    }

    fn add(&mut self, dt: f64, inc: &[f64; N]) -> (f64, [f64; N]) {
        Self::sum(&mut self.t, &mut self.ct, dt);
        for ((y, c), &x) in self.y.iter_mut().zip(&mut self.cy).zip(inc) {
            Self::sum(y, c, x);
        }
        (self.t + self.ct, std::array::from_fn(|i| self.y[i] + self.cy[i]))
    }
}

/// Right-hand side `[ṙ^α, π̇_α]` of the 4D flow.
pub fn rhs_4d(state: &PhasePoint, mh: &ModifiedHamiltonian, flow: Flow<'_>) -> Result<[f64; 8], StepError> {
    let (d_r, d_p) = mh.gradient(state)?;
    let mut pidot = -d_r;
    if let Flow::Gauge { field, charge } = flow {
        let tensor = field.tensor_at(&state.r(), state.t)?;
        pidot = pidot + force_term(&tensor, &d_p, charge, mh.c);
    }
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&d_p.0);
    out[4..].copy_from_slice(&pidot.0);
    Ok(out)
}

fn increment_4d(
    state: &PhasePoint,
    dt: f64,
    mh: &ModifiedHamiltonian,
    flow: Flow<'_>,
) -> Result<[f64; 8], StepError> {
    rk4(state.t, &state.to_array(), dt, |t, y| rhs_4d(&PhasePoint::from_array(t, y), mh, flow))
}

fn step_4d(state: &PhasePoint, dt: f64, mh: &ModifiedHamiltonian, flow: Flow<'_>) -> Result<PhasePoint, StepError> {
    let inc = increment_4d(state, dt, mh, flow)?;
    Ok(PhasePoint::from_array(state.t + dt, &add(&state.to_array(), &inc)))
}

pub fn step_canonical_4d(state: &PhasePoint, dt: f64, mh: &ModifiedHamiltonian) -> Result<PhasePoint, StepError> {
    step_4d(state, dt, mh, Flow::Canonical)
}

/// One RK4 step of the gauge-field flow. The force term uses `ṙ^β` from the
/// same stage and the field evaluated at the stage point.
pub fn step_gauge_4d(
    state: &PhasePoint,
    dt: f64,
    mh: &ModifiedHamiltonian,
    field: &FieldConfig,
    charge: f64,
) -> Result<PhasePoint, StepError> {
    step_4d(state, dt, mh, Flow::Gauge { field, charge })
}

/// Spatial phase point with energy tracked by quadrature of `ε̇ = ∂ₜH`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State3D {
    pub t: f64,
    pub r: Vec3,
    pub p: Vec3,
    pub eps: f64,
}

impl State3D {
    /// Starts with `eps = H(t0, r, p)`.
    pub fn new(t: f64, r: Vec3, p: Vec3, model: &dyn HamiltonianModel) -> Result<Self, ModelError> {
        let eps = model.eval(t, &r, &p)?;
        Ok(Self { t, r, p, eps })
    }

    fn to_array(self) -> [f64; 7] {
        [self.r.x, self.r.y, self.r.z, self.p.x, self.p.y, self.p.z, self.eps]
    }

    fn from_array(t: f64, y: &[f64; 7]) -> Self {
        Self { t, r: Vec3::new(y[0], y[1], y[2]), p: Vec3::new(y[3], y[4], y[5]), eps: y[6] }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.eps.is_finite() && self.r.iter().chain(self.p.iter()).all(|c| c.is_finite())
    }
}

fn rhs_3d(state: &State3D, model: &dyn HamiltonianModel) -> Result<[f64; 7], ModelError> {
    let (t, r, p) = (state.t, state.r, state.p);
    let v = model.grad_p(t, &r, &p)?;
    let f = -model.grad_r(t, &r, &p)?;
    let power = model.dt(t, &r, &p)?;
    Ok([v.x, v.y, v.z, f.x, f.y, f.z, power])
}

fn increment_3d(state: &State3D, dt: f64, model: &dyn HamiltonianModel) -> Result<[f64; 7], ModelError> {
    rk4(state.t, &state.to_array(), dt, |t, y| rhs_3d(&State3D::from_array(t, y), model))
}

pub fn step_canonical_3d(state: &State3D, dt: f64, model: &dyn HamiltonianModel) -> Result<State3D, ModelError> {
    let inc = increment_3d(state, dt, model)?;
    Ok(State3D::from_array(state.t + dt, &add(&state.to_array(), &inc)))
}

/// Value of `ℋ`; zero on shell.
pub fn constraint_residual(state: &PhasePoint, mh: &ModifiedHamiltonian) -> Result<f64, ModelError> {
    mh.eval(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `ℋ` for 4D samples, `H(t, r, p) − eps` for 3D samples.
    pub constraint: f64,
    pub energy: f64,
    /// `Δε/Δt` minus the expected rate at the interval midpoint; zero on the first sample.
    pub energy_rate_residual: f64,
}

impl Diagnostics {
    fn is_finite(&self) -> bool {
        self.constraint.is_finite() && self.energy.is_finite() && self.energy_rate_residual.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: PhasePoint,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub c: f64,
    pub model: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample3D {
    pub state: State3D,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct Trajectory3D {
    pub samples: Vec<Sample3D>,
    pub dt: f64,
    pub model: &'static str,
}

fn write_row<W: Write>(out: &mut W, row: [f64; 11]) -> io::Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            out.write_all(b",")?;
        }
        first = false;
        write!(out, "{v}")?;
    }
    out.write_all(b"\n")
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn max_abs_constraint(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.constraint.abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].diagnostics.energy;
        self.samples.iter().map(|s| (s.diagnostics.energy - e0).abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_rate_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.energy_rate_residual.abs()).fold(0.0, f64::max)
    }

    /// Largest `|r⁰ − c·t|` in units of the ulp of `r⁰`.
    pub fn max_lockstep_ulps(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let r0 = s.state.position[0];
                let gap = (r0 - self.c * s.state.t).abs();
                let ulp = if r0 == 0.0 { f64::MIN_POSITIVE } else { ulp(r0) };
                gap / ulp
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header [`TRAJECTORY_CSV_HEADER`], shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            let (r, p) = (s.state.position.0, s.state.momentum.0);
            write_row(
                &mut out,
                [
                    s.state.t, r[0], r[1], r[2], r[3], p[0], p[1], p[2], p[3],
                    s.diagnostics.constraint, s.diagnostics.energy,
                ],
            )?;
        }
        Ok(())
    }
}

impl Trajectory3D {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs_constraint(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.constraint.abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].state.eps;
        self.samples.iter().map(|s| (s.state.eps - e0).abs()).fold(0.0, f64::max)
    }

    /// Same columns as the 4D export with `r0 = c·t` and `pi0 = −eps/c`.
    pub fn write_csv<W: Write>(&self, mut out: W, c: f64) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            let st = &s.state;
            write_row(
                &mut out,
                [
                    st.t, c * st.t, st.r.x, st.r.y, st.r.z, -st.eps / c, st.p.x, st.p.y, st.p.z,
                    s.diagnostics.constraint, s.diagnostics.energy,
                ],
            )?;
        }
        Ok(())
    }
}

fn ulp(x: f64) -> f64 {
    let bits = x.abs().to_bits();
    f64::from_bits(bits + 1) - x.abs()
}

fn check_step(dt: f64, n_steps: usize) -> Result<(), DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    if n_steps == 0 {
        return Err(DynamicsError::NoSteps);
    }
    Ok(())
}

fn midpoint(a: &PhasePoint, b: &PhasePoint) -> PhasePoint {
    let (ya, yb) = (a.to_array(), b.to_array());
    PhasePoint::from_array(0.5 * (a.t + b.t), &std::array::from_fn(|i| 0.5 * (ya[i] + yb[i])))
}

/// Integrates the 4D flow for `n_steps` steps of size `dt`.
pub fn integrate(
    initial: &PhasePoint,
    mh: &ModifiedHamiltonian,
    flow: Flow<'_>,
    dt: f64,
    n_steps: usize,
) -> Result<Trajectory, DynamicsError> {
    check_step(dt, n_steps)?;
    if !initial.is_finite() {
        return Err(DynamicsError::NonFiniteInitial);
    }
    let fail = |step: usize, s: &PhasePoint, e: StepError| DynamicsError::Step {
        step,
        t: s.t,
        r: s.r().into(),
        source: e,
    };
    let diag = |step: usize, s: &PhasePoint, prev: Option<&PhasePoint>| -> Result<Diagnostics, DynamicsError> {
        let constraint = mh.eval(s).map_err(|e| fail(step, s, e.into()))?;
        let energy = s.energy(mh.c);
        let energy_rate_residual = match prev {
            None => 0.0,
            Some(p) => {
                let mid = midpoint(p, s);
                let rate = -mh.c * rhs_4d(&mid, mh, flow).map_err(|e| fail(step, &mid, e))?[4];
                (energy - p.energy(mh.c)) / (s.t - p.t) - rate
            }
        };
        let d = Diagnostics { constraint, energy, energy_rate_residual };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(DynamicsError::NonFiniteDiagnostics { step })
        }
    };

    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(Sample { state: *initial, diagnostics: diag(0, initial, None)? });
    let mut state = *initial;
    let mut acc = Accumulator::new(initial.t, initial.to_array());
    for step in 1..=n_steps {
        let inc = increment_4d(&state, dt, mh, flow).map_err(|e| fail(step, &state, e))?;
        let (t, y) = acc.add(dt, &inc);
        let next = PhasePoint::from_array(t, &y);
        let diagnostics = diag(step, &next, Some(&state))?;
        samples.push(Sample { state: next, diagnostics });
        state = next;
    }
    Ok(Trajectory { samples, dt, c: mh.c, model: mh.model.name() })
}

/// Integrates the 3D reference flow.
pub fn integrate_reference(
    initial: &State3D,
    model: &dyn HamiltonianModel,
    dt: f64,
    n_steps: usize,
) -> Result<Trajectory3D, DynamicsError> {
    check_step(dt, n_steps)?;
    if !initial.is_finite() {
        return Err(DynamicsError::NonFiniteInitial);
    }
    let fail = |step: usize, s: &State3D, e: ModelError| DynamicsError::Step {
        step,
        t: s.t,
        r: s.r.into(),
        source: e.into(),
    };
    let diag = |step: usize, s: &State3D, prev: Option<&State3D>| -> Result<Diagnostics, DynamicsError> {
        let h = model.eval(s.t, &s.r, &s.p).map_err(|e| fail(step, s, e))?;
        let energy_rate_residual = match prev {
            None => 0.0,
            Some(p) => {
                let (t, r, q) = (0.5 * (p.t + s.t), 0.5 * (p.r + s.r), 0.5 * (p.p + s.p));
                let rate = model.dt(t, &r, &q).map_err(|e| fail(step, s, e))?;
                (s.eps - p.eps) / (s.t - p.t) - rate
            }
        };
        let d = Diagnostics { constraint: h - s.eps, energy: s.eps, energy_rate_residual };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(DynamicsError::NonFiniteDiagnostics { step })
        }
    };

    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(Sample3D { state: *initial, diagnostics: diag(0, initial, None)? });
    let mut state = *initial;
    let mut acc = Accumulator::new(initial.t, initial.to_array());
    for step in 1..=n_steps {
        let inc = increment_3d(&state, dt, model).map_err(|e| fail(step, &state, e))?;
        let (t, y) = acc.add(dt, &inc);
        let next = State3D::from_array(t, &y);
        let diagnostics = diag(step, &next, Some(&state))?;
        samples.push(Sample3D { state: next, diagnostics });
        state = next;
    }
    Ok(Trajectory3D { samples, dt, model: model.name() })
}

/// Maximum deviations between two flows sampled at the same times.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviationReport {
    pub max_position: f64,
    pub max_momentum: f64,
    pub max_energy: f64,
    /// Largest `|r|` seen in the first trajectory; scale for relative comparisons.
    pub position_scale: f64,
}

impl DeviationReport {
    pub fn relative_position(&self) -> f64 {
        self.max_position / self.position_scale.max(f64::MIN_POSITIVE)
    }
}

fn check_times(a: impl ExactSizeIterator<Item = f64>, b: impl ExactSizeIterator<Item = f64>) -> Result<(), DynamicsError> {
    if a.len() != b.len() {
        return Err(DynamicsError::Mismatch(format!("sample counts {} and {}", a.len(), b.len())));
    }
    for (i, (ta, tb)) in a.zip(b).enumerate() {
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(DynamicsError::Mismatch(format!("sample {i} at t = {ta} vs t = {tb}")));
        }
    }
    Ok(())
}

/// Compares the spatial block and energy of a 4D trajectory with a 3D reference run.
pub fn compare_flows(traj4d: &Trajectory, traj3d: &Trajectory3D) -> Result<DeviationReport, DynamicsError> {
    check_times(
        traj4d.samples.iter().map(|s| s.state.t),
        traj3d.samples.iter().map(|s| s.state.t),
    )?;
    let mut report = DeviationReport::default();
    for (a, b) in traj4d.samples.iter().zip(&traj3d.samples) {
        report.max_position = report.max_position.max((a.state.r() - b.state.r).norm());
        report.max_momentum = report.max_momentum.max((a.state.p() - b.state.p).norm());
        report.max_energy = report.max_energy.max((a.diagnostics.energy - b.state.eps).abs());
        report.position_scale = report.position_scale.max(a.state.r().norm());
    }
    Ok(report)
}

/// Compares a canonical-momentum run under minimal coupling with a
/// kinetic-momentum run under the force-term flow, mapping
/// `p_canonical = π_kinetic + (e/c)A(r, t)`.
pub fn compare_gauge_routes(
    canonical: &Trajectory,
    kinetic: &Trajectory,
    potentials: &GaugePotentials,
    charge: f64,
    c: f64,
) -> Result<DeviationReport, DynamicsError> {
    check_times(
        canonical.samples.iter().map(|s| s.state.t),
        kinetic.samples.iter().map(|s| s.state.t),
    )?;
    let mut report = DeviationReport::default();
    for (a, b) in canonical.samples.iter().zip(&kinetic.samples) {
        let (ra, rb) = (a.state.r(), b.state.r());
        let p_from_kinetic = b.state.p() + (charge / c) * potentials.vector(&rb, b.state.t);
        report.max_position = report.max_position.max((ra - rb).norm());
        report.max_momentum = report.max_momentum.max((a.state.p() - p_from_kinetic).norm());
        report.max_energy = report.max_energy.max((a.diagnostics.energy - b.diagnostics.energy).abs());
        report.position_scale = report.position_scale.max(ra.norm());
    }
    Ok(report)
}

/// Convenience constructor for a shared modified Hamiltonian.
pub fn modified<M: HamiltonianModel + 'static>(model: M, c: f64) -> ModifiedHamiltonian {
    ModifiedHamiltonian::new(Arc::new(model), c)
}
