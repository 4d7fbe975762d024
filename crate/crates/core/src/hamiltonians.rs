//! Hamiltonian models `H(t, r, p)` and the modified Hamiltonian `ℋ = H + π₀c`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::em_field::GaugePotentials;
use crate::geometry::{FourCovector, FourVector, PhasePoint};
use crate::Vec3;

/// User-supplied scalar field of `(r, t)`.
pub type ScalarFieldFn = Arc<dyn Fn(&Vec3, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{model}: outside model domain: {reason}")]
    Domain { model: &'static str, reason: String },
    #[error("{model}: non-finite {quantity}")]
    NonFinite {
        model: &'static str,
        quantity: &'static str,
    },
}

fn finite(model: &'static str, quantity: &'static str, v: f64) -> Result<f64, ModelError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::NonFinite { model, quantity })
    }
}

fn finite3(model: &'static str, quantity: &'static str, v: Vec3) -> Result<Vec3, ModelError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(ModelError::NonFinite { model, quantity })
    }
}

/// Central finite-difference gradient.
///
/// Component `i` uses the step `h_i = max(1e-6·|scale_i|, 1e-8)`; truncation
/// error is `O(h²)`.
pub fn fd_gradient<E, F>(mut f: F, x: &[f64], scale: &[f64]) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    assert_eq!(x.len(), scale.len(), "fd_gradient: x and scale lengths differ");
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = (1e-6 * scale[i].abs()).max(1e-8);
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

fn unit_scale(v: f64) -> f64 {
    v.abs().max(1.0)
}

fn fd_vec3<F>(f: F, v: &Vec3) -> Result<Vec3, ModelError>
where
    F: Fn(&Vec3) -> Result<f64, ModelError>,
{
    let scale = [unit_scale(v.x), unit_scale(v.y), unit_scale(v.z)];
    let g = fd_gradient(|x: &[f64]| f(&Vec3::new(x[0], x[1], x[2])), v.as_slice(), &scale)?;
    Ok(Vec3::new(g[0], g[1], g[2]))
}

fn fd_scalar<F>(f: F, t: f64) -> Result<f64, ModelError>
where
    F: Fn(f64) -> Result<f64, ModelError>,
{
    Ok(fd_gradient(|x: &[f64]| f(x[0]), &[t], &[unit_scale(t)])?[0])
}

/// An energy function `H(t, r, p)` with its partial derivatives.
///
/// Derivatives default to central finite differences of [`eval`](Self::eval);
/// built-in models override them with closed forms.
pub trait HamiltonianModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn eval(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError>;

    fn grad_r(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        fd_vec3(|x| self.eval(t, x, p), r)
    }

    fn grad_p(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        fd_vec3(|x| self.eval(t, r, x), p)
    }

    fn dt(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        fd_scalar(|s| self.eval(s, r, p), t)
    }
}

/// Scalar potential `V(r, t)` catalog.
#[derive(Clone, Default)]
pub enum Potential {
    #[default]
    Zero,
    /// `V = C`
    Uniform(f64),
    /// `V = −F·r`
    Linear { force: Vec3 },
    /// `V = ½k|r|²`
    Harmonic { stiffness: f64 },
    /// `V = −F₀ sin(Ωt) (d·r)`
    Driven { amplitude: f64, omega: f64, direction: Vec3 },
    /// `V = −F₀ t (d·r)`
    Ramp { rate: f64, direction: Vec3 },
    /// Arbitrary `V(r, t)`; derivatives by finite differences.
    Custom(ScalarFieldFn),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Uniform(c) => f.debug_tuple("Uniform").field(c).finish(),
            Self::Linear { force } => f.debug_struct("Linear").field("force", force).finish(),
            Self::Harmonic { stiffness } => {
                f.debug_struct("Harmonic").field("stiffness", stiffness).finish()
            }
            Self::Driven { amplitude, omega, direction } => f
                .debug_struct("Driven")
                .field("amplitude", amplitude)
                .field("omega", omega)
                .field("direction", direction)
                .finish(),
            Self::Ramp { rate, direction } => f
                .debug_struct("Ramp")
                .field("rate", rate)
                .field("direction", direction)
                .finish(),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Potential {
    pub fn value(&self, r: &Vec3, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Uniform(c) => *c,
            Self::Linear { force } => -force.dot(r),
            Self::Harmonic { stiffness } => 0.5 * stiffness * r.norm_squared(),
            Self::Driven { amplitude, omega, direction } => {
                -amplitude * (omega * t).sin() * direction.dot(r)
            }
            Self::Ramp { rate, direction } => -rate * t * direction.dot(r),
            Self::Custom(v) => v(r, t),
        }
    }

    pub fn gradient(&self, r: &Vec3, t: f64) -> Vec3 {
        match self {
            Self::Zero | Self::Uniform(_) => Vec3::zeros(),
            Self::Linear { force } => -force,
            Self::Harmonic { stiffness } => *stiffness * r,
            Self::Driven { amplitude, omega, direction } => {
                -amplitude * (omega * t).sin() * direction
            }
            Self::Ramp { rate, direction } => -rate * t * direction,
            Self::Custom(v) => {
                let g: Result<Vec3, ModelError> = fd_vec3(|x| Ok(v(x, t)), r);
                g.expect("infallible closure")
            }
        }
    }

    pub fn time_derivative(&self, r: &Vec3, t: f64) -> f64 {
        match self {
            Self::Zero | Self::Uniform(_) | Self::Linear { .. } | Self::Harmonic { .. } => 0.0,
            Self::Driven { amplitude, omega, direction } => {
                -amplitude * omega * (omega * t).cos() * direction.dot(r)
            }
            Self::Ramp { rate, direction } => -rate * direction.dot(r),
            Self::Custom(v) => {
                let d: Result<f64, ModelError> = fd_scalar(|s| Ok(v(r, s)), t);
                d.expect("infallible closure")
            }
        }
    }
}

/// Refractive index field `n(r, t)`.
#[derive(Clone)]
pub enum IndexField {
    Uniform(f64),
    /// `n = n₀(1 + α (d·r))`
    LinearGradient { n0: f64, alpha: f64, direction: Vec3 },
    Custom(ScalarFieldFn),
}

impl fmt::Debug for IndexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform(n) => f.debug_tuple("Uniform").field(n).finish(),
            Self::LinearGradient { n0, alpha, direction } => f
                .debug_struct("LinearGradient")
                .field("n0", n0)
                .field("alpha", alpha)
                .field("direction", direction)
                .finish(),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl IndexField {
    pub fn value(&self, r: &Vec3, t: f64) -> f64 {
        match self {
            Self::Uniform(n) => *n,
            Self::LinearGradient { n0, alpha, direction } => n0 * (1.0 + alpha * direction.dot(r)),
            Self::Custom(n) => n(r, t),
        }
    }

    pub fn gradient(&self, r: &Vec3, t: f64) -> Vec3 {
        match self {
            Self::Uniform(_) => Vec3::zeros(),
            Self::LinearGradient { n0, alpha, direction } => n0 * alpha * direction,
            Self::Custom(n) => {
                let g: Result<Vec3, ModelError> = fd_vec3(|x| Ok(n(x, t)), r);
                g.expect("infallible closure")
            }
        }
    }

    pub fn time_derivative(&self, r: &Vec3, t: f64) -> f64 {
        match self {
            Self::Uniform(_) | Self::LinearGradient { .. } => 0.0,
            Self::Custom(n) => {
                let d: Result<f64, ModelError> = fd_scalar(|s| Ok(n(r, s)), t);
                d.expect("infallible closure")
            }
        }
    }
}

/// `H = |p|²/2m + V(r, t)`
#[derive(Debug, Clone)]
pub struct FreeNonRel {
    pub mass: f64,
    pub potential: Potential,
}

impl FreeNonRel {
    pub fn new(mass: f64, potential: Potential) -> Self {
        Self { mass, potential }
    }
}

impl HamiltonianModel for FreeNonRel {
    fn name(&self) -> &'static str {
        "free_nonrel"
    }

    fn eval(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        let h = p.norm_squared() / (2.0 * self.mass) + self.potential.value(r, t);
        finite(self.name(), "energy", h)
    }

    fn grad_r(&self, t: f64, r: &Vec3, _p: &Vec3) -> Result<Vec3, ModelError> {
        finite3(self.name(), "dH/dr", self.potential.gradient(r, t))
    }

    fn grad_p(&self, _t: f64, _r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        finite3(self.name(), "dH/dp", p / self.mass)
    }

    fn dt(&self, t: f64, r: &Vec3, _p: &Vec3) -> Result<f64, ModelError> {
        finite(self.name(), "dH/dt", self.potential.time_derivative(r, t))
    }
}

/// `H = c√(m²c² + |p|²) + V(r, t)`
#[derive(Debug, Clone)]
pub struct Relativistic {
    pub mass: f64,
    pub c: f64,
    pub potential: Potential,
}

impl Relativistic {
    pub fn new(mass: f64, c: f64, potential: Potential) -> Self {
        Self { mass, c, potential }
    }

    fn root(&self, p: &Vec3) -> Result<f64, ModelError> {
        let mc = self.mass * self.c;
        let arg = mc * mc + p.norm_squared();
        if arg > 0.0 {
            Ok(arg.sqrt())
        } else {
            Err(ModelError::Domain {
                model: self.name(),
                reason: format!("m²c² + |p|² = {arg} is not positive"),
            })
        }
    }
}

impl HamiltonianModel for Relativistic {
    fn name(&self) -> &'static str {
        "relativistic"
    }

    fn eval(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        let h = self.c * self.root(p)? + self.potential.value(r, t);
        finite(self.name(), "energy", h)
    }

    fn grad_r(&self, t: f64, r: &Vec3, _p: &Vec3) -> Result<Vec3, ModelError> {
        finite3(self.name(), "dH/dr", self.potential.gradient(r, t))
    }

    fn grad_p(&self, _t: f64, _r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        let s = self.root(p)?;
        finite3(self.name(), "dH/dp", self.c * p / s)
    }

    fn dt(&self, t: f64, r: &Vec3, _p: &Vec3) -> Result<f64, ModelError> {
        finite(self.name(), "dH/dt", self.potential.time_derivative(r, t))
    }
}

/// Minimal coupling with canonical momentum:
/// `H = c√(m²c² + |p − (e/c)A|²) + eΦ`.
#[derive(Debug, Clone)]
pub struct ChargedCanonical {
    pub mass: f64,
    pub charge: f64,
    pub c: f64,
    pub potentials: GaugePotentials,
}

impl ChargedCanonical {
    pub fn new(mass: f64, charge: f64, c: f64, potentials: GaugePotentials) -> Self {
        Self { mass, charge, c, potentials }
    }

    /// Kinetic momentum `p − (e/c)A(r, t)`.
    pub fn kinetic_momentum(&self, t: f64, r: &Vec3, p: &Vec3) -> Vec3 {
        p - (self.charge / self.c) * self.potentials.vector(r, t)
    }

    fn root(&self, q: &Vec3) -> Result<f64, ModelError> {
        let mc = self.mass * self.c;
        let arg = mc * mc + q.norm_squared();
        if arg > 0.0 {
            Ok(arg.sqrt())
        } else {
            Err(ModelError::Domain {
                model: self.name(),
                reason: format!("m²c² + |p − eA/c|² = {arg} is not positive"),
            })
        }
    }
}

impl HamiltonianModel for ChargedCanonical {
    fn name(&self) -> &'static str {
        "charged_canonical"
    }

    fn eval(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        let q = self.kinetic_momentum(t, r, p);
        let h = self.c * self.root(&q)? + self.charge * self.potentials.scalar(r, t);
        finite(self.name(), "energy", h)
    }

    fn grad_r(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        match &self.potentials {
            GaugePotentials::Uniform { magnetic, .. } => {
                // A = ½B×r, Φ = −E(t)·r
                let q = self.kinetic_momentum(t, r, p);
                let s = self.root(&q)?;
                let e_field = self.potentials.electric_at(t);
                let g = -(self.charge / (2.0 * s)) * q.cross(magnetic) - self.charge * e_field;
                finite3(self.name(), "dH/dr", g)
            }
            GaugePotentials::Custom { .. } => fd_vec3(|x| self.eval(t, x, p), r),
        }
    }

    fn grad_p(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        let q = self.kinetic_momentum(t, r, p);
        let s = self.root(&q)?;
        finite3(self.name(), "dH/dp", self.c * q / s)
    }

    fn dt(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        match &self.potentials {
            GaugePotentials::Uniform { electric, ramp, .. } => {
                let d = if *ramp { -self.charge * electric.dot(r) } else { 0.0 };
                finite(self.name(), "dH/dt", d)
            }
            GaugePotentials::Custom { .. } => fd_scalar(|s| self.eval(s, r, p), t),
        }
    }
}

/// Ray Hamiltonian `H = c|π|/n(r, t)` of geometrical optics.
///
/// With `π = ħk` on shell, `π₀ = −ħω/c`.
#[derive(Debug, Clone)]
pub struct OpticsRay {
    pub c: f64,
    pub index: IndexField,
}

impl OpticsRay {
    pub fn new(c: f64, index: IndexField) -> Self {
        Self { c, index }
    }

    fn checked(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<(f64, f64), ModelError> {
        let k = p.norm();
        if k <= 0.0 {
            return Err(ModelError::Domain {
                model: self.name(),
                reason: "|π| = 0: ray direction undefined".into(),
            });
        }
        let n = self.index.value(r, t);
        if !(n > 0.0) {
            return Err(ModelError::Domain {
                model: self.name(),
                reason: format!("refractive index n = {n} is not positive"),
            });
        }
        Ok((k, n))
    }
}

impl HamiltonianModel for OpticsRay {
    fn name(&self) -> &'static str {
        "optics_ray"
    }

    fn eval(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        let (k, n) = self.checked(t, r, p)?;
        finite(self.name(), "energy", self.c * k / n)
    }

    fn grad_r(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        let (k, n) = self.checked(t, r, p)?;
        let g = -(self.c * k / (n * n)) * self.index.gradient(r, t);
        finite3(self.name(), "dH/dr", g)
    }

    fn grad_p(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<Vec3, ModelError> {
        let (k, n) = self.checked(t, r, p)?;
        finite3(self.name(), "dH/dp", (self.c / (k * n)) * p)
    }

    fn dt(&self, t: f64, r: &Vec3, p: &Vec3) -> Result<f64, ModelError> {
        let (k, n) = self.checked(t, r, p)?;
        let d = -(self.c * k / (n * n)) * self.index.time_derivative(r, t);
        finite(self.name(), "dH/dt", d)
    }
}

/// `ℋ(r^α, π_α) = H(t, r, π) + π₀c`.
#[derive(Debug, Clone)]
pub struct ModifiedHamiltonian {
    pub model: Arc<dyn HamiltonianModel>,
    pub c: f64,
}

impl ModifiedHamiltonian {
    pub fn new(model: Arc<dyn HamiltonianModel>, c: f64) -> Self {
        Self { model, c }
    }

    pub fn eval(&self, state: &PhasePoint) -> Result<f64, ModelError> {
        let h = self.model.eval(state.t, &state.r(), &state.p())?;
        Ok(h + state.pi0() * self.c)
    }

    /// Returns `(∂ℋ/∂r^α, ∂ℋ/∂π_α)`.
    ///
    /// `∂ℋ/∂r⁰ = c⁻¹∂ₜH` because `r⁰ = ct`; `∂ℋ/∂π₀ = c` identically.
    pub fn gradient(&self, state: &PhasePoint) -> Result<(FourCovector, FourVector), ModelError> {
        let (t, r, p) = (state.t, state.r(), state.p());
        let dr = self.model.grad_r(t, &r, &p)?;
        let dp = self.model.grad_p(t, &r, &p)?;
        let dt = self.model.dt(t, &r, &p)?;
        let d_r0 = finite(self.model.name(), "dH/dr0", dt / self.c)?;
        Ok((FourCovector::from_parts(d_r0, dr), FourVector::from_parts(self.c, dp)))
    }
}

pub fn eval_modified(state: &PhasePoint, mh: &ModifiedHamiltonian) -> Result<f64, ModelError> {
    mh.eval(state)
}

pub fn grad_modified(
    state: &PhasePoint,
    mh: &ModifiedHamiltonian,
) -> Result<(FourCovector, FourVector), ModelError> {
    mh.gradient(state)
}
