//! Electromagnetic field tensor `F_{αβ}` (Gaussian units) and the force
//! term `(e/c)F_{αβ}ṙ^β` of the gauge-field equations of motion.
//!
//! Component table, fixed by requiring the spatial force to be
//! `e(E + v×B/c)` with `ṙ^β = (c, v)`:
//!
//! ```text
//! F_{i0} = E_i,  F_{0i} = −E_i,  F_{ij} = ε_{ijk} B_k
//! ```
//!
//! The time component then gives `π̇₀ = −(e/c)E·v`, i.e. `ε̇ = eE·v`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{FourCovector, FourVector};
use crate::Vec3;

pub type FieldFn = Arc<dyn Fn(&Vec3, f64) -> (Vec3, Vec3) + Send + Sync>;
pub type VectorFieldFn = Arc<dyn Fn(&Vec3, f64) -> Vec3 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("field configuration returned non-finite E or B at r = {r:?}, t = {t}")]
pub struct FieldError {
    pub r: [f64; 3],
    pub t: f64,
}

/// Covariant antisymmetric tensor `F_{αβ}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldTensor(pub [[f64; 4]; 4]);

impl FieldTensor {
    pub const ZERO: Self = Self([[0.0; 4]; 4]);

    pub fn component(&self, alpha: usize, beta: usize) -> f64 {
        self.0[alpha][beta]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&f| f == 0.0)
    }

    /// Electric field `E_i = F_{i0}`.
    pub fn electric(&self) -> Vec3 {
        Vec3::new(self.0[1][0], self.0[2][0], self.0[3][0])
    }

    /// Magnetic field `B_k = ½ε_{ijk}F_{ij}`.
    pub fn magnetic(&self) -> Vec3 {
        Vec3::new(self.0[2][3], self.0[3][1], self.0[1][2])
    }

    /// `F_{αβ} a^α b^β`.
    pub fn bilinear(&self, a: &FourVector, b: &FourVector) -> f64 {
        let mut sum = 0.0;
        for alpha in 0..4 {
            for beta in 0..4 {
                sum += self.0[alpha][beta] * a[alpha] * b[beta];
            }
        }
        sum
    }
}

pub fn field_tensor_from_eb(e: &Vec3, b: &Vec3) -> FieldTensor {
    let mut f = [[0.0; 4]; 4];
    for i in 0..3 {
        f[i + 1][0] = e[i];
        f[0][i + 1] = -e[i];
    }
    f[1][2] = b.z;
    f[2][1] = -b.z;
    f[2][3] = b.x;
    f[3][2] = -b.x;
    f[3][1] = b.y;
    f[1][3] = -b.y;
    FieldTensor(f)
}

/// `(e/c)·Σ_β F_{αβ} ṙ^β`.
pub fn force_term(field: &FieldTensor, rdot: &FourVector, e: f64, c: f64) -> FourCovector {
    let k = e / c;
    FourCovector(std::array::from_fn(|alpha| {
        k * (0..4).map(|beta| field.0[alpha][beta] * rdot[beta]).sum::<f64>()
    }))
}

/// External field configurations.
#[derive(Clone)]
pub enum FieldConfig {
    UniformE(Vec3),
    UniformB(Vec3),
    Crossed { electric: Vec3, magnetic: Vec3 },
    /// `E(t) = E₀·t`
    RampE(Vec3),
    Custom(FieldFn),
}

impl fmt::Debug for FieldConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformE(e) => f.debug_tuple("UniformE").field(e).finish(),
            Self::UniformB(b) => f.debug_tuple("UniformB").field(b).finish(),
            Self::Crossed { electric, magnetic } => f
                .debug_struct("Crossed")
                .field("electric", electric)
                .field("magnetic", magnetic)
                .finish(),
            Self::RampE(e) => f.debug_tuple("RampE").field(e).finish(),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl FieldConfig {
    pub fn eval(&self, r: &Vec3, t: f64) -> Result<(Vec3, Vec3), FieldError> {
        let (e, b) = match self {
            Self::UniformE(e) => (*e, Vec3::zeros()),
            Self::UniformB(b) => (Vec3::zeros(), *b),
            Self::Crossed { electric, magnetic } => (*electric, *magnetic),
            Self::RampE(e) => (*e * t, Vec3::zeros()),
            Self::Custom(f) => f(r, t),
        };
        if e.iter().chain(b.iter()).all(|c| c.is_finite()) {
            Ok((e, b))
        } else {
            Err(FieldError { r: [r.x, r.y, r.z], t })
        }
    }

    pub fn tensor_at(&self, r: &Vec3, t: f64) -> Result<FieldTensor, FieldError> {
        let (e, b) = self.eval(r, t)?;
        Ok(field_tensor_from_eb(&e, &b))
    }

    /// Closed-form potentials `Φ = −E(t)·r`, `A = ½B×r` when available.
    pub fn gauge_potentials(&self) -> Option<GaugePotentials> {
        let (electric, magnetic, ramp) = match self {
            Self::UniformE(e) => (*e, Vec3::zeros(), false),
            Self::UniformB(b) => (Vec3::zeros(), *b, false),
            Self::Crossed { electric, magnetic } => (*electric, *magnetic, false),
            Self::RampE(e) => (*e, Vec3::zeros(), true),
            Self::Custom(_) => return None,
        };
        Some(GaugePotentials::Uniform { electric, magnetic, ramp })
    }
}

/// Scalar and vector potentials `(Φ, A)` for minimal coupling.
#[derive(Clone)]
pub enum GaugePotentials {
    /// `Φ = −E(t)·r`, `A = ½B×r`; `E(t) = E₀·t` when `ramp`, else `E₀`.
    Uniform { electric: Vec3, magnetic: Vec3, ramp: bool },
    Custom {
        scalar: crate::hamiltonians::ScalarFieldFn,
        vector: VectorFieldFn,
    },
}

impl fmt::Debug for GaugePotentials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { electric, magnetic, ramp } => f
                .debug_struct("Uniform")
                .field("electric", electric)
                .field("magnetic", magnetic)
                .field("ramp", ramp)
                .finish(),
            Self::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

impl GaugePotentials {
    pub(crate) fn electric_at(&self, t: f64) -> Vec3 {
        match self {
            Self::Uniform { electric, ramp: true, .. } => *electric * t,
            Self::Uniform { electric, .. } => *electric,
            Self::Custom { .. } => Vec3::zeros(),
        }
    }

    pub fn scalar(&self, r: &Vec3, t: f64) -> f64 {
        match self {
            Self::Uniform { .. } => -self.electric_at(t).dot(r),
            Self::Custom { scalar, .. } => scalar(r, t),
        }
    }

    pub fn vector(&self, r: &Vec3, t: f64) -> Vec3 {
        match self {
            Self::Uniform { magnetic, .. } => 0.5 * magnetic.cross(r),
            Self::Custom { vector, .. } => vector(r, t),
        }
    }
}
