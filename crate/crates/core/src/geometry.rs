//! Minkowski 4-vectors under the fixed (−+++) signature.
//!
//! Index 0 is time everywhere. Positions are contravariant `r^α = (ct, x, y, z)`,
//! momenta are covariant `π_α = (−ε/c, px, py, pz)`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::hamiltonians::{HamiltonianModel, ModelError};
use crate::Vec3;

/// The Minkowski metric `diag(−1, +1, +1, +1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metric;

impl Metric {
    pub const SIGNATURE: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

    pub fn component(self, alpha: usize) -> f64 {
        Self::SIGNATURE[alpha]
    }

    pub fn raise(self, v: FourCovector) -> FourVector {
        raise_index(v)
    }

    pub fn lower(self, v: FourVector) -> FourCovector {
        lower_index(v)
    }
}

macro_rules! four_component_type {
    ($name:ident) => {
        impl $name {
            pub const ZERO: Self = Self([0.0; 4]);

            pub const fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
                Self([c0, c1, c2, c3])
            }

            pub fn from_parts(c0: f64, spatial: Vec3) -> Self {
                Self([c0, spatial.x, spatial.y, spatial.z])
            }

            pub fn components(&self) -> [f64; 4] {
                self.0
            }

            pub fn time(&self) -> f64 {
                self.0[0]
            }

            pub fn spatial(&self) -> Vec3 {
                Vec3::new(self.0[1], self.0[2], self.0[3])
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl IndexMut<usize> for $name {
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                &mut self.0[i]
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
            }
        }

        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                Self(self.0.map(|c| -c))
            }
        }

        impl Mul<$name> for f64 {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                $name(rhs.0.map(|c| self * c))
            }
        }
    };
}

/// Upper-index 4-vector (positions, velocities `ṙ^α`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [f64; 4]);

/// Lower-index 4-vector (momenta `π_α`, gradients `∂/∂r^α`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourCovector(pub [f64; 4]);

four_component_type!(FourVector);
four_component_type!(FourCovector);

/// Contravariant space-time coordinates `(ct, x, y, z)`.
pub type FourPosition = FourVector;

/// Flips the sign of the time component.
pub fn raise_index(v: FourCovector) -> FourVector {
    FourVector(std::array::from_fn(|a| Metric::SIGNATURE[a] * v.0[a]))
}

pub fn lower_index(v: FourVector) -> FourCovector {
    FourCovector(std::array::from_fn(|a| Metric::SIGNATURE[a] * v.0[a]))
}

/// `Σ_α a^α b_α`, no metric factor.
pub fn minkowski_contract(a: &FourVector, b: &FourCovector) -> f64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x * y).sum()
}

/// A point `(r^α, π_α)` of the 8-dimensional phase space, tagged with lab time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub position: FourPosition,
    pub momentum: FourCovector,
}

impl PhasePoint {
    /// Builds a point with `r0 = c·t`.
    pub fn new(t: f64, r: Vec3, p: Vec3, pi0: f64, c: f64) -> Self {
        Self {
            t,
            position: FourVector::from_parts(c * t, r),
            momentum: FourCovector::from_parts(pi0, p),
        }
    }

    pub fn r(&self) -> Vec3 {
        self.position.spatial()
    }

    pub fn p(&self) -> Vec3 {
        self.momentum.spatial()
    }

    pub fn pi0(&self) -> f64 {
        self.momentum[0]
    }

    /// Energy `ε = −π₀c`.
    pub fn energy(&self, c: f64) -> f64 {
        -self.momentum[0] * c
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.position.is_finite() && self.momentum.is_finite()
    }

    /// Flattened `[r0, x, y, z, π0, πx, πy, πz]`.
    pub fn to_array(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&self.position.0);
        out[4..].copy_from_slice(&self.momentum.0);
        out
    }

    pub fn from_array(t: f64, y: &[f64; 8]) -> Self {
        Self {
            t,
            position: FourVector([y[0], y[1], y[2], y[3]]),
            momentum: FourCovector([y[4], y[5], y[6], y[7]]),
        }
    }
}

/// Places `(r, p)` on the constraint surface by setting `π₀ = −H(t0, r, p)/c`.
pub fn on_shell_init(
    t0: f64,
    r: Vec3,
    p: Vec3,
    model: &dyn HamiltonianModel,
    c: f64,
) -> Result<PhasePoint, ModelError> {
    let energy = model.eval(t0, &r, &p)?;
    Ok(PhasePoint::new(t0, r, p, -energy / c, c))
}
