//! Hamiltonian dynamics in the extended phase space `(r^α, π_α)` of
//! Minkowski space-time.
//!
//! The modified Hamiltonian `ℋ = H(t, r, π) + π₀c` generates the 4D
//! canonical flow; its zero level set is the on-shell (dispersion)
//! constraint. The crate integrates that flow, its electromagnetic
//! force-term variant, a 3D reference flow, and checks the quantum
//! expectation-value counterparts on a 1D grid.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod em_field;
pub mod geometry;
pub mod hamiltonians;
pub mod quantum;

/// Spatial 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use dynamics::{
    compare_flows, compare_gauge_routes, constraint_residual, integrate, integrate_reference, step_canonical_3d,
    step_canonical_4d, step_gauge_4d, DeviationReport, Diagnostics, DynamicsError, Flow, State3D, Trajectory,
    Trajectory3D,
};
pub use em_field::{field_tensor_from_eb, force_term, FieldConfig, FieldTensor, GaugePotentials};
pub use geometry::{
    lower_index, minkowski_contract, on_shell_init, raise_index, FourCovector, FourPosition, FourVector, Metric,
    PhasePoint,
};
pub use hamiltonians::{
    eval_modified, fd_gradient, grad_modified, ChargedCanonical, FreeNonRel, HamiltonianModel, IndexField,
    ModelError, ModifiedHamiltonian, OpticsRay, Potential, Relativistic,
};
