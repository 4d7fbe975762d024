//! Scenario-driven front end for `hamflow`: parse a TOML scenario, run it,
//! write a CSV and summarise diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod runner;
pub mod scenario;

pub use runner::{run, RunError, RunReport};
pub use scenario::{parse_scenario, Mode, Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// One line per built-in model, for `list-models`.
pub fn model_catalog() -> &'static [(&'static str, &'static str)] {
    &[
        ("free_nonrel", "H = p^2/2m + V(t, r)"),
        ("relativistic", "H = sqrt(m^2c^4 + p^2c^2) + V(t, r)"),
        ("charged_canonical", "H = sqrt(m^2c^4 + (p - eA/c)^2 c^2) + e*Phi; needs [field]"),
        ("optics_ray", "H = c|p|/n(t, r); needs [index]"),
    ]
}
