//! Conservative six-component reaction-diffusion solver on a 1-D interval.
//!
//! The crate classifies the equilibrium regime of a parameter set, evaluates
//! the constant equilibrium in closed form, integrates the PDE system with a
//! conservative finite-difference scheme and runs the constant-level
//! upper/lower bracket recursion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod initial;
pub mod model;
pub mod monotone;
pub mod pde;

pub use config::{DtSetting, RunConfig};
pub use equilibrium::{
    classify_regime, compute_conserved, condition_values, equilibrium_for_regime, residual_norm,
    solve_equilibrium, ConservedQuantities, EquilibriumPoint, RegimeTag,
};
pub use error::{Error, Result};
pub use initial::{evaluate_initial, shift_initial, InitialSpec};
pub use model::{Component, Field, Grid1D, Params, State};
pub use pde::{run_to_steady, Boundary, StepperConfig};
