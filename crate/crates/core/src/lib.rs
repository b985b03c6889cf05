//! Kinetic models of the rock-paper-scissors wealth-exchange game.
//!
//! The crate contains finite-volume solvers for the unconstrained
//! (whole-line) and constrained (no-debt) kinetic equations, their analytic
//! oracles, the two diffusion limits obtained when the payoff shrinks, a
//! particle simulator of the underlying game, and an experiment harness that
//! writes CSV/JSON artifacts and checks the expected invariants.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constrained;
pub mod error;
pub mod fit;
pub mod game;
pub mod grid;
pub mod harness;
pub mod integrate;
pub mod limit;
pub mod params;
pub mod unconstrained;

pub use error::{Error, Result};
pub use grid::{
    energy, first_moment, l1_distance, linf, make_grid, mass, second_moment, DensityField,
    Grid1D, MomentReport,
};
pub use integrate::{uniform_times, Trajectory};
pub use params::ModelParams;
