//! Experiment orchestration: configuration files, runs with CSV/JSON
//! artifacts and automatic invariant checks, `ε` sweeps and Monte Carlo
//! comparisons.

pub mod config;
pub mod invariants;
pub mod mc;
pub mod output;
pub mod plot;
pub mod run;
pub mod sweep;

pub use config::{InitialSpec, ModelKind, RunConfig};
pub use invariants::{check_trajectory, InvariantResult};
pub use mc::{mc_compare, pde_reference, McComparison};
pub use output::Manifest;
pub use run::{check_run_dir, run_config, simulate, RunOutcome, Simulation};
pub use sweep::{epsilon_sweep, write_sweep, ConvergenceReport, SweepEntry};
