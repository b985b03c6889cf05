//! The linear model on the whole line: every game moves wealth by `±h`
//! at rate `ηρ/3` in each direction.
//!
//! On a grid with `h = k·dx` the equation is the lattice system
//! `f_i' = (ηρ/3)(f_{i+k} + f_{i−k} − 2f_i)`; values outside the truncated
//! domain are taken as zero.

mod energy;
mod fundamental;
mod spectral;

pub use energy::{energy_decay_fit, EnergyDecayReport};
pub use fundamental::{
    fundamental_solution, fundamental_solution_bessel, LatticeMeasure, TRUNCATION_TOLERANCE,
};
pub use spectral::{spectral_multiplier, spectral_solve, SpectralField};

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::integrate::{rk4_sampled, OdeSystem, Trajectory};
use crate::params::ModelParams;

pub(crate) struct LatticeOperator {
    pub k: usize,
    pub rate: f64,
}

impl LatticeOperator {
    pub fn new(field: &DensityField, params: &ModelParams) -> Result<Self> {
        Ok(Self {
            k: field.grid.shift_cells(params.h)?,
            rate: params.eta * params.rho / 3.0,
        })
    }
}

impl OdeSystem for LatticeOperator {
    fn rhs(&self, f: &[f64], df: &mut [f64]) {
        let n = f.len();
        let k = self.k;
        for i in 0..n {
            let up = if i + k < n { f[i + k] } else { 0.0 };
            let down = if i >= k { f[i - k] } else { 0.0 };
            df[i] = self.rate * (up + down - 2.0 * f[i]);
        }
    }
}

/// Time derivative of `field` under the linear model.
pub fn rhs_unconstrained(field: &DensityField, params: &ModelParams) -> Result<DensityField> {
    let op = LatticeOperator::new(field, params)?;
    let mut out = vec![0.0; field.values.len()];
    op.rhs(&field.values, &mut out);
    DensityField::new(field.grid, out, field.time)
}

pub(crate) fn check_kinetic_dt(params: &ModelParams, dt: f64) -> Result<()> {
    let max_dt = params.max_kinetic_dt();
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::UnstableTimeStep { dt, max_dt });
    }
    Ok(())
}

/// Integrates the linear model with RK4 and returns the solution at each of
/// `output_times` (measured from `f_in.time`).
pub fn solve_unconstrained(
    f_in: &DensityField,
    params: &ModelParams,
    output_times: &[f64],
    dt: f64,
) -> Result<Trajectory> {
    check_kinetic_dt(params, dt)?;
    let op = LatticeOperator::new(f_in, params)?;
    let mut samples = Vec::with_capacity(output_times.len());
    rk4_sampled(&op, f_in.values.clone(), dt, output_times, |t, y| {
        samples.push(DensityField::new(f_in.grid, y.to_vec(), f_in.time + t)?);
        Ok(())
    })?;
    Ok(Trajectory { samples })
}
