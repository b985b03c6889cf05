//! Finite-volume solver for `∂_t f = (η/3)(∫f dx) ∂_x² f` on `x > 0` with
//! `f(t,0) = 0`.
//!
//! The wall sits on the left face of cell 0 and is imposed through the odd
//! ghost value `f_{−1} = −f_0`; the right end uses a zero ghost. The state
//! is augmented with the internal time `τ`, `dτ/dt = (η/3)∫f dx`.

use super::LimitRunReport;
use crate::error::{Error, Result};
use crate::grid::{mass, DensityField};
use crate::integrate::{rk4_sampled, OdeSystem, Trajectory};

struct NonlocalDiffusion {
    eta: f64,
    dx: f64,
}

impl OdeSystem for NonlocalDiffusion {
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let n = y.len() - 1;
        let f = &y[..n];
        let m = f.iter().sum::<f64>() * self.dx;
        let c = self.eta / 3.0 * m / (self.dx * self.dx);
        for i in 0..n {
            let left = if i == 0 { -f[0] } else { f[i - 1] };
            let right = if i + 1 < n { f[i + 1] } else { 0.0 };
            dy[i] = c * (left - 2.0 * f[i] + right);
        }
        dy[n] = self.eta / 3.0 * m;
    }
}

/// Largest accepted step: half of `3dx²/(2ηρ)`.
pub fn max_nonlocal_dt(dx: f64, eta: f64, rho: f64) -> f64 {
    0.5 * 3.0 * dx * dx / (2.0 * eta * rho)
}

/// Integrates the nonlocal problem with RK4 and returns the samples at
/// `output_times` along with mass and internal time.
pub fn solve_nonlocal_diffusion(
    f_in: &DensityField,
    eta: f64,
    output_times: &[f64],
    dt: f64,
) -> Result<LimitRunReport> {
    let grid = f_in.grid;
    if grid.x_min().abs() > 1e-12 * grid.dx() {
        return Err(Error::InvalidGrid(format!(
            "half-line problems need a grid starting at 0, got x_min = {}",
            grid.x_min()
        )));
    }
    if f_in.min_value() < 0.0 {
        return Err(Error::InvalidParameter(
            "initial density must be non-negative".into(),
        ));
    }
    if !(eta > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter("eta and dt must be positive".into()));
    }
    let rho = mass(f_in);
    if rho > 0.0 {
        let max_dt = max_nonlocal_dt(grid.dx(), eta, rho);
        if dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::UnstableTimeStep { dt, max_dt });
        }
    }
    let sys = NonlocalDiffusion { eta, dx: grid.dx() };
    let mut y = f_in.values.clone();
    y.push(0.0);
    let n = grid.n_cells();
    let mut samples = Vec::with_capacity(output_times.len());
    let mut mass_series = Vec::with_capacity(output_times.len());
    let mut internal_time_series = Vec::with_capacity(output_times.len());
    rk4_sampled(&sys, y, dt, output_times, |t, y| {
        let field = DensityField::new(grid, y[..n].to_vec(), f_in.time + t)?;
        mass_series.push(mass(&field));
        internal_time_series.push(y[n]);
        samples.push(field);
        Ok(())
    })?;
    Ok(LimitRunReport {
        trajectory: Trajectory { samples },
        mass_series,
        internal_time_series,
    })
}
