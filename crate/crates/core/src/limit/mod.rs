//! Diffusion limits reached when the payoff `ε` shrinks and time is sped
//! up by `1/ε²`.
//!
//! The unconstrained model tends to the heat equation with diffusivity
//! `ηρ/3`. The constrained model tends to the nonlocal problem
//! `∂_t f = (η/3)(∫f dx) ∂_x² f` on the half line with `f(t,0) = 0`; the
//! mass absorbed at the wall is what the kinetic model piles up near zero.

mod heat_kernel;
mod nonlocal;
mod oracle;
mod weak;

pub use nonlocal::{max_nonlocal_dt, solve_nonlocal_diffusion};
pub use oracle::{half_line_heat, half_line_mass, reparametrized_oracle};
pub use weak::{test_function_library, weak_form_residual, PolyExpTest, TestFunction};

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::integrate::Trajectory;

/// Sampled solution of a limit problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRunReport {
    pub trajectory: Trajectory,
    /// `∫ f dx` at every sample.
    pub mass_series: Vec<f64>,
    /// Internal time `τ(t) = (η/3)∫_0^t ∫f dx ds` (nonlocal model only).
    pub internal_time_series: Vec<f64>,
}

impl LimitRunReport {
    pub fn last(&self) -> &DensityField {
        self.trajectory.last()
    }
}

/// Heat equation `∂_t f = D ∂_x² f` on the whole line, solved exactly by
/// Gaussian convolution of the cell data.
pub fn solve_heat(f_in: &DensityField, diffusivity: f64, t_end: f64) -> Result<DensityField> {
    if !(diffusivity >= 0.0) || !diffusivity.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "diffusivity must be non-negative, got {diffusivity}"
        )));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be finite and non-negative, got {t_end}"
        )));
    }
    let time = f_in.time + t_end;
    if diffusivity * t_end == 0.0 {
        return Ok(f_in.clone().at_time(time));
    }
    let sigma = (2.0 * diffusivity * t_end).sqrt();
    let values = heat_kernel::convolve_line(&f_in.grid, &f_in.values, sigma);
    DensityField::new(f_in.grid, values, time)
}
