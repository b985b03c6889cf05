//! Exact solution of the lattice model on the periodic extension of the grid
//! by diagonalisation in Fourier space.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::params::ModelParams;

/// Discrete Fourier transform of a field, scaled by `dx` so that the
/// zero-frequency amplitude is the mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid1D,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<Complex<f64>>,
    pub time: f64,
}

impl SpectralField {
    pub fn forward(field: &DensityField) -> Self {
        let grid = field.grid;
        let n = grid.n_cells();
        let dx = grid.dx();
        let mut buf: Vec<Complex<f64>> =
            field.values.iter().map(|&v| Complex::new(v * dx, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let length = n as f64 * dx;
        let frequencies = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                2.0 * std::f64::consts::PI * signed / length
            })
            .collect();
        Self {
            grid,
            frequencies,
            amplitudes: buf,
            time: field.time,
        }
    }

    /// Back to cell averages; imaginary round-off is discarded.
    pub fn inverse(&self) -> Result<DensityField> {
        let n = self.grid.n_cells();
        let mut buf = self.amplitudes.clone();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let scale = 1.0 / (n as f64 * self.grid.dx());
        DensityField::new(self.grid, buf.iter().map(|c| c.re * scale).collect(), self.time)
    }
}

/// `exp(λt(cos(hξ) − 1))`, the growth factor of frequency `ξ` over time `t`.
pub fn spectral_multiplier(xi: f64, t: f64, params: &ModelParams) -> f64 {
    (params.lambda() * t * ((params.h * xi).cos() - 1.0)).exp()
}

/// Solution at time `f_in.time + t` of the lattice model with periodic
/// wrap-around.
pub fn spectral_solve(f_in: &DensityField, t: f64, params: &ModelParams) -> Result<DensityField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let k = f_in.grid.shift_cells(params.h)?;
    let n = f_in.grid.n_cells();
    let mut spec = SpectralField::forward(f_in);
    let lt = params.lambda() * t;
    for (m, a) in spec.amplitudes.iter_mut().enumerate() {
        // hξ_m = 2π·(m·k mod n)/n exactly on an aligned grid
        let phase = 2.0 * std::f64::consts::PI * ((m * k) % n) as f64 / n as f64;
        *a *= (lt * (phase.cos() - 1.0)).exp();
    }
    spec.time = f_in.time + t;
    spec.inverse()
}
