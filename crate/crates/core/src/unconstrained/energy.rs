use crate::error::{Error, Result};
use crate::fit::fit_log_log;
use crate::grid::energy;
use crate::integrate::Trajectory;

/// Relative increase of the energy tolerated before a sample is flagged.
const MONOTONE_RTOL: f64 = 1e-12;

/// Energy history of a run and its power-law decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDecayReport {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Least-squares slope of `log E` against `log t` over `fit_window`.
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub fit_window: (f64, f64),
    /// First sample at which the energy grew, if any.
    pub first_increase: Option<usize>,
}

impl EnergyDecayReport {
    pub fn is_monotone(&self) -> bool {
        self.first_increase.is_none()
    }
}

/// Fits the energy decay of `traj` over `window`, or over the last decade of
/// the run when `window` is `None`.
pub fn energy_decay_fit(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<EnergyDecayReport> {
    let times = traj.times();
    let energies: Vec<f64> = traj.iter().map(energy).collect();
    let t_end = times.last().copied().unwrap_or(0.0);
    let (t_lo, t_hi) = window.unwrap_or((t_end / 10.0, t_end));
    if !(t_lo > 0.0) || t_hi < 10.0 * t_lo * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "fit window [{t_lo}, {t_hi}] spans less than a decade"
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&energies)
        .filter(|(t, _)| **t >= t_lo * (1.0 - 1e-12) && **t <= t_hi * (1.0 + 1e-12))
        .map(|(t, e)| (*t, *e))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} samples in the fit window [{t_lo}, {t_hi}]",
            xs.len()
        )));
    }
    let fit = fit_log_log(&xs, &ys)?;
    let first_increase = energies
        .windows(2)
        .position(|w| w[1] > w[0] * (1.0 + MONOTONE_RTOL))
        .map(|i| i + 1);
    Ok(EnergyDecayReport {
        times,
        energies,
        fitted_slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        fit_window: (t_lo, t_hi),
        first_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, DensityField};
    use crate::params::ModelParams;
    use crate::unconstrained::spectral_solve;
    use approx::assert_abs_diff_eq;

    #[test]
    fn undamped_pattern_has_flat_energy() {
        let p = ModelParams::new(3.0, 0.5, 1.0, false).unwrap();
        let grid = make_grid(0.0, 4.0, 80).unwrap();
        let xi = 2.0 * std::f64::consts::PI / p.h;
        let f = DensityField::sample(grid, |x| 1.0 + (xi * x).cos());
        let samples = [1.0, 2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&t| spectral_solve(&f, t, &p).unwrap())
            .collect();
        let rep = energy_decay_fit(&Trajectory { samples }, Some((1.0, 20.0))).unwrap();
        assert_abs_diff_eq!(rep.fitted_slope, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn flags_growth_and_short_windows() {
        let grid = make_grid(0.0, 1.0, 4).unwrap();
        let samples = [(1.0, 1.0), (5.0, 1.1), (10.0, 0.5)]
            .iter()
            .map(|&(t, h)| DensityField::indicator(grid, 0.0, 1.0, h).at_time(t))
            .collect();
        let traj = Trajectory { samples };
        let rep = energy_decay_fit(&traj, Some((1.0, 10.0))).unwrap();
        assert_eq!(rep.first_increase, Some(1));
        assert!(!rep.is_monotone());
        assert!(energy_decay_fit(&traj, Some((2.0, 10.0))).is_err());
    }
}
