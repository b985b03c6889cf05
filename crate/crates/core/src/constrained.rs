//! The no-debt model on the half line: a game only takes place when both
//! players hold at least `h`.
//!
//! With `x_min = 0` and `h = k·dx` the lattice form is
//!
//! ```text
//! f_i' = (η/3)·β·( [i ≥ 2k] f_{i−k} + f_{i+k} − 2·[i ≥ k] f_i ),   β = Σ_{i ≥ k} f_i dx
//! ```
//!
//! Cells below `h` only gain (from agents that lost their last stake), so
//! mass drifts towards `[0, h)` and the dynamics slow down as `β` decays.
//! Mass and first moment are conserved exactly by the stencil.

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::integrate::{rk4_sampled, OdeSystem, Trajectory};
use crate::params::ModelParams;
use crate::unconstrained::check_kinetic_dt;

/// Below this tail mass the state is treated as frozen.
pub const FROZEN_BETA: f64 = 1e-14;

/// Tail masses `β_k = ∫_{kh}^∞ f dx` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMasses {
    pub h: f64,
    pub betas: Vec<f64>,
    pub time: f64,
}

impl TailMasses {
    /// `β = β_1`, the mass able to pay the stake.
    pub fn beta(&self) -> f64 {
        self.betas.get(1).copied().unwrap_or(0.0)
    }
}

/// Index of the first cell whose center lies above `x`, which must be a cell
/// boundary (or outside the grid).
fn cut_index(grid: &Grid1D, x: f64) -> Result<usize> {
    if x <= grid.x_min() {
        return Ok(0);
    }
    if x >= grid.x_max() {
        return Ok(grid.n_cells());
    }
    grid.boundary_index(x).ok_or(Error::Misaligned {
        h: x,
        dx: grid.dx(),
    })
}

pub fn tail_masses(field: &DensityField, h: f64, k_max: usize) -> Result<TailMasses> {
    let grid = field.grid;
    grid.shift_cells(h)?;
    let dx = grid.dx();
    let mut suffix = vec![0.0; grid.n_cells() + 1];
    for i in (0..grid.n_cells()).rev() {
        suffix[i] = suffix[i + 1] + field.values[i] * dx;
    }
    let betas = (0..=k_max)
        .map(|k| Ok(suffix[cut_index(&grid, k as f64 * h)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(TailMasses {
        h,
        betas,
        time: field.time,
    })
}

/// `β(0) / (β(0)·ηt/3 + 1)`, a lower bound on `β(t)`.
pub fn beta_lower_bound(beta0: f64, eta: f64, t: f64) -> f64 {
    beta0 / (beta0 * eta * t / 3.0 + 1.0)
}

pub(crate) struct NoDebtOperator {
    k: usize,
    eta: f64,
    dx: f64,
}

impl NoDebtOperator {
    fn new(field: &DensityField, params: &ModelParams) -> Result<Self> {
        let grid = field.grid;
        if grid.x_min().abs() > 1e-12 * grid.dx() {
            return Err(Error::InvalidGrid(format!(
                "the no-debt model needs a grid starting at 0, got x_min = {}",
                grid.x_min()
            )));
        }
        Ok(Self {
            k: grid.shift_cells(params.h)?,
            eta: params.eta,
            dx: grid.dx(),
        })
    }

    fn beta(&self, f: &[f64]) -> f64 {
        f.iter().skip(self.k).sum::<f64>() * self.dx
    }
}

impl OdeSystem for NoDebtOperator {
    fn rhs(&self, f: &[f64], df: &mut [f64]) {
        let n = f.len();
        let k = self.k;
        let c = self.eta / 3.0 * self.beta(f);
        for i in 0..n {
            let gain_low = if i >= 2 * k { f[i - k] } else { 0.0 };
            let gain_high = if i + k < n { f[i + k] } else { 0.0 };
            let loss = if i >= k { 2.0 * f[i] } else { 0.0 };
            df[i] = c * (gain_low + gain_high - loss);
        }
    }

    fn is_stationary(&self, f: &[f64]) -> bool {
        self.beta(f) < FROZEN_BETA
    }
}

/// Time derivative of `field` under the no-debt model.
pub fn rhs_constrained(field: &DensityField, params: &ModelParams) -> Result<DensityField> {
    let op = NoDebtOperator::new(field, params)?;
    let mut out = vec![0.0; field.values.len()];
    op.rhs(&field.values, &mut out);
    DensityField::new(field.grid, out, field.time)
}

/// Integrates the no-debt model with RK4, sampling at `output_times`
/// (measured from `f_in.time`). Frozen states are fast-forwarded.
pub fn solve_constrained(
    f_in: &DensityField,
    params: &ModelParams,
    output_times: &[f64],
    dt: f64,
) -> Result<Trajectory> {
    if f_in.min_value() < 0.0 {
        return Err(Error::InvalidParameter(
            "initial density must be non-negative".into(),
        ));
    }
    check_kinetic_dt(params, dt)?;
    let op = NoDebtOperator::new(f_in, params)?;
    let mut samples = Vec::with_capacity(output_times.len());
    rk4_sampled(&op, f_in.values.clone(), dt, output_times, |t, y| {
        samples.push(DensityField::new(f_in.grid, y.to_vec(), f_in.time + t)?);
        Ok(())
    })?;
    Ok(Trajectory { samples })
}

/// `β(t)` at every sample of `traj`.
pub fn beta_series(traj: &Trajectory, h: f64) -> Result<Vec<f64>> {
    traj.iter()
        .map(|s| Ok(tail_masses(s, h, 1)?.beta()))
        .collect()
}

/// Field restricted to `(ε, ∞)` plus the mass left on `[0, ε]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitField {
    pub f_plus: DensityField,
    pub f_minus_mass: f64,
    pub time: f64,
}

pub fn split_field(field: &DensityField, eps: f64) -> Result<SplitField> {
    let grid = field.grid;
    let cut = cut_index(&grid, eps)?;
    let mut plus = field.values.clone();
    let f_minus_mass = plus[..cut].iter().sum::<f64>() * grid.dx();
    plus[..cut].iter_mut().for_each(|v| *v = 0.0);
    Ok(SplitField {
        f_plus: DensityField::new(grid, plus, field.time)?,
        f_minus_mass,
        time: field.time,
    })
}

/// Consistency of sampled `β(t)` with `β' = −(η/3)·β·(β_1 − β_2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaDerivativeCheck {
    /// Largest `|Δβ/Δt + (η/3)β(β_1 − β_2)|` over interior samples.
    pub max_residual: f64,
    /// Largest centred difference quotient of `β`; never positive in theory.
    pub max_rate: f64,
}

pub fn beta_derivative_check(traj: &Trajectory, params: &ModelParams) -> Result<BetaDerivativeCheck> {
    if traj.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "centred differences need 3 samples, got {}",
            traj.len()
        )));
    }
    let tails = traj
        .iter()
        .map(|s| tail_masses(s, params.h, 2))
        .collect::<Result<Vec<_>>>()?;
    let mut max_residual: f64 = 0.0;
    let mut max_rate = f64::NEG_INFINITY;
    for n in 1..tails.len() - 1 {
        let span = tails[n + 1].time - tails[n - 1].time;
        if !(span > 0.0) {
            return Err(Error::InvalidParameter("sample times must increase".into()));
        }
        let rate = (tails[n + 1].beta() - tails[n - 1].beta()) / span;
        let b = &tails[n].betas;
        let predicted = -params.eta / 3.0 * b[1] * (b[1] - b[2]);
        max_residual = max_residual.max((rate - predicted).abs());
        max_rate = max_rate.max(rate);
    }
    Ok(BetaDerivativeCheck {
        max_residual,
        max_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{first_moment, make_grid, mass};
    use crate::integrate::uniform_times;
    use approx::assert_abs_diff_eq;

    fn params(h: f64) -> ModelParams {
        ModelParams::new(3.0, h, 1.0, true).unwrap()
    }

    fn indicator(n: usize, len: f64) -> DensityField {
        DensityField::indicator(make_grid(0.0, len, n).unwrap(), 0.0, 1.0, 1.0)
    }

    #[test]
    fn tail_masses_of_indicator() {
        let t = tail_masses(&indicator(40, 2.0), 0.25, 4).unwrap();
        let expected = [1.0, 0.75, 0.5, 0.25, 0.0];
        for (b, e) in t.betas.iter().zip(expected) {
            assert_abs_diff_eq!(*b, e, epsilon = 1e-14);
        }
        let zero = DensityField::zeros(make_grid(0.0, 2.0, 40).unwrap());
        assert!(tail_masses(&zero, 0.25, 4).unwrap().betas.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn tail_sum_bounded_by_first_moment() {
        let f = DensityField::gaussian(make_grid(0.0, 10.0, 200).unwrap(), 3.0, 1.0, 1.0);
        let t = tail_masses(&f, 0.25, 39).unwrap();
        let sum: f64 = t.betas[1..].iter().sum();
        assert!(sum <= first_moment(&f) / 0.25 + 1e-10);
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(beta_lower_bound(0.7, 3.0, 0.0), 0.7);
        assert_eq!(beta_lower_bound(1.0, 3.0, 1.0), 0.5);
        assert_eq!(beta_lower_bound(0.0, 3.0, 4.0), 0.0);
    }

    #[test]
    fn frozen_state_has_zero_rhs() {
        let grid = make_grid(0.0, 2.0, 20).unwrap();
        let f = DensityField::indicator(grid, 0.0, 0.5, 2.0);
        let r = rhs_constrained(&f, &params(0.5)).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rhs_conserves_mass_and_first_moment() {
        let f = DensityField::gaussian(make_grid(0.0, 8.0, 160).unwrap(), 2.0, 0.6, 1.0);
        let r = rhs_constrained(&f, &params(0.25)).unwrap();
        assert_abs_diff_eq!(mass(&r), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(first_moment(&r), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_must_start_at_zero() {
        let f = DensityField::zeros(make_grid(-1.0, 1.0, 20).unwrap());
        assert!(matches!(
            rhs_constrained(&f, &params(0.1)),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn split_examples() {
        let f = indicator(20, 2.0);
        let s = split_field(&f, 0.5).unwrap();
        assert_abs_diff_eq!(s.f_minus_mass, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(mass(&s.f_plus), 0.5, epsilon = 1e-14);
        let g = DensityField::indicator(f.grid, 1.0, 2.0, 1.0);
        assert_eq!(split_field(&g, 0.5).unwrap().f_minus_mass, 0.0);
        assert!(split_field(&f, 0.55).is_err());
    }

    #[test]
    fn beta_monotone_and_above_lower_bound() {
        let f = indicator(80, 8.0);
        let p = params(0.3);
        let traj = solve_constrained(&f, &p, &uniform_times(5.0, 50), 0.02).unwrap();
        let betas = beta_series(&traj, p.h).unwrap();
        for w in betas.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for (s, b) in traj.iter().zip(&betas) {
            assert!(*b >= beta_lower_bound(betas[0], p.eta, s.time) - 1e-8);
        }
        let check = beta_derivative_check(&traj, &p).unwrap();
        assert!(check.max_rate <= 1e-10);
    }

    #[test]
    fn frozen_derivative_check() {
        let grid = make_grid(0.0, 2.0, 20).unwrap();
        let f = DensityField::indicator(grid, 0.0, 0.5, 2.0);
        let p = params(0.5);
        let traj = solve_constrained(&f, &p, &uniform_times(1.0, 10), 0.01).unwrap();
        let check = beta_derivative_check(&traj, &p).unwrap();
        assert!(check.max_residual <= 1e-12);
        assert_eq!(traj.last().values, f.values);
    }
}
