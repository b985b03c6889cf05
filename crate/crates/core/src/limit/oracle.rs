//! Semi-analytic solution of the nonlocal problem by a change of time.
//!
//! With `τ(t) = (η/3)∫_0^t M(s) ds` the nonlocal equation becomes the
//! linear half-line heat equation `∂_τ u = ∂_x² u`, `u(τ,0) = 0`, whose
//! solution is an odd-reflected Gaussian convolution. Physical time is
//! recovered from `dt/dτ = 3/(η M(τ))`, integrated by adaptive Simpson with
//! `M(τ)` in closed form.

use std::f64::consts::PI;

use super::heat_kernel::convolve_half_line;
use super::LimitRunReport;
use crate::error::{Error, Result};
use crate::grid::{mass, DensityField};
use crate::integrate::{check_output_times, Trajectory};

fn check_half_line(f_in: &DensityField) -> Result<()> {
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
    Ok(())
}

/// Solution at internal time `tau` of `∂_τ u = ∂_x² u` on `x > 0` with an
/// absorbing wall at 0.
pub fn half_line_heat(f_in: &DensityField, tau: f64) -> Result<DensityField> {
    check_half_line(f_in)?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(f_in.clone());
    }
    let values = convolve_half_line(&f_in.grid, &f_in.values, (2.0 * tau).sqrt());
    DensityField::new(f_in.grid, values, f_in.time)
}

/// Mass `M(τ) = ∫ u(τ,x) dx` of [`half_line_heat`], in closed form:
/// a unit source on `[a, b)` keeps `∫_a^b erf(y / 2√τ) dy`.
pub fn half_line_mass(f_in: &DensityField, tau: f64) -> f64 {
    if tau <= 0.0 {
        return mass(f_in);
    }
    let s = 2.0 * tau.sqrt();
    let c = s / PI.sqrt();
    // antiderivative of erfc(y/s), vanishing at infinity
    let b = |y: f64| y * libm::erfc(y / s) - c * (-(y / s).powi(2)).exp();
    let grid = f_in.grid;
    let dx = grid.dx();
    f_in.values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| v * (dx - (b(grid.cell_right(j)) - b(grid.cell_left(j)))))
        .sum()
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` by adaptive Simpson to absolute tolerance `tol`.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Solution of the nonlocal problem at `output_times` through the time
/// change; `internal_time_series` holds `τ(t)`.
pub fn reparametrized_oracle(
    f_in: &DensityField,
    eta: f64,
    output_times: &[f64],
) -> Result<LimitRunReport> {
    check_half_line(f_in)?;
    check_output_times(output_times)?;
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let rho = mass(f_in);
    let mut taus = Vec::with_capacity(output_times.len());
    let (mut t_prev, mut tau_prev) = (0.0, 0.0);
    for &t in output_times {
        let tau = if rho == 0.0 {
            0.0
        } else {
            advance_tau(f_in, eta, tau_prev, t_prev, t)?
        };
        taus.push(tau);
        t_prev = t;
        tau_prev = tau;
    }
    let samples = taus
        .iter()
        .zip(output_times)
        .map(|(&tau, &t)| Ok(half_line_heat(f_in, tau)?.at_time(f_in.time + t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitRunReport {
        trajectory: Trajectory { samples },
        mass_series: taus.iter().map(|&tau| half_line_mass(f_in, tau)).collect(),
        internal_time_series: taus,
    })
}

/// Internal time reached at physical time `t`, starting from `(t0, tau0)`.
fn advance_tau(f_in: &DensityField, eta: f64, tau0: f64, t0: f64, t: f64) -> Result<f64> {
    if t <= t0 {
        return Ok(tau0);
    }
    let rate = |tau: f64| 3.0 / (eta * half_line_mass(f_in, tau));
    let elapsed = |tau: f64| integrate(rate, tau0, tau, 1e-15 * (t - t0).max(1e-3));
    // M is decreasing, so the constant-mass guess overshoots and Newton on
    // the convex map τ ↦ t(τ) descends monotonically onto the root.
    let m0 = half_line_mass(f_in, tau0);
    let mut tau = tau0 + eta * m0 / 3.0 * (t - t0);
    for _ in 0..100 {
        let m = half_line_mass(f_in, tau);
        if !(m > 1e-300) {
            return Err(Error::UnreachableHorizon {
                t_end: t,
                max_time: t0 + elapsed(tau0.max(0.5 * (tau0 + tau))),
            });
        }
        let g = t0 + elapsed(tau) - t;
        if g.abs() <= 1e-14 * t.max(1.0) {
            return Ok(tau);
        }
        let next = tau - g * eta * m / 3.0;
        if (next - tau).abs() <= 1e-15 * tau.max(1e-300) {
            return Ok(next);
        }
        tau = next.max(tau0);
    }
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;

    fn phi(z: f64) -> f64 {
        0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
    }

    #[test]
    fn simpson_integrates_smooth_and_singular() {
        assert_abs_diff_eq!(integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-14), 1f64.exp() - 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-14), 2.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn mass_decays_from_initial_value() {
        let grid = make_grid(0.0, 12.0, 240).unwrap();
        let f = DensityField::indicator(grid, 1.0, 2.0, 1.0);
        assert_abs_diff_eq!(half_line_mass(&f, 0.0), 1.0, epsilon = 1e-14);
        let ms: Vec<f64> = [0.01, 0.1, 0.5, 1.0, 3.0].iter().map(|&t| half_line_mass(&f, t)).collect();
        assert!(ms.windows(2).all(|w| w[1] < w[0]));
        // closed form agrees with summing the image solution
        let u = half_line_heat(&f, 0.5).unwrap();
        assert_abs_diff_eq!(mass(&u), ms[2], epsilon = 1e-9);
    }

    #[test]
    fn image_solution_matches_four_erf_formula() {
        let grid = make_grid(0.0, 10.0, 200).unwrap();
        let (a, tau) = (1.5, 0.4);
        let f = DensityField::indicator(grid, a, a + 1.0, 1.0);
        let u = half_line_heat(&f, tau).unwrap();
        let s = (2.0 * tau).sqrt();
        let exact = |x: f64| {
            phi((x - a) / s) - phi((x - a - 1.0) / s) - phi((x + a + 1.0) / s) + phi((x + a) / s)
        };
        for (i, v) in u.values.iter().enumerate() {
            let (l, r) = (grid.cell_left(i), grid.cell_right(i));
            let m = 32;
            let hh = (r - l) / m as f64;
            let mut acc = exact(l) + exact(r);
            for q in 1..m {
                acc += exact(l + q as f64 * hh) * if q % 2 == 1 { 4.0 } else { 2.0 };
            }
            assert_abs_diff_eq!(*v, acc * hh / 3.0 / (r - l), epsilon = 1e-8);
        }
    }

    #[test]
    fn internal_time_follows_constant_rate_while_mass_is_intact() {
        let grid = make_grid(0.0, 12.0, 240).unwrap();
        let f = DensityField::indicator(grid, 4.0, 5.0, 1.0);
        let rep = reparametrized_oracle(&f, 3.0, &[0.0, 0.05, 0.1]).unwrap();
        for (tau, t) in rep.internal_time_series.iter().zip([0.0, 0.05, 0.1]) {
            assert_abs_diff_eq!(*tau, t, epsilon = 0.01 * t);
        }
        assert_abs_diff_eq!(rep.mass_series[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn time_change_is_consistent() {
        let grid = make_grid(0.0, 12.0, 240).unwrap();
        let f = DensityField::indicator(grid, 0.0, 1.0, 1.0);
        let rep = reparametrized_oracle(&f, 3.0, &[0.5, 1.0, 2.0]).unwrap();
        let taus = &rep.internal_time_series;
        assert!(taus.windows(2).all(|w| w[1] > w[0]));
        for (tau, t) in taus.iter().zip([0.5, 1.0, 2.0]) {
            // M ≤ ρ bounds τ by the linear clock, and the inverse map returns t
            assert!(*tau <= t);
            let back = integrate(|s| 1.0 / half_line_mass(&f, s), 0.0, *tau, 1e-14);
            assert_abs_diff_eq!(back, t, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = make_grid(0.0, 4.0, 40).unwrap();
        let f = DensityField::zeros(grid);
        let rep = reparametrized_oracle(&f, 3.0, &[1.0]).unwrap();
        assert!(rep.last().values.iter().all(|v| *v == 0.0));
        assert_eq!(rep.internal_time_series, vec![0.0]);
    }

    #[test]
    fn rejects_shifted_grid() {
        let grid = make_grid(-1.0, 4.0, 50).unwrap();
        let f = DensityField::zeros(grid);
        assert!(reparametrized_oracle(&f, 3.0, &[1.0]).is_err());
    }
}
