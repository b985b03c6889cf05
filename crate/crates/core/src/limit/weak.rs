//! Residual of the space-time integral identity satisfied by very weak
//! solutions of the nonlocal problem:
//!
//! ```text
//! ∫∫ f ∂_tφ + (η/3) ∫ (∫f dx_*) ∫ f ∂_x²φ dx dt + ∫ f_in φ(0,·) = 0
//! ```
//!
//! for test functions with `φ(T,·) = 0`. Space integrals use the midpoint
//! rule on cells, time integrals the trapezoid rule on the samples.

use super::LimitRunReport;
use crate::error::{Error, Result};
use crate::grid::{mass, DensityField};

pub trait TestFunction {
    fn final_time(&self) -> f64;
    fn value(&self, t: f64, x: f64) -> f64;
    fn d_t(&self, t: f64, x: f64) -> f64;
    fn d_xx(&self, t: f64, x: f64) -> f64;
}

/// `φ(t,x) = (T−t)^q · x^p · e^{−rx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyExpTest {
    pub t_final: f64,
    pub q: i32,
    pub p: i32,
    pub r: f64,
}

impl TestFunction for PolyExpTest {
    fn final_time(&self) -> f64 {
        self.t_final
    }

    fn value(&self, t: f64, x: f64) -> f64 {
        (self.t_final - t).powi(self.q) * x.powi(self.p) * (-self.r * x).exp()
    }

    fn d_t(&self, t: f64, x: f64) -> f64 {
        if self.q == 0 {
            return 0.0;
        }
        -(self.q as f64) * (self.t_final - t).powi(self.q - 1) * x.powi(self.p) * (-self.r * x).exp()
    }

    fn d_xx(&self, t: f64, x: f64) -> f64 {
        let p = self.p as f64;
        let r = self.r;
        let poly = p * (p - 1.0) * x.powi(self.p - 2) - 2.0 * p * r * x.powi(self.p - 1)
            + r * r * x.powi(self.p);
        (self.t_final - t).powi(self.q) * poly * (-r * x).exp()
    }
}

/// Polynomial-times-exponential test functions vanishing at `t_final` and,
/// with their first derivative, at `x = 0`.
pub fn test_function_library(t_final: f64) -> Vec<PolyExpTest> {
    [(1, 2, 1.0), (2, 2, 1.0), (1, 3, 0.5), (1, 2, 2.0)]
        .into_iter()
        .map(|(q, p, r)| PolyExpTest { t_final, q, p, r })
        .collect()
}

fn space_integral(field: &DensityField, g: impl Fn(f64) -> f64) -> f64 {
    let grid = field.grid;
    field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * g(grid.center(i)))
        .sum::<f64>()
        * grid.dx()
}

/// Sum of the three terms of the weak identity for the sampled solution in
/// `report`. Sample times are measured from `f_in.time` and must run from 0
/// to the final time of `test_fn`.
pub fn weak_form_residual(
    report: &LimitRunReport,
    eta: f64,
    test_fn: &impl TestFunction,
    f_in: &DensityField,
) -> Result<f64> {
    let t_final = test_fn.final_time();
    let worst = f_in
        .grid
        .centers()
        .map(|x| test_fn.value(t_final, x).abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "test function does not vanish at the final time (|φ(T,·)| up to {worst:e})"
        )));
    }
    let samples = &report.trajectory.samples;
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    let rel = |s: &DensityField| s.time - f_in.time;
    let tol = 1e-9 * t_final.max(1.0);
    if rel(&samples[0]).abs() > tol || (rel(samples.last().unwrap()) - t_final).abs() > tol {
        return Err(Error::InvalidParameter(format!(
            "samples must span [0, {t_final}], got [{}, {}]",
            rel(&samples[0]),
            rel(samples.last().unwrap())
        )));
    }
    for s in samples {
        f_in.check_same_grid(s)?;
    }
    let integrand: Vec<f64> = samples
        .iter()
        .map(|s| {
            let t = rel(s);
            let m = mass(s);
            space_integral(s, |x| test_fn.d_t(t, x))
                + eta / 3.0 * m * space_integral(s, |x| test_fn.d_xx(t, x))
        })
        .collect();
    let mut time_integral = 0.0;
    for n in 1..samples.len() {
        let span = rel(&samples[n]) - rel(&samples[n - 1]);
        time_integral += 0.5 * span * (integrand[n] + integrand[n - 1]);
    }
    Ok(time_integral + space_integral(f_in, |x| test_fn.value(0.0, x)))
}
