//! Fundamental solution of the lattice model.
//!
//! Starting from a unit mass at the origin, the number of wealth changes up
//! to time `t` is Poisson with mean `λt` (`λ = 2ρη/3`), and each change is
//! `±h` with probability `1/2`. The weight of the site `jh` is therefore
//! the Poisson mixture of symmetric binomial walks, which also equals
//! `e^{−λt} I_j(λt)`. Both evaluations are provided and cross-checked in
//! the tests.

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::params::ModelParams;

/// Largest admissible Poisson tail beyond `j_max`.
pub const TRUNCATION_TOLERANCE: f64 = 1e-14;

/// Lattice weights `w_j` of a Dirac comb on `hℤ`, stored for `|j| ≤ j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMeasure {
    pub spacing: f64,
    pub j_max: usize,
    /// `weights[j_max + j]` holds `w_j`.
    pub weights: Vec<f64>,
    pub time: f64,
}

impl LatticeMeasure {
    pub fn weight(&self, j: i64) -> f64 {
        if j.unsigned_abs() as usize > self.j_max {
            0.0
        } else {
            self.weights[(self.j_max as i64 + j) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ_j w_j f(x − jh)`, the solution at `self.time` of the lattice model
    /// started from `f_in` (values pushed outside the grid are dropped).
    pub fn convolve(&self, f_in: &DensityField) -> Result<DensityField> {
        let k = f_in.grid.shift_cells(self.spacing)?;
        let n = f_in.values.len();
        let mut out = vec![0.0; n];
        for (src, &v) in f_in.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (idx, &w) in self.weights.iter().enumerate() {
                let dest = src as i64 + (idx as i64 - self.j_max as i64) * k as i64;
                if (0..n as i64).contains(&dest) {
                    out[dest as usize] += w * v;
                }
            }
        }
        DensityField::new(f_in.grid, out, f_in.time + self.time)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

fn ln_poisson(x: f64, k: usize, ln_fact: f64) -> f64 {
    -x + k as f64 * x.ln() - ln_fact
}

/// `P(K > j_max)` for `K ~ Poisson(x)`, summed term by term.
fn poisson_tail(x: f64, j_max: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut ln_fact: f64 = (1..=j_max + 1).map(|i| (i as f64).ln()).sum();
    let mut k = j_max + 1;
    let mut tail = 0.0;
    loop {
        let p = ln_poisson(x, k, ln_fact).exp();
        tail += p;
        if k as f64 > x && (p <= 1e-20 * tail || p == 0.0) {
            break;
        }
        k += 1;
        ln_fact += (k as f64).ln();
    }
    tail
}

fn check_truncation(x: f64, j_max: usize) -> Result<()> {
    let tail = poisson_tail(x, j_max);
    if tail >= TRUNCATION_TOLERANCE {
        return Err(Error::TruncationTooSmall {
            j_max,
            tail,
            tolerance: TRUNCATION_TOLERANCE,
        });
    }
    Ok(())
}

fn unit_mass(spacing: f64, j_max: usize, t: f64) -> LatticeMeasure {
    let mut weights = vec![0.0; 2 * j_max + 1];
    weights[j_max] = 1.0;
    LatticeMeasure {
        spacing,
        j_max,
        weights,
        time: t,
    }
}

/// Weights at time `t` from the Poisson-weighted binomial double sum.
pub fn fundamental_solution(t: f64, params: &ModelParams, j_max: usize) -> Result<LatticeMeasure> {
    check_time(t)?;
    let x = params.lambda() * t;
    check_truncation(x, j_max)?;
    let mut out = unit_mass(params.h, j_max, t);
    if x == 0.0 {
        return Ok(out);
    }
    out.weights[j_max] = 0.0;
    // row[k + j] = P(walk of k steps ends at j)
    let mut row = vec![1.0];
    let mut ln_fact = 0.0;
    let mut k = 0usize;
    let mut acc = 0.0;
    loop {
        let p = ln_poisson(x, k, ln_fact).exp();
        acc += p;
        if p > 0.0 {
            for (idx, &b) in row.iter().enumerate() {
                let j = idx as i64 - k as i64;
                if j.unsigned_abs() as usize <= j_max {
                    out.weights[(j_max as i64 + j) as usize] += p * b;
                }
            }
        }
        if k as f64 > x && (p <= 1e-20 * acc || p == 0.0) {
            break;
        }
        let mut next = vec![0.0; row.len() + 2];
        for (idx, slot) in next.iter_mut().enumerate() {
            let left = if idx >= 2 { row.get(idx - 2).copied().unwrap_or(0.0) } else { 0.0 };
            let right = row.get(idx).copied().unwrap_or(0.0);
            *slot = 0.5 * (left + right);
        }
        row = next;
        k += 1;
        ln_fact += (k as f64).ln();
    }
    Ok(out)
}

/// `e^{−x} I_j(x)` from the power series, summed in log space.
fn scaled_bessel_i(j: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let half_ln = (0.5 * x).ln();
    let ln_j_fact: f64 = (1..=j).map(|i| (i as f64).ln()).sum();
    let mut ln_term = -x + j as f64 * half_ln - ln_j_fact;
    let mut sum = 0.0;
    let mut m = 0usize;
    loop {
        let term = ln_term.exp();
        sum += term;
        let step = 2.0 * half_ln - ((m + 1) as f64).ln() - ((m + 1 + j) as f64).ln();
        if step < 0.0 && (term <= 1e-18 * sum || ln_term < -745.0) {
            break;
        }
        ln_term += step;
        m += 1;
    }
    sum
}

/// Weights at time `t` from the modified Bessel closed form.
pub fn fundamental_solution_bessel(
    t: f64,
    params: &ModelParams,
    j_max: usize,
) -> Result<LatticeMeasure> {
    check_time(t)?;
    let x = params.lambda() * t;
    check_truncation(x, j_max)?;
    let mut out = unit_mass(params.h, j_max, t);
    for j in 0..=j_max {
        let w = scaled_bessel_i(j, x);
        out.weights[j_max + j] = w;
        out.weights[j_max - j] = w;
    }
    Ok(out)
}
