//! Exact cell averages of Gaussian convolutions on a uniform grid.
//!
//! With `Ψ(z) = zΦ(z/σ) + σφ(z/σ)` (the second antiderivative of the
//! Gaussian kernel of variance `σ²`), the average over cell `i` of the
//! kernel convolved with the indicator of cell `j` is
//! `c_s = (Ψ(s+dx) − 2Ψ(s) + Ψ(s−dx))/dx` with `s = (i−j)·dx`.

use crate::grid::Grid1D;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `Ψ(z)` for `z ≤ 0`, where it is small and free of cancellation.
fn psi_left(z: f64, sigma: f64) -> f64 {
    z * norm_cdf(z / sigma) + sigma * norm_pdf(z / sigma)
}

/// Coefficients `c_s` for `s = 0..n` cells.
pub(crate) fn cell_kernel(grid: &Grid1D, sigma: f64, n: usize) -> Vec<f64> {
    let dx = grid.dx();
    (0..n)
        .map(|m| {
            if m == 0 {
                // Ψ(dx) = dx + Ψ(−dx)
                (dx + 2.0 * psi_left(-dx, sigma) - 2.0 * psi_left(0.0, sigma)) / dx
            } else {
                let s = -(m as f64) * dx;
                (psi_left(s + dx, sigma) - 2.0 * psi_left(s, sigma) + psi_left(s - dx, sigma)) / dx
            }
        })
        .collect()
}

/// Whole-line convolution of cell data with a Gaussian of standard
/// deviation `sigma`; mass carried past the grid ends is dropped.
pub(crate) fn convolve_line(grid: &Grid1D, values: &[f64], sigma: f64) -> Vec<f64> {
    let n = values.len();
    let c = cell_kernel(grid, sigma, n);
    let mut out = vec![0.0; n];
    for (j, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += v * c[i.abs_diff(j)];
        }
    }
    out
}

/// Half-line convolution with an absorbing wall at the grid start, by odd
/// reflection: cell `j` has a negative image at cell `−j−1`.
pub(crate) fn convolve_half_line(grid: &Grid1D, values: &[f64], sigma: f64) -> Vec<f64> {
    let n = values.len();
    let c = cell_kernel(grid, sigma, 2 * n);
    let mut out = vec![0.0; n];
    for (j, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += v * (c[i.abs_diff(j)] - c[i + j + 1]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_rows_sum_to_one() {
        let grid = make_grid(0.0, 10.0, 200).unwrap();
        let c = cell_kernel(&grid, 0.4, 200);
        let total = c[0] + 2.0 * c[1..].iter().sum::<f64>();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
        assert!(c.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn cell_kernel_matches_direct_quadrature() {
        // (1/dx)∫∫ over two cells of the Gaussian density, by 400-point midpoint sums
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let sigma = 0.15;
        let c = cell_kernel(&grid, sigma, 4);
        for (m, cm) in c.iter().enumerate() {
            let mut acc = 0.0;
            let q = 400;
            for a in 0..q {
                for b in 0..q {
                    let x = m as f64 * 0.1 + (a as f64 + 0.5) * 0.1 / q as f64;
                    let y = (b as f64 + 0.5) * 0.1 / q as f64;
                    acc += norm_pdf((x - y) / sigma) / sigma;
                }
            }
            let direct = acc * (0.1 / q as f64).powi(2) / 0.1;
            assert_abs_diff_eq!(*cm, direct, epsilon = 1e-6);
        }
    }
}
