//! Uniform cell grids and piecewise-constant densities.
//!
//! A [`DensityField`] stores cell averages, so every integral below is the
//! midpoint rule on those averages. Shifting a field by a payoff that is an
//! integer number of cells is then exact, which is what lets the kinetic
//! solvers conserve mass and first moment to round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a length is an integer
/// number of cells.
const ALIGN_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min = {x_min} must be below x_max = {x_max}"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            dx: (x_max - x_min) / n_cells as f64,
        })
    }

    /// Grid on `[x_min, x_max]` with spacing `dx`; the length must be an
    /// integer number of cells.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        let cells = (x_max - x_min) / dx;
        let n = cells.round();
        if (cells - n).abs() > ALIGN_RTOL * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "length {} is not a multiple of dx = {dx}",
                x_max - x_min
            )));
        }
        Self::new(x_min, x_max, n as usize)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn cell_left(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn cell_right(&self, i: usize) -> f64 {
        self.x_min + (i + 1) as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.center(i))
    }

    /// Number of cells `k` such that `h = k·dx`, or [`Error::Misaligned`].
    pub fn shift_cells(&self, h: f64) -> Result<usize> {
        let ratio = h / self.dx;
        let k = ratio.round();
        if !(h > 0.0) || k < 1.0 || (ratio - k).abs() > ALIGN_RTOL * ratio.max(1.0) {
            return Err(Error::Misaligned { h, dx: self.dx });
        }
        Ok(k as usize)
    }

    /// Index of the cell boundary located at `x`, if `x` is one.
    pub fn boundary_index(&self, x: f64) -> Option<usize> {
        let pos = (x - self.x_min) / self.dx;
        let i = pos.round();
        if i < 0.0 || i > self.n_cells as f64 {
            return None;
        }
        ((pos - i).abs() <= ALIGN_RTOL * pos.abs().max(1.0)).then_some(i as usize)
    }

    /// Index of the cell containing `x` (`[left, right)`), if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x < self.x_max) {
            return None;
        }
        Some((((x - self.x_min) / self.dx) as usize).min(self.n_cells - 1))
    }

    pub(crate) fn same_as(&self, other: &Grid1D) -> bool {
        self.n_cells == other.n_cells
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.dx
            && (self.x_max - other.x_max).abs() <= 1e-12 * self.dx
    }
}

/// Uniform grid constructor used throughout the crate.
pub fn make_grid(x_min: f64, x_max: f64, n_cells: usize) -> Result<Grid1D> {
    Grid1D::new(x_min, x_max, n_cells)
}

/// Piecewise-constant density: one cell average per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalInstability(format!(
                "non-finite value {} in cell {i}",
                values[i]
            )));
        }
        if !(time >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {time}")));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_cells()],
            time: 0.0,
        }
    }

    /// Exact cell averages of `height · 1_[a,b)`.
    pub fn indicator(grid: Grid1D, a: f64, b: f64, height: f64) -> Self {
        let dx = grid.dx();
        let values = (0..grid.n_cells())
            .map(|i| {
                let (l, r) = (grid.cell_left(i), grid.cell_right(i));
                if a <= l && r <= b {
                    return height;
                }
                let overlap = b.min(r) - a.max(l);
                height * overlap.max(0.0) / dx
            })
            .collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    /// Exact cell averages of `mass · N(mean, sigma²)`.
    pub fn gaussian(grid: Grid1D, mean: f64, sigma: f64, mass: f64) -> Self {
        let cdf = |x: f64| 0.5 * libm::erfc(-(x - mean) / (sigma * std::f64::consts::SQRT_2));
        let dx = grid.dx();
        let values = (0..grid.n_cells())
            .map(|i| mass * (cdf(grid.cell_right(i)) - cdf(grid.cell_left(i))) / dx)
            .collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    /// Samples `f` at cell centers.
    pub fn sample(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.centers().map(f).collect(),
            time: 0.0,
        }
    }

    /// Unit mass concentrated in the single cell containing `x`.
    pub fn delta_cell(grid: Grid1D, x: f64) -> Result<Self> {
        let i = grid
            .locate(x)
            .ok_or_else(|| Error::InvalidParameter(format!("{x} lies outside the grid")))?;
        let mut field = Self::zeros(grid);
        field.values[i] = 1.0 / grid.dx();
        Ok(field)
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
            time: self.time,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_same_grid(&self, other: &DensityField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }
}

pub fn mass(field: &DensityField) -> f64 {
    field.values.iter().sum::<f64>() * field.grid.dx()
}

pub fn first_moment(field: &DensityField) -> f64 {
    let g = &field.grid;
    field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * g.center(i))
        .sum::<f64>()
        * g.dx()
}

/// Second moment about the origin.
pub fn second_moment(field: &DensityField) -> f64 {
    let g = &field.grid;
    field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * g.center(i) * g.center(i))
        .sum::<f64>()
        * g.dx()
}

/// Half the squared L² norm.
pub fn energy(field: &DensityField) -> f64 {
    0.5 * field.values.iter().map(|v| v * v).sum::<f64>() * field.grid.dx()
}

pub fn linf(field: &DensityField) -> f64 {
    field.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn l1_distance(a: &DensityField, b: &DensityField) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.grid.dx())
}

/// Snapshot of the integral diagnostics of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub mass: f64,
    pub first_moment: f64,
    pub energy: f64,
    pub linf: f64,
    pub time: f64,
}

impl MomentReport {
    pub fn of(field: &DensityField) -> Self {
        Self {
            mass: mass(field),
            first_moment: first_moment(field),
            energy: energy(field),
            linf: linf(field),
            time: field.time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn make_grid_spacing() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.cell_left(3), 0.75);
        assert_eq!(g.cell_right(3), 1.0);
        let g = make_grid(-8.0, 8.0, 1600).unwrap();
        assert_abs_diff_eq!(g.dx(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(make_grid(0.0, 1.0, 1).is_err());
        assert!(make_grid(1.0, 0.0, 4).is_err());
        assert!(make_grid(f64::NAN, 1.0, 4).is_err());
        assert!(make_grid(0.0, f64::INFINITY, 4).is_err());
    }

    #[test]
    fn indicator_moments() {
        let g = make_grid(0.0, 1.0, 100).unwrap();
        let f = DensityField::indicator(g, 0.0, 1.0, 1.0);
        assert_eq!(mass(&f), 1.0);
        assert_abs_diff_eq!(first_moment(&f), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(energy(&f), 0.5, epsilon = 1e-12);
        let f2 = DensityField::indicator(g, 0.0, 1.0, 2.0);
        assert_abs_diff_eq!(energy(&f2), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_field_moments() {
        let g = make_grid(-1.0, 1.0, 10).unwrap();
        let z = DensityField::zeros(g);
        assert_eq!(mass(&z), 0.0);
        assert_eq!(energy(&z), 0.0);
        assert_eq!(first_moment(&z), 0.0);
    }

    #[test]
    fn even_field_has_zero_first_moment() {
        let g = make_grid(-3.0, 3.0, 60).unwrap();
        let f = DensityField::sample(g, |x| (-x * x).exp());
        assert_abs_diff_eq!(first_moment(&f), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn l1_distance_examples() {
        let g = make_grid(-1.0, 2.0, 300).unwrap();
        let a = DensityField::indicator(g, 0.0, 1.0, 1.0);
        let b = DensityField::indicator(g, 0.5, 1.5, 1.0);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(l1_distance(&a, &DensityField::zeros(g)).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l1_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
        let other = DensityField::zeros(make_grid(-1.0, 2.0, 30).unwrap());
        assert!(matches!(l1_distance(&a, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn shift_alignment() {
        let g = make_grid(0.0, 10.0, 320).unwrap();
        assert_eq!(g.shift_cells(0.25).unwrap(), 8);
        assert!(matches!(g.shift_cells(0.3), Err(Error::Misaligned { .. })));
        assert!(g.shift_cells(0.0).is_err());
        let g = Grid1D::with_spacing(0.0, 12.0, 0.4).unwrap();
        assert_eq!(g.n_cells(), 30);
        assert!(Grid1D::with_spacing(0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn partial_cell_indicator_is_exact_average() {
        let g = Grid1D::with_spacing(0.0, 2.0, 0.4).unwrap();
        let f = DensityField::indicator(g, 0.0, 1.0, 1.0);
        assert_abs_diff_eq!(f.values[2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mass(&f), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = make_grid(0.0, 1.0, 2).unwrap();
        assert!(DensityField::new(g, vec![1.0, f64::NAN], 0.0).is_err());
        assert!(DensityField::new(g, vec![1.0], 0.0).is_err());
    }
}
