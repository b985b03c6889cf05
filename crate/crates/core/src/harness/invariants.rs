//! Automatic checks run on every trajectory the harness produces.

use serde::{Deserialize, Serialize};

use super::config::ModelKind;
use crate::constrained::{beta_lower_bound, tail_masses};
use crate::grid::{energy, first_moment, mass, DensityField};
use crate::integrate::Trajectory;
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub passed: bool,
    /// Worst violation found (0 when none).
    pub worst: f64,
    pub tolerance: f64,
}

impl InvariantResult {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

fn worst(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

fn conservation(traj: &Trajectory) -> Vec<InvariantResult> {
    let f0 = traj.first();
    let (m0, x0) = (mass(f0), first_moment(f0));
    let scale = 1.0 + f0.grid.x_min().abs().max(f0.grid.x_max().abs());
    vec![
        InvariantResult::new(
            "mass_conserved",
            worst(traj.iter().map(|f| (mass(f) - m0).abs())),
            1e-10 * m0.abs().max(1.0),
        ),
        InvariantResult::new(
            "first_moment_conserved",
            worst(traj.iter().map(|f| (first_moment(f) - x0).abs())),
            1e-10 * scale,
        ),
    ]
}

fn positivity(traj: &Trajectory) -> InvariantResult {
    InvariantResult::new("positivity", worst(traj.iter().map(|f| -f.min_value())), 1e-12)
}

fn nonincreasing(name: &str, series: &[f64], rtol: f64) -> InvariantResult {
    let w = worst(series.windows(2).map(|w| w[1] - w[0]));
    let scale = series.first().map_or(1.0, |v| v.abs().max(1e-300));
    InvariantResult::new(name, w, rtol * scale)
}

fn tail_max(field: &DensityField, h: f64) -> f64 {
    let grid = field.grid;
    field
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.center(*i) >= h)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Invariants expected of `traj` for the given model. `internal_time` is the
/// `τ(t)` series of nonlocal runs.
pub fn check_trajectory(
    model: ModelKind,
    traj: &Trajectory,
    params: &ModelParams,
    internal_time: Option<&[f64]>,
) -> Vec<InvariantResult> {
    let f0 = traj.first();
    let nonneg_start = f0.min_value() >= 0.0;
    let mut out = Vec::new();
    let energies: Vec<f64> = traj.iter().map(energy).collect();
    match model {
        ModelKind::Unconstrained => {
            out.extend(conservation(traj));
            if nonneg_start {
                out.push(positivity(traj));
            }
            let cap = f0.max_value();
            out.push(InvariantResult::new(
                "linf_bound",
                worst(traj.iter().map(|f| f.max_value() - cap)),
                1e-10,
            ));
            out.push(nonincreasing("energy_nonincreasing", &energies, 1e-12));
        }
        ModelKind::Constrained => {
            out.extend(conservation(traj));
            out.push(positivity(traj));
            let cap = tail_max(f0, params.h);
            out.push(InvariantResult::new(
                "tail_linf_bound",
                worst(traj.iter().map(|f| tail_max(f, params.h) - cap)),
                1e-10,
            ));
            let tails: Vec<Vec<f64>> = traj
                .iter()
                .map(|f| tail_masses(f, params.h, 3).map(|t| t.betas).unwrap_or_default())
                .collect();
            let betas: Vec<f64> = tails.iter().map(|b| b.get(1).copied().unwrap_or(0.0)).collect();
            out.push(nonincreasing("beta_nonincreasing", &betas, 1e-12));
            let b0 = betas.first().copied().unwrap_or(0.0);
            out.push(InvariantResult::new(
                "beta_lower_bound",
                worst(
                    traj.iter()
                        .zip(&betas)
                        .map(|(f, b)| beta_lower_bound(b0, params.eta, f.time - f0.time) - b),
                ),
                1e-8,
            ));
            out.push(InvariantResult::new(
                "beta_nesting",
                worst(tails.iter().flat_map(|b| b.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())),
                1e-12,
            ));
        }
        ModelKind::Heat => {
            let m0 = mass(f0);
            out.push(InvariantResult::new(
                "mass_conserved",
                worst(traj.iter().map(|f| (mass(f) - m0).abs())),
                1e-10 * m0.abs().max(1.0),
            ));
            if nonneg_start {
                out.push(positivity(traj));
            }
            out.push(nonincreasing("energy_nonincreasing", &energies, 1e-12));
        }
        ModelKind::Nonlocal => {
            let masses: Vec<f64> = traj.iter().map(mass).collect();
            out.push(nonincreasing("mass_nonincreasing", &masses, 1e-12));
            out.push(positivity(traj));
            if let Some(taus) = internal_time {
                let rate = params.eta * params.rho / 3.0;
                out.push(InvariantResult::new(
                    "internal_time_bound",
                    worst(traj.iter().zip(taus).map(|(f, tau)| tau - rate * (f.time - f0.time))),
                    1e-12 * (1.0 + rate * traj.last().time),
                ));
            }
        }
        ModelKind::MonteCarlo => {
            let m0 = mass(f0);
            out.push(InvariantResult::new(
                "histogram_mass",
                worst(traj.iter().map(|f| (mass(f) - m0).abs())),
                1e-10 * m0.abs().max(1.0),
            ));
            out.push(positivity(traj));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn flags_mass_loss() {
        let grid = make_grid(0.0, 1.0, 4).unwrap();
        let a = DensityField::indicator(grid, 0.0, 1.0, 1.0);
        let b = a.scaled(0.9).at_time(1.0);
        let p = ModelParams::new(3.0, 0.25, 1.0, false).unwrap();
        let res = check_trajectory(ModelKind::Unconstrained, &Trajectory { samples: vec![a, b] }, &p, None);
        let mass_check = res.iter().find(|r| r.name == "mass_conserved").unwrap();
        assert!(!mass_check.passed);
        assert!(res.iter().find(|r| r.name == "energy_nonincreasing").unwrap().passed);
    }

    #[test]
    fn constant_trajectory_passes_everything() {
        let grid = make_grid(0.0, 2.0, 8).unwrap();
        let a = DensityField::indicator(grid, 0.0, 1.0, 1.0);
        let p = ModelParams::new(3.0, 0.25, 1.0, true).unwrap();
        let traj = Trajectory { samples: vec![a.clone(), a.at_time(1.0)] };
        for model in [ModelKind::Constrained, ModelKind::Heat, ModelKind::MonteCarlo] {
            assert!(check_trajectory(model, &traj, &p, None).iter().all(|r| r.passed), "{model}");
        }
    }
}
