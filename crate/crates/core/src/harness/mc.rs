//! Monte Carlo histograms against the matching kinetic solution.

use std::path::Path;

use serde::Serialize;

use super::config::{ModelKind, RunConfig};
use super::output::{num, write_file};
use crate::constrained::solve_constrained;
use crate::error::{Error, Result};
use crate::grid::l1_distance;
use crate::integrate::Trajectory;
use crate::unconstrained::solve_unconstrained;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McComparison {
    pub seed: u64,
    pub n_agents: usize,
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// `5·sqrt(n_cells·dx/N)`.
    pub tolerance: f64,
    pub wealth_conserved: bool,
    pub min_wealth: f64,
}

impl McComparison {
    pub fn exceeded(&self) -> Vec<bool> {
        self.distances.iter().map(|d| *d > self.tolerance).collect()
    }

    pub fn within_tolerance(&self) -> bool {
        self.distances.iter().all(|d| *d <= self.tolerance)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,l1_distance,tolerance,exceeded\n");
        for (t, d) in self.times.iter().zip(&self.distances) {
            s.push_str(&format!("{},{},{},{}\n", num(*t), num(*d), num(self.tolerance), d > &self.tolerance));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }
}

fn require_mc(cfg: &RunConfig) -> Result<()> {
    if cfg.model != ModelKind::MonteCarlo {
        return Err(Error::ParamMismatch(format!(
            "comparison needs a monte_carlo config, got '{}'",
            cfg.model
        )));
    }
    Ok(())
}

/// Kinetic solution matching a Monte Carlo config, on the same grid and
/// output times, with the largest stable step.
pub fn pde_reference(cfg: &RunConfig) -> Result<Trajectory> {
    require_mc(cfg)?;
    let f_in = cfg.initial_field()?;
    let params = cfg.params(&f_in)?;
    let dt = params.max_kinetic_dt();
    let times = cfg.output_times();
    if params.constrained {
        solve_constrained(&f_in, &params, &times, dt)
    } else {
        solve_unconstrained(&f_in, &params, &times, dt)
    }
}

/// Simulates `cfg` with `seed` and measures the l1 distance of every
/// histogram to `pde_reference`.
pub fn mc_compare(cfg: &RunConfig, pde_reference: &Trajectory, seed: u64) -> Result<McComparison> {
    require_mc(cfg)?;
    let grid = cfg.grid()?;
    let times = cfg.output_times();
    let ref_times = pde_reference.times();
    let t0 = cfg.initial_field()?.time;
    if ref_times.len() != times.len()
        || ref_times.iter().zip(&times).any(|(a, b)| (a - t0 - b).abs() > 1e-9 * (1.0 + b))
    {
        return Err(Error::ParamMismatch(
            "reference output times differ from the Monte Carlo config".into(),
        ));
    }
    if !pde_reference.first().grid.same_as(&grid) {
        return Err(Error::ParamMismatch("reference grid differs from the Monte Carlo config".into()));
    }
    let sim = super::run::simulate(cfg, seed)?;
    let distances = sim
        .trajectory
        .iter()
        .zip(pde_reference.iter())
        .map(|(h, p)| l1_distance(h, p))
        .collect::<Result<Vec<_>>>()?;
    let wealth_ok = |name: &str| {
        sim.extra_invariants
            .iter()
            .find(|r| r.name == name)
            .is_none_or(|r| r.passed)
    };
    let min_wealth = sim
        .extra_invariants
        .iter()
        .find(|r| r.name == "wealth_nonnegative")
        .map_or(0.0, |r| 0.0 - r.worst);
    Ok(McComparison {
        seed,
        n_agents: cfg.n_agents,
        times,
        distances,
        tolerance: 5.0 * (grid.n_cells() as f64 * grid.dx() / cfg.n_agents as f64).sqrt(),
        wealth_conserved: wealth_ok("wealth_conserved"),
        min_wealth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = "model = monte_carlo\nmc_model = constrained\neta = 3\npayoff = 1\nx_min = 0\nx_max = 4\nn_cells = 40\nt_end = 1\nn_outputs = 4\ninitial = indicator(0, 0.9)\nn_agents = 5000\n";

    #[test]
    fn frozen_population_histogram_is_constant() {
        let cfg = RunConfig::parse(CFG, Path::new(".")).unwrap();
        let sim = super::super::run::simulate(&cfg, 3).unwrap();
        let first = &sim.trajectory.first().values;
        assert!(sim.trajectory.iter().all(|h| &h.values == first));
        let reference = pde_reference(&cfg).unwrap();
        let cmp = mc_compare(&cfg, &reference, 3).unwrap();
        assert!(cmp.wealth_conserved);
        assert!(cmp.min_wealth >= 0.0);
        // every histogram equals the initial one, so all distances coincide
        assert!(cmp.distances.iter().all(|d| *d == cmp.distances[0]));
    }

    #[test]
    fn mismatched_reference_rejected() {
        let cfg = RunConfig::parse(CFG, Path::new(".")).unwrap();
        let other = RunConfig::parse(&CFG.replace("n_outputs = 4", "n_outputs = 3"), Path::new(".")).unwrap();
        let reference = pde_reference(&other).unwrap();
        assert!(matches!(mc_compare(&cfg, &reference, 1), Err(Error::ParamMismatch(_))));
    }

    #[test]
    fn output_times_need_not_start_at_zero() {
        let text = CFG.replace("n_outputs = 4", "output_times = 0.5, 1");
        let cfg = RunConfig::parse(&text, Path::new(".")).unwrap();
        let reference = pde_reference(&cfg).unwrap();
        let cmp = mc_compare(&cfg, &reference, 2).unwrap();
        assert_eq!(cmp.times, vec![0.5, 1.0]);
    }
}
