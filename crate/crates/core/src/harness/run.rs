use std::path::{Path, PathBuf};

use super::config::{ModelKind, RunConfig};
use super::invariants::{check_trajectory, InvariantResult};
use super::output::{config_map, moments_csv, trajectory_csv, write_file, Manifest};
use super::plot::{profiles_svg, series_svg};
use crate::constrained::solve_constrained;
use crate::error::{Error, Result};
use crate::game::{simulate as simulate_population, AgentPopulation, MAX_THINNING};
use crate::grid::{energy, mass};
use crate::integrate::Trajectory;
use crate::limit::{max_nonlocal_dt, solve_heat, solve_nonlocal_diffusion};
use crate::params::ModelParams;
use crate::unconstrained::solve_unconstrained;

/// In-memory result of a configured run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub params: ModelParams,
    /// Time step actually used, for steppers.
    pub dt: Option<f64>,
    pub internal_time: Option<Vec<f64>>,
    /// Checks that need more than the sampled densities.
    pub extra_invariants: Vec<InvariantResult>,
}

/// Default Monte Carlo step: a quarter of the thinning limit.
pub fn default_mc_dt(params: &ModelParams) -> f64 {
    0.25 * MAX_THINNING / (params.eta * params.rho)
}

/// Runs the model described by `cfg` with random seed `seed`.
pub fn simulate(cfg: &RunConfig, seed: u64) -> Result<Simulation> {
    let f_in = cfg.initial_field()?;
    let params = cfg.params(&f_in)?;
    let times = cfg.output_times();
    let mut sim = Simulation {
        trajectory: Trajectory { samples: Vec::new() },
        params,
        dt: None,
        internal_time: None,
        extra_invariants: Vec::new(),
    };
    match cfg.model {
        ModelKind::Unconstrained | ModelKind::Constrained => {
            let dt = cfg.dt.unwrap_or_else(|| params.max_kinetic_dt());
            sim.trajectory = if cfg.model == ModelKind::Unconstrained {
                solve_unconstrained(&f_in, &params, &times, dt)?
            } else {
                solve_constrained(&f_in, &params, &times, dt)?
            };
            sim.dt = Some(dt);
        }
        ModelKind::Heat => {
            let d = cfg.eta * params.rho / 3.0;
            let samples = times
                .iter()
                .map(|&t| solve_heat(&f_in, d, t))
                .collect::<Result<Vec<_>>>()?;
            sim.trajectory = Trajectory { samples };
        }
        ModelKind::Nonlocal => {
            let dt = cfg
                .dt
                .unwrap_or_else(|| max_nonlocal_dt(f_in.grid.dx(), cfg.eta, params.rho.max(1e-300)));
            let report = solve_nonlocal_diffusion(&f_in, cfg.eta, &times, dt)?;
            sim.trajectory = report.trajectory;
            sim.internal_time = Some(report.internal_time_series);
            sim.dt = Some(dt);
        }
        ModelKind::MonteCarlo => {
            let dt = cfg.dt.unwrap_or_else(|| default_mc_dt(&params));
            let h = params.h;
            let mut pop = AgentPopulation::sample(&f_in, cfg.n_agents, h, seed)?;
            let run = simulate_population(&mut pop, &params, dt, seed, &times, &f_in.grid)?;
            sim.extra_invariants.push(InvariantResult {
                name: "wealth_conserved".into(),
                passed: run.wealth_conserved,
                worst: if run.wealth_conserved { 0.0 } else { 1.0 },
                tolerance: 0.0,
            });
            if params.constrained {
                sim.extra_invariants.push(InvariantResult {
                    name: "wealth_nonnegative".into(),
                    passed: run.min_wealth >= 0.0,
                    worst: (-run.min_wealth).max(0.0),
                    tolerance: 0.0,
                });
            }
            sim.trajectory = Trajectory { samples: run.histograms };
            sim.dt = Some(dt);
        }
    }
    Ok(sim)
}

/// Files and verdicts of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub simulation: Simulation,
}

fn boundary_leakage(traj: &Trajectory, half_line: bool) -> f64 {
    traj.iter()
        .map(|f| {
            let n = f.values.len();
            let left = if half_line { 0.0 } else { f.values[0].abs() };
            (left + f.values[n - 1].abs()) * f.grid.dx()
        })
        .fold(0.0, f64::max)
}

/// Runs `cfg` and writes `trajectory.csv`, `moments.csv`, `manifest.json`
/// (and SVG plots when `plots` is set) into `out_dir`.
///
/// The manifest is written even when an invariant fails; the failure is then
/// returned as [`Error::InvariantViolation`].
pub fn run_config(cfg: &RunConfig, out_dir: &Path, seed: Option<u64>, plots: bool) -> Result<RunOutcome> {
    let seed = seed.unwrap_or(cfg.seed);
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let sim = simulate(&cfg, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let traj = &sim.trajectory;
    let payoff = (cfg.model == ModelKind::Constrained).then_some(sim.params.h);
    let mut files = vec!["trajectory.csv".to_string(), "moments.csv".to_string()];
    write_file(&out_dir.join("trajectory.csv"), &trajectory_csv(traj))?;
    write_file(&out_dir.join("moments.csv"), &moments_csv(traj, payoff)?)?;

    if plots {
        let title = format!("{} model", cfg.model);
        write_file(&out_dir.join("profiles.svg"), &profiles_svg(traj, &title))?;
        let times = traj.times();
        let series = [
            ("mass", traj.iter().map(mass).collect()),
            ("energy", traj.iter().map(energy).collect()),
        ];
        write_file(&out_dir.join("moments.svg"), &series_svg(&times, &series, "moments"))?;
        files.push("profiles.svg".into());
        files.push("moments.svg".into());
    }

    let mut invariants = check_trajectory(cfg.model, traj, &sim.params, sim.internal_time.as_deref());
    invariants.extend(sim.extra_invariants.iter().cloned());
    let half_line = matches!(cfg.model, ModelKind::Constrained | ModelKind::Nonlocal) || sim.params.constrained;
    let config_text = cfg.to_text();
    files.push("manifest.json".into());
    let manifest = Manifest {
        tool: "rps-lab".into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        model: cfg.model.to_string(),
        config: config_map(&config_text),
        config_text,
        seed,
        eta_effective: sim.params.eta,
        payoff: cfg.payoff,
        rho: sim.params.rho,
        dt: sim.dt,
        output_times: traj.times(),
        contraction_horizon: sim.params.constrained.then(|| sim.params.contraction_horizon()),
        boundary_leakage: boundary_leakage(traj, half_line),
        invariants,
        files,
    };
    write_file(&out_dir.join("manifest.json"), &manifest.to_json()?)?;

    let failed: Vec<&str> = manifest
        .invariants
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(Error::InvariantViolation(failed.join(", ")));
    }
    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        manifest,
        simulation: sim,
    })
}

/// Re-checks the invariants of a finished run from its files.
pub fn check_run_dir(dir: &Path) -> Result<Vec<InvariantResult>> {
    let manifest = Manifest::read(&dir.join("manifest.json"))?;
    let cfg = RunConfig::parse(&manifest.config_text, dir)?;
    let grid = cfg.grid()?;
    let traj = super::output::read_trajectory_csv(&dir.join("trajectory.csv"), grid)?;
    let params = cfg.params(traj.first())?;
    let mut results = check_trajectory(cfg.model, &traj, &params, None);
    results.extend(
        manifest
            .invariants
            .into_iter()
            .filter(|r| r.name.starts_with("wealth_")),
    );
    Ok(results)
}
