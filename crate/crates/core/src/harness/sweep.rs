//! Convergence of the rescaled kinetic models to their diffusion limits.
//!
//! Each `ε` runs on a grid with `dx = ε`. The limit solution is computed
//! once on a reference grid `REFINE` times finer than the smallest `ε` and
//! averaged onto each coarse grid before taking the l1 distance.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ModelKind, RunConfig};
use super::output::{num, write_file};
use crate::constrained::{solve_constrained, split_field};
use crate::error::{Error, Result};
use crate::fit::fit_log_log;
use crate::grid::{l1_distance, mass, DensityField, Grid1D};
use crate::limit::{reparametrized_oracle, solve_heat};
use crate::params::ModelParams;
use crate::unconstrained::solve_unconstrained;

/// Refinement of the reference grid relative to the smallest `ε`.
pub const REFINE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub error: f64,
    /// Mass on `[0, ε]` at `t_end` (constrained sweeps).
    pub f_minus_mass: Option<f64>,
    /// `ρ − M(t_end)` of the limit problem (constrained sweeps).
    pub lost_mass: Option<f64>,
    #[serde(skip)]
    pub solution: DensityField,
    #[serde(skip)]
    pub limit: DensityField,
}

impl SweepEntry {
    pub fn concentration_gap(&self) -> Option<f64> {
        Some((self.f_minus_mass? - self.lost_mass?).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub t_end: f64,
    pub entries: Vec<SweepEntry>,
    /// Slope of `log error` against `log ε`.
    pub fitted_order: f64,
    pub order_stderr: f64,
    pub fit_residual: f64,
    /// Indices `i` where the error failed to drop from `entries[i−1]`.
    pub non_monotone_at: Vec<usize>,
}

impl ConvergenceReport {
    pub fn eps_list(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.eps).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.error).collect()
    }

    pub fn errors_monotone(&self) -> bool {
        self.non_monotone_at.is_empty()
    }

    /// `|f_minus_mass − lost_mass|` per entry, when available.
    pub fn concentration_gaps(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.concentration_gap()).collect()
    }
}

/// Averages `fine` onto the coarser aligned grid `coarse`.
fn restrict(fine: &DensityField, coarse: Grid1D) -> Result<DensityField> {
    let ratio = coarse.dx() / fine.grid.dx();
    let r = ratio.round() as usize;
    if r == 0 || (ratio - r as f64).abs() > 1e-9 * ratio || r * coarse.n_cells() != fine.grid.n_cells() {
        return Err(Error::GridMismatch(format!(
            "cannot average {} cells onto {}",
            fine.grid.n_cells(),
            coarse.n_cells()
        )));
    }
    let values = fine
        .values
        .chunks(r)
        .map(|c| c.iter().sum::<f64>() / r as f64)
        .collect();
    DensityField::new(coarse, values, fine.time)
}

struct Limit {
    field: DensityField,
    lost_mass: Option<f64>,
}

fn limit_solution(base: &RunConfig, reference: Grid1D) -> Result<Limit> {
    let f_ref = base.initial.field(reference, &base.base_dir)?;
    let rho = mass(&f_ref);
    match base.model {
        ModelKind::Unconstrained => Ok(Limit {
            field: solve_heat(&f_ref, base.eta * rho / 3.0, base.t_end)?,
            lost_mass: None,
        }),
        _ => {
            let rep = reparametrized_oracle(&f_ref, base.eta, &[base.t_end])?;
            Ok(Limit {
                lost_mass: Some(rho - rep.mass_series[0]),
                field: rep.trajectory.samples.into_iter().next().expect("one sample"),
            })
        }
    }
}

fn run_one(base: &RunConfig, eps: f64, limit: &Limit) -> Result<SweepEntry> {
    let grid = Grid1D::with_spacing(base.x_min, base.x_max, eps)?;
    let f_in = base.initial.field(grid, &base.base_dir)?;
    let constrained = base.model == ModelKind::Constrained;
    let params = ModelParams::rescaled(base.eta, eps, mass(&f_in), constrained)?;
    let dt = params.max_kinetic_dt();
    let times = [base.t_end];
    let target = restrict(&limit.field, grid)?;
    let (solution, error, f_minus_mass) = if constrained {
        let traj = solve_constrained(&f_in, &params, &times, dt)?;
        let sol = traj.last().clone();
        let split = split_field(&sol, eps)?;
        let err = l1_distance(&split.f_plus, &target)?;
        (sol, err, Some(split.f_minus_mass))
    } else {
        let traj = solve_unconstrained(&f_in, &params, &times, dt)?;
        let sol = traj.last().clone();
        let err = l1_distance(&sol, &target)?;
        (sol, err, None)
    };
    Ok(SweepEntry {
        eps,
        error,
        f_minus_mass,
        lost_mass: limit.lost_mass,
        solution,
        limit: target,
    })
}

/// Runs the rescaled model of `base` for every `ε` (in parallel on `jobs`
/// threads) and fits the convergence order.
pub fn epsilon_sweep(base: &RunConfig, eps_list: &[f64], jobs: Option<usize>) -> Result<ConvergenceReport> {
    if !base.model.is_kinetic() {
        return Err(Error::InvalidParameter(format!(
            "sweeps need a kinetic model, got '{}'",
            base.model
        )));
    }
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list[eps_list.len() - 1] <= 0.0 {
        return Err(Error::InvalidParameter(
            "eps_list must hold at least two positive, strictly decreasing values".into(),
        ));
    }
    let eps_min = eps_list[eps_list.len() - 1];
    let reference = Grid1D::with_spacing(base.x_min, base.x_max, eps_min / REFINE as f64)?;
    let limit = limit_solution(base, reference)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let entries = pool.install(|| {
        eps_list
            .par_iter()
            .map(|&eps| run_one(base, eps, &limit))
            .collect::<Result<Vec<_>>>()
    })?;
    let errors: Vec<f64> = entries.iter().map(|e| e.error).collect();
    if let Some(i) = errors.iter().position(|e| !(*e > 0.0)) {
        return Err(Error::InsufficientData(format!(
            "zero error at eps = {}; cannot fit an order",
            eps_list[i]
        )));
    }
    let fit = fit_log_log(eps_list, &errors)?;
    let non_monotone_at = (1..errors.len()).filter(|&i| !(errors[i] < errors[i - 1])).collect();
    Ok(ConvergenceReport {
        model: base.model.to_string(),
        t_end: base.t_end,
        entries,
        fitted_order: fit.slope,
        order_stderr: fit.slope_stderr,
        fit_residual: fit.residual_rms,
        non_monotone_at,
    })
}

/// Writes `sweep.csv`, `sweep.json` and one `eps_<i>/profile.csv` per entry.
pub fn write_sweep(report: &ConvergenceReport, base: &RunConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut csv = String::from("eps,error,f_minus_mass,lost_mass\n");
    for (i, e) in report.entries.iter().enumerate() {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            num(e.eps),
            num(e.error),
            opt(e.f_minus_mass),
            opt(e.lost_mass)
        ));
        let dir = out_dir.join(format!("eps_{i}"));
        std::fs::create_dir_all(&dir).map_err(|err| Error::io(&dir, err))?;
        let mut profile = String::from("x,f,f_limit\n");
        for (j, x) in e.solution.grid.centers().enumerate() {
            profile.push_str(&format!(
                "{},{},{}\n",
                num(x),
                num(e.solution.values[j]),
                num(e.limit.values[j])
            ));
        }
        write_file(&dir.join("profile.csv"), &profile)?;
    }
    write_file(&out_dir.join("sweep.csv"), &csv)?;
    let json = serde_json::json!({
        "tool": "rps-lab",
        "code_version": env!("CARGO_PKG_VERSION"),
        "config_text": base.to_text(),
        "report": report,
        "errors_monotone": report.errors_monotone(),
    });
    let text = serde_json::to_string_pretty(&json)
        .map_err(|e| Error::InvalidParameter(format!("cannot serialise sweep: {e}")))?;
    write_file(&out_dir.join("sweep.json"), &(text + "\n"))
}
