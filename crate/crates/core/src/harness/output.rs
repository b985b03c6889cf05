//! CSV and JSON artifacts. Numbers are written as `{:.16e}` (17 significant
//! digits), which reads back bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::invariants::InvariantResult;
use crate::constrained::tail_masses;
use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D, MomentReport};
use crate::integrate::Trajectory;

pub(crate) fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `t,x,f` rows, one per cell and sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,x,f\n");
    for field in traj.iter() {
        let t = num(field.time);
        for (x, v) in field.grid.centers().zip(&field.values) {
            let _ = writeln!(s, "{t},{},{}", num(x), num(*v));
        }
    }
    s
}

/// `t,mass,first_moment,energy,linf` rows, plus `beta` when `payoff` is set.
pub fn moments_csv(traj: &Trajectory, payoff: Option<f64>) -> Result<String> {
    let mut s = String::from("t,mass,first_moment,energy,linf");
    if payoff.is_some() {
        s.push_str(",beta");
    }
    s.push('\n');
    for field in traj.iter() {
        let m = MomentReport::of(field);
        let _ = write!(
            s,
            "{},{},{},{},{}",
            num(m.time),
            num(m.mass),
            num(m.first_moment),
            num(m.energy),
            num(m.linf)
        );
        if let Some(h) = payoff {
            let _ = write!(s, ",{}", num(tail_masses(field, h, 1)?.beta()));
        }
        s.push('\n');
    }
    Ok(s)
}

fn csv_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::InvalidParameter(format!("{}:{line}: {}", path.display(), message.into()))
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(csv_err(path, 1, format!("expected header '{header}'"))),
    }
    let width = header.split(',').count();
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row = l
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| csv_err(path, i + 1, e.to_string()))?;
            if row.len() != width {
                return Err(csv_err(path, i + 1, format!("expected {width} columns")));
            }
            Ok((i + 1, row))
        })
        .collect()
}

/// Reads an `x,f` profile with one row per cell of `grid`.
pub fn read_profile_csv(path: &Path, grid: Grid1D) -> Result<DensityField> {
    let rows = read_rows(path, "x,f")?;
    if rows.len() != grid.n_cells() {
        return Err(csv_err(
            path,
            0,
            format!("{} rows for a grid of {} cells", rows.len(), grid.n_cells()),
        ));
    }
    for (i, (line, row)) in rows.iter().enumerate() {
        if (row[0] - grid.center(i)).abs() > 1e-6 * grid.dx() {
            return Err(csv_err(path, *line, format!("x = {} is not the center of cell {i}", row[0])));
        }
    }
    DensityField::new(grid, rows.into_iter().map(|(_, r)| r[1]).collect(), 0.0)
}

/// Reads a file written by [`trajectory_csv`] back onto `grid`.
pub fn read_trajectory_csv(path: &Path, grid: Grid1D) -> Result<Trajectory> {
    let rows = read_rows(path, "t,x,f")?;
    let n = grid.n_cells();
    if rows.is_empty() || rows.len() % n != 0 {
        return Err(csv_err(path, 0, format!("row count is not a multiple of {n} cells")));
    }
    let samples = rows
        .chunks(n)
        .map(|chunk| {
            let t = chunk[0].1[0];
            if chunk.iter().any(|(_, r)| r[0] != t) {
                return Err(csv_err(path, chunk[0].0, "sample split across times"));
            }
            DensityField::new(grid, chunk.iter().map(|(_, r)| r[2]).collect(), t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { samples })
}

/// Everything needed to repeat a run, plus the invariant verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub code_version: String,
    pub model: String,
    /// Canonical config text; parse it to repeat the run.
    pub config_text: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub eta_effective: f64,
    pub payoff: Option<f64>,
    pub rho: f64,
    pub dt: Option<f64>,
    pub output_times: Vec<f64>,
    /// Informational well-posedness horizon `3/(8ηρ)` of constrained runs.
    pub contraction_horizon: Option<f64>,
    /// Largest mass seen in the outermost cell at either end of the grid.
    pub boundary_leakage: f64,
    pub invariants: Vec<InvariantResult>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn all_passed(&self) -> bool {
        self.invariants.iter().all(|r| r.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::InvalidParameter(format!("cannot serialise manifest: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: bad manifest: {e}", path.display())))
    }
}

/// `key = value` pairs of canonical config text.
pub(crate) fn config_map(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn trajectory_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let grid = make_grid(-1.0, 2.0, 7).unwrap();
        let a = DensityField::gaussian(grid, 0.3, 0.4, 1.0);
        let b = a.scaled(1.0 / 3.0).at_time(0.1);
        let traj = Trajectory { samples: vec![a, b] };
        let path = dir.path().join("t.csv");
        write_file(&path, &trajectory_csv(&traj)).unwrap();
        assert_eq!(read_trajectory_csv(&path, grid).unwrap(), traj);
    }

    #[test]
    fn profile_reader_checks_shape() {
        let dir = tempfile::tempdir().unwrap();
        let grid = make_grid(0.0, 1.0, 2).unwrap();
        let path = dir.path().join("p.csv");
        write_file(&path, "x,f\n0.25,1\n0.75,3\n").unwrap();
        assert_eq!(read_profile_csv(&path, grid).unwrap().values, vec![1.0, 3.0]);
        write_file(&path, "x,f\n0.25,1\n").unwrap();
        assert!(read_profile_csv(&path, grid).is_err());
        write_file(&path, "x,g\n0.25,1\n0.75,3\n").unwrap();
        assert!(read_profile_csv(&path, grid).is_err());
    }

    #[test]
    fn moments_header() {
        let grid = make_grid(0.0, 1.0, 4).unwrap();
        let traj = Trajectory { samples: vec![DensityField::indicator(grid, 0.0, 1.0, 1.0)] };
        let csv = moments_csv(&traj, Some(0.25)).unwrap();
        assert!(csv.starts_with("t,mass,first_moment,energy,linf,beta\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
