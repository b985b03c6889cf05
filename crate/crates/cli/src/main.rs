//! `rps-lab`: command-line driver for the kinetic rock-paper-scissors
//! laboratory.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 invariant violation or tolerance exceeded, 4 numerical instability.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use rps_kinetic::harness::plot::series_svg;
use rps_kinetic::harness::{
    check_run_dir, epsilon_sweep, mc_compare, pde_reference, run_config, write_sweep, RunConfig,
};
use rps_kinetic::Error;

#[derive(Parser)]
#[command(name = "rps-lab", version, about = "Kinetic rock-paper-scissors wealth-exchange laboratory")]
struct Cli {
    /// Worker threads for sweeps and multi-seed comparisons (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write CSV, manifest and optional plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plots: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convergence of a rescaled kinetic model to its diffusion limit.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Decreasing payoffs, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
        eps: Vec<f64>,
        #[arg(long)]
        plots: bool,
    },
    /// Monte Carlo histograms against the kinetic solution.
    McCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of consecutive seeds to run.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Re-check the invariants of a finished run directory.
    CheckInvariants {
        #[arg(long)]
        out: PathBuf,
    },
}

fn out_dir(explicit: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    explicit
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("rps-out"))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, plots, seed } => {
            let cfg = RunConfig::from_file(&config)?;
            let dir = out_dir(out, &cfg);
            let outcome = run_config(&cfg, &dir, seed, plots)?;
            println!(
                "{} run: {} samples written to {}",
                outcome.manifest.model,
                outcome.manifest.output_times.len(),
                dir.display()
            );
            for inv in &outcome.manifest.invariants {
                println!("  {:<24} {}", inv.name, if inv.passed { "pass" } else { "FAIL" });
            }
        }
        Command::Sweep { config, out, eps, plots } => {
            let cfg = RunConfig::from_file(&config)?;
            let dir = out_dir(out, &cfg);
            let report = epsilon_sweep(&cfg, &eps, cli.jobs)?;
            write_sweep(&report, &cfg, &dir)?;
            if plots {
                let svg = series_svg(
                    &report.eps_list(),
                    &[("l1 error", report.errors())],
                    "error against payoff",
                );
                write(&dir.join("sweep.svg"), &svg)?;
            }
            for e in &report.entries {
                print!("eps = {:<8} error = {:.6e}", e.eps, e.error);
                if let Some(gap) = e.concentration_gap() {
                    print!("  |f_minus - lost| = {gap:.6e}");
                }
                println!();
            }
            println!(
                "fitted order {:.4} ± {:.4}{}",
                report.fitted_order,
                report.order_stderr,
                if report.errors_monotone() { "" } else { " (errors not monotone)" }
            );
        }
        Command::McCompare { config, out, seed, seeds } => {
            let cfg = RunConfig::from_file(&config)?;
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                path: dir.display().to_string(),
                source,
            })?;
            let reference = pde_reference(&cfg)?;
            let first = seed.unwrap_or(cfg.seed);
            let pool = thread_pool(cli.jobs)?;
            let results = pool.install(|| {
                (first..first + seeds.max(1))
                    .into_par_iter()
                    .map(|s| mc_compare(&cfg, &reference, s))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let mut csv = String::from("seed,t,l1_distance,tolerance,exceeded\n");
            let mut exceeded = false;
            for r in &results {
                for line in r.to_csv().lines().skip(1) {
                    csv.push_str(&format!("{},{line}\n", r.seed));
                }
                exceeded |= !r.within_tolerance() || !r.wealth_conserved || r.min_wealth < 0.0;
                println!(
                    "seed {:<6} max l1 = {:.4e} (tolerance {:.4e}){}",
                    r.seed,
                    r.distances.iter().copied().fold(0.0, f64::max),
                    r.tolerance,
                    if r.within_tolerance() { "" } else { "  EXCEEDED" }
                );
            }
            write(&dir.join("mc_compare.csv"), &csv)?;
            if exceeded {
                return Err(Error::InvariantViolation(
                    "Monte Carlo histogram outside the statistical tolerance".into(),
                ));
            }
        }
        Command::CheckInvariants { out } => {
            let results = check_run_dir(&out)?;
            let mut failed = Vec::new();
            for r in &results {
                println!("{:<24} {} (worst {:.3e}, tolerance {:.1e})", r.name, if r.passed { "pass" } else { "FAIL" }, r.worst, r.tolerance);
                if !r.passed {
                    failed.push(r.name.clone());
                }
            }
            if !failed.is_empty() {
                return Err(Error::InvariantViolation(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rps-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
