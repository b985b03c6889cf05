//! Particle-level simulation of the binary rock-paper-scissors game.
//!
//! Games follow a Poisson clock thinned per time step: during a step of
//! length `dt` every agent initiates a game with probability `ηρ·dt/2`
//! against an opponent drawn uniformly among the other agents. Since each
//! agent is also picked as an opponent at the same rate, it takes part in
//! games at total rate `ηρ`, and wins or loses `h` at rate `ηρ/3` each. In
//! constrained mode a game is abandoned unless both players hold at least
//! `h`.
//!
//! Wealth is stored as an integer number of ticks of size `h / 2^20`, so a
//! game moves exactly `2^20` ticks from loser to winner and total wealth is
//! conserved bit for bit.
//!
//! Randomness comes from ChaCha8 (a counter-based generator). Step `s` uses
//! stream `s`; agent `i` reads its draws from word offset `16·i` of that
//! stream. The draws of an agent therefore do not depend on the order in
//! which other agents are processed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::params::ModelParams;

/// Ticks per payoff unit.
pub const TICKS_PER_PAYOFF: i64 = 1 << 20;

/// Words reserved per agent and step in the random stream.
const WORDS_PER_AGENT: u128 = 16;

/// Upper bound on `η·ρ·dt` for which thinning is accepted.
pub const MAX_THINNING: f64 = 0.1;

/// Wealth changes of the two players of one game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameOutcome {
    pub delta_a: f64,
    pub delta_b: f64,
}

/// Payoff table lookup: row `choice_a`, column `choice_b`.
///
/// Choice `c` beats choice `c + 1 (mod 3)`.
pub fn play_round(choice_a: u8, choice_b: u8, h: f64) -> Result<GameOutcome> {
    if choice_a > 2 || choice_b > 2 {
        return Err(Error::InvalidParameter(format!(
            "choices must be in {{0,1,2}}, got ({choice_a}, {choice_b})"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("payoff must be positive, got {h}")));
    }
    let delta_a = match (3 + choice_b - choice_a) % 3 {
        0 => 0.0,
        1 => h,
        _ => -h,
    };
    Ok(GameOutcome {
        delta_a,
        delta_b: -delta_a,
    })
}

/// Same table in units of payoffs.
fn sign_of_round(choice_a: u8, choice_b: u8) -> i64 {
    match (3 + choice_b - choice_a) % 3 {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

/// One game as seen by an observer of [`step_population_observed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameEvent {
    pub initiator: usize,
    pub opponent: usize,
    /// `+1` if the initiator won, `-1` if it lost, `0` for a draw.
    pub sign: i64,
    /// Set when the no-debt rule cancelled the game.
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPopulation {
    ticks: Vec<i64>,
    payoff: f64,
    pub agent_weight: f64,
    pub time: f64,
    /// Number of completed steps; selects the random stream of the next step.
    pub steps: u64,
}

impl AgentPopulation {
    /// Population with the given wealths (rounded to the tick lattice of
    /// payoff `h`) and total mass `rho`.
    pub fn from_wealths(wealths: &[f64], rho: f64, h: f64) -> Result<Self> {
        if wealths.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 agents, got {}",
                wealths.len()
            )));
        }
        if !(h > 0.0) || !(rho > 0.0) {
            return Err(Error::InvalidParameter("payoff and mass must be positive".into()));
        }
        let tick = h / TICKS_PER_PAYOFF as f64;
        let ticks = wealths
            .iter()
            .map(|w| {
                if w.is_finite() {
                    Ok((w / tick).round() as i64)
                } else {
                    Err(Error::InvalidParameter(format!("non-finite wealth {w}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ticks,
            payoff: h,
            agent_weight: rho / wealths.len() as f64,
            time: 0.0,
            steps: 0,
        })
    }

    /// Draws `n_agents` i.i.d. wealths from the normalised density `f_in`.
    pub fn sample(f_in: &DensityField, n_agents: usize, h: f64, seed: u64) -> Result<Self> {
        if f_in.min_value() < 0.0 {
            return Err(Error::InvalidParameter("initial density must be non-negative".into()));
        }
        let grid = f_in.grid;
        let mut cumulative = Vec::with_capacity(grid.n_cells());
        let mut acc = 0.0;
        for v in &f_in.values {
            acc += v * grid.dx();
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::InvalidParameter("initial density has zero mass".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let wealths: Vec<f64> = (0..n_agents)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let i = cumulative.partition_point(|c| *c <= u).min(grid.n_cells() - 1);
                grid.cell_left(i) + rng.random::<f64>() * grid.dx()
            })
            .collect();
        Self::from_wealths(&wealths, acc, h)
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn payoff(&self) -> f64 {
        self.payoff
    }

    fn tick(&self) -> f64 {
        self.payoff / TICKS_PER_PAYOFF as f64
    }

    pub fn wealth(&self, i: usize) -> f64 {
        self.ticks[i] as f64 * self.tick()
    }

    pub fn wealths(&self) -> Vec<f64> {
        let tick = self.tick();
        self.ticks.iter().map(|&t| t as f64 * tick).collect()
    }

    /// Total wealth in ticks; invariant under play.
    pub fn total_ticks(&self) -> i128 {
        self.ticks.iter().map(|&t| t as i128).sum()
    }

    pub fn total_wealth(&self) -> f64 {
        self.total_ticks() as f64 * self.tick()
    }

    pub fn min_wealth(&self) -> f64 {
        self.ticks.iter().copied().min().unwrap_or(0) as f64 * self.tick()
    }
}

fn check_step(pop: &AgentPopulation, params: &ModelParams, dt: f64) -> Result<()> {
    if pop.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 agents".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let max_dt = MAX_THINNING / (params.eta * params.rho);
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::UnstableTimeStep { dt, max_dt });
    }
    if (params.h - pop.payoff).abs() > 1e-12 * params.h {
        return Err(Error::ParamMismatch(format!(
            "population built for payoff {} but params use {}",
            pop.payoff, params.h
        )));
    }
    Ok(())
}

/// Advances the population by one step of length `dt`, reporting every game
/// to `observer`.
pub fn step_population_observed(
    pop: &mut AgentPopulation,
    params: &ModelParams,
    dt: f64,
    rng_seed: u64,
    mut observer: impl FnMut(GameEvent),
) -> Result<()> {
    check_step(pop, params, dt)?;
    let n = pop.len();
    let p_initiate = 0.5 * params.eta * params.rho * dt;
    let stake = TICKS_PER_PAYOFF;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(pop.steps);
    for i in 0..n {
        rng.set_word_pos(i as u128 * WORDS_PER_AGENT);
        if rng.random::<f64>() >= p_initiate {
            continue;
        }
        let raw = rng.next_u64();
        let mut j = ((raw as u128 * (n as u128 - 1)) >> 64) as usize;
        if j >= i {
            j += 1;
        }
        let choices = rng.next_u64();
        let choice_a = (((choices & 0xffff_ffff) * 3) >> 32) as u8;
        let choice_b = (((choices >> 32) * 3) >> 32) as u8;
        let sign = sign_of_round(choice_a, choice_b);
        let aborted = params.constrained && (pop.ticks[i] < stake || pop.ticks[j] < stake);
        if !aborted {
            pop.ticks[i] += sign * stake;
            pop.ticks[j] -= sign * stake;
        }
        observer(GameEvent {
            initiator: i,
            opponent: j,
            sign,
            aborted,
        });
    }
    pop.steps += 1;
    pop.time += dt;
    Ok(())
}

/// Pure form of [`step_population_observed`].
pub fn step_population(
    pop: &AgentPopulation,
    params: &ModelParams,
    dt: f64,
    rng_seed: u64,
) -> Result<AgentPopulation> {
    let mut next = pop.clone();
    step_population_observed(&mut next, params, dt, rng_seed, |_| {})?;
    Ok(next)
}

/// Histograms of a simulated population and the per-step invariant checks.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub histograms: Vec<DensityField>,
    /// Total wealth was identical after every step.
    pub wealth_conserved: bool,
    /// Smallest wealth seen after any step.
    pub min_wealth: f64,
}

/// Runs `pop` to each of `output_times` with steps no longer than `dt`,
/// histogramming on `grid` at every output time.
pub fn simulate(
    pop: &mut AgentPopulation,
    params: &ModelParams,
    dt: f64,
    rng_seed: u64,
    output_times: &[f64],
    grid: &Grid1D,
) -> Result<McRun> {
    crate::integrate::check_output_times(output_times)?;
    let total = pop.total_ticks();
    let mut run = McRun {
        histograms: Vec::with_capacity(output_times.len()),
        wealth_conserved: true,
        min_wealth: pop.min_wealth(),
    };
    for &t_out in output_times {
        let span = t_out - pop.time;
        if span > 1e-12 {
            let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                step_population_observed(pop, params, h, rng_seed, |_| {})?;
                run.wealth_conserved &= pop.total_ticks() == total;
                run.min_wealth = run.min_wealth.min(pop.min_wealth());
            }
        }
        pop.time = t_out;
        run.histograms.push(histogram(pop, grid)?);
    }
    Ok(run)
}

/// Empirical density: `count · agent_weight / dx` per cell.
pub fn histogram(pop: &AgentPopulation, grid: &Grid1D) -> Result<DensityField> {
    let mut counts = vec![0u64; grid.n_cells()];
    for i in 0..pop.len() {
        let w = pop.wealth(i);
        let cell = grid.locate(w).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "wealth {w} of agent {i} lies outside [{}, {})",
                grid.x_min(),
                grid.x_max()
            ))
        })?;
        counts[cell] += 1;
    }
    let scale = pop.agent_weight / grid.dx();
    DensityField::new(
        *grid,
        counts.iter().map(|&c| c as f64 * scale).collect(),
        pop.time,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l1_distance, make_grid, mass};

    #[test]
    fn payoff_table_entries() {
        let h = 0.7;
        let o = play_round(0, 1, h).unwrap();
        assert_eq!((o.delta_a, o.delta_b), (h, -h));
        let o = play_round(0, 2, h).unwrap();
        assert_eq!((o.delta_a, o.delta_b), (-h, h));
        let o = play_round(2, 2, h).unwrap();
        assert_eq!((o.delta_a, o.delta_b), (0.0, 0.0));
        // the remaining off-diagonal entries
        assert_eq!(play_round(1, 0, h).unwrap().delta_a, -h);
        assert_eq!(play_round(1, 2, h).unwrap().delta_a, h);
        assert_eq!(play_round(2, 0, h).unwrap().delta_a, h);
        assert_eq!(play_round(2, 1, h).unwrap().delta_a, -h);
    }

    #[test]
    fn payoff_table_is_zero_sum_and_fair() {
        for a in 0..3 {
            let row: f64 = (0..3).map(|b| play_round(a, b, 1.0).unwrap().delta_a).sum();
            assert_eq!(row, 0.0);
            for b in 0..3 {
                let o = play_round(a, b, 1.0).unwrap();
                assert_eq!(o.delta_a + o.delta_b, 0.0);
                assert_eq!(sign_of_round(a, b) as f64, o.delta_a);
            }
        }
    }

    #[test]
    fn invalid_choice_rejected() {
        assert!(play_round(3, 0, 1.0).is_err());
        assert!(play_round(0, 0, 0.0).is_err());
    }

    #[test]
    fn unconstrained_step_conserves_total_wealth() {
        let params = ModelParams::new(3.0, 0.5, 1.0, false).unwrap();
        let wealths: Vec<f64> = (0..500).map(|i| i as f64 * 0.013).collect();
        let mut pop = AgentPopulation::from_wealths(&wealths, 1.0, 0.5).unwrap();
        let total = pop.total_ticks();
        for _ in 0..50 {
            pop = step_population(&pop, &params, 0.03, 9).unwrap();
            assert_eq!(pop.total_ticks(), total);
        }
    }

    #[test]
    fn constrained_poor_population_is_frozen() {
        let params = ModelParams::new(3.0, 1.0, 1.0, true).unwrap();
        let pop = AgentPopulation::from_wealths(&vec![0.5; 200], 1.0, 1.0).unwrap();
        let mut next = pop.clone();
        let mut games = 0;
        for _ in 0..20 {
            step_population_observed(&mut next, &params, 0.03, 1, |e| {
                assert!(e.aborted);
                games += 1;
            })
            .unwrap();
        }
        assert!(games > 0);
        assert_eq!(next.wealths(), pop.wealths());
    }

    #[test]
    fn step_is_deterministic() {
        let params = ModelParams::new(3.0, 0.5, 1.0, false).unwrap();
        let wealths: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let pop = AgentPopulation::from_wealths(&wealths, 1.0, 0.5).unwrap();
        let a = step_population(&pop, &params, 0.03, 77).unwrap();
        let b = step_population(&pop, &params, 0.03, 77).unwrap();
        let c = step_population(&pop, &params, 0.03, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn step_preconditions() {
        let params = ModelParams::new(3.0, 0.5, 1.0, false).unwrap();
        let pop = AgentPopulation::from_wealths(&[0.0, 1.0], 1.0, 0.5).unwrap();
        assert!(matches!(
            step_population(&pop, &params, 0.1, 0),
            Err(Error::UnstableTimeStep { .. })
        ));
        assert!(AgentPopulation::from_wealths(&[1.0], 1.0, 0.5).is_err());
        let other = ModelParams::new(3.0, 0.25, 1.0, false).unwrap();
        assert!(matches!(
            step_population(&pop, &other, 0.01, 0),
            Err(Error::ParamMismatch(_))
        ));
    }

    #[test]
    fn histogram_examples() {
        let grid = make_grid(0.0, 1.0, 2).unwrap();
        let pop = AgentPopulation::from_wealths(&[0.25; 10], 2.0, 0.5).unwrap();
        let hist = histogram(&pop, &grid).unwrap();
        assert_eq!(hist.values, vec![2.0 / 0.5, 0.0]);
        assert_eq!(mass(&hist), 2.0);
        // cells are closed on the left
        let edge = AgentPopulation::from_wealths(&[0.5; 10], 2.0, 0.5).unwrap();
        assert_eq!(histogram(&edge, &grid).unwrap().values, vec![0.0, 2.0 / 0.5]);
        let far = AgentPopulation::from_wealths(&[0.5, 3.0], 1.0, 0.5).unwrap();
        assert!(histogram(&far, &grid).is_err());
    }

    #[test]
    fn sampled_histogram_matches_indicator() {
        // Binomial error oracle: E·l1 ≈ Σ_i sqrt(2 p_i / (π N)) = 20·sqrt(2·0.05/(π·1e6)) ≈ 0.0036.
        let grid = make_grid(0.0, 1.0, 20).unwrap();
        let f_in = DensityField::indicator(grid, 0.0, 1.0, 1.0);
        let pop = AgentPopulation::sample(&f_in, 1_000_000, 0.5, 3).unwrap();
        let hist = histogram(&pop, &grid).unwrap();
        let d = l1_distance(&hist, &f_in).unwrap();
        assert!(d <= 0.01, "l1 = {d}");
    }
}
