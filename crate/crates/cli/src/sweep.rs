use invshadow_core::deciders::{decide, DecideError, DeciderConfig, ISQuery};
use invshadow_core::{Horizon, MethodClass, Mode, Outcome, SystemMap, TubeHorizon};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error("{0} grid must be nonempty, positive and strictly increasing")]
    Grid(&'static str),
    #[error("verdicts not monotone: {0}")]
    NotMonotone(String),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub horizon: Horizon,
    pub mode: Mode,
    pub class: MethodClass,
    pub decider: DeciderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub eps: f64,
    pub delta: f64,
    pub verdict: Outcome,
    /// `min_x N*(x)`.
    pub min_tube_horizon: Option<TubeHorizon>,
    pub witnesses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEntry {
    pub eps: f64,
    /// Largest grid δ with a true verdict, if any.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub system: String,
    pub mode: Mode,
    pub class: MethodClass,
    pub horizon: Horizon,
    pub eps_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    /// Row-major: `cells[i * delta_grid.len() + j]` is `(eps_grid[i], delta_grid[j])`.
    pub cells: Vec<PhaseCell>,
    pub largest_delta: Vec<ThresholdEntry>,
    pub undetermined: usize,
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &PhaseCell {
        &self.cells[i * self.delta_grid.len() + j]
    }
}

fn check_grid(v: &[f64], name: &'static str) -> Result<(), SweepError> {
    let ok = !v.is_empty()
        && v.iter().all(|x| x.is_finite() && *x > 0.0)
        && v.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(SweepError::Grid(name))
    }
}

pub fn run_phase_sweep(system: &SystemMap, config: &SweepConfig) -> Result<PhaseDiagram, SweepError> {
    check_grid(&config.eps, "eps")?;
    check_grid(&config.delta, "delta")?;
    let mut cells = Vec::with_capacity(config.eps.len() * config.delta.len());
    for &eps in &config.eps {
        for &delta in &config.delta {
            let query = ISQuery::new(system, eps, delta, config.horizon, config.mode, config.class)?
                .with_config(config.decider);
            let v = decide(&query)?;
            cells.push(PhaseCell {
                eps,
                delta,
                verdict: v.overall,
                min_tube_horizon: v.min_tube_horizon(),
                witnesses: v.witness_count(),
            });
        }
    }

    let cols = config.delta.len();
    let at = |i: usize, j: usize| cells[i * cols + j].verdict;
    for i in 0..config.eps.len() {
        for j in 0..cols {
            if at(i, j) != Outcome::True {
                continue;
            }
            if i + 1 < config.eps.len() && at(i + 1, j) == Outcome::False {
                return Err(SweepError::NotMonotone(format!(
                    "true at (ε={}, δ={}) but false at ε={}",
                    config.eps[i], config.delta[j], config.eps[i + 1]
                )));
            }
            if j > 0 && at(i, j - 1) == Outcome::False {
                return Err(SweepError::NotMonotone(format!(
                    "true at (ε={}, δ={}) but false at δ={}",
                    config.eps[i], config.delta[j], config.delta[j - 1]
                )));
            }
        }
    }

    let largest_delta = config
        .eps
        .iter()
        .enumerate()
        .map(|(i, &eps)| ThresholdEntry {
            eps,
            delta: (0..cols).rev().find(|&j| at(i, j) == Outcome::True).map(|j| config.delta[j]),
        })
        .collect();
    let undetermined = cells.iter().filter(|c| c.verdict == Outcome::Undetermined).count();

    Ok(PhaseDiagram {
        system: system.name().to_string(),
        mode: config.mode,
        class: config.class,
        horizon: config.horizon,
        eps_grid: config.eps.clone(),
        delta_grid: config.delta.clone(),
        cells,
        largest_delta,
        undetermined,
    })
}
