//! Joint target assignment for a window of tasks.
//!
//! A particle holds one coordinate per task. Coordinate `x_i` is rounded and
//! clamped to `0..=k_i` where `k_i` is that task's candidate count: `0` runs the
//! task locally and `j` offloads it to its `j`-th nearest candidate. RSU
//! backlogs accumulate across the window in order, so tasks sent to the same
//! RSU see each other's work as queue wait.

use std::collections::BTreeMap;

use crate::domain::{evaluate_local, offload_cost};
use crate::error::Result;
use crate::strategy::{Decision, Observation};
use crate::{CostWeights, PsoConfig, PsoResult, SearchSpace};

fn slot(x: f64, candidates: usize) -> usize {
    let r = x.round();
    if r <= 0.0 || !r.is_finite() {
        0
    } else {
        (r as usize).min(candidates)
    }
}

pub fn decode(position: &[f64], window: &[Observation]) -> Vec<Decision> {
    position
        .iter()
        .zip(window)
        .map(|(&x, obs)| match slot(x, obs.candidates.len()) {
            0 => Decision::Local,
            j => Decision::Offload(obs.candidates[j - 1].rsu.id),
        })
        .collect()
}

/// Summed cost of a concrete assignment, with sequential backlog accumulation.
pub fn assignment_cost(decisions: &[Decision], window: &[Observation], weights: &CostWeights) -> f64 {
    let mut extra: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (decision, obs) in decisions.iter().zip(window) {
        let local = || evaluate_local(&obs.task, &obs.vehicle, weights).cost;
        total += match decision {
            Decision::Local => local(),
            Decision::Offload(id) => match obs.candidate_for(*id) {
                Some(c) => {
                    let added = extra.entry(*id).or_insert(0.0);
                    let cost = offload_cost(
                        &obs.task,
                        obs.vehicle.tx_power,
                        c.rate_bps,
                        c.rsu.cpu_frequency,
                        c.queued_cycles + *added,
                        weights,
                        true,
                    );
                    *added += obs.task.total_cycles;
                    cost.map(|o| o.total.cost).unwrap_or_else(|_| local())
                }
                None => local(),
            },
        };
    }
    total
}

pub fn assignment_fitness(position: &[f64], window: &[Observation], weights: &CostWeights) -> f64 {
    assignment_cost(&decode(position, window), window, weights)
}

/// Per-task bounds `[-0.5, k_i + 0.5]`.
pub fn assignment_space(window: &[Observation], velocity_fraction: f64) -> Result<SearchSpace> {
    SearchSpace::new(window.iter().map(|o| (-0.5, o.candidates.len() as f64 + 0.5)).collect(), velocity_fraction)
}

pub fn optimize_assignment(
    window: &[Observation],
    weights: &CostWeights,
    config: &PsoConfig,
) -> Result<(Vec<Decision>, PsoResult)> {
    let space = assignment_space(window, config.velocity_fraction)?;
    let fitness = |x: &[f64]| assignment_fitness(x, window, weights);
    let result = super::optimize(&fitness, &space, config)?;
    Ok((decode(&result.best_position, window), result))
}
