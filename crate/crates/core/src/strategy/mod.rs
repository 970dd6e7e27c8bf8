//! Offloading decision interface and the baseline strategies.

mod hybrid;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{evaluate_local, offload_cost, rate_at_distance};
use crate::mobility::{candidate_rsus, World};
use crate::sim::TaskOutcome;
use crate::{CostWeights, RsuState, TaskSpec, VehicleState};

pub use hybrid::{decide_hybrid, Hybrid, HybridConfig, Models};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Local,
    Offload(usize),
}

impl Decision {
    pub fn is_offload(&self) -> bool {
        matches!(self, Decision::Offload(_))
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Local => f.write_str("local"),
            Decision::Offload(id) => write!(f, "offload:{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub rsu: RsuState,
    pub distance: f64,
    pub rate_bps: f64,
    pub queued_cycles: f64,
}

/// What a strategy sees when a task needs a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub task: TaskSpec,
    pub vehicle: VehicleState,
    /// In-range RSUs, nearest first.
    pub candidates: Vec<Candidate>,
    pub clock: f64,
}

impl Observation {
    /// Builds an observation from the world, with per-RSU backlog supplied by
    /// the caller (the world itself does not track queues).
    pub fn from_world(
        task: &TaskSpec,
        world: &World,
        max_candidates: usize,
        clock: f64,
        backlog: impl Fn(usize) -> f64,
    ) -> Self {
        let vehicle = world.vehicles[task.vehicle_id].clone();
        let candidates = candidate_rsus(&vehicle, world, max_candidates)
            .into_iter()
            .map(|(id, distance)| {
                let queued = backlog(id);
                let mut rsu = world.rsus[id].clone();
                rsu.queued_cycles = queued;
                Candidate {
                    rsu,
                    distance,
                    rate_bps: rate_at_distance(distance, vehicle.tx_power, &world.channel),
                    queued_cycles: queued,
                }
            })
            .collect();
        Self { task: task.clone(), vehicle, candidates, clock }
    }

    pub fn candidate_for(&self, rsu_id: usize) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.rsu.id == rsu_id)
    }
}

/// Myopic cost of one option for an observation, queue wait included.
pub fn option_cost(obs: &Observation, decision: Decision, weights: &CostWeights) -> Option<f64> {
    match decision {
        Decision::Local => Some(evaluate_local(&obs.task, &obs.vehicle, weights).cost),
        Decision::Offload(id) => {
            let c = obs.candidate_for(id)?;
            offload_cost(
                &obs.task,
                obs.vehicle.tx_power,
                c.rate_bps,
                c.rsu.cpu_frequency,
                c.queued_cycles,
                weights,
                true,
            )
            .ok()
            .map(|o| o.total.cost)
        }
    }
}

/// Every feasible option with its myopic cost: Local first, then candidates
/// in observation order. Zero-rate candidates are skipped.
pub fn option_costs(obs: &Observation, weights: &CostWeights) -> Vec<(Decision, f64)> {
    std::iter::once(Decision::Local)
        .chain(obs.candidates.iter().map(|c| Decision::Offload(c.rsu.id)))
        .filter_map(|d| option_cost(obs, d, weights).map(|c| (d, c)))
        .collect()
}

pub fn decide_local_only(_obs: &Observation) -> Decision {
    Decision::Local
}

pub fn decide_nearest(obs: &Observation) -> Decision {
    obs.candidates.first().map_or(Decision::Local, |c| Decision::Offload(c.rsu.id))
}

/// Uniform over Local and every candidate.
pub fn decide_random(obs: &Observation, rng: &mut ChaCha8Rng) -> Decision {
    let pick = rng.gen_range(0..=obs.candidates.len());
    if pick == 0 {
        Decision::Local
    } else {
        Decision::Offload(obs.candidates[pick - 1].rsu.id)
    }
}

/// Argmin of the myopic cost; ties prefer Local, then the lower RSU id.
pub fn decide_greedy_oracle(obs: &Observation, weights: &CostWeights) -> Decision {
    let mut best = (Decision::Local, evaluate_local(&obs.task, &obs.vehicle, weights).cost);
    for (decision, cost) in option_costs(obs, weights).into_iter().skip(1) {
        let better = cost < best.1
            || (cost == best.1 && matches!((decision, best.0), (Decision::Offload(a), Decision::Offload(b)) if a < b));
        if better {
            best = (decision, cost);
        }
    }
    best.0
}

/// A decision policy plugged into the simulation engine.
pub trait Strategy {
    fn name(&self) -> &str;

    fn decide(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Decision;

    /// Length of the batching window in seconds, if this strategy decides
    /// tasks in groups rather than one at a time.
    fn batch_window(&self) -> Option<f64> {
        None
    }

    fn decide_batch(&mut self, window: &[Observation], rng: &mut ChaCha8Rng) -> Vec<Decision> {
        window.iter().map(|obs| self.decide(obs, rng)).collect()
    }

    /// Called once per task when it reaches a terminal status.
    fn observe_outcome(&mut self, _outcome: &TaskOutcome) {}
}

impl<S: Strategy + ?Sized> Strategy for &mut S {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn decide(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Decision {
        (**self).decide(obs, rng)
    }
    fn batch_window(&self) -> Option<f64> {
        (**self).batch_window()
    }
    fn decide_batch(&mut self, window: &[Observation], rng: &mut ChaCha8Rng) -> Vec<Decision> {
        (**self).decide_batch(window, rng)
    }
    fn observe_outcome(&mut self, outcome: &TaskOutcome) {
        (**self).observe_outcome(outcome)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LocalOnly;

impl Strategy for LocalOnly {
    fn name(&self) -> &str {
        "local-only"
    }
    fn decide(&mut self, obs: &Observation, _rng: &mut ChaCha8Rng) -> Decision {
        decide_local_only(obs)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Nearest;

impl Strategy for Nearest {
    fn name(&self) -> &str {
        "nearest"
    }
    fn decide(&mut self, obs: &Observation, _rng: &mut ChaCha8Rng) -> Decision {
        decide_nearest(obs)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RandomChoice;

impl Strategy for RandomChoice {
    fn name(&self) -> &str {
        "random"
    }
    fn decide(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Decision {
        decide_random(obs, rng)
    }
}

#[derive(Debug, Clone, Default)]
pub struct GreedyOracle {
    pub weights: CostWeights,
}

impl GreedyOracle {
    pub fn new(weights: CostWeights) -> Self {
        Self { weights }
    }
}

impl Strategy for GreedyOracle {
    fn name(&self) -> &str {
        "greedy"
    }
    fn decide(&mut self, obs: &Observation, _rng: &mut ChaCha8Rng) -> Decision {
        decide_greedy_oracle(obs, &self.weights)
    }
}

/// Strategy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    LocalOnly,
    Nearest,
    Random,
    Greedy,
    Hybrid,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::LocalOnly,
        StrategyKind::Nearest,
        StrategyKind::Random,
        StrategyKind::Greedy,
        StrategyKind::Hybrid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::LocalOnly => "local-only",
            StrategyKind::Nearest => "nearest",
            StrategyKind::Random => "random",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            format!("unknown strategy `{s}` (expected one of local-only, nearest, random, greedy, hybrid)")
        })
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn local_only_always_local() {
        let mut rng = stream(1, Stream::Strategy);
        let obs = observation(vec![candidate(0, 10.0, 1e8, 0.0)]);
        assert_eq!(LocalOnly.decide(&obs, &mut rng), Decision::Local);
        assert_eq!(decide_local_only(&observation(vec![])), Decision::Local);
        assert_eq!(decide_local_only(&obs), decide_local_only(&obs));
    }

    #[test]
    fn nearest_picks_first_candidate() {
        let obs = observation(vec![candidate(4, 10.0, 1e8, 0.0), candidate(2, 50.0, 5e7, 0.0)]);
        assert_eq!(decide_nearest(&obs), Decision::Offload(4));
        assert_eq!(decide_nearest(&observation(vec![])), Decision::Local);
        // equidistant candidates arrive ordered by id from candidate_rsus
        let obs = observation(vec![candidate(1, 20.0, 1e8, 0.0), candidate(3, 20.0, 1e8, 0.0)]);
        assert_eq!(decide_nearest(&obs), Decision::Offload(1));
    }

    #[test]
    fn random_without_candidates_is_local() {
        let mut rng = stream(3, Stream::Strategy);
        let obs = observation(vec![]);
        assert!((0..100).all(|_| decide_random(&obs, &mut rng) == Decision::Local));
    }

    #[test]
    fn random_is_uniform_over_options() {
        let mut rng = stream(11, Stream::Strategy);
        let obs =
            observation(vec![candidate(0, 10.0, 1e8, 0.0), candidate(1, 20.0, 1e8, 0.0), candidate(2, 30.0, 1e8, 0.0)]);
        let mut counts = std::collections::BTreeMap::new();
        let n = 100_000;
        for _ in 0..n {
            *counts.entry(decide_random(&obs, &mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for (_, c) in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn random_is_seeded() {
        let obs = observation(vec![candidate(0, 10.0, 1e8, 0.0), candidate(1, 20.0, 1e8, 0.0)]);
        let draw = |seed| {
            let mut rng = stream(seed, Stream::Strategy);
            (0..50).map(|_| decide_random(&obs, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn greedy_prefers_cheaper_offload() {
        let w = CostWeights::new(0.5);
        let obs = observation(vec![candidate(0, 10.0, 1e8, 0.0)]);
        // local: 3e10 cycles at 1 GHz -> 30 s, offload a few seconds
        assert_eq!(decide_greedy_oracle(&obs, &w), Decision::Offload(0));
        assert_eq!(decide_greedy_oracle(&observation(vec![]), &w), Decision::Local);
    }

    #[test]
    fn greedy_falls_back_when_backlog_is_huge() {
        let w = CostWeights::new(0.5);
        let obs = observation(vec![candidate(0, 10.0, 1e8, 1e13)]);
        assert_eq!(decide_greedy_oracle(&obs, &w), Decision::Local);
    }

    #[test]
    fn greedy_tie_prefers_lower_id() {
        let w = CostWeights::new(0.5);
        let obs = observation(vec![candidate(5, 10.0, 1e8, 0.0), candidate(2, 10.0, 1e8, 0.0)]);
        assert_eq!(decide_greedy_oracle(&obs, &w), Decision::Offload(2));
    }

    #[test]
    fn greedy_tie_with_local_prefers_local() {
        // zero-lambda so only time matters; build an offload whose time equals local exactly
        let w = CostWeights::new(0.0);
        let mut obs = observation(vec![]);
        obs.task = TaskSpec::new(0, 0, 1e6, 1000.0, 0.0, 10.0).unwrap();
        // local = 1e9 / 1e9 = 1 s; offload = 1e6/2e6 + 1e9/2e9 = 1 s
        let mut c = candidate(0, 10.0, 2e6, 0.0);
        c.rsu.cpu_frequency = 2e9;
        obs.candidates.push(c);
        assert_eq!(decide_greedy_oracle(&obs, &w), Decision::Local);
    }

    #[test]
    fn strategy_kind_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("bogus".parse::<StrategyKind>().is_err());
    }
}
