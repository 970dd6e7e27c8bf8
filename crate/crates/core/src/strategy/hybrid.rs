//! Gate, act, refine: the predictor screens out tasks that should stay local,
//! the Q-table picks a target for the rest, and (when batching) a swarm
//! re-optimizes each window's assignment jointly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{decide_greedy_oracle, Decision, Observation, Strategy};
use crate::error::{Error, Result};
use crate::predictor::LinearModel;
use crate::pso::assignment::optimize_assignment;
use crate::rl::{action_to_decision, discretize, QTable, StateBins, StateKey};
use crate::{CostWeights, PsoConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    pub batching: bool,
    pub batch_window_s: f64,
    /// Act only on actions tried in training, and use the greedy oracle in
    /// states where none were.
    pub fallback_unvisited: bool,
    pub gate_threshold: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self { batching: false, batch_window_s: 1.0, fallback_unvisited: true, gate_threshold: 0.5 }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.batch_window_s > 0.0 && self.batch_window_s.is_finite()) {
            return Err(Error::invalid("batch_window_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gate_threshold) {
            return Err(Error::invalid("gate_threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Trained components. Both must be present for the pipeline to run.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub predictor: &'a LinearModel,
    pub qtable: &'a QTable<StateKey>,
    pub bins: &'a StateBins,
}

/// Gate and act for one task. Without models this is the greedy oracle.
pub fn decide_hybrid(
    obs: &Observation,
    models: Option<Models<'_>>,
    config: &HybridConfig,
    weights: &CostWeights,
) -> Decision {
    let Some(m) = models else {
        return decide_greedy_oracle(obs, weights);
    };
    if m.predictor.predict_observation(obs) < config.gate_threshold {
        return Decision::Local;
    }
    let state = discretize(obs, m.bins);
    let action = if config.fallback_unvisited {
        match m.qtable.greedy_visited_action(&state, state.valid_actions()) {
            Some(a) => a,
            None => return decide_greedy_oracle(obs, weights),
        }
    } else {
        m.qtable.greedy_action(&state, state.valid_actions())
    };
    action_to_decision(action, obs)
}

#[derive(Debug, Clone)]
pub struct Hybrid {
    pub predictor: Option<LinearModel>,
    pub qtable: Option<QTable<StateKey>>,
    pub bins: StateBins,
    pub pso: PsoConfig,
    pub config: HybridConfig,
    pub weights: CostWeights,
}

impl Hybrid {
    pub fn models(&self) -> Option<Models<'_>> {
        match (&self.predictor, &self.qtable) {
            (Some(predictor), Some(qtable)) => Some(Models { predictor, qtable, bins: &self.bins }),
            _ => None,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.models().is_some()
    }
}

impl Strategy for Hybrid {
    fn name(&self) -> &str {
        "hybrid"
    }

    fn decide(&mut self, obs: &Observation, _rng: &mut ChaCha8Rng) -> Decision {
        decide_hybrid(obs, self.models(), &self.config, &self.weights)
    }

    fn batch_window(&self) -> Option<f64> {
        (self.config.batching && self.is_trained()).then_some(self.config.batch_window_s)
    }

    fn decide_batch(&mut self, window: &[Observation], rng: &mut ChaCha8Rng) -> Vec<Decision> {
        let mut decisions: Vec<Decision> =
            window.iter().map(|obs| decide_hybrid(obs, self.models(), &self.config, &self.weights)).collect();
        let Some(m) = self.models() else {
            return decisions;
        };
        let open: Vec<usize> = (0..window.len())
            .filter(|&i| {
                !window[i].candidates.is_empty()
                    && m.predictor.predict_observation(&window[i]) >= self.config.gate_threshold
            })
            .collect();
        // one seed per window, drawn even when the window is empty so the
        // sequence does not depend on gate outcomes
        let seed = rng.gen::<u64>();
        if open.is_empty() {
            return decisions;
        }
        let sub: Vec<Observation> = open.iter().map(|&i| window[i].clone()).collect();
        let pso = PsoConfig { seed, ..self.pso.clone() };
        match optimize_assignment(&sub, &self.weights, &pso) {
            Ok((assigned, _)) => {
                for (&i, d) in open.iter().zip(assigned) {
                    decisions[i] = d;
                }
            }
            Err(e) => log::warn!("window refinement failed, keeping agent decisions: {e}"),
        }
        decisions
    }
}
