//! Logistic-regression gate predicting whether offloading beats local
//! execution, trained on greedy-oracle labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::ScenarioConfig;
use crate::sim;
use crate::strategy::{decide_greedy_oracle, Decision, Observation, Strategy};
use crate::{ChannelParams, CostWeights};

pub const FEATURES: usize = 6;

pub type FeatureVector = [f64; FEATURES];

pub const FEATURE_NAMES: [&str; FEATURES] = [
    "log10_data_size_bits",
    "intensity_cycles_per_bit",
    "log10_best_rate_bps",
    "best_backlog_s",
    "vehicle_speed",
    "candidate_count",
];

pub fn features(obs: &Observation) -> FeatureVector {
    let (rate, backlog) = match obs.candidates.first() {
        Some(c) if c.rate_bps > 0.0 => (c.rate_bps.log10(), c.queued_cycles / c.rsu.cpu_frequency),
        Some(c) => (-1.0, c.queued_cycles / c.rsu.cpu_frequency),
        None => (-1.0, 0.0),
    };
    [
        obs.task.data_size_bits.log10(),
        obs.task.intensity_cycles_per_bit,
        rate,
        backlog,
        obs.vehicle.speed,
        obs.candidates.len() as f64,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: bool,
}

/// Label is `true` when the greedy oracle offloads.
pub fn label_dataset(observations: &[Observation], weights: &CostWeights) -> Vec<Sample> {
    observations
        .iter()
        .map(|obs| Sample { features: features(obs), label: decide_greedy_oracle(obs, weights).is_offload() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModel {
    pub weights: FeatureVector,
    pub bias: f64,
    pub feature_means: FeatureVector,
    pub feature_stds: FeatureVector,
}

impl LinearModel {
    pub fn standardize(&self, x: &FeatureVector) -> FeatureVector {
        std::array::from_fn(|i| (x[i] - self.feature_means[i]) / self.feature_stds[i])
    }

    pub fn logit(&self, x: &FeatureVector) -> f64 {
        let z = self.standardize(x);
        self.bias + z.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn predict_observation(&self, obs: &Observation) -> f64 {
        self.predict(&features(obs))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.weights) || !self.bias.is_finite() || !finite(&self.feature_means) {
            return Err(Error::invalid("predictor", "model holds non-finite values"));
        }
        if !self.feature_stds.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("feature_stds", "must be positive"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean cross-entropy of a model on a dataset.
pub fn log_loss(model: &LinearModel, data: &[Sample]) -> f64 {
    let sum: f64 = data
        .iter()
        .map(|s| {
            let z = model.logit(&s.features);
            if s.label {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    sum / data.len() as f64
}

pub fn accuracy(model: &LinearModel, data: &[Sample]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data.iter().filter(|s| (model.predict(&s.features) >= 0.5) == s.label).count();
    hits as f64 / data.len() as f64
}

#[derive(Debug, Clone)]
pub struct Training {
    pub model: LinearModel,
    /// Loss before training followed by the loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent on cross-entropy from zero weights.
pub fn train_model(data: &[Sample], epochs: usize, learning_rate: f64) -> Result<Training> {
    if data.is_empty() {
        return Err(Error::DegenerateDataset("dataset is empty".into()));
    }
    let positives = data.iter().filter(|s| s.label).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateDataset(format!("all {} samples carry the same label", data.len())));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::invalid("learning_rate", "must be positive"));
    }
    if data.iter().any(|s| s.features.iter().any(|x| !x.is_finite())) {
        return Err(Error::DegenerateDataset("non-finite feature value".into()));
    }

    let n = data.len() as f64;
    let mut means = [0.0; FEATURES];
    for s in data {
        for (m, x) in means.iter_mut().zip(&s.features) {
            *m += x / n;
        }
    }
    let mut stds = [0.0; FEATURES];
    for s in data {
        for i in 0..FEATURES {
            stds[i] += (s.features[i] - means[i]).powi(2) / n;
        }
    }
    for s in stds.iter_mut() {
        *s = s.sqrt();
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }

    let mut model = LinearModel { weights: [0.0; FEATURES], bias: 0.0, feature_means: means, feature_stds: stds };
    let standardized: Vec<FeatureVector> = data.iter().map(|s| model.standardize(&s.features)).collect();
    let mut history = Vec::with_capacity(epochs + 1);
    history.push(log_loss(&model, data));
    for _ in 0..epochs {
        let mut grad_w = [0.0; FEATURES];
        let mut grad_b = 0.0;
        for (z, s) in standardized.iter().zip(data) {
            let logit = model.bias + z.iter().zip(&model.weights).map(|(a, w)| a * w).sum::<f64>();
            let err = sigmoid(logit) - if s.label { 1.0 } else { 0.0 };
            for (g, x) in grad_w.iter_mut().zip(z) {
                *g += err * x;
            }
            grad_b += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * g / n;
        }
        model.bias -= learning_rate * grad_b / n;
        history.push(log_loss(&model, data));
    }
    Ok(Training { model, loss_history: history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Fraction of samples held out for evaluation.
    pub holdout_fraction: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self { samples: 10_000, epochs: 500, learning_rate: 0.1, holdout_fraction: 0.2 }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::invalid("samples", "must be >= 2"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::invalid("holdout_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Greedy-oracle policy that remembers every observation it is shown.
struct Recorder {
    weights: CostWeights,
    seen: Vec<Observation>,
}

impl Strategy for Recorder {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&mut self, obs: &Observation, _rng: &mut rand_chacha::ChaCha8Rng) -> Decision {
        self.seen.push(obs.clone());
        decide_greedy_oracle(obs, &self.weights)
    }
}

/// Collects `count` observations from greedy-oracle runs of the scenario,
/// using seeds `scenario.seed`, `scenario.seed + 1`, ... until enough tasks
/// have been decided.
pub fn sample_observations(
    scenario: &ScenarioConfig,
    channel: &ChannelParams,
    weights: &CostWeights,
    count: usize,
) -> Result<Vec<Observation>> {
    let mut recorder = Recorder { weights: *weights, seen: Vec::with_capacity(count) };
    let mut seed = scenario.seed;
    let mut empty_runs = 0;
    while recorder.seen.len() < count {
        let before = recorder.seen.len();
        let cfg = ScenarioConfig { seed, ..scenario.clone() };
        sim::run(&cfg, &mut recorder, channel, weights)?;
        if recorder.seen.len() == before {
            empty_runs += 1;
            if empty_runs >= 10 {
                return Err(Error::DegenerateDataset("scenario produces no decided tasks".into()));
            }
        }
        seed = seed.wrapping_add(1);
    }
    recorder.seen.truncate(count);
    Ok(recorder.seen)
}

/// Splits off the trailing `fraction` of samples as a holdout set.
pub fn split_holdout(data: &[Sample], fraction: f64) -> (&[Sample], &[Sample]) {
    let holdout = ((data.len() as f64) * fraction).round() as usize;
    data.split_at(data.len() - holdout.min(data.len()))
}
