use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use vanet_offload::config::ExperimentConfig;
use vanet_offload::predictor::{self, label_dataset, sample_observations, split_holdout, train_model, LinearModel};
use vanet_offload::pso::assignment::optimize_assignment;
use vanet_offload::rl::{self, QTable, StateBins, StateKey};
use vanet_offload::sim::{self, outcomes_csv};
use vanet_offload::strategy::{GreedyOracle, Hybrid, LocalOnly, Nearest, RandomChoice, StrategyKind};
use vanet_offload::{ScenarioConfig, Strategy};

use crate::error::{CliError, Result};
use crate::output::{self, SummaryRecord};

pub const QTABLE_FILE: &str = "qtable.json";
pub const PREDICTOR_FILE: &str = "predictor.json";
pub const DATASET_FILE: &str = "dataset.csv";

#[derive(Debug, Clone)]
pub struct Models {
    pub predictor: LinearModel,
    pub qtable: QTable<StateKey>,
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(CliError::MissingModel(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_models(dir: &Path) -> Result<Models> {
    let qtable = QTable::from_json(&read(&dir.join(QTABLE_FILE))?)?;
    let predictor = LinearModel::from_json(&read(&dir.join(PREDICTOR_FILE))?)?;
    Ok(Models { predictor, qtable })
}

pub fn train_rl(cfg: &ExperimentConfig, out: &Path) -> Result<QTable<StateKey>> {
    let result = rl::train(&cfg.scenario, &cfg.rl, &cfg.channel, &cfg.weights)?;
    output::write_text(&out.join(QTABLE_FILE), &result.qtable.to_json())?;
    output::write_reward_convergence(out, &result.reward_history)?;
    let h = &result.reward_history;
    log::info!(
        "trained {} episodes over {} states; reward {:.4} -> {:.4}",
        h.len(),
        result.qtable.len(),
        h.first().copied().unwrap_or(f64::NAN),
        h.last().copied().unwrap_or(f64::NAN)
    );
    Ok(result.qtable)
}

pub fn train_predictor(cfg: &ExperimentConfig, out: &Path) -> Result<LinearModel> {
    let pc = &cfg.predictor;
    let observations = sample_observations(&cfg.scenario, &cfg.channel, &cfg.weights, pc.samples)?;
    let data = label_dataset(&observations, &cfg.weights);
    let rows = data.iter().map(|s| {
        let mut row: Vec<String> = s.features.iter().map(f64::to_string).collect();
        row.push(u8::from(s.label).to_string());
        row
    });
    let mut header = predictor::FEATURE_NAMES.to_vec();
    header.push("label");
    output::write_rows(&out.join(DATASET_FILE), &header, rows)?;

    let (train_set, holdout) = split_holdout(&data, pc.holdout_fraction);
    let training = train_model(train_set, pc.epochs, pc.learning_rate)?;
    output::write_text(&out.join(PREDICTOR_FILE), &training.model.to_json())?;
    if !holdout.is_empty() {
        log::info!(
            "held-out accuracy {:.4} on {} samples",
            predictor::accuracy(&training.model, holdout),
            holdout.len()
        );
    }
    Ok(training.model)
}

/// Optimizes the assignment of the first `tasks` decided tasks of the
/// scenario as one window and writes the swarm's convergence.
pub fn pso_trace(cfg: &ExperimentConfig, tasks: usize, out: &Path) -> Result<f64> {
    let window = sample_observations(&cfg.scenario, &cfg.channel, &cfg.weights, tasks)?;
    let (_, result) = optimize_assignment(&window, &cfg.weights, &cfg.pso)?;
    output::write_pso_convergence(out, &result.history)?;
    Ok(result.best_fitness)
}

fn build(
    kind: StrategyKind,
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig,
    models: Option<&Models>,
) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::LocalOnly => Box::new(LocalOnly),
        StrategyKind::Nearest => Box::new(Nearest),
        StrategyKind::Random => Box::new(RandomChoice),
        StrategyKind::Greedy => Box::new(GreedyOracle::new(cfg.weights)),
        StrategyKind::Hybrid => Box::new(Hybrid {
            predictor: models.map(|m| m.predictor.clone()),
            qtable: models.map(|m| m.qtable.clone()),
            bins: StateBins::from_scenario(scenario, &cfg.channel),
            pso: cfg.pso.clone(),
            config: cfg.hybrid.clone(),
            weights: cfg.weights,
        }),
    }
}

/// Runs every (strategy, seed) pair in parallel, writing one outcome log
/// per run, then the summary and figure series once all runs are done.
pub fn evaluate(
    cfg: &ExperimentConfig,
    kinds: &[StrategyKind],
    seeds: &[u64],
    models: Option<&Models>,
    out: &Path,
) -> Result<Vec<SummaryRecord>> {
    let jobs: Vec<(StrategyKind, u64)> = kinds.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect();
    let records = jobs
        .par_iter()
        .map(|&(kind, seed)| {
            let scenario = ScenarioConfig { seed, ..cfg.scenario.clone() };
            let mut strategy = build(kind, cfg, &scenario, models);
            let start = Instant::now();
            let result = sim::run(&scenario, strategy.as_mut(), &cfg.channel, &cfg.weights)?;
            let elapsed = start.elapsed().as_secs_f64();
            output::write_text(&out.join(output::metrics_file_name(kind, seed)), &outcomes_csv(&result.outcomes))?;
            log::debug!("{kind} seed {seed}: {} tasks in {elapsed:.3}s", result.tasks.len());
            Ok(SummaryRecord::new(kind, seed, &result.report, elapsed))
        })
        .collect::<Result<Vec<_>>>()?;
    output::write_summary(out, &records)?;
    output::write_evaluation_figures(out, &records)?;
    Ok(records)
}

pub fn models_dir(explicit: Option<&PathBuf>, out: &Path) -> PathBuf {
    explicit.cloned().unwrap_or_else(|| out.to_path_buf())
}
