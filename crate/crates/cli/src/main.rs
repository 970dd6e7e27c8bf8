mod commands;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use vanet_offload::strategy::StrategyKind;

use crate::error::Result;

#[derive(Parser)]
#[command(name = "vanet-offload", version, about = "Vehicular task offloading experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SeedArgs {
    /// Single scenario seed (overrides the config's seed).
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seed list such as `1,2,3` or `1-10`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

impl SeedArgs {
    fn resolve(&self, default: u64) -> Vec<u64> {
        match (&self.seed, &self.seeds) {
            (Some(s), _) => vec![*s],
            (None, Some(list)) => list.0.clone(),
            (None, None) => vec![default],
        }
    }
}

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("invalid seed `{t}`"));
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty seed range `{part}`"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(Seeds(out))
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one strategy over one or more seeds.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long, default_value = "nearest")]
        strategy: StrategyKind,
        /// Directory holding qtable.json and predictor.json (defaults to --out).
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Train both learned components, trace the swarm, and evaluate several
    /// strategies over several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: SeedArgs,
        /// Comma-separated strategies; all of them by default.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<StrategyKind>,
        /// Load trained models from here instead of training them.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Tasks in the traced assignment window.
        #[arg(long, default_value_t = 8)]
        window: usize,
    },
    /// Train the Q-table.
    TrainRl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured episode count.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train the offloading predictor.
    TrainPredictor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Record the swarm's convergence on one assignment window.
    PsoTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Tasks in the window.
        #[arg(long, default_value_t = 8)]
        window: usize,
    },
}

fn prepare(common: &Common, seed: Option<u64>) -> Result<vanet_offload::config::ExperimentConfig> {
    let mut cfg = commands::load_config(common.config.as_deref())?;
    if let Some(s) = seed {
        cfg.scenario.seed = s;
    }
    commands::ensure_dir(&common.out)?;
    Ok(cfg)
}

fn report(out: &Path, records: &[output::SummaryRecord]) {
    for r in records {
        println!(
            "{:<10} seed {:>5}: latency {:.4} s, energy {:.4} J, failure {:.4}, offloaded {:.4}",
            r.strategy.as_str(),
            r.seed,
            r.mean_latency_s,
            r.mean_energy_j,
            r.failure_rate,
            r.offloading_ratio
        );
    }
    println!("wrote {} runs to {}", records.len(), out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, seeds, strategy, models } => {
            let cfg = prepare(&common, None)?;
            let seeds = seeds.resolve(cfg.scenario.seed);
            let trained = match strategy {
                StrategyKind::Hybrid => {
                    Some(commands::load_models(&commands::models_dir(models.as_ref(), &common.out))?)
                }
                _ => None,
            };
            let records = commands::evaluate(&cfg, &[strategy], &seeds, trained.as_ref(), &common.out)?;
            report(&common.out, &records);
        }
        Command::Sweep { common, seeds, strategy, models, window } => {
            let cfg = prepare(&common, None)?;
            let seeds = seeds.resolve(cfg.scenario.seed);
            let kinds = if strategy.is_empty() { StrategyKind::ALL.to_vec() } else { strategy };
            let trained = match &models {
                Some(dir) => commands::load_models(dir)?,
                None => commands::Models {
                    qtable: commands::train_rl(&cfg, &common.out)?,
                    predictor: commands::train_predictor(&cfg, &common.out)?,
                },
            };
            let traced = vanet_offload::config::ExperimentConfig {
                scenario: vanet_offload::ScenarioConfig { seed: seeds[0], ..cfg.scenario.clone() },
                ..cfg.clone()
            };
            commands::pso_trace(&traced, window, &common.out)?;
            let records = commands::evaluate(&cfg, &kinds, &seeds, Some(&trained), &common.out)?;
            report(&common.out, &records);
        }
        Command::TrainRl { common, seed, episodes } => {
            let mut cfg = prepare(&common, seed)?;
            if let Some(e) = episodes {
                cfg.rl.episodes = e;
            }
            let q = commands::train_rl(&cfg, &common.out)?;
            println!(
                "trained {} episodes, {} states visited; wrote {}",
                cfg.rl.episodes,
                q.len(),
                common.out.display()
            );
        }
        Command::TrainPredictor { common, seed } => {
            let cfg = prepare(&common, seed)?;
            commands::train_predictor(&cfg, &common.out)?;
            println!("trained predictor on {} samples; wrote {}", cfg.predictor.samples, common.out.display());
        }
        Command::PsoTrace { common, seed, window } => {
            let cfg = prepare(&common, seed)?;
            let best = commands::pso_trace(&cfg, window, &common.out)?;
            println!("best window cost {best:.6}; wrote {}", common.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
