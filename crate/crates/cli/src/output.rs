//! On-disk artifacts: per-run outcome logs, the run summary and the
//! plot-ready figure series.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vanet_offload::strategy::StrategyKind;
use vanet_offload::MetricsReport;

use crate::error::{CliError, Result};

/// One evaluated (strategy, seed) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub tasks_total: usize,
    pub completed: usize,
    pub failed_deadline: usize,
    pub failed_out_of_range: usize,
    pub failed_no_candidate: usize,
    pub mean_latency_s: f64,
    pub mean_energy_j: f64,
    pub offloading_ratio: f64,
    pub throughput_bps: f64,
    pub failure_rate: f64,
    pub channel_utilization: f64,
    pub mean_reward: f64,
    pub wall_clock_s: f64,
}

impl SummaryRecord {
    pub fn new(strategy: StrategyKind, seed: u64, r: &MetricsReport, wall_clock_s: f64) -> Self {
        Self {
            strategy,
            seed,
            tasks_total: r.tasks_total,
            completed: r.counts.completed,
            failed_deadline: r.counts.failed_deadline,
            failed_out_of_range: r.counts.failed_out_of_range,
            failed_no_candidate: r.counts.failed_no_candidate,
            mean_latency_s: r.mean_latency_s,
            mean_energy_j: r.mean_energy_j,
            offloading_ratio: r.offloading_ratio,
            throughput_bps: r.throughput_bps,
            failure_rate: r.failure_rate,
            channel_utilization: r.channel_utilization,
            mean_reward: r.mean_reward,
            wall_clock_s,
        }
    }
}

pub fn metrics_file_name(strategy: StrategyKind, seed: u64) -> String {
    format!("metrics_{strategy}_{seed}.csv")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_summary(dir: &Path, records: &[SummaryRecord]) -> Result<()> {
    let text = serde_json::to_string_pretty(records).expect("summary serializes");
    write_text(&dir.join("summary.json"), &text)
}

/// Writes a CSV with the given header, one row per record.
pub fn write_rows<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

type Series = (&'static str, [&'static str; 2], fn(&SummaryRecord) -> [f64; 2]);

/// The three per-run figure series derived from the summary.
pub fn write_evaluation_figures(dir: &Path, records: &[SummaryRecord]) -> Result<()> {
    let series: [Series; 3] = [
        ("fig_latency_energy.csv", ["mean_latency_s", "mean_energy_j"], |r| [r.mean_latency_s, r.mean_energy_j]),
        ("fig_offload_throughput.csv", ["offloading_ratio", "throughput_bps"], |r| {
            [r.offloading_ratio, r.throughput_bps]
        }),
        ("fig_failure_channel.csv", ["failure_rate", "channel_utilization"], |r| {
            [r.failure_rate, r.channel_utilization]
        }),
    ];
    for (name, [a, b], pick) in series {
        let rows = records.iter().map(|r| {
            let [x, y] = pick(r);
            [r.strategy.to_string(), r.seed.to_string(), x.to_string(), y.to_string()]
        });
        write_rows(&dir.join(name), &["strategy", "seed", a, b], rows)?;
    }
    Ok(())
}

pub fn write_reward_convergence(dir: &Path, history: &[f64]) -> Result<()> {
    let rows = history.iter().enumerate().map(|(e, r)| [e.to_string(), r.to_string()]);
    write_rows(&dir.join("fig_reward_convergence.csv"), &["episode", "mean_reward"], rows)
}

pub fn write_pso_convergence(dir: &Path, history: &[f64]) -> Result<()> {
    let rows = history.iter().enumerate().map(|(i, f)| [(i + 1).to_string(), f.to_string()]);
    write_rows(&dir.join("fig_pso_convergence.csv"), &["iteration", "best_fitness"], rows)
}
