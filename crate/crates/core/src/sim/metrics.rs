use serde::{Deserialize, Serialize};

use crate::strategy::Decision;
use crate::CostWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Completed,
    FailedDeadline,
    FailedOutOfRange,
    FailedNoCandidate,
}

impl TaskStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskStatus::Completed => "completed",
            TaskStatus::FailedDeadline => "failed_deadline",
            TaskStatus::FailedOutOfRange => "failed_out_of_range",
            TaskStatus::FailedNoCandidate => "failed_no_candidate",
        }
    }

    pub fn is_failure(&self) -> bool {
        !matches!(self, TaskStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_id: u64,
    pub vehicle_id: usize,
    pub decision: Decision,
    /// Time from creation to completion, or to failure for failed tasks.
    pub latency_s: f64,
    pub energy_j: f64,
    pub status: TaskStatus,
    /// Completion time, or failure time for failed tasks.
    pub completed_at: f64,
    pub data_size_bits: f64,
}

impl TaskOutcome {
    pub fn cost(&self, weights: &CostWeights) -> f64 {
        weights.combine(self.latency_s, self.energy_j)
    }

    /// Whether a strategy was consulted for this task.
    pub fn was_decided(&self) -> bool {
        self.status != TaskStatus::FailedNoCandidate
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub completed: usize,
    pub failed_deadline: usize,
    pub failed_out_of_range: usize,
    pub failed_no_candidate: usize,
}

impl StatusCounts {
    pub fn record(&mut self, status: TaskStatus) {
        match status {
            TaskStatus::Completed => self.completed += 1,
            TaskStatus::FailedDeadline => self.failed_deadline += 1,
            TaskStatus::FailedOutOfRange => self.failed_out_of_range += 1,
            TaskStatus::FailedNoCandidate => self.failed_no_candidate += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.completed + self.failed_deadline + self.failed_out_of_range + self.failed_no_candidate
    }

    pub fn failed(&self) -> usize {
        self.total() - self.completed
    }
}

/// Aggregate metrics for one run. Means are taken over all generated tasks,
/// with failed tasks contributing their time-to-failure as latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tasks_total: usize,
    pub counts: StatusCounts,
    pub mean_latency_s: f64,
    pub mean_energy_j: f64,
    pub offloading_ratio: f64,
    /// Bits of successfully completed offloaded tasks per simulated second.
    pub throughput_bps: f64,
    pub failure_rate: f64,
    /// Uplink airtime inside the measurement window over `duration * rsu_count`.
    pub channel_utilization: f64,
    /// Mean of `-(latency + lambda * energy)` over tasks a strategy decided.
    pub mean_reward: f64,
    pub reward_history: Vec<f64>,
}

pub const OUTCOME_CSV_HEADER: &str = "task_id,decision,status,latency_s,energy_j,completed_at";

/// Per-task outcome rows, one line each, with a header. Floats use the
/// shortest representation that round-trips.
pub fn outcomes_csv(outcomes: &[TaskOutcome]) -> String {
    let mut out = String::with_capacity(64 * (outcomes.len() + 1));
    out.push_str(OUTCOME_CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            o.task_id,
            o.decision,
            o.status.as_str(),
            o.latency_s,
            o.energy_j,
            o.completed_at
        ));
    }
    out
}

/// Mean realized per-step reward over the tasks a strategy decided.
pub fn mean_step_reward(outcomes: &[TaskOutcome], weights: &CostWeights) -> f64 {
    let (sum, n) =
        outcomes.iter().filter(|o| o.was_decided()).fold((0.0, 0usize), |(s, n), o| (s - o.cost(weights), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl MetricsReport {
    pub fn compute(
        outcomes: &[TaskOutcome],
        duration: f64,
        rsu_count: usize,
        airtime_s: f64,
        weights: &CostWeights,
    ) -> Self {
        let mut counts = StatusCounts::default();
        let mut latency = 0.0;
        let mut energy = 0.0;
        let mut offloaded = 0usize;
        let mut delivered_bits = 0.0;
        for o in outcomes {
            counts.record(o.status);
            latency += o.latency_s;
            energy += o.energy_j;
            if o.decision.is_offload() {
                offloaded += 1;
                if o.status == TaskStatus::Completed {
                    delivered_bits += o.data_size_bits;
                }
            }
        }
        let n = outcomes.len();
        let ratio = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        let mean_reward = mean_step_reward(outcomes, weights);
        Self {
            tasks_total: n,
            counts,
            mean_latency_s: ratio(latency),
            mean_energy_j: ratio(energy),
            offloading_ratio: ratio(offloaded as f64),
            throughput_bps: delivered_bits / duration,
            failure_rate: ratio(counts.failed() as f64),
            channel_utilization: airtime_s / (duration * rsu_count as f64),
            mean_reward,
            reward_history: vec![mean_reward],
        }
    }
}
