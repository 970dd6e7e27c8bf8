//! Discrete-event simulation of task lifecycles and metric accounting.

mod arrivals;
mod engine;
mod event;
mod metrics;

pub use arrivals::generate_task_arrivals;
pub use engine::{run, run_with, RunOptions, SimulationResult};
pub use event::{Event, EventKind, EventQueue};
pub use metrics::{
    mean_step_reward, outcomes_csv, MetricsReport, StatusCounts, TaskOutcome, TaskStatus, OUTCOME_CSV_HEADER,
};
