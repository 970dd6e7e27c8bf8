//! Deterministic discrete-event simulator for vehicular task offloading.
//!
//! Vehicles generate computational tasks and either run them on their own CPU
//! or ship them over a wireless uplink to a roadside unit (RSU). Decisions come
//! from pluggable [`strategy::Strategy`] implementations: simple baselines, a
//! per-task greedy oracle, and a hybrid pipeline that gates with a logistic
//! predictor, acts with a tabular Q-learning agent and refines batches of
//! decisions with particle swarm optimization.
//!
//! The cost model ([`domain`]) and the swarm optimizer ([`pso`]) are generic
//! over the scalar type; the rest of the crate runs in `f64` through the
//! aliases below.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod domain;
pub mod error;
pub mod mobility;
pub mod num;
pub mod predictor;
pub mod pso;
pub mod rl;
pub mod rng;
pub mod sim;
pub mod strategy;

pub use error::{Error, Result};
pub use num::Scalar;

pub type Point = domain::Point<f64>;
pub type TaskSpec = domain::TaskSpec<f64>;
pub type VehicleState = domain::VehicleState<f64>;
pub type RsuState = domain::RsuState<f64>;
pub type ChannelParams = domain::ChannelParams<f64>;
pub type CostWeights = domain::CostWeights<f64>;
pub type CostBreakdown = domain::CostBreakdown<f64>;
pub type OffloadCost = domain::OffloadCost<f64>;

pub type PsoConfig = pso::PsoConfig<f64>;
pub type SearchSpace = pso::SearchSpace<f64>;
pub type Swarm = pso::Swarm<f64>;
pub type PsoResult = pso::PsoResult<f64>;

pub use mobility::{MobilityKind, ScenarioConfig, World};
pub use sim::{MetricsReport, SimulationResult, TaskOutcome, TaskStatus};
pub use strategy::{Decision, Observation, Strategy};
