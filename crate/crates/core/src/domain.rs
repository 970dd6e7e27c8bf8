//! Closed-form latency and energy model for local execution and RSU offloading.
//!
//! Everything here is a pure function of its inputs. The task's total work is
//! always `data_size_bits * intensity_cycles_per_bit`; every time and energy
//! expression is written in terms of that total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// One computational task generated by a vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec<T> {
    pub id: u64,
    pub vehicle_id: usize,
    pub data_size_bits: T,
    pub intensity_cycles_per_bit: T,
    pub total_cycles: T,
    pub created_at: T,
    /// Absolute time by which the task must complete.
    pub deadline: T,
}

impl<T: Scalar> TaskSpec<T> {
    pub fn new(
        id: u64,
        vehicle_id: usize,
        data_size_bits: T,
        intensity_cycles_per_bit: T,
        created_at: T,
        deadline: T,
    ) -> Result<Self> {
        if !(data_size_bits > T::zero() && data_size_bits.is_finite()) {
            return Err(Error::invalid("data_size_bits", "must be positive and finite"));
        }
        if !(intensity_cycles_per_bit > T::zero() && intensity_cycles_per_bit.is_finite()) {
            return Err(Error::invalid("intensity_cycles_per_bit", "must be positive and finite"));
        }
        if !(deadline > created_at) {
            return Err(Error::invalid("deadline", "must be later than created_at"));
        }
        Ok(Self {
            id,
            vehicle_id,
            data_size_bits,
            intensity_cycles_per_bit,
            total_cycles: data_size_bits * intensity_cycles_per_bit,
            created_at,
            deadline,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState<T> {
    pub id: usize,
    pub position: Point<T>,
    pub speed: T,
    pub heading: T,
    /// Local CPU frequency in cycles/s.
    pub cpu_frequency: T,
    /// Uplink transmit power in watts.
    pub tx_power: T,
    /// Switched-capacitance energy coefficient (J·s²/cycle³).
    pub energy_coefficient: T,
}

impl<T: Scalar> VehicleState<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cpu_frequency > T::zero()) {
            return Err(Error::invalid("cpu_frequency", "must be > 0"));
        }
        if !(self.tx_power > T::zero()) {
            return Err(Error::invalid("tx_power", "must be > 0"));
        }
        if !(self.energy_coefficient > T::zero()) {
            return Err(Error::invalid("energy_coefficient", "must be > 0"));
        }
        if !(self.speed >= T::zero()) {
            return Err(Error::invalid("speed", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsuState<T> {
    pub id: usize,
    pub position: Point<T>,
    pub cpu_frequency: T,
    pub coverage_radius: T,
    /// Work already committed to this RSU, in cycles.
    pub queued_cycles: T,
}

impl<T: Scalar> RsuState<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cpu_frequency > T::zero()) {
            return Err(Error::invalid("cpu_frequency", "must be > 0"));
        }
        if !(self.coverage_radius > T::zero()) {
            return Err(Error::invalid("coverage_radius", "must be > 0"));
        }
        if !(self.queued_cycles >= T::zero()) {
            return Err(Error::invalid("queued_cycles", "must be >= 0"));
        }
        Ok(())
    }
}

/// Uplink channel: log-distance path loss feeding a Shannon-capacity rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams<T> {
    pub bandwidth: T,
    pub noise_power: T,
    /// Gain at the 1 m reference distance.
    pub reference_gain: T,
    pub path_loss_exponent: T,
    pub min_distance: T,
}

impl<T: Scalar> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            bandwidth: lit(10e6),
            noise_power: lit(1e-13),
            reference_gain: lit(1e-4),
            path_loss_exponent: lit(3.0),
            min_distance: lit(1.0),
        }
    }
}

impl<T: Scalar> ChannelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > T::zero()) {
            return Err(Error::invalid("bandwidth", "must be > 0"));
        }
        if !(self.noise_power > T::zero()) {
            return Err(Error::invalid("noise_power", "must be > 0"));
        }
        if !(self.reference_gain > T::zero()) {
            return Err(Error::invalid("reference_gain", "must be > 0"));
        }
        if !(self.path_loss_exponent >= T::one()) {
            return Err(Error::invalid("path_loss_exponent", "must be >= 1"));
        }
        if !(self.min_distance > T::zero()) {
            return Err(Error::invalid("min_distance", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights<T> {
    /// Joules-to-seconds exchange rate in the objective.
    pub lambda: T,
}

impl<T: Scalar> Default for CostWeights<T> {
    fn default() -> Self {
        Self { lambda: lit(0.5) }
    }
}

impl<T: Scalar> CostWeights<T> {
    pub fn new(lambda: T) -> Self {
        Self { lambda }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero() && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn combine(&self, time_s: T, energy_j: T) -> T {
        time_s + self.lambda * energy_j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<T> {
    pub time_s: T,
    pub energy_j: T,
    pub cost: T,
}

impl<T: Scalar> CostBreakdown<T> {
    pub fn new(time_s: T, energy_j: T, weights: &CostWeights<T>) -> Self {
        Self { time_s, energy_j, cost: weights.combine(time_s, energy_j) }
    }
}

/// Offload cost with its latency components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadCost<T> {
    pub rate_bps: T,
    pub t_tx: T,
    pub t_wait: T,
    pub t_exec: T,
    pub total: CostBreakdown<T>,
}

/// `g0 * max(d, d_min)^(-alpha)`.
pub fn channel_gain<T: Scalar>(distance: T, params: &ChannelParams<T>) -> T {
    let d = distance.max(params.min_distance);
    params.reference_gain * d.powf(-params.path_loss_exponent)
}

/// Received signal-to-noise ratio (linear) at `distance`.
pub fn snr<T: Scalar>(distance: T, tx_power: T, params: &ChannelParams<T>) -> T {
    tx_power * channel_gain(distance, params) / params.noise_power
}

/// Shannon capacity `B log2(1 + snr)`.
pub fn rate_from_snr<T: Scalar>(snr: T, bandwidth: T) -> T {
    bandwidth * snr.ln_1p() / lit::<T>(2.0).ln()
}

pub fn rate_at_distance<T: Scalar>(distance: T, tx_power: T, params: &ChannelParams<T>) -> T {
    rate_from_snr(snr(distance, tx_power, params), params.bandwidth)
}

pub fn transmission_rate<T: Scalar>(vehicle: &VehicleState<T>, rsu: &RsuState<T>, params: &ChannelParams<T>) -> T {
    let distance = vehicle.position.distance(&rsu.position);
    rate_at_distance(distance, vehicle.tx_power, params)
}

pub fn evaluate_local<T: Scalar>(
    task: &TaskSpec<T>,
    vehicle: &VehicleState<T>,
    weights: &CostWeights<T>,
) -> CostBreakdown<T> {
    let f = vehicle.cpu_frequency;
    let time = task.total_cycles / f;
    let energy = vehicle.energy_coefficient * task.total_cycles * f * f;
    CostBreakdown::new(time, energy, weights)
}

/// Offload cost given an already-computed uplink rate and RSU backlog.
pub fn offload_cost<T: Scalar>(
    task: &TaskSpec<T>,
    tx_power: T,
    rate_bps: T,
    rsu_frequency: T,
    queued_cycles: T,
    weights: &CostWeights<T>,
    include_queue: bool,
) -> Result<OffloadCost<T>> {
    if !(rate_bps > T::zero()) {
        return Err(Error::ZeroRate);
    }
    let t_tx = task.data_size_bits / rate_bps;
    let t_exec = task.total_cycles / rsu_frequency;
    let t_wait = if include_queue { queued_cycles / rsu_frequency } else { T::zero() };
    let energy = tx_power * t_tx;
    Ok(OffloadCost {
        rate_bps,
        t_tx,
        t_wait,
        t_exec,
        total: CostBreakdown::new(t_tx + t_wait + t_exec, energy, weights),
    })
}

pub fn evaluate_offload<T: Scalar>(
    task: &TaskSpec<T>,
    vehicle: &VehicleState<T>,
    rsu: &RsuState<T>,
    params: &ChannelParams<T>,
    weights: &CostWeights<T>,
    include_queue: bool,
) -> Result<OffloadCost<T>> {
    let rate = transmission_rate(vehicle, rsu, params);
    offload_cost(task, vehicle.tx_power, rate, rsu.cpu_frequency, rsu.queued_cycles, weights, include_queue)
}

pub fn reward_from_cost<T: Scalar>(cost: T) -> T {
    -cost
}
