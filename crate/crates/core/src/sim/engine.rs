use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use super::arrivals::generate_task_arrivals;
use super::event::{EventKind, EventQueue};
use super::metrics::{MetricsReport, TaskOutcome, TaskStatus};
use crate::domain::{evaluate_local, rate_at_distance};
use crate::error::{Error, Result};
use crate::mobility::{generate_scenario, ScenarioConfig, World};
use crate::rng::{stream, Stream};
use crate::strategy::{Decision, Observation, Strategy};
use crate::{ChannelParams, CostWeights, TaskSpec};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every processed `(time, kind, task)` triple in the result.
    pub record_events: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub report: MetricsReport,
    /// One entry per generated task, ordered by task id.
    pub outcomes: Vec<TaskOutcome>,
    pub tasks: Vec<TaskSpec>,
    pub events_processed: u64,
    pub event_log: Vec<(f64, EventKind, Option<u64>)>,
}

pub fn run(
    config: &ScenarioConfig,
    strategy: &mut dyn Strategy,
    channel: &ChannelParams,
    weights: &CostWeights,
) -> Result<SimulationResult> {
    run_with(config, strategy, channel, weights, RunOptions::default())
}

pub fn run_with(
    config: &ScenarioConfig,
    strategy: &mut dyn Strategy,
    channel: &ChannelParams,
    weights: &CostWeights,
    options: RunOptions,
) -> Result<SimulationResult> {
    let world = generate_scenario(config, channel, weights)?;
    let tasks = generate_task_arrivals(config, &mut stream(config.seed, Stream::Tasks));
    if let Some(w) = strategy.batch_window() {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid("batch_window_s", "must be positive"));
        }
    }
    Engine::new(config, world, tasks, strategy, *weights, options).run()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Waiting,
    Local,
    Uplink(usize),
    Transmitting(usize),
    Compute(usize),
    Executing(usize),
    Done,
}

#[derive(Debug)]
struct Slot {
    spec: TaskSpec,
    stage: Stage,
    decision: Decision,
    energy: f64,
    t_tx: f64,
    started: f64,
    outcome: Option<TaskOutcome>,
}

#[derive(Debug, Default)]
struct RsuRuntime {
    uplink: VecDeque<usize>,
    transmitting: Option<usize>,
    cpu: VecDeque<usize>,
    executing: Option<usize>,
}

struct Engine<'a> {
    config: &'a ScenarioConfig,
    world: World,
    weights: CostWeights,
    queue: EventQueue,
    slots: Vec<Slot>,
    rsus: Vec<RsuRuntime>,
    pending: Vec<usize>,
    flush_scheduled: bool,
    strategy: &'a mut dyn Strategy,
    rng: ChaCha8Rng,
    airtime: f64,
    options: RunOptions,
    event_log: Vec<(f64, EventKind, Option<u64>)>,
}

impl<'a> Engine<'a> {
    fn new(
        config: &'a ScenarioConfig,
        world: World,
        tasks: Vec<TaskSpec>,
        strategy: &'a mut dyn Strategy,
        weights: CostWeights,
        options: RunOptions,
    ) -> Self {
        let rsus = world.rsus.iter().map(|_| RsuRuntime::default()).collect();
        let slots = tasks
            .into_iter()
            .map(|spec| Slot {
                spec,
                stage: Stage::Waiting,
                decision: Decision::Local,
                energy: 0.0,
                t_tx: 0.0,
                started: 0.0,
                outcome: None,
            })
            .collect();
        Self {
            config,
            world,
            weights,
            queue: EventQueue::new(),
            slots,
            rsus,
            pending: Vec::new(),
            flush_scheduled: false,
            strategy,
            rng: stream(config.seed, Stream::Strategy),
            airtime: 0.0,
            options,
            event_log: Vec::new(),
        }
    }

    fn run(mut self) -> Result<SimulationResult> {
        for slot in &self.slots {
            self.queue.push(slot.spec.created_at, EventKind::TaskArrival, Some(slot.spec.id));
        }
        if self.config.dt <= self.config.duration {
            self.queue.push(self.config.dt, EventKind::MobilityTick, None);
        }

        let mut processed = 0u64;
        let mut last = f64::NEG_INFINITY;
        while let Some(event) = self.queue.pop() {
            assert!(event.time >= last, "event times must be non-decreasing");
            last = event.time;
            processed += 1;
            if self.options.record_events {
                self.event_log.push((event.time, event.kind, event.task_id));
            }
            let now = event.time;
            let task = event.task_id.map(|id| id as usize);
            match event.kind {
                EventKind::TaskArrival => self.on_arrival(task.expect("arrival carries task"), now)?,
                EventKind::TxComplete => self.on_tx_complete(task.expect("tx carries task"), now),
                EventKind::ExecComplete => self.on_exec_complete(task.expect("exec carries task"), now),
                EventKind::DeadlineExpiry => self.on_deadline(task.expect("deadline carries task"), now),
                EventKind::MobilityTick => {
                    self.world.advance(self.config.dt);
                    let next = now + self.config.dt;
                    if next <= self.config.duration + 1e-9 {
                        self.queue.push(next, EventKind::MobilityTick, None);
                    }
                }
                EventKind::BatchFlush => {
                    self.flush_scheduled = false;
                    let window = std::mem::take(&mut self.pending);
                    self.decide(window, now)?;
                }
            }
        }

        let (tasks, outcomes): (Vec<TaskSpec>, Vec<TaskOutcome>) =
            self.slots.into_iter().map(|s| (s.spec, s.outcome.expect("every task reaches a terminal status"))).unzip();
        let report =
            MetricsReport::compute(&outcomes, self.config.duration, self.world.rsus.len(), self.airtime, &self.weights);
        Ok(SimulationResult { report, tasks, outcomes, events_processed: processed, event_log: self.event_log })
    }

    fn on_arrival(&mut self, id: usize, now: f64) -> Result<()> {
        let deadline = self.slots[id].spec.deadline;
        self.queue.push(deadline, EventKind::DeadlineExpiry, Some(id as u64));
        match self.strategy.batch_window() {
            Some(window) => {
                self.pending.push(id);
                if !self.flush_scheduled {
                    let flush = (((now / window).floor() + 1.0) * window).max(now);
                    self.queue.push(flush, EventKind::BatchFlush, None);
                    self.flush_scheduled = true;
                }
                Ok(())
            }
            None => self.decide(vec![id], now),
        }
    }

    fn backlog(&self, rsu: usize, now: f64) -> f64 {
        let rt = &self.rsus[rsu];
        let cycles = |i: &usize| self.slots[*i].spec.total_cycles;
        // starts from +0.0: an empty float sum is -0.0
        let mut total = 0.0
            + rt.uplink.iter().map(cycles).sum::<f64>()
            + rt.transmitting.iter().map(cycles).sum::<f64>()
            + rt.cpu.iter().map(cycles).sum::<f64>();
        if let Some(i) = rt.executing {
            let done = (now - self.slots[i].started) * self.world.rsus[rsu].cpu_frequency;
            total += (self.slots[i].spec.total_cycles - done).max(0.0);
        }
        total
    }

    fn observe(&self, id: usize, now: f64) -> Observation {
        Observation::from_world(&self.slots[id].spec, &self.world, self.config.max_candidates, now, |rsu| {
            self.backlog(rsu, now)
        })
    }

    fn decide(&mut self, ids: Vec<usize>, now: f64) -> Result<()> {
        let mut window = Vec::with_capacity(ids.len());
        let mut members = Vec::with_capacity(ids.len());
        for id in ids {
            if self.slots[id].stage != Stage::Waiting {
                continue;
            }
            let obs = self.observe(id, now);
            let local = evaluate_local(&obs.task, &obs.vehicle, &self.weights);
            if obs.candidates.is_empty() && now + local.time_s > obs.task.deadline {
                self.finish(id, TaskStatus::FailedNoCandidate, now);
                continue;
            }
            members.push(id);
            window.push(obs);
        }
        if window.is_empty() {
            return Ok(());
        }
        let decisions = if self.strategy.batch_window().is_some() {
            self.strategy.decide_batch(&window, &mut self.rng)
        } else {
            window.iter().map(|obs| self.strategy.decide(obs, &mut self.rng)).collect()
        };
        assert_eq!(decisions.len(), members.len(), "one decision per observation");
        for (id, decision) in members.into_iter().zip(decisions) {
            self.dispatch(id, decision, now)?;
        }
        Ok(())
    }

    fn dispatch(&mut self, id: usize, decision: Decision, now: f64) -> Result<()> {
        self.slots[id].decision = decision;
        let vehicle = &self.world.vehicles[self.slots[id].spec.vehicle_id];
        match decision {
            Decision::Local => {
                let cost = evaluate_local(&self.slots[id].spec, vehicle, &self.weights);
                let slot = &mut self.slots[id];
                slot.energy = cost.energy_j;
                slot.stage = Stage::Local;
                slot.started = now;
                self.queue.push(now + cost.time_s, EventKind::ExecComplete, Some(id as u64));
            }
            Decision::Offload(rsu) => {
                let station = self.world.rsus.get(rsu).ok_or(Error::UnknownRsu(rsu))?;
                let distance = vehicle.position.distance(&station.position);
                let rate = rate_at_distance(distance, vehicle.tx_power, &self.world.channel);
                if distance > station.coverage_radius || !(rate > 0.0) {
                    self.finish(id, TaskStatus::FailedOutOfRange, now);
                    return Ok(());
                }
                let tx_power = vehicle.tx_power;
                let slot = &mut self.slots[id];
                slot.t_tx = slot.spec.data_size_bits / rate;
                slot.energy = tx_power * slot.t_tx;
                slot.stage = Stage::Uplink(rsu);
                self.rsus[rsu].uplink.push_back(id);
                self.start_uplink(rsu, now);
            }
        }
        Ok(())
    }

    fn start_uplink(&mut self, rsu: usize, now: f64) {
        if self.rsus[rsu].transmitting.is_some() {
            return;
        }
        if let Some(id) = self.rsus[rsu].uplink.pop_front() {
            self.rsus[rsu].transmitting = Some(id);
            let slot = &mut self.slots[id];
            slot.stage = Stage::Transmitting(rsu);
            slot.started = now;
            let end = now + slot.t_tx;
            self.queue.push(end, EventKind::TxComplete, Some(id as u64));
        }
    }

    fn start_cpu(&mut self, rsu: usize, now: f64) {
        if self.rsus[rsu].executing.is_some() {
            return;
        }
        if let Some(id) = self.rsus[rsu].cpu.pop_front() {
            self.rsus[rsu].executing = Some(id);
            let f = self.world.rsus[rsu].cpu_frequency;
            let slot = &mut self.slots[id];
            slot.stage = Stage::Executing(rsu);
            slot.started = now;
            let end = now + slot.spec.total_cycles / f;
            self.queue.push(end, EventKind::ExecComplete, Some(id as u64));
        }
    }

    fn add_airtime(&mut self, start: f64, end: f64) {
        let clipped = end.min(self.config.duration) - start.max(0.0);
        if clipped > 0.0 {
            self.airtime += clipped;
        }
    }

    fn on_tx_complete(&mut self, id: usize, now: f64) {
        let Stage::Transmitting(rsu) = self.slots[id].stage else {
            return;
        };
        self.add_airtime(self.slots[id].started, now);
        self.rsus[rsu].transmitting = None;
        self.slots[id].stage = Stage::Compute(rsu);
        self.rsus[rsu].cpu.push_back(id);
        self.start_cpu(rsu, now);
        self.start_uplink(rsu, now);
    }

    fn on_exec_complete(&mut self, id: usize, now: f64) {
        match self.slots[id].stage {
            Stage::Local => self.finish(id, TaskStatus::Completed, now),
            Stage::Executing(rsu) => {
                self.rsus[rsu].executing = None;
                self.finish(id, TaskStatus::Completed, now);
                self.start_cpu(rsu, now);
            }
            _ => {}
        }
    }

    fn on_deadline(&mut self, id: usize, now: f64) {
        match self.slots[id].stage {
            Stage::Done => return,
            Stage::Waiting => self.pending.retain(|&p| p != id),
            Stage::Local => {}
            Stage::Uplink(rsu) => self.rsus[rsu].uplink.retain(|&p| p != id),
            Stage::Transmitting(rsu) => {
                self.add_airtime(self.slots[id].started, now);
                self.rsus[rsu].transmitting = None;
            }
            Stage::Compute(rsu) => self.rsus[rsu].cpu.retain(|&p| p != id),
            Stage::Executing(rsu) => self.rsus[rsu].executing = None,
        }
        let stage = self.slots[id].stage;
        self.finish(id, TaskStatus::FailedDeadline, now);
        match stage {
            Stage::Transmitting(rsu) => self.start_uplink(rsu, now),
            Stage::Executing(rsu) => self.start_cpu(rsu, now),
            _ => {}
        }
    }

    fn finish(&mut self, id: usize, status: TaskStatus, now: f64) {
        let slot = &mut self.slots[id];
        let energy = match status {
            TaskStatus::FailedOutOfRange | TaskStatus::FailedNoCandidate => 0.0,
            _ => slot.energy,
        };
        let outcome = TaskOutcome {
            task_id: slot.spec.id,
            vehicle_id: slot.spec.vehicle_id,
            decision: slot.decision,
            latency_s: now - slot.spec.created_at,
            energy_j: energy,
            status,
            completed_at: now,
            data_size_bits: slot.spec.data_size_bits,
        };
        slot.stage = Stage::Done;
        slot.outcome = Some(outcome.clone());
        self.strategy.observe_outcome(&outcome);
    }
}
