//! Scenario generation and synthetic vehicle movement.
//!
//! Two mobility models are provided: a one-dimensional highway ring along the
//! x axis, and a Manhattan grid where vehicles follow road edges and pick a
//! turn at every intersection.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::{ChannelParams, CostWeights, Point, RsuState, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityKind {
    HighwayRing,
    ManhattanGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Width and height of the simulation area in meters.
    pub area: [f64; 2],
    pub vehicle_count: usize,
    pub rsu_count: usize,
    pub mobility_kind: MobilityKind,
    pub speed_range: (f64, f64),
    pub arrival_rate_per_vehicle: f64,
    pub task_size_range: (f64, f64),
    pub intensity_range: (f64, f64),
    /// Relative deadline drawn per task, seconds after creation.
    pub deadline_range: (f64, f64),
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub block_size: f64,
    pub coverage_radius: f64,
    pub max_candidates: usize,
    pub vehicle_cpu_hz: f64,
    pub rsu_cpu_hz: f64,
    pub tx_power_w: f64,
    pub energy_coefficient: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area: [2000.0, 2000.0],
            vehicle_count: 200,
            rsu_count: 15,
            mobility_kind: MobilityKind::ManhattanGrid,
            speed_range: (10.0, 20.0),
            arrival_rate_per_vehicle: 0.02,
            task_size_range: (8e6, 8e7),
            intensity_range: (500.0, 1000.0),
            deadline_range: (2.0, 10.0),
            duration: 300.0,
            dt: 1.0,
            seed: 1,
            block_size: 100.0,
            coverage_radius: 300.0,
            max_candidates: 3,
            vehicle_cpu_hz: 1e9,
            rsu_cpu_hz: 1e10,
            tx_power_w: 0.1,
            energy_coefficient: 1e-27,
        }
    }
}

impl ScenarioConfig {
    /// Reduced scenario: 50 vehicles, 5 RSUs, 200 s over one square kilometer.
    pub fn desk_scale() -> Self {
        Self { area: [1000.0, 1000.0], vehicle_count: 50, rsu_count: 5, duration: 200.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, "must be positive and finite"))
            }
        }
        fn range(field: &str, (lo, hi): (f64, f64), allow_zero: bool) -> Result<()> {
            let lo_ok = if allow_zero { lo >= 0.0 } else { lo > 0.0 };
            if !(lo_ok && lo <= hi && hi.is_finite()) {
                let reason = if allow_zero { "needs 0 <= lo <= hi" } else { "needs 0 < lo <= hi" };
                return Err(Error::invalid(field, reason));
            }
            Ok(())
        }
        positive("area", self.area[0])?;
        positive("area", self.area[1])?;
        if self.vehicle_count == 0 {
            return Err(Error::invalid("vehicle_count", "must be > 0"));
        }
        if self.rsu_count == 0 {
            return Err(Error::invalid("rsu_count", "must be > 0"));
        }
        range("speed_range", self.speed_range, true)?;
        positive("arrival_rate_per_vehicle", self.arrival_rate_per_vehicle)?;
        range("task_size_range", self.task_size_range, false)?;
        range("intensity_range", self.intensity_range, false)?;
        range("deadline_range", self.deadline_range, false)?;
        positive("dt", self.dt)?;
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::invalid("duration", "must be finite and >= dt"));
        }
        positive("block_size", self.block_size)?;
        if self.block_size > self.area[0].min(self.area[1]) {
            return Err(Error::invalid("block_size", "must not exceed the area"));
        }
        positive("coverage_radius", self.coverage_radius)?;
        if self.max_candidates == 0 {
            return Err(Error::invalid("max_candidates", "must be >= 1"));
        }
        positive("vehicle_cpu_hz", self.vehicle_cpu_hz)?;
        positive("rsu_cpu_hz", self.rsu_cpu_hz)?;
        positive("tx_power_w", self.tx_power_w)?;
        positive("energy_coefficient", self.energy_coefficient)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub clock: f64,
    pub vehicles: Vec<VehicleState>,
    pub rsus: Vec<RsuState>,
    pub channel: ChannelParams,
    pub weights: CostWeights,
    pub area: [f64; 2],
    pub mobility_kind: MobilityKind,
    pub block_size: f64,
    rng: ChaCha8Rng,
}

pub fn generate_scenario(config: &ScenarioConfig, channel: &ChannelParams, weights: &CostWeights) -> Result<World> {
    config.validate()?;
    channel.validate()?;
    weights.validate()?;

    let mut rng = stream(config.seed, Stream::Placement);
    let [width, height] = config.area;
    let vehicles = (0..config.vehicle_count)
        .map(|id| {
            let (position, heading) = match config.mobility_kind {
                MobilityKind::HighwayRing => {
                    let p = Point::new(rng.gen_range(0.0..width), rng.gen_range(0.0..height));
                    let heading = if rng.gen_bool(0.5) { 0.0 } else { PI };
                    (p, heading)
                }
                MobilityKind::ManhattanGrid => place_on_grid(&mut rng, config),
            };
            let (lo, hi) = config.speed_range;
            let speed = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            VehicleState {
                id,
                position,
                speed,
                heading,
                cpu_frequency: config.vehicle_cpu_hz,
                tx_power: config.tx_power_w,
                energy_coefficient: config.energy_coefficient,
            }
        })
        .collect();

    let cols = (config.rsu_count as f64).sqrt().ceil() as usize;
    let rows = config.rsu_count.div_ceil(cols);
    let rsus = (0..config.rsu_count)
        .map(|id| {
            let (col, row) = (id % cols, id / cols);
            RsuState {
                id,
                position: Point::new(
                    (col as f64 + 0.5) * width / cols as f64,
                    (row as f64 + 0.5) * height / rows as f64,
                ),
                cpu_frequency: config.rsu_cpu_hz,
                coverage_radius: config.coverage_radius,
                queued_cycles: 0.0,
            }
        })
        .collect();

    Ok(World {
        clock: 0.0,
        vehicles,
        rsus,
        channel: channel.clone(),
        weights: *weights,
        area: config.area,
        mobility_kind: config.mobility_kind,
        block_size: config.block_size,
        rng: stream(config.seed, Stream::Mobility),
    })
}

fn road_limit(extent: f64, block: f64) -> f64 {
    (extent / block + 1e-9).floor() * block
}

fn place_on_grid(rng: &mut ChaCha8Rng, config: &ScenarioConfig) -> (Point, f64) {
    let block = config.block_size;
    let max_x = road_limit(config.area[0], block);
    let max_y = road_limit(config.area[1], block);
    let horizontal = rng.gen_bool(0.5);
    let forward = rng.gen_bool(0.5);
    if horizontal {
        let roads = (max_y / block).round() as u32;
        let y = rng.gen_range(0..=roads) as f64 * block;
        let x = rng.gen_range(0.0..=max_x);
        (Point::new(x, y), if forward { 0.0 } else { PI })
    } else {
        let roads = (max_x / block).round() as u32;
        let x = rng.gen_range(0..=roads) as f64 * block;
        let y = rng.gen_range(0.0..=max_y);
        (Point::new(x, y), if forward { FRAC_PI_2 } else { 3.0 * FRAC_PI_2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    East,
    North,
    West,
    South,
}

impl Dir {
    fn from_heading(heading: f64) -> Self {
        match ((heading / FRAC_PI_2).round() as i64).rem_euclid(4) {
            0 => Dir::East,
            1 => Dir::North,
            2 => Dir::West,
            _ => Dir::South,
        }
    }

    fn heading(self) -> f64 {
        match self {
            Dir::East => 0.0,
            Dir::North => FRAC_PI_2,
            Dir::West => PI,
            Dir::South => 3.0 * FRAC_PI_2,
        }
    }

    fn left(self) -> Self {
        match self {
            Dir::East => Dir::North,
            Dir::North => Dir::West,
            Dir::West => Dir::South,
            Dir::South => Dir::East,
        }
    }

    fn right(self) -> Self {
        self.left().left().left()
    }

    fn back(self) -> Self {
        self.left().left()
    }
}

impl World {
    /// Advances every vehicle by `dt` seconds and the clock with it.
    pub fn advance(&mut self, dt: f64) {
        match self.mobility_kind {
            MobilityKind::HighwayRing => {
                let width = self.area[0];
                for v in &mut self.vehicles {
                    let mut x = (v.position.x + v.speed * dt * v.heading.cos()).rem_euclid(width);
                    if x >= width {
                        x = 0.0;
                    }
                    v.position.x = x;
                }
            }
            MobilityKind::ManhattanGrid => {
                let block = self.block_size;
                let limits = (road_limit(self.area[0], block), road_limit(self.area[1], block));
                for v in &mut self.vehicles {
                    move_on_grid(v, v.speed * dt, block, limits, &mut self.rng);
                }
            }
        }
        self.clock += dt;
    }

    pub fn rsu(&self, id: usize) -> Option<&RsuState> {
        self.rsus.get(id)
    }
}

/// Next intersection coordinate strictly ahead of `coord` in the given sense.
fn next_road(coord: f64, block: f64, positive: bool) -> f64 {
    let k = coord / block;
    if positive {
        ((k + 1e-9).floor() + 1.0) * block
    } else {
        ((k - 1e-9).ceil() - 1.0) * block
    }
}

fn segment_ahead(p: Point, dir: Dir, block: f64, (max_x, max_y): (f64, f64)) -> Option<f64> {
    let (coord, positive, limit) = match dir {
        Dir::East => (p.x, true, max_x),
        Dir::West => (p.x, false, max_x),
        Dir::North => (p.y, true, max_y),
        Dir::South => (p.y, false, max_y),
    };
    let next = next_road(coord, block, positive);
    if next < -1e-9 || next > limit + 1e-9 {
        None
    } else {
        Some(next)
    }
}

fn move_on_grid(v: &mut VehicleState, distance: f64, block: f64, limits: (f64, f64), rng: &mut ChaCha8Rng) {
    let mut remaining = distance;
    let mut dir = Dir::from_heading(v.heading);
    let mut guard = 0;
    while remaining > 0.0 && guard < 10_000 {
        guard += 1;
        let Some(target) = segment_ahead(v.position, dir, block, limits) else {
            dir = dir.back();
            continue;
        };
        let gap = match dir {
            Dir::East | Dir::West => (target - v.position.x).abs(),
            Dir::North | Dir::South => (target - v.position.y).abs(),
        };
        if remaining < gap {
            match dir {
                Dir::East => v.position.x += remaining,
                Dir::West => v.position.x -= remaining,
                Dir::North => v.position.y += remaining,
                Dir::South => v.position.y -= remaining,
            }
            break;
        }
        match dir {
            Dir::East | Dir::West => v.position.x = target,
            Dir::North | Dir::South => v.position.y = target,
        }
        remaining -= gap;

        let draw: f64 = rng.gen();
        let preferred = if draw < 0.25 {
            dir.left()
        } else if draw < 0.5 {
            dir.right()
        } else {
            dir
        };
        dir = [preferred, dir, dir.left(), dir.right(), dir.back()]
            .into_iter()
            .find(|d| segment_ahead(v.position, *d, block, limits).is_some())
            .unwrap_or(dir.back());
    }
    v.heading = dir.heading();
}

/// Advances a world by value.
pub fn step_mobility(mut world: World, dt: f64) -> World {
    world.advance(dt);
    world
}

/// RSUs whose coverage contains the vehicle, nearest first, at most `k`.
pub fn candidate_rsus(vehicle: &VehicleState, world: &World, k: usize) -> Vec<(usize, f64)> {
    let mut found: Vec<(usize, f64)> = world
        .rsus
        .iter()
        .filter_map(|r| {
            let d = vehicle.position.distance(&r.position);
            (d <= r.coverage_radius).then_some((r.id, d))
        })
        .collect();
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    found.truncate(k);
    found
}
