//! Particle swarm optimization, generic over the scalar type.
//!
//! The swarm is synchronous: all particles move using the global best of the
//! previous iteration, then every particle is evaluated, then personal and
//! global bests are refreshed. Each particle owns its random stream, so the
//! result does not depend on whether evaluation runs sequentially or on a
//! thread pool.

pub mod assignment;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Scalar};
use crate::rng::indexed_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig<T> {
    pub particles: usize,
    pub iterations: usize,
    /// Inertia weight `w`.
    pub inertia: T,
    /// Cognitive coefficient `c1`.
    pub cognitive: T,
    /// Social coefficient `c2`.
    pub social: T,
    /// Velocity clamp as a fraction of each dimension's width.
    pub velocity_fraction: T,
    pub seed: u64,
}

impl<T: Scalar> Default for PsoConfig<T> {
    fn default() -> Self {
        Self {
            particles: 30,
            iterations: 100,
            inertia: lit(0.7),
            cognitive: lit(1.5),
            social: lit(1.5),
            velocity_fraction: lit(0.5),
            seed: 0,
        }
    }
}

impl<T: Scalar> PsoConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::invalid("particles", "must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be >= 1"));
        }
        if !(self.inertia >= T::zero() && self.inertia <= T::one()) {
            return Err(Error::invalid("inertia", "must lie in [0, 1]"));
        }
        if !(self.cognitive >= T::zero()) {
            return Err(Error::invalid("cognitive", "must be >= 0"));
        }
        if !(self.social >= T::zero()) {
            return Err(Error::invalid("social", "must be >= 0"));
        }
        if !(self.velocity_fraction > T::zero()) {
            return Err(Error::invalid("velocity_fraction", "must be > 0"));
        }
        Ok(())
    }
}

/// Box bounds and per-dimension velocity clamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace<T> {
    pub bounds: Vec<(T, T)>,
    pub v_max: Vec<T>,
}

impl<T: Scalar> SearchSpace<T> {
    pub fn new(bounds: Vec<(T, T)>, velocity_fraction: T) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("bounds", "need at least one dimension"));
        }
        if bounds.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::invalid("bounds", "need finite lo < hi in every dimension"));
        }
        let v_max = bounds.iter().map(|(lo, hi)| velocity_fraction * (*hi - *lo)).collect();
        Ok(Self { bounds, v_max })
    }

    pub fn uniform(dim: usize, lo: T, hi: T, velocity_fraction: T) -> Result<Self> {
        Self::new(vec![(lo, hi); dim], velocity_fraction)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn clamp(&self, d: usize, x: T) -> T {
        let (lo, hi) = self.bounds[d];
        x.max(lo).min(hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle<T> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub fitness: T,
    pub best_position: Vec<T>,
    pub best_fitness: T,
}

#[derive(Debug, Clone)]
pub struct Swarm<T> {
    pub particles: Vec<Particle<T>>,
    pub global_best_position: Vec<T>,
    pub global_best_fitness: T,
    streams: Vec<ChaCha8Rng>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    #[default]
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult<T> {
    pub best_position: Vec<T>,
    pub best_fitness: T,
    /// Global best fitness after each iteration.
    pub history: Vec<T>,
}

fn draw<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    lit(rng.gen::<f64>())
}

fn evaluate_all<T, F>(positions: &[Vec<T>], fitness: &F, mode: Evaluation) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let values: Vec<T> = match mode {
        Evaluation::Sequential => positions.iter().map(|p| fitness(p)).collect(),
        Evaluation::Parallel => positions.par_iter().map(|p| fitness(p)).collect(),
    };
    match values.iter().position(|v| !v.is_finite()) {
        Some(particle) => Err(Error::NonFiniteFitness { particle }),
        None => Ok(values),
    }
}

/// Index of the strictly smallest value; ties keep the earlier index.
fn argmin<T: Scalar>(values: impl Iterator<Item = T>) -> Option<(usize, T)> {
    values.enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if !(v < b) => best,
        _ => Some((i, v)),
    })
}

pub fn init_swarm<T, F>(
    fitness: &F,
    space: &SearchSpace<T>,
    config: &PsoConfig<T>,
    mode: Evaluation,
) -> Result<Swarm<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    config.validate()?;
    let mut streams: Vec<ChaCha8Rng> = (0..config.particles).map(|i| indexed_stream(config.seed, i as u64)).collect();
    let states: Vec<(Vec<T>, Vec<T>)> = streams
        .iter_mut()
        .map(|rng| {
            let position = space.bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * draw::<T>(rng)).collect();
            let velocity = space.v_max.iter().map(|&vm| vm * (lit::<T>(2.0) * draw::<T>(rng) - T::one())).collect();
            (position, velocity)
        })
        .collect();
    let positions: Vec<Vec<T>> = states.iter().map(|s| s.0.clone()).collect();
    let values = evaluate_all(&positions, fitness, mode)?;
    let particles: Vec<Particle<T>> = states
        .into_iter()
        .zip(values)
        .map(|((position, velocity), fitness)| Particle {
            best_position: position.clone(),
            position,
            velocity,
            fitness,
            best_fitness: fitness,
        })
        .collect();
    let (gi, gf) = argmin(particles.iter().map(|p| p.best_fitness)).expect("at least one particle");
    Ok(Swarm { global_best_position: particles[gi].best_position.clone(), global_best_fitness: gf, particles, streams })
}

/// Velocity and position update for one particle with explicit random factors.
///
/// `v = w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`, clamped to `v_max`,
/// then `x = clamp(x + v)` to the bounds.
pub fn update_particle<T: Scalar>(
    particle: &mut Particle<T>,
    global_best: &[T],
    r1: &[T],
    r2: &[T],
    config: &PsoConfig<T>,
    space: &SearchSpace<T>,
) {
    for d in 0..space.dim() {
        let x = particle.position[d];
        let v = config.inertia * particle.velocity[d]
            + config.cognitive * r1[d] * (particle.best_position[d] - x)
            + config.social * r2[d] * (global_best[d] - x);
        let vm = space.v_max[d];
        let v = v.max(-vm).min(vm);
        particle.velocity[d] = v;
        particle.position[d] = space.clamp(d, x + v);
    }
}

pub fn step<T, F>(
    swarm: &mut Swarm<T>,
    fitness: &F,
    config: &PsoConfig<T>,
    space: &SearchSpace<T>,
    mode: Evaluation,
) -> Result<()>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let dim = space.dim();
    let global = swarm.global_best_position.clone();
    for (particle, rng) in swarm.particles.iter_mut().zip(swarm.streams.iter_mut()) {
        let r1: Vec<T> = (0..dim).map(|_| draw(rng)).collect();
        let r2: Vec<T> = (0..dim).map(|_| draw(rng)).collect();
        update_particle(particle, &global, &r1, &r2, config, space);
    }
    let positions: Vec<Vec<T>> = swarm.particles.iter().map(|p| p.position.clone()).collect();
    let values = evaluate_all(&positions, fitness, mode)?;
    for (particle, value) in swarm.particles.iter_mut().zip(values) {
        particle.fitness = value;
        if value < particle.best_fitness {
            particle.best_fitness = value;
            particle.best_position = particle.position.clone();
        }
    }
    if let Some((i, f)) = argmin(swarm.particles.iter().map(|p| p.best_fitness)) {
        if f < swarm.global_best_fitness {
            swarm.global_best_fitness = f;
            swarm.global_best_position = swarm.particles[i].best_position.clone();
        }
    }
    Ok(())
}

pub fn optimize<T, F>(fitness: &F, space: &SearchSpace<T>, config: &PsoConfig<T>) -> Result<PsoResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    optimize_with(fitness, space, config, Evaluation::Sequential)
}

pub fn optimize_with<T, F>(
    fitness: &F,
    space: &SearchSpace<T>,
    config: &PsoConfig<T>,
    mode: Evaluation,
) -> Result<PsoResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let mut swarm = init_swarm(fitness, space, config, mode)?;
    let mut history = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        step(&mut swarm, fitness, config, space, mode)?;
        history.push(swarm.global_best_fitness);
    }
    Ok(PsoResult { best_position: swarm.global_best_position, best_fitness: swarm.global_best_fitness, history })
}
