use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vanet_offload::rng::{stream, Stream};
use vanet_offload::sim::{self, SimulationResult};
use vanet_offload::strategy::Candidate;
use vanet_offload::*;

pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

/// Runs a simulation and enforces task conservation on its result.
pub fn checked_run(
    config: &ScenarioConfig,
    strategy: &mut dyn Strategy,
    channel: &ChannelParams,
    weights: &CostWeights,
) -> SimulationResult {
    let r = sim::run(config, strategy, channel, weights).expect("simulation runs");
    let c = r.report.counts;
    assert_eq!(
        c.completed + c.failed_deadline + c.failed_out_of_range + c.failed_no_candidate,
        r.tasks.len(),
        "task conservation violated for {} seed {}",
        strategy.name(),
        config.seed
    );
    assert_eq!(r.report.tasks_total, r.tasks.len());
    r
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(xs: &[f64], level: f64, resamples: usize, seed: u64) -> (f64, f64) {
    let mut rng = stream(seed, Stream::Sampling);
    let n = xs.len();
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| xs[rng.gen_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

/// A random but well-formed observation with `k` candidates.
pub fn random_observation(rng: &mut ChaCha8Rng, k: usize) -> Observation {
    let task =
        TaskSpec::new(0, 0, rng.gen_range(8e6..8e7), rng.gen_range(500.0..1000.0), 0.0, rng.gen_range(2.0..10.0))
            .unwrap();
    let vehicle = VehicleState {
        id: 0,
        position: Point::new(0.0, 0.0),
        speed: rng.gen_range(10.0..20.0),
        heading: 0.0,
        cpu_frequency: 1e9,
        tx_power: 0.1,
        energy_coefficient: 1e-27,
    };
    let channel = ChannelParams::default();
    let mut distances: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..300.0)).collect();
    distances.sort_by(f64::total_cmp);
    let candidates = distances
        .into_iter()
        .enumerate()
        .map(|(id, distance)| {
            let queued = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1e11) };
            Candidate {
                rsu: RsuState {
                    id,
                    position: Point::new(distance, 0.0),
                    cpu_frequency: 1e10,
                    coverage_radius: 300.0,
                    queued_cycles: queued,
                },
                distance,
                rate_bps: domain::rate_at_distance(distance, vehicle.tx_power, &channel),
                queued_cycles: queued,
            }
        })
        .collect();
    Observation { task, vehicle, candidates, clock: 0.0 }
}
