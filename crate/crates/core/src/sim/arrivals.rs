use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::mobility::ScenarioConfig;
use crate::TaskSpec;

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Per-vehicle Poisson task arrivals over `[0, duration)`, sorted by creation
/// time. Task ids follow that order.
pub fn generate_task_arrivals(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<TaskSpec> {
    let gap = Exp::new(config.arrival_rate_per_vehicle).expect("arrival rate validated positive");
    let mut raw = Vec::new();
    for vehicle in 0..config.vehicle_count {
        let mut t = 0.0;
        loop {
            t += gap.sample(rng);
            if t >= config.duration {
                break;
            }
            let size = uniform(rng, config.task_size_range);
            let intensity = uniform(rng, config.intensity_range);
            let slack = uniform(rng, config.deadline_range);
            raw.push((t, vehicle, size, intensity, slack));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    raw.into_iter()
        .enumerate()
        .map(|(id, (t, vehicle, size, intensity, slack))| {
            TaskSpec::new(id as u64, vehicle, size, intensity, t, t + slack).expect("ranges validated positive")
        })
        .collect()
}
