use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::rates::{joint_outcome_probabilities, Port};
use super::ExperimentConfig;
use crate::Result;

const PS: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Trigger,
    Alice,
    Bob,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Trigger, Channel::Alice, Channel::Bob];

    pub fn code(self) -> u8 {
        match self {
            Channel::Trigger => 0,
            Channel::Alice => 1,
            Channel::Bob => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Channel> {
        match code {
            0 => Some(Channel::Trigger),
            1 => Some(Channel::Alice),
            2 => Some(Channel::Bob),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Trigger => "trigger",
            Channel::Alice => "alice",
            Channel::Bob => "bob",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeTagEvent {
    /// Picoseconds from the start of the run.
    pub timestamp: u64,
    pub channel: Channel,
}

/// Draws the detected arrival slots of one created pair: `None` for a photon
/// that left through the dark port or was lost.
#[derive(Debug, Clone)]
pub struct PairSampler {
    cumulative: Vec<f64>,
    outcomes: Vec<(i8, Port, i8, Port)>,
    survival: (f64, f64),
}

impl PairSampler {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let p = joint_outcome_probabilities(cfg);
        let mut cumulative = Vec::with_capacity(36);
        let mut outcomes = Vec::with_capacity(36);
        let mut acc = 0.0;
        for ta in -1i8..=1 {
            for pa in Port::ALL {
                for tb in -1i8..=1 {
                    for pb in Port::ALL {
                        let prob = p.get(ta, pa, tb, pb);
                        if prob > 0.0 {
                            acc += prob;
                            cumulative.push(acc);
                            outcomes.push((ta, pa, tb, pb));
                        }
                    }
                }
            }
        }
        let eta = cfg.survival();
        PairSampler { cumulative, outcomes, survival: (eta.alice, eta.bob) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Option<i8>, Option<i8>) {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.outcomes.len() - 1);
        let (ta, pa, tb, pb) = self.outcomes[idx];
        let a = (pa == Port::Detected && rng.random::<f64>() < self.survival.0).then_some(ta);
        let b = (pb == Port::Detected && rng.random::<f64>() < self.survival.1).then_some(tb);
        (a, b)
    }
}

/// Non-paralyzable dead time: drops every event closer than `dead_time_ps`
/// to the previous kept event. Input must be sorted.
pub fn dead_time_filter(times: &[u64], dead_time_ps: u64) -> Vec<u64> {
    let mut kept: Vec<u64> = Vec::with_capacity(times.len());
    for &t in times {
        match kept.last() {
            Some(&last) if t < last + dead_time_ps => {}
            _ => kept.push(t),
        }
    }
    kept
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

/// Samples a full time-tag stream, sorted by timestamp. Deterministic for a
/// given `rng_seed`.
pub fn simulate_stream(cfg: &ExperimentConfig) -> Result<Vec<TimeTagEvent>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n_cycles = (cfg.integration_time * cfg.rep_rate).floor() as u64;
    let period_ps = cfg.period() * PS;
    let cycle_start = |k: u64| (k as f64 * period_ps).round() as u64;

    let mut alice = Vec::new();
    let mut bob = Vec::new();
    if n_cycles > 0 {
        let sampler = PairSampler::new(cfg);
        let jitter = Normal::new(0.0, cfg.timing_sigma() * PS).expect("finite sigma");
        let n_pairs = poisson(cfg.pair_prob * n_cycles as f64, &mut rng);
        let arrival = |k: u64, slot: i8, rng: &mut ChaCha8Rng| {
            let t = cycle_start(k) as f64
                + (cfg.trigger_latency + (slot + 1) as f64 * cfg.bin_delay) * PS
                + jitter.sample(rng);
            t.round().max(0.0) as u64
        };
        for _ in 0..n_pairs {
            let k = rng.random_range(0..n_cycles);
            let (a, b) = sampler.sample(&mut rng);
            if let Some(slot) = a {
                alice.push(arrival(k, slot, &mut rng));
            }
            if let Some(slot) = b {
                bob.push(arrival(k, slot, &mut rng));
            }
        }
    }
    let span_ps = cfg.integration_time * PS;
    for times in [&mut alice, &mut bob] {
        let n_bg = poisson(cfg.background_rate * cfg.integration_time, &mut rng);
        for _ in 0..n_bg {
            times.push((rng.random::<f64>() * span_ps).floor() as u64);
        }
        times.sort_unstable();
    }
    let dead_ps = (cfg.dead_time * PS).round() as u64;
    let alice = dead_time_filter(&alice, dead_ps);
    let bob = dead_time_filter(&bob, dead_ps);

    let n_triggers = n_cycles.div_ceil(cfg.trigger_decimation);
    let mut events = Vec::with_capacity(n_triggers as usize + alice.len() + bob.len());
    events.extend(
        (0..n_cycles)
            .step_by(cfg.trigger_decimation as usize)
            .map(|k| TimeTagEvent { timestamp: cycle_start(k), channel: Channel::Trigger }),
    );
    events.extend(alice.into_iter().map(|timestamp| TimeTagEvent { timestamp, channel: Channel::Alice }));
    events.extend(bob.into_iter().map(|timestamp| TimeTagEvent { timestamp, channel: Channel::Bob }));
    events.sort_unstable();
    Ok(events)
}
