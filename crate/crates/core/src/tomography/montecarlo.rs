use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::mle::mle_from;
use super::{mle_reconstruct, with_counts, MleOptions, MleResult};
use crate::coincidence::ProjectionRecord;
use crate::metrics::{Interval, MetricIntervals, MetricsReport};
use crate::util::{par_map, quantile_sorted};
use crate::{Error, Result};

pub const MIN_MC_SAMPLES: usize = 100;

const LOWER_Q: f64 = 0.16;
const UPPER_Q: f64 = 0.84;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub intervals: MetricIntervals,
    pub n_samples: usize,
    pub seed: u64,
    /// Resamples whose MLE did not converge (kept, best point used).
    pub unconverged: usize,
    pub samples: Vec<MetricsReport>,
}

fn interval(values: &mut [f64], point: f64) -> Interval {
    values.sort_by(f64::total_cmp);
    let lower = quantile_sorted(values, LOWER_Q).min(point);
    let upper = quantile_sorted(values, UPPER_Q).max(point);
    Interval { lower, upper }
}

/// Redraws every count as `Poisson(count)`, repeats the MLE and collects the
/// metrics. Intervals are the 16th-84th percentiles, widened if needed to
/// contain the point estimate. Sample `i` uses stream `i` of a ChaCha8
/// generator seeded with `seed`, so results do not depend on scheduling.
///
/// `point` is reused as the point estimate and warm start when given.
pub fn monte_carlo(
    records: &[ProjectionRecord],
    n_samples: usize,
    seed: u64,
    opts: &MleOptions,
    point: Option<&MleResult>,
) -> Result<MonteCarloSummary> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {n_samples}")));
    }
    let owned;
    let point = match point {
        Some(p) => p,
        None => {
            owned = mle_reconstruct(records, opts)?;
            &owned
        }
    };
    let point_metrics = MetricsReport::compute(&point.rho)?;
    let indices: Vec<u64> = (0..n_samples as u64).collect();
    let runs = par_map(&indices, |&i| -> Result<(MetricsReport, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let counts: Vec<u64> = records
            .iter()
            .map(|r| if r.count == 0 { 0 } else { Poisson::new(r.count as f64).expect("positive mean").sample(&mut rng) as u64 })
            .collect();
        let resampled = with_counts(records, counts);
        if resampled.iter().all(|r| r.count == 0) {
            return Ok((point_metrics, true));
        }
        let fit = mle_from(&resampled, opts, &point.params)?;
        Ok((MetricsReport::compute(&fit.rho)?, fit.report.converged))
    });
    let mut samples = Vec::with_capacity(n_samples);
    let mut unconverged = 0;
    for r in runs {
        let (m, ok) = r?;
        unconverged += usize::from(!ok);
        samples.push(m);
    }
    let column = |f: fn(&MetricsReport) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let intervals = MetricIntervals {
        concurrence: interval(&mut column(|m| m.concurrence), point_metrics.concurrence),
        fidelity_phi_plus: interval(&mut column(|m| m.fidelity_phi_plus), point_metrics.fidelity_phi_plus),
        chsh_s: interval(&mut column(|m| m.chsh_s), point_metrics.chsh_s),
        purity: interval(&mut column(|m| m.purity), point_metrics.purity),
    };
    Ok(MonteCarloSummary { intervals, n_samples, seed, unconverged, samples })
}
