//! Two-qubit state reconstruction from projection records: linear
//! inversion, maximum likelihood and Monte Carlo error bars.

mod linear;
mod mle;
mod montecarlo;

use serde::{Deserialize, Serialize};

pub use linear::{linear_reconstruct, LinearEstimate};
pub use mle::{mle_reconstruct, rho_from_params, CostKind, MleOptions, MleResult, OptimizerReport, N_PARAMS};
pub use montecarlo::{monte_carlo, MonteCarloSummary, MIN_MC_SAMPLES};

use crate::coincidence::ProjectionRecord;
use crate::metrics::MetricsReport;
use crate::qcore::{DensityMatrix, Mat4};
use crate::{Error, Result};

/// Expected counts `n * w * <psi|rho|psi>` for each record's projector and
/// weight, where `n` is the overall count scale.
pub fn expected_counts(rho: &Mat4, records: &[ProjectionRecord], n: f64) -> Vec<f64> {
    records
        .iter()
        .map(|r| n * r.normalization * rho.sandwich(&r.projector.0, &r.projector.0).re)
        .collect()
}

/// Copy of `records` with counts replaced.
pub fn with_counts(records: &[ProjectionRecord], counts: impl IntoIterator<Item = u64>) -> Vec<ProjectionRecord> {
    records
        .iter()
        .zip(counts)
        .map(|(r, count)| ProjectionRecord { count, ..r.clone() })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyOptions {
    pub mle: MleOptions,
    /// Monte Carlo resamples; 0 skips error estimation.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        TomographyOptions { mle: MleOptions::default(), mc_samples: 1000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub rho_mle: DensityMatrix,
    pub rho_linear: Mat4,
    pub linear_rank: usize,
    pub metrics: MetricsReport,
    pub mc_samples: usize,
    pub seed: u64,
    pub optimizer: OptimizerReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Linear estimate, MLE, metrics and (optionally) Monte Carlo intervals.
pub fn reconstruct(records: &[ProjectionRecord], opts: &TomographyOptions) -> Result<TomographyResult> {
    let linear = linear_reconstruct(records);
    let mle = mle_reconstruct(records, &opts.mle)?;
    let mut metrics = MetricsReport::compute(&mle.rho)?;
    if opts.mc_samples > 0 {
        let mc = monte_carlo(records, opts.mc_samples, opts.seed, &opts.mle, Some(&mle))?;
        metrics.intervals = Some(mc.intervals);
    }
    let mut warnings = linear.warnings;
    if !mle.report.converged {
        warnings.push(format!("MLE did not converge after {} iterations", mle.report.iterations));
    }
    Ok(TomographyResult {
        rho_mle: mle.rho,
        rho_linear: linear.rho,
        linear_rank: linear.rank,
        metrics,
        mc_samples: opts.mc_samples,
        seed: opts.seed,
        optimizer: mle.report,
        warnings,
    })
}

pub fn read_records_json(text: &str) -> Result<Vec<ProjectionRecord>> {
    let records: Vec<ProjectionRecord> = serde_json::from_str(text)?;
    if records.iter().any(|r| !(r.normalization.is_finite() && r.normalization > 0.0)) {
        return Err(Error::InvalidArgument("record normalization must be positive".into()));
    }
    Ok(records)
}


#[cfg(test)]
mod tests {
    use super::testutil::template;
    use super::*;
    use crate::qcore::Ket4;

    #[test]
    fn pipeline_on_exact_counts() {
        let recs = template();
        let counts = expected_counts(&Ket4::phi_plus().projector(), &recs, 6400.0);
        let recs = with_counts(&recs, counts.iter().map(|c| c.round() as u64));
        let res = reconstruct(&recs, &TomographyOptions { mc_samples: 100, ..Default::default() }).unwrap();
        assert!(res.metrics.fidelity_phi_plus > 0.9999);
        let iv = res.metrics.intervals.unwrap();
        assert!(iv.concurrence.contains(res.metrics.concurrence));
        assert_eq!(res.linear_rank, 16);
        let json = serde_json::to_string(&res).unwrap();
        let back: TomographyResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.metrics, res.metrics);
    }

    #[test]
    fn records_json_round_trip() {
        let recs = with_counts(&template(), 0..36);
        let json = serde_json::to_string(&recs).unwrap();
        assert_eq!(read_records_json(&json).unwrap(), recs);
    }
}
