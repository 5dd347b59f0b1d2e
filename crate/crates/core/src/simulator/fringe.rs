use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{expected_cell_rates, simulate_stream, ExperimentConfig};
use crate::coincidence::{build_histogram, extract_peaks, HistogramParams, DEFAULT_CELL_HALFWIDTH};
use crate::util::par_map;
use crate::{Error, Result};

/// Histogram bin width used for sampled scans.
const SCAN_BIN_WIDTH: f64 = 200e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FringeMode {
    /// Exact central-cell rates from the interference model.
    Analytic,
    /// Simulated streams pushed through histogramming and peak extraction.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phase: f64,
    /// Central-cell coincidence rate in Hz.
    pub central_rate: f64,
    /// Raw central-cell count, sampled mode only.
    pub counts: Option<u64>,
}

/// Least-squares fit of `A (1 + V cos(phi - phi0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub phase_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub mode: FringeMode,
    pub points: Vec<FringePoint>,
    pub fit: FringeFit,
}

fn solve3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(det.abs() > 1e-12 * scale.powi(3)) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    Some(inv)
}

/// Fits `y = a + b cos(phi) + c sin(phi)`, so `V = sqrt(b^2 + c^2) / a`.
///
/// With `variances` the fit is weighted and the standard error follows from
/// them; without, points are weighted equally and the error is scaled by the
/// residual variance. The visibility error comes from the delta method.
pub fn fit_fringe(phases: &[f64], values: &[f64], variances: Option<&[f64]>) -> Result<FringeFit> {
    let n = phases.len();
    if n != values.len() || variances.is_some_and(|v| v.len() != n) {
        return Err(Error::InvalidArgument("fringe data lengths differ".into()));
    }
    if n < 5 {
        return Err(Error::FitFailure(format!("need at least 5 phase points, got {n}")));
    }
    let (lo, hi) = phases.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| (l.min(p), h.max(p)));
    if hi - lo < TAU * (n - 1) as f64 / n as f64 - 1e-9 {
        return Err(Error::FitFailure("phase points do not cover a full period".into()));
    }
    if values.iter().chain(phases).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let basis = |p: f64| [1.0, p.cos(), p.sin()];
    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for i in 0..n {
        let w = variances.map_or(1.0, |v| 1.0 / v[i].max(1e-300));
        let x = basis(phases[i]);
        for r in 0..3 {
            rhs[r] += w * x[r] * values[i];
            for c in 0..3 {
                normal[r][c] += w * x[r] * x[c];
            }
        }
    }
    let inv = solve3(normal).ok_or_else(|| Error::FitFailure("singular normal equations".into()))?;
    let beta: [f64; 3] = std::array::from_fn(|r| (0..3).map(|c| inv[r][c] * rhs[c]).sum());
    let [a, b, c] = beta;
    if !(a > 0.0) {
        return Err(Error::FitFailure("non-positive mean level".into()));
    }
    let cov_scale = if variances.is_some() {
        1.0
    } else if n > 3 {
        let rss: f64 = (0..n)
            .map(|i| {
                let x = basis(phases[i]);
                let fit: f64 = (0..3).map(|k| x[k] * beta[k]).sum();
                (values[i] - fit).powi(2)
            })
            .sum();
        rss / (n - 3) as f64
    } else {
        0.0
    };
    let r = b.hypot(c);
    let visibility = r / a;
    let grad = if r > 0.0 { [-r / (a * a), b / (r * a), c / (r * a)] } else { [-r / (a * a), 1.0 / a, 0.0] };
    let var: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| grad[i] * inv[i][j] * grad[j]).sum();
    Ok(FringeFit {
        amplitude: a,
        visibility,
        visibility_stderr: (var * cov_scale).max(0.0).sqrt(),
        phase_offset: c.atan2(b),
    })
}

/// Scans Alice's analysis phase over `phases` (all other phases from `cfg`)
/// and fits the central-cell fringe. Sampled points use seeds
/// `rng_seed + index`.
pub fn fringe_scan(cfg: &ExperimentConfig, phases: &[f64], mode: FringeMode) -> Result<FringeScan> {
    cfg.validate()?;
    let indexed: Vec<(usize, f64)> = phases.iter().copied().enumerate().collect();
    let points = par_map(&indexed, |&(i, phase)| -> Result<FringePoint> {
        let c = ExperimentConfig { alice_phase: phase, rng_seed: cfg.rng_seed.wrapping_add(i as u64), ..cfg.clone() };
        match mode {
            FringeMode::Analytic => Ok(FringePoint { phase, central_rate: expected_cell_rates(&c)?.get(0, 0), counts: None }),
            FringeMode::Sampled => {
                let events = simulate_stream(&c)?;
                let h = build_histogram(&events, &HistogramParams::for_config(&c, SCAN_BIN_WIDTH))?;
                let n = extract_peaks(&h, c.bin_delay, DEFAULT_CELL_HALFWIDTH)?.cell(0, 0);
                Ok(FringePoint { phase, central_rate: n as f64 / c.integration_time, counts: Some(n) })
            }
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let fit = match mode {
        FringeMode::Analytic => {
            let y: Vec<f64> = points.iter().map(|p| p.central_rate).collect();
            fit_fringe(phases, &y, None)?
        }
        FringeMode::Sampled => {
            let y: Vec<f64> = points.iter().map(|p| p.counts.unwrap_or(0) as f64).collect();
            let var: Vec<f64> = y.iter().map(|&v| v.max(1.0)).collect();
            let f = fit_fringe(phases, &y, Some(&var))?;
            FringeFit { amplitude: f.amplitude / cfg.integration_time, ..f }
        }
    };
    Ok(FringeScan { mode, points, fit })
}
