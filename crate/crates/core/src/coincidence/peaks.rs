use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::CoincidenceHistogram2D;
use crate::simulator::CellRates;
use crate::{Error, Result};

/// Default half-width of the square integration window around each cell.
pub const DEFAULT_CELL_HALFWIDTH: f64 = 0.5e-9;

const PS: f64 = 1e12;
const MIN_BINS_PER_DELAY: f64 = 5.0;

/// Counts integrated over the nine arrival-slot cells, indexed
/// `[t_A + 1][t_B + 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakCounts {
    pub cells: [[u64; 3]; 3],
}

impl PeakCounts {
    pub fn cell(&self, t_a: i8, t_b: i8) -> u64 {
        self.cells[(t_a + 1) as usize][(t_b + 1) as usize]
    }

    /// Antidiagonal sums, peak 1 (`t_A + t_B = -2`) through peak 5.
    pub fn peaks(&self) -> [u64; 5] {
        let mut p = [0; 5];
        for (i, row) in self.cells.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                p[i + j] += c;
            }
        }
        p
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    /// Expected counts after `integration_time` seconds, rounded.
    pub fn from_rates(rates: &CellRates, integration_time: f64) -> Self {
        PeakCounts { cells: rates.rate.map(|row| row.map(|r| (r * integration_time).round() as u64)) }
    }
}

/// Flat accidental level estimated from bins outside every cell window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundEstimate {
    pub per_bin: f64,
    /// Expected accidentals inside one cell window.
    pub per_cell: f64,
    pub off_peak_bins: usize,
}

fn check_geometry(h: &CoincidenceHistogram2D, bin_delay: f64, cell_halfwidth: f64) -> Result<()> {
    if !(bin_delay > 0.0 && cell_halfwidth > 0.0) {
        return Err(Error::InvalidArgument("bin delay and cell half-width must be positive".into()));
    }
    if bin_delay * PS / (h.bin_width_ps as f64) < MIN_BINS_PER_DELAY {
        return Err(Error::InvalidArgument(format!(
            "bin delay spans fewer than {MIN_BINS_PER_DELAY} histogram bins"
        )));
    }
    if cell_halfwidth >= bin_delay / 2.0 {
        return Err(Error::OverlappingWindows { halfwidth: cell_halfwidth, bin_delay });
    }
    let lo = h.origin_ps as f64;
    let hi_x = lo + (h.nx as u64 * h.bin_width_ps) as f64;
    let hi_y = lo + (h.ny as u64 * h.bin_width_ps) as f64;
    let (need_lo, need_hi) = ((-cell_halfwidth) * PS, (2.0 * bin_delay + cell_halfwidth) * PS);
    if lo > need_lo || hi_x < need_hi || hi_y < need_hi {
        return Err(Error::InvalidArgument("histogram grid does not cover all cell windows".into()));
    }
    Ok(())
}

/// Bins whose centres lie within `center +- halfwidth` (all in ps).
fn window_bins(h: &CoincidenceHistogram2D, n: usize, center: f64, halfwidth: f64) -> Range<usize> {
    let bw = h.bin_width_ps as f64;
    let first = ((center - halfwidth - h.origin_ps as f64) / bw - 0.5).ceil().max(0.0) as usize;
    let last = ((center + halfwidth - h.origin_ps as f64) / bw - 0.5).floor();
    let end = if last < 0.0 { 0 } else { (last as usize + 1).min(n) };
    first.min(end)..end
}

fn cell_windows(h: &CoincidenceHistogram2D, bin_delay: f64, cell_halfwidth: f64) -> [(Range<usize>, Range<usize>); 3] {
    std::array::from_fn(|k| {
        let c = k as f64 * bin_delay * PS;
        let hw = cell_halfwidth * PS;
        (window_bins(h, h.nx, c, hw), window_bins(h, h.ny, c, hw))
    })
}

/// Integrates the histogram over square windows of `+-cell_halfwidth` around
/// the cell centres `{0, d, 2d}^2`. Accidentals are not subtracted.
pub fn extract_peaks(h: &CoincidenceHistogram2D, bin_delay: f64, cell_halfwidth: f64) -> Result<PeakCounts> {
    check_geometry(h, bin_delay, cell_halfwidth)?;
    let win = cell_windows(h, bin_delay, cell_halfwidth);
    let mut out = PeakCounts::default();
    for (a, (xr, _)) in win.iter().enumerate() {
        for (b, (_, yr)) in win.iter().enumerate() {
            out.cells[a][b] = yr
                .clone()
                .flat_map(|iy| xr.clone().map(move |ix| (ix, iy)))
                .map(|(ix, iy)| h.get(ix, iy))
                .sum();
        }
    }
    Ok(out)
}

/// Mean count per bin over the part of the grid outside all nine cell
/// windows, scaled to the area of one window.
pub fn background_estimate(h: &CoincidenceHistogram2D, bin_delay: f64, cell_halfwidth: f64) -> Result<BackgroundEstimate> {
    check_geometry(h, bin_delay, cell_halfwidth)?;
    let win = cell_windows(h, bin_delay, cell_halfwidth);
    let in_x = |ix: usize| win.iter().any(|(xr, _)| xr.contains(&ix));
    let in_y = |iy: usize| win.iter().any(|(_, yr)| yr.contains(&iy));
    let (mut sum, mut n) = (0u64, 0usize);
    for iy in 0..h.ny {
        for ix in 0..h.nx {
            if !(in_x(ix) && in_y(iy)) {
                sum += h.get(ix, iy);
                n += 1;
            }
        }
    }
    let per_bin = if n == 0 { 0.0 } else { sum as f64 / n as f64 };
    let cell_bins = win[1].0.len() * win[1].1.len();
    Ok(BackgroundEstimate { per_bin, per_cell: per_bin * cell_bins as f64, off_peak_bins: n })
}

impl CoincidenceHistogram2D {
    /// Histogram with each cell's counts placed in the bin holding its centre.
    /// Grid spans `[-d, 3d)` on both axes.
    pub fn from_cell_counts(cells: &[[u64; 3]; 3], bin_width: f64, bin_delay: f64) -> Self {
        let bw = (bin_width * PS).round() as u64;
        let d = bin_delay * PS;
        let origin = -(d.round() as i64);
        let n = (4.0 * d / bw as f64).ceil() as usize;
        let mut h = CoincidenceHistogram2D::zeros(bw, origin, n, n);
        for (a, row) in cells.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                let ix = h.bin_of(a as f64 * d, n).expect("cell centre on grid");
                let iy = h.bin_of(b as f64 * d, n).expect("cell centre on grid");
                h.add(ix, iy, c);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    use super::*;
    use crate::coincidence::{build_histogram, HistogramParams};
    use crate::simulator::{expected_cell_rates, simulate_stream, ExperimentConfig, PerParty, TimeTagEvent};

    const D: f64 = 3e-9;
    const BW: f64 = 200e-12;

    #[test]
    fn one_count_per_cell_gives_antidiagonal_multiplicities() {
        let h = CoincidenceHistogram2D::from_cell_counts(&[[1; 3]; 3], BW, D);
        let p = extract_peaks(&h, D, DEFAULT_CELL_HALFWIDTH).unwrap();
        assert_eq!(p.peaks(), [1, 2, 3, 2, 1]);
        assert_eq!(p.total(), 9);
    }

    #[test]
    fn zero_histogram() {
        let h = CoincidenceHistogram2D::from_cell_counts(&[[0; 3]; 3], BW, D);
        assert_eq!(extract_peaks(&h, D, DEFAULT_CELL_HALFWIDTH).unwrap().peaks(), [0; 5]);
    }

    #[test]
    fn peaks_follow_antidiagonal_rule() {
        let cells = [[1, 2, 3], [4, 5, 6], [7, 8, 9]];
        let p = PeakCounts { cells };
        assert_eq!(p.cell(-1, 1), 3);
        assert_eq!(p.peaks(), [1, 2 + 4, 3 + 5 + 7, 6 + 8, 9]);
    }

    #[test]
    fn geometry_errors() {
        let h = CoincidenceHistogram2D::from_cell_counts(&[[0; 3]; 3], BW, D);
        assert!(matches!(extract_peaks(&h, D, 1.5e-9), Err(Error::OverlappingWindows { .. })));
        let coarse = CoincidenceHistogram2D::from_cell_counts(&[[0; 3]; 3], 1e-9, D);
        assert!(extract_peaks(&coarse, D, DEFAULT_CELL_HALFWIDTH).is_err());
        let small = CoincidenceHistogram2D::zeros(200, 0, 20, 20);
        assert!(extract_peaks(&small, D, DEFAULT_CELL_HALFWIDTH).is_err());
    }

    #[test]
    fn window_edges_use_bin_centres() {
        let mut h = CoincidenceHistogram2D::zeros(200, -3000, 60, 60);
        // centre cell (d, d): the window [2500, 3500] ps includes both edge centres.
        let at = |h: &CoincidenceHistogram2D, t: f64| h.bin_of(t, 60).unwrap();
        let (inside, outside) = (at(&h, 3450.0), at(&h, 3750.0));
        h.add(inside, inside, 1);
        h.add(outside, outside, 10);
        let p = extract_peaks(&h, D, DEFAULT_CELL_HALFWIDTH).unwrap();
        assert_eq!(p.cell(0, 0), 1);
    }

    fn desk_cfg() -> ExperimentConfig {
        ExperimentConfig {
            pair_prob: 0.05,
            visibility: 1.0,
            det_efficiency: PerParty::both(1.0),
            interferometer_transmission: PerParty::both(1.0),
            integration_time: 2e-3,
            rng_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn simulated_ideal_stream_populates_seven_cells() {
        let cfg = desk_cfg();
        let events = simulate_stream(&cfg).unwrap();
        let h = build_histogram(&events, &HistogramParams::for_config(&cfg, BW)).unwrap();
        let p = extract_peaks(&h, cfg.bin_delay, DEFAULT_CELL_HALFWIDTH).unwrap();
        let peak3 = p.peaks()[2];
        assert!(p.cell(-1, 1) * 100 < peak3 && p.cell(1, -1) * 100 < peak3);
        let populated = p.cells.iter().flatten().filter(|&&c| c > 50).count();
        assert_eq!(populated, 7);
        // every triple lands in a cell for a jitter-limited, background-free stream
        assert_eq!(p.total(), h.total());
    }

    #[test]
    fn translation_invariance() {
        let cfg = ExperimentConfig { integration_time: 2e-4, ..desk_cfg() };
        let events = simulate_stream(&cfg).unwrap();
        let shifted: Vec<TimeTagEvent> = events
            .iter()
            .map(|e| TimeTagEvent { timestamp: e.timestamp + 123_456_789, ..*e })
            .collect();
        let params = HistogramParams::for_config(&cfg, BW);
        let a = extract_peaks(&build_histogram(&events, &params).unwrap(), D, DEFAULT_CELL_HALFWIDTH).unwrap();
        let b = extract_peaks(&build_histogram(&shifted, &params).unwrap(), D, DEFAULT_CELL_HALFWIDTH).unwrap();
        assert_eq!(a, b);
        assert!(a.total() > 0);
    }

    #[test]
    fn rates_round_trip_through_synthetic_histogram() {
        let cfg = ExperimentConfig { pump_phase: 0.7, visibility: 0.9, ..desk_cfg() };
        let rates = expected_cell_rates(&cfg).unwrap();
        let t = 1e6 / rates.total();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cells = [[0u64; 3]; 3];
        for (a, row) in cells.iter_mut().enumerate() {
            for (b, c) in row.iter_mut().enumerate() {
                let mean = rates.rate[a][b] * t;
                *c = if mean > 0.0 { Poisson::new(mean).unwrap().sample(&mut rng) as u64 } else { 0 };
            }
        }
        let h = CoincidenceHistogram2D::from_cell_counts(&cells, BW, D);
        let p = extract_peaks(&h, D, DEFAULT_CELL_HALFWIDTH).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let mean = rates.rate[a][b] * t;
                let got = p.cells[a][b] as f64;
                assert!((got - mean).abs() <= 5.0 * mean.sqrt().max(1.0), "cell {a},{b}: {got} vs {mean}");
            }
        }
    }

    #[test]
    fn background_estimate_recovers_flat_level() {
        let mut h = CoincidenceHistogram2D::from_cell_counts(&[[1000; 3]; 3], BW, D);
        for c in h.counts.iter_mut() {
            *c += 2;
        }
        let bg = background_estimate(&h, D, DEFAULT_CELL_HALFWIDTH).unwrap();
        assert_eq!(bg.per_bin, 2.0);
        assert_eq!(bg.per_cell, 2.0 * 36.0);
    }
}
