use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Transmission in dB against wavelength in nm, sorted by wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub value_db: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        if points.iter().any(|(l, v)| !l.is_finite() || !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate wavelength in spectrum".into()));
        }
        Ok(Spectrum { wavelength_nm: points.iter().map(|p| p.0).collect(), value_db: points.iter().map(|p| p.1).collect() })
    }

    /// Flat spectrum sampled at `wavelengths`.
    pub fn flat(wavelengths: &[f64], value_db: f64) -> Result<Self> {
        Self::new(wavelengths.iter().map(|&l| (l, value_db)).collect())
    }

    /// Two-column CSV `wavelength_nm,transmission_db`. Blank lines, `#`
    /// comments and a non-numeric header line are skipped.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split([',', ';', '\t']).map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("spectrum line {}: expected two columns", i + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(l), Ok(v)) => points.push((l, v)),
                _ if points.is_empty() && i == 0 => continue,
                _ => return Err(Error::Parse(format!("spectrum line {}: not numeric", i + 1))),
            }
        }
        Self::new(points)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelength_nm[0], *self.wavelength_nm.last().unwrap())
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn at(&self, l: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&l) {
            return None;
        }
        let i = self.wavelength_nm.partition_point(|&x| x < l);
        if self.wavelength_nm[i] == l {
            return Some(self.value_db[i]);
        }
        let (x0, x1) = (self.wavelength_nm[i - 1], self.wavelength_nm[i]);
        let t = (l - x0) / (x1 - x0);
        Some(self.value_db[i - 1] * (1.0 - t) + self.value_db[i] * t)
    }
}

/// Pointwise difference of two spectra on the union of their sample
/// wavelengths within the common range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDifference {
    pub curve: Spectrum,
    pub min_db: f64,
    pub min_at_nm: f64,
    pub max_db: f64,
    pub max_at_nm: f64,
}

impl SpectrumDifference {
    /// Smallest value within `[lo, hi]` nm (sample points plus interpolated
    /// band edges).
    pub fn band_min(&self, lo: f64, hi: f64) -> Option<f64> {
        let edges = [lo, hi].into_iter().filter_map(|l| self.curve.at(l));
        self.curve
            .wavelength_nm
            .iter()
            .zip(&self.curve.value_db)
            .filter(|(l, _)| (lo..=hi).contains(*l))
            .map(|(_, v)| *v)
            .chain(edges)
            .reduce(f64::min)
    }
}

fn difference(a: &Spectrum, b: &Spectrum) -> Result<SpectrumDifference> {
    let (a0, a1) = a.range();
    let (b0, b1) = b.range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if lo > hi {
        return Err(Error::DisjointRanges);
    }
    let mut grid: Vec<f64> = a.wavelength_nm.iter().chain(&b.wavelength_nm).copied().filter(|l| (lo..=hi).contains(l)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let points: Vec<(f64, f64)> = grid.iter().map(|&l| (l, a.at(l).unwrap() - b.at(l).unwrap())).collect();
    let curve = Spectrum::new(points)?;
    let (mut imin, mut imax) = (0, 0);
    for (i, v) in curve.value_db.iter().enumerate() {
        if *v < curve.value_db[imin] {
            imin = i;
        }
        if *v > curve.value_db[imax] {
            imax = i;
        }
    }
    Ok(SpectrumDifference {
        min_db: curve.value_db[imin],
        min_at_nm: curve.wavelength_nm[imin],
        max_db: curve.value_db[imax],
        max_at_nm: curve.wavelength_nm[imax],
        curve,
    })
}

/// Polarization extinction ratio `favored - orthogonal` in dB.
pub fn per_from_spectra(favored: &Spectrum, orthogonal: &Spectrum) -> Result<SpectrumDifference> {
    difference(favored, orthogonal)
}

/// Filter suppression `reference - filtered` in dB.
pub fn suppression_from_spectra(reference: &Spectrum, filtered: &Spectrum) -> Result<SpectrumDifference> {
    difference(reference, filtered)
}
