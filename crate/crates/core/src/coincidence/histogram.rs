use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::simulator::{Channel, ExperimentConfig, TimeTagEvent};
use crate::{Error, Result};

const PS: f64 = 1e12;

/// How triples are formed and binned. Times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramParams {
    pub bin_width: f64,
    /// Photons are paired with a trigger if they arrive within
    /// `[trigger, trigger + window)`.
    pub window: f64,
    /// Trigger-to-`t_-1` latency; histogram coordinates are measured from it.
    pub reference_offset: f64,
}

impl HistogramParams {
    /// Window covering all three arrival slots plus one delay of margin.
    pub fn for_config(cfg: &ExperimentConfig, bin_width: f64) -> Self {
        HistogramParams {
            bin_width,
            window: (cfg.trigger_latency + 3.0 * cfg.bin_delay).min(cfg.period()),
            reference_offset: cfg.trigger_latency,
        }
    }
}

/// Counts over `(t_A, t_B)` offsets from the trigger. Bin `i` along either
/// axis covers `[origin + i*bin_width, origin + (i+1)*bin_width)`; storage is
/// row-major with rows indexed by the `t_B` bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram2D {
    pub bin_width_ps: u64,
    pub origin_ps: i64,
    pub nx: usize,
    pub ny: usize,
    pub counts: Vec<u64>,
    /// Seconds of data that went into the histogram.
    pub integration_time: f64,
}

impl CoincidenceHistogram2D {
    pub fn zeros(bin_width_ps: u64, origin_ps: i64, nx: usize, ny: usize) -> Self {
        CoincidenceHistogram2D {
            bin_width_ps,
            origin_ps,
            nx,
            ny,
            counts: vec![0; nx * ny],
            integration_time: 0.0,
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    pub fn add(&mut self, ix: usize, iy: usize, n: u64) {
        self.counts[iy * self.nx + ix] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin index containing the offset `tau_ps`, if on the grid.
    pub fn bin_of(&self, tau_ps: f64, n: usize) -> Option<usize> {
        let idx = ((tau_ps - self.origin_ps as f64) / self.bin_width_ps as f64).floor();
        (idx >= 0.0 && (idx as usize) < n).then_some(idx as usize)
    }

    pub fn bin_center_ps(&self, i: usize) -> f64 {
        self.origin_ps as f64 + (i as f64 + 0.5) * self.bin_width_ps as f64
    }

    /// Adds another histogram with the same geometry (e.g. a separately
    /// processed stream segment).
    pub fn merge(&mut self, other: &CoincidenceHistogram2D) -> Result<()> {
        if (self.bin_width_ps, self.origin_ps, self.nx, self.ny) != (other.bin_width_ps, other.origin_ps, other.nx, other.ny) {
            return Err(Error::InvalidArgument("histogram geometries differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.integration_time += other.integration_time;
        Ok(())
    }

    /// CSV: a `bin_width_ps,origin_ps,nx,ny` header line, its values, then
    /// `ny` rows of `nx` counts.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_width_ps,origin_ps,nx,ny")?;
        writeln!(w, "{},{},{},{}", self.bin_width_ps, self.origin_ps, self.nx, self.ny)?;
        for row in self.counts.chunks(self.nx.max(1)) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("histogram CSV: missing {what}")))
        };
        let header = next("header")?;
        if header.trim() != "bin_width_ps,origin_ps,nx,ny" {
            return Err(Error::Parse("histogram CSV: bad header".into()));
        }
        let meta = next("geometry line")?;
        let f: Vec<&str> = meta.trim().split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse("histogram CSV: geometry line needs 4 fields".into()));
        }
        let perr = |_| Error::Parse("histogram CSV: bad geometry value".into());
        let bin_width_ps: u64 = f[0].trim().parse().map_err(perr)?;
        let origin_ps: i64 = f[1].trim().parse().map_err(perr)?;
        let nx: usize = f[2].trim().parse().map_err(perr)?;
        let ny: usize = f[3].trim().parse().map_err(perr)?;
        if bin_width_ps == 0 {
            return Err(Error::Parse("histogram CSV: zero bin width".into()));
        }
        let mut counts = Vec::with_capacity(nx * ny);
        for row in 0..ny {
            let line = next("count row")?;
            let vals: Vec<u64> = line
                .trim()
                .split(',')
                .map(|v| v.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("histogram CSV: bad count in row {row}")))?;
            if vals.len() != nx {
                return Err(Error::Parse(format!("histogram CSV: row {row} has {} values, expected {nx}", vals.len())));
            }
            counts.extend(vals);
        }
        Ok(CoincidenceHistogram2D { bin_width_ps, origin_ps, nx, ny, counts, integration_time: 0.0 })
    }
}

/// Folds a time-ordered stream into the triple-coincidence histogram.
///
/// Each trigger claims the first Alice event and the first Bob event in
/// `[trigger, trigger + window)`; a triple is recorded when both exist. An
/// event is not consumed, so a later trigger whose window also contains it
/// may claim it again.
pub fn build_histogram(events: &[TimeTagEvent], params: &HistogramParams) -> Result<CoincidenceHistogram2D> {
    if !(params.bin_width > 0.0 && params.window > 0.0) {
        return Err(Error::InvalidArgument("bin width and window must be positive".into()));
    }
    let bw = (params.bin_width * PS).round() as u64;
    let window = (params.window * PS).round() as u64;
    let origin = -((params.reference_offset * PS).round() as i64);
    if bw == 0 {
        return Err(Error::InvalidArgument("bin width below 1 ps".into()));
    }
    let n = window.div_ceil(bw) as usize;
    let mut hist = CoincidenceHistogram2D::zeros(bw, origin, n, n);

    let mut last = [None::<u64>; 3];
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    let mut triggers = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let slot = &mut last[e.channel.code() as usize];
        if matches!(*slot, Some(prev) if e.timestamp < prev) {
            return Err(Error::UnorderedStream { channel: e.channel.name(), index: i });
        }
        *slot = Some(e.timestamp);
        match e.channel {
            Channel::Trigger => triggers.push(e.timestamp),
            Channel::Alice => alice.push(e.timestamp),
            Channel::Bob => bob.push(e.timestamp),
        }
    }
    if let (Some(first), Some(last)) = (events.first(), events.last()) {
        hist.integration_time = (last.timestamp - first.timestamp) as f64 / PS;
    }

    let (mut ia, mut ib) = (0usize, 0usize);
    for &trig in &triggers {
        while ia < alice.len() && alice[ia] < trig {
            ia += 1;
        }
        while ib < bob.len() && bob[ib] < trig {
            ib += 1;
        }
        let (Some(&ta), Some(&tb)) = (alice.get(ia), bob.get(ib)) else {
            continue;
        };
        if ta - trig < window && tb - trig < window {
            hist.add(((ta - trig) / bw) as usize, ((tb - trig) / bw) as usize, 1);
        }
    }
    Ok(hist)
}
