use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::qcore::Cplx;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

/// Axis-aligned rectangle in micrometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

/// Anything that can be sampled as a transverse field amplitude
/// (coordinates in micrometres, zero outside its extent).
pub trait Field: Sync {
    fn sample(&self, x: f64, y: f64) -> Cplx;
    fn extent(&self) -> Extent;
    /// Grid spacing that resolves the field along each axis.
    fn spacing(&self) -> (f64, f64);
    /// Narrowest feature size (1/e^2 radius for models).
    fn min_width(&self) -> f64;
    /// `E(x, y) = X(x) Y(y)` for fields that factor, enabling 1D quadrature.
    fn separable(&self) -> Option<(Profile, Profile)> {
        None
    }
}

/// One-dimensional sum of Gaussian lobes `sum_k c_k exp(-(u - mu_k)^2 / w^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub lobes: Vec<(f64, f64)>,
    pub width: f64,
}

impl Profile {
    pub fn eval(&self, u: f64) -> f64 {
        self.lobes.iter().map(|&(c, mu)| c * (-((u - mu) / self.width).powi(2)).exp()).sum()
    }

    fn support(&self) -> (f64, f64) {
        let lo = self.lobes.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
        let hi = self.lobes.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
        (lo - EXTENT_RADII * self.width, hi + EXTENT_RADII * self.width)
    }
}

/// Model fields are truncated this many 1/e^2 radii from their lobe centres
/// (intensity below e^-32).
const EXTENT_RADII: f64 = 4.0;
/// Samples per 1/e^2 radius.
const SAMPLES_PER_RADIUS: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeKind {
    /// Circular Gaussian with the given 1/e^2 intensity diameter.
    Gaussian { diameter: f64 },
    /// Two elliptical Gaussian lobes stacked vertically at `+-separation/2`,
    /// sharing 1/e^2 radii `wx`, `wy`.
    TwoLobe { wx: f64, wy: f64, separation: f64, weights: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeModel {
    #[serde(flatten)]
    pub kind: ModeKind,
    pub polarization: Polarization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eff: Option<f64>,
}

impl ModeModel {
    pub fn gaussian(diameter: f64) -> Self {
        ModeModel { kind: ModeKind::Gaussian { diameter }, polarization: Polarization::TE, n_eff: None }
    }

    pub fn two_lobe(wx: f64, wy: f64, separation: f64) -> Self {
        ModeModel {
            kind: ModeKind::TwoLobe { wx, wy, separation, weights: [1.0, 1.0] },
            polarization: Polarization::TE,
            n_eff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            ModeKind::Gaussian { diameter } => diameter > 0.0 && diameter.is_finite(),
            ModeKind::TwoLobe { wx, wy, separation, weights } => {
                wx > 0.0
                    && wy > 0.0
                    && separation >= 0.0
                    && separation.is_finite()
                    && weights.iter().all(|w| *w >= 0.0 && w.is_finite())
                    && weights.iter().any(|w| *w > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid mode model {:?}", self.kind)))
        }
    }

    fn profiles(&self) -> (Profile, Profile) {
        match self.kind {
            ModeKind::Gaussian { diameter } => {
                let w = diameter / 2.0;
                (Profile { lobes: vec![(1.0, 0.0)], width: w }, Profile { lobes: vec![(1.0, 0.0)], width: w })
            }
            ModeKind::TwoLobe { wx, wy, separation, weights } => (
                Profile { lobes: vec![(1.0, 0.0)], width: wx },
                Profile { lobes: vec![(weights[0], separation / 2.0), (weights[1], -separation / 2.0)], width: wy },
            ),
        }
    }

    /// Samples the model onto a grid of `nx x ny` points spaced `dx, dy`,
    /// centred on the origin.
    /// Fails if the grid is too small for the mode.
    pub fn to_field(&self, nx: usize, ny: usize, dx: f64, dy: f64) -> Result<ModeField> {
        let mut amplitudes = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, y) = ModeField::coord(ix, nx, dx, iy, ny, dy);
                amplitudes.push(self.sample(x, y));
            }
        }
        ModeField::new(nx, ny, dx, dy, amplitudes)
    }
}

impl Field for ModeModel {
    fn sample(&self, x: f64, y: f64) -> Cplx {
        let (px, py) = self.profiles();
        Cplx::new(px.eval(x) * py.eval(y), 0.0)
    }

    fn extent(&self) -> Extent {
        let (px, py) = self.profiles();
        Extent { x: px.support(), y: py.support() }
    }

    fn spacing(&self) -> (f64, f64) {
        let (px, py) = self.profiles();
        (px.width / SAMPLES_PER_RADIUS, py.width / SAMPLES_PER_RADIUS)
    }

    fn min_width(&self) -> f64 {
        let (px, py) = self.profiles();
        px.width.min(py.width)
    }

    fn separable(&self) -> Option<(Profile, Profile)> {
        Some(self.profiles())
    }
}

/// Keys cubic-convolution weights (`a = -1/2`) for nodes `-1, 0, 1, 2` at
/// fractional offset `t` in `[0, 1]`.
fn keys_weights(t: f64) -> [f64; 4] {
    let (t2, t3) = (t * t, t * t * t);
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// Sampled complex field on a uniform grid centred on the origin; row-major
/// with rows along y. Units: micrometres. The grid must span at least three
/// 1/e^2 diameters (second-moment estimate) along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub amplitudes: Vec<Cplx>,
}

impl ModeField {
    fn coord(ix: usize, nx: usize, dx: f64, iy: usize, ny: usize, dy: f64) -> (f64, f64) {
        ((ix as f64 - (nx as f64 - 1.0) / 2.0) * dx, (iy as f64 - (ny as f64 - 1.0) / 2.0) * dy)
    }

    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, amplitudes: Vec<Cplx>) -> Result<Self> {
        if nx < 2 || ny < 2 || !(dx > 0.0 && dy > 0.0) || amplitudes.len() != nx * ny {
            return Err(Error::InvalidArgument("mode field needs >= 2x2 samples, positive spacing and nx*ny values".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite);
        }
        let f = ModeField { nx, ny, dx, dy, amplitudes };
        if !(f.power() > 0.0) {
            return Err(Error::InvalidArgument("mode field has zero power".into()));
        }
        let (rx, ry) = f.moment_radii();
        let (ex, ey) = ((nx - 1) as f64 * dx, (ny - 1) as f64 * dy);
        if ex < 6.0 * rx || ey < 6.0 * ry {
            return Err(Error::InvalidArgument(format!(
                "grid extent {ex:.3} x {ey:.3} um is below three mode diameters ({:.3} x {:.3} um)",
                6.0 * rx,
                6.0 * ry
            )));
        }
        Ok(f)
    }

    pub fn at(&self, ix: usize, iy: usize) -> Cplx {
        self.amplitudes[iy * self.nx + ix]
    }

    /// `sum |E|^2 dA` with trapezoidal weights.
    pub fn power(&self) -> f64 {
        let mut p = 0.0;
        for iy in 0..self.ny {
            let wy = if iy == 0 || iy + 1 == self.ny { 0.5 } else { 1.0 };
            for ix in 0..self.nx {
                let wx = if ix == 0 || ix + 1 == self.nx { 0.5 } else { 1.0 };
                p += wx * wy * self.at(ix, iy).norm_sqr();
            }
        }
        p * self.dx * self.dy
    }

    /// Second-moment 1/e^2 radii `(2 sigma_x, 2 sigma_y)` of the intensity,
    /// the Gaussian-equivalent widths.
    pub fn moment_radii(&self) -> (f64, f64) {
        let (mut s, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (x, y) = Self::coord(ix, self.nx, self.dx, iy, self.ny, self.dy);
                let i = self.at(ix, iy).norm_sqr();
                s += i;
                sx += i * x;
                sy += i * y;
                sxx += i * x * x;
                syy += i * y * y;
            }
        }
        let vx = sxx / s - (sx / s).powi(2);
        let vy = syy / s - (sy / s).powi(2);
        (2.0 * vx.max(0.0).sqrt(), 2.0 * vy.max(0.0).sqrt())
    }

    /// CSV: `nx,ny,dx_um,dy_um` header, its values, then one `re,im` pair
    /// per line in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nx,ny,dx_um,dy_um")?;
        writeln!(w, "{},{},{},{}", self.nx, self.ny, self.dx, self.dy)?;
        for a in &self.amplitudes {
            writeln!(w, "{},{}", a.re, a.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<Option<String>> { Ok(lines.next().transpose()?) };
        let perr = |m: &str| Error::Parse(format!("mode field CSV: {m}"));
        if next()?.map(|h| h.trim().to_string()).as_deref() != Some("nx,ny,dx_um,dy_um") {
            return Err(perr("bad header"));
        }
        let meta = next()?.ok_or_else(|| perr("missing geometry"))?;
        let f: Vec<&str> = meta.trim().split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(perr("geometry line needs 4 fields"));
        }
        let nx: usize = f[0].parse().map_err(|_| perr("bad nx"))?;
        let ny: usize = f[1].parse().map_err(|_| perr("bad ny"))?;
        let dx: f64 = f[2].parse().map_err(|_| perr("bad dx"))?;
        let dy: f64 = f[3].parse().map_err(|_| perr("bad dy"))?;
        let mut amps = Vec::with_capacity(nx.saturating_mul(ny).min(1 << 24));
        while let Some(line) = next()? {
            if line.trim().is_empty() {
                continue;
            }
            let (re, im) = line.trim().split_once(',').ok_or_else(|| perr("expected re,im"))?;
            let re: f64 = re.trim().parse().map_err(|_| perr("bad real part"))?;
            let im: f64 = im.trim().parse().map_err(|_| perr("bad imaginary part"))?;
            amps.push(Cplx::new(re, im));
        }
        ModeField::new(nx, ny, dx, dy, amps)
    }
}

impl Field for ModeField {
    /// Bilinear interpolation, zero outside the grid.
    fn sample(&self, x: f64, y: f64) -> Cplx {
        let fx = x / self.dx + (self.nx as f64 - 1.0) / 2.0;
        let fy = y / self.dy + (self.ny as f64 - 1.0) / 2.0;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (self.nx - 1) as f64 && fy <= (self.ny - 1) as f64) {
            return Cplx::new(0.0, 0.0);
        }
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        let (wx, wy) = (keys_weights(fx - ix as f64), keys_weights(fy - iy as f64));
        let mut acc = Cplx::new(0.0, 0.0);
        for (j, wyj) in wy.iter().enumerate() {
            let Some(row) = (iy + j).checked_sub(1).filter(|&r| r < self.ny) else { continue };
            for (i, wxi) in wx.iter().enumerate() {
                if let Some(col) = (ix + i).checked_sub(1).filter(|&c| c < self.nx) {
                    acc += self.at(col, row) * (wxi * wyj);
                }
            }
        }
        acc
    }

    fn extent(&self) -> Extent {
        let hx = (self.nx as f64 - 1.0) / 2.0 * self.dx;
        let hy = (self.ny as f64 - 1.0) / 2.0 * self.dy;
        Extent { x: (-hx, hx), y: (-hy, hy) }
    }

    fn spacing(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    fn min_width(&self) -> f64 {
        let (rx, ry) = self.moment_radii();
        rx.min(ry)
    }
}
