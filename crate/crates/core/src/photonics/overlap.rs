use std::io::Write;

use serde::{Deserialize, Serialize};

use super::mode::{Field, Profile};
use crate::qcore::Cplx;
use crate::util::par_map;
use crate::{Error, Result};

/// Coupling efficiency and the corresponding loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub eta: f64,
    pub loss_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn loss_db(eta: f64) -> f64 {
    // `+ 0.0` turns the -0 of a perfect overlap into 0
    -10.0 * eta.log10() + 0.0
}

/// Lattice `k h` covering `[lo, hi]`, anchored at zero so that swapping the
/// two fields reproduces the same sample points.
fn lattice(lo: f64, hi: f64, h: f64) -> impl Iterator<Item = (f64, f64)> {
    let k0 = (lo / h).floor() as i64;
    let k1 = (hi / h).ceil() as i64;
    (k0..=k1).map(move |k| (k as f64 * h, if k == k0 || k == k1 { 0.5 } else { 1.0 }))
}

fn range(a: (f64, f64), b: (f64, f64), d: f64) -> (f64, f64) {
    ((a.0 - d / 2.0).min(b.0 + d / 2.0), (a.1 - d / 2.0).max(b.1 + d / 2.0))
}

/// `(cross, norm_a, norm_b)` of two real profiles, `a` at `u + d/2`, `b` at
/// `u - d/2`.
fn overlap_1d(a: &Profile, b: &Profile, ext: ((f64, f64), (f64, f64)), h: f64, d: f64) -> (f64, f64, f64) {
    let (lo, hi) = range(ext.0, ext.1, d);
    let (mut c, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (u, w) in lattice(lo, hi, h) {
        let (fa, fb) = (a.eval(u + d / 2.0), b.eval(u - d / 2.0));
        c += w * fa * fb;
        na += w * fa * fa;
        nb += w * fb * fb;
    }
    (c, na, nb)
}

/// Normalized power overlap of field `a` with field `b` displaced by
/// `(dx, dy)` micrometres:
/// `|int a* b(. - d)|^2 / (int |a|^2 int |b|^2)`.
///
/// Integrals use the trapezoidal rule on a common lattice with the finer of
/// the two spacings, sampling `a` at `u + d/2` and `b` at `u - d/2`; both
/// norms use the same samples, so Cauchy-Schwarz and the swap symmetry
/// `eta(a, b; d) = eta(b, a; -d)` hold exactly. Separable fields reduce to
/// two 1D integrals.
pub fn overlap(a: &dyn Field, b: &dyn Field, dx: f64, dy: f64) -> Result<Overlap> {
    if !(dx.is_finite() && dy.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (ea, eb) = (a.extent(), b.extent());
    let disjoint = |p: (f64, f64), q: (f64, f64), d: f64| p.1 < q.0 + d || q.1 + d < p.0;
    if disjoint(ea.x, eb.x, dx) || disjoint(ea.y, eb.y, dy) {
        return Ok(Overlap { eta: 0.0, loss_db: f64::INFINITY, warning: Some("field supports do not overlap".into()) });
    }
    let (hx, hy) = {
        let (ax, ay) = a.spacing();
        let (bx, by) = b.spacing();
        (ax.min(bx), ay.min(by))
    };
    let eta = match (a.separable(), b.separable()) {
        (Some((ax, ay)), Some((bx, by))) => {
            let (cx, nax, nbx) = overlap_1d(&ax, &bx, (ea.x, eb.x), hx, dx);
            let (cy, nay, nby) = overlap_1d(&ay, &by, (ea.y, eb.y), hy, dy);
            (cx * cy).powi(2) / (nax * nay * nbx * nby)
        }
        _ => {
            let (xlo, xhi) = range(ea.x, eb.x, dx);
            let (ylo, yhi) = range(ea.y, eb.y, dy);
            let xs: Vec<(f64, f64)> = lattice(xlo, xhi, hx).collect();
            let (mut c, mut na, mut nb) = (Cplx::new(0.0, 0.0), 0.0, 0.0);
            for (y, wy) in lattice(ylo, yhi, hy) {
                for &(x, wx) in &xs {
                    let w = wx * wy;
                    let fa = a.sample(x + dx / 2.0, y + dy / 2.0);
                    let fb = b.sample(x - dx / 2.0, y - dy / 2.0);
                    c += fa.conj() * fb * w;
                    na += w * fa.norm_sqr();
                    nb += w * fb.norm_sqr();
                }
            }
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                c.norm_sqr() / (na * nb)
            }
        }
    };
    let warning = (eta == 0.0).then(|| "fields do not overlap at this displacement".to_string());
    Ok(Overlap { eta, loss_db: loss_db(eta), warning })
}

fn loss_at(a: &dyn Field, b: &dyn Field, x: f64, y: f64) -> f64 {
    overlap(a, b, x, y).map(|o| o.loss_db).unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub dx: f64,
    pub dy: f64,
    pub loss_db: f64,
}

/// Distance from the optimum at which the loss has risen by the given
/// amount, averaged over both directions along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfWidths {
    pub x_1db: Option<f64>,
    pub y_1db: Option<f64>,
    pub x_3db: Option<f64>,
    pub y_3db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `loss_db[iy][ix]`
    pub loss_db: Vec<Vec<f64>>,
    pub grid_minimum: LossPoint,
    /// Minimum after local refinement from the best grid point.
    pub optimum: LossPoint,
    pub half_widths: HalfWidths,
}

impl LossMap {
    /// CSV grid: first row `dy\dx` then the x values; each following row
    /// starts with its y value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let head: Vec<String> = self.xs.iter().map(|x| x.to_string()).collect();
        writeln!(w, "dy\\dx,{}", head.join(","))?;
        for (y, row) in self.ys.iter().zip(&self.loss_db) {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{y},{}", vals.join(","))?;
        }
        Ok(())
    }
}

fn axis(range: (f64, f64), step: f64) -> Vec<f64> {
    let n = ((range.1 - range.0) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| range.0 + i as f64 * step).collect()
}

/// Golden-section minimum of `f` on `[lo, hi]`.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-9 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Alternating line searches within one grid step of `start`.
pub fn refine_optimum(a: &dyn Field, b: &dyn Field, start: (f64, f64), step: f64) -> LossPoint {
    let (mut x, mut y) = start;
    for _ in 0..50 {
        let nx = golden(|t| loss_at(a, b, t, y), x - step, x + step);
        let ny = golden(|t| loss_at(a, b, nx, t), y - step, y + step);
        let moved = (nx - x).abs().max((ny - y).abs());
        (x, y) = (nx, ny);
        if moved < 1e-8 {
            break;
        }
    }
    LossPoint { dx: x, dy: y, loss_db: loss_at(a, b, x, y) }
}

/// Distance along `dir` from `opt` where the loss first exceeds the optimum
/// by `excess_db`, searched out to `limit`.
fn crossing(a: &dyn Field, b: &dyn Field, opt: &LossPoint, dir: (f64, f64), excess_db: f64, step: f64, limit: f64) -> Option<f64> {
    let target = opt.loss_db + excess_db;
    let f = |t: f64| loss_at(a, b, opt.dx + dir.0 * t, opt.dy + dir.1 * t) - target;
    let (mut lo, mut hi) = (0.0, step);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return None;
        }
    }
    while hi - lo > 1e-9 {
        let mid = (lo + hi) / 2.0;
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) / 2.0)
}

pub fn half_widths(a: &dyn Field, b: &dyn Field, opt: &LossPoint, step: f64) -> HalfWidths {
    let (ea, eb) = (a.extent(), b.extent());
    let limit = (ea.x.1 - ea.x.0).max(ea.y.1 - ea.y.0) + (eb.x.1 - eb.x.0).max(eb.y.1 - eb.y.0);
    let both = |dir: (f64, f64), db: f64| {
        let p = crossing(a, b, opt, dir, db, step, limit)?;
        let m = crossing(a, b, opt, (-dir.0, -dir.1), db, step, limit)?;
        Some((p + m) / 2.0)
    };
    HalfWidths {
        x_1db: both((1.0, 0.0), 1.0),
        y_1db: both((0.0, 1.0), 1.0),
        x_3db: both((1.0, 0.0), 3.0),
        y_3db: both((0.0, 1.0), 3.0),
    }
}

/// Coupling loss over a grid of displacements of `b` relative to `a`, plus
/// the refined optimum and its +1/+3 dB half-widths.
pub fn scan_displacement(a: &dyn Field, b: &dyn Field, spec: &ScanSpec) -> Result<LossMap> {
    let min_width = a.min_width().min(b.min_width());
    if !(spec.step > 0.0) || spec.step > min_width / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "scan step {} must be positive and at most a quarter of the narrowest mode width {min_width}",
            spec.step
        )));
    }
    if !(spec.x_range.0 <= spec.x_range.1 && spec.y_range.0 <= spec.y_range.1) {
        return Err(Error::InvalidArgument("empty scan range".into()));
    }
    let xs = axis(spec.x_range, spec.step);
    let ys = axis(spec.y_range, spec.step);
    let rows = par_map(&ys, |&y| xs.iter().map(|&x| loss_at(a, b, x, y)).collect::<Vec<f64>>());
    let mut grid_minimum = LossPoint { dx: xs[0], dy: ys[0], loss_db: f64::INFINITY };
    for (iy, row) in rows.iter().enumerate() {
        for (ix, &l) in row.iter().enumerate() {
            if l < grid_minimum.loss_db {
                grid_minimum = LossPoint { dx: xs[ix], dy: ys[iy], loss_db: l };
            }
        }
    }
    if !grid_minimum.loss_db.is_finite() {
        return Err(Error::InvalidArgument("fields do not overlap anywhere in the scan range".into()));
    }
    let optimum = refine_optimum(a, b, (grid_minimum.dx, grid_minimum.dy), spec.step);
    let half_widths = half_widths(a, b, &optimum, spec.step);
    Ok(LossMap { xs, ys, loss_db: rows, grid_minimum, optimum, half_widths })
}
