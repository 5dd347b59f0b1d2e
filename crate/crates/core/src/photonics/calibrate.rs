use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mode::{ModeKind, ModeModel, Polarization};
use super::overlap::loss_db;
use crate::{Error, Result};

/// Published anchors the two-lobe BRW model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    /// 1/e^2 diameter of the Gaussian partner mode, um.
    pub partner_diameter: f64,
    /// On-axis power coupling.
    pub eta: f64,
    /// Displacements adding 1 dB of loss, um.
    pub x_1db: f64,
    pub y_1db: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        CalibrationTargets { partner_diameter: 3.9, eta: 0.55, x_1db: 1.1, y_1db: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFigures {
    pub eta: f64,
    pub loss_db: f64,
    pub x_1db: f64,
    pub y_1db: f64,
    pub x_3db: f64,
    pub y_3db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrwCalibration {
    pub version: u32,
    pub targets: CalibrationTargets,
    pub model: ModeModel,
    pub partner: ModeModel,
    pub achieved: CalibrationFigures,
}

/// Calibrated BRW mode shipped with the crate.
pub const BRW_MODE_V1_JSON: &str = include_str!("../../data/brw_mode_v1.json");

pub fn brw_mode_v1() -> BrwCalibration {
    serde_json::from_str(BRW_MODE_V1_JSON).expect("bundled calibration parses")
}

/// `int exp(-(u-a)^2/p^2) exp(-(u-b)^2/q^2) du`
fn gauss_overlap(a: f64, p: f64, b: f64, q: f64) -> f64 {
    let s = p * p + q * q;
    (PI * p * p * q * q / s).sqrt() * (-(a - b).powi(2) / s).exp()
}

/// Power overlap along one axis of equal lobes at `+-s/2` (radius `p`)
/// with a single Gaussian (radius `q`) displaced by `d`.
fn eta_axis(p: f64, s: f64, q: f64, d: f64) -> f64 {
    let mus = [s / 2.0, -s / 2.0];
    let cross: f64 = mus.iter().map(|&m| gauss_overlap(m, p, d, q)).sum();
    let self_a: f64 = mus.iter().flat_map(|&m| mus.iter().map(move |&n| gauss_overlap(m, p, n, p))).sum();
    cross * cross / (self_a * gauss_overlap(0.0, q, 0.0, q))
}

fn excess_crossing(f: impl Fn(f64) -> f64, db: f64) -> Result<f64> {
    let base = loss_db(f(0.0));
    let g = |d: f64| loss_db(f(d)) - base - db;
    let (mut lo, mut hi) = (0.0, 0.01);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::FitFailure("loss never rises by the requested amount".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn figures(wx: f64, wy: f64, s: f64, q: f64) -> Result<CalibrationFigures> {
    let ex = |d: f64| eta_axis(wx, 0.0, q, d);
    let ey = |d: f64| eta_axis(wy, s, q, d);
    let eta = ex(0.0) * ey(0.0);
    Ok(CalibrationFigures {
        eta,
        loss_db: loss_db(eta),
        x_1db: excess_crossing(ex, 1.0)?,
        y_1db: excess_crossing(ey, 1.0)?,
        x_3db: excess_crossing(ex, 3.0)?,
        y_3db: excess_crossing(ey, 3.0)?,
    })
}

/// Fits the two-lobe model to the targets using closed-form Gaussian
/// overlaps. `wx` follows directly from the horizontal tolerance; lobe
/// radius `wy` and separation are found by damped Newton iteration on the
/// on-axis coupling and the vertical tolerance.
pub fn calibrate_two_lobe(t: &CalibrationTargets) -> Result<BrwCalibration> {
    let q = t.partner_diameter / 2.0;
    let wx2 = 20.0 * std::f64::consts::LOG10_E * t.x_1db * t.x_1db - q * q;
    if !(wx2 > 0.0) || !(t.eta > 0.0 && t.eta < 1.0) || !(t.y_1db > 0.0) {
        return Err(Error::InvalidArgument("calibration targets are not reachable".into()));
    }
    let wx = wx2.sqrt();
    let ex0 = eta_axis(wx, 0.0, q, 0.0);
    let residual = |v: [f64; 2]| -> Result<[f64; 2]> {
        let [wy, s] = v;
        let ey = |d: f64| eta_axis(wy, s, q, d);
        Ok([ex0 * ey(0.0) - t.eta, excess_crossing(ey, 1.0)? - t.y_1db])
    };
    let mut v = [0.5, 1.5];
    let mut r = residual(v)?;
    for _ in 0..100 {
        if r[0].abs() < 1e-13 && r[1].abs() < 1e-11 {
            break;
        }
        let h = 1e-7;
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut vp = v;
            vp[k] += h;
            let rp = residual(vp)?;
            for i in 0..2 {
                jac[i][k] = (rp[i] - r[i]) / h;
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::FitFailure("singular calibration Jacobian".into()));
        }
        let step = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let norm = |r: [f64; 2]| r[0].hypot(r[1]);
        let mut lambda = 1.0;
        loop {
            let cand = [v[0] - lambda * step[0], v[1] - lambda * step[1]];
            if cand[0] > 0.0 && cand[1] >= 0.0 {
                if let Ok(rc) = residual(cand) {
                    if norm(rc) < norm(r) || lambda < 1e-6 {
                        v = cand;
                        r = rc;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::FitFailure("calibration line search failed".into()));
            }
        }
    }
    if r[0].abs() > 1e-9 || r[1].abs() > 1e-7 {
        return Err(Error::FitFailure(format!("calibration did not converge: residual {r:?}")));
    }
    let [wy, separation] = v;
    let model = ModeModel {
        kind: ModeKind::TwoLobe { wx, wy, separation, weights: [1.0, 1.0] },
        polarization: Polarization::TE,
        n_eff: None,
    };
    let partner = ModeModel { n_eff: Some(1.463), ..ModeModel::gaussian(t.partner_diameter) };
    Ok(BrwCalibration { version: 1, targets: *t, model, partner, achieved: figures(wx, wy, separation, q)? })
}
