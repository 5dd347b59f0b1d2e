use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::Result;

/// Output port of an analysis interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    /// The port carrying the party's detector.
    Detected,
    Dark,
}

impl Port {
    pub const ALL: [Port; 2] = [Port::Detected, Port::Dark];

    fn index(self) -> usize {
        match self {
            Port::Detected => 0,
            Port::Dark => 1,
        }
    }
}

/// Coincidence rates per arrival-slot cell, indexed `[t_A + 1][t_B + 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRates {
    pub rate: [[f64; 3]; 3],
}

impl CellRates {
    /// Rate of cell `(t_a, t_b)` with slots in `{-1, 0, 1}`.
    pub fn get(&self, t_a: i8, t_b: i8) -> f64 {
        self.rate[(t_a + 1) as usize][(t_b + 1) as usize]
    }

    pub fn total(&self) -> f64 {
        self.rate.iter().flatten().sum()
    }

    pub fn scaled(&self, factor: f64) -> CellRates {
        CellRates { rate: self.rate.map(|r| r.map(|x| x * factor)) }
    }
}

/// Joint probability per created pair of `(slot_A, port_A, slot_B, port_B)`,
/// indexed `[t_A + 1][port_A][t_B + 1][port_B]`. Sums to one; detector
/// efficiencies are not included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointProbabilities(pub [[[[f64; 2]; 3]; 2]; 3]);

impl JointProbabilities {
    pub fn get(&self, t_a: i8, port_a: Port, t_b: i8, port_b: Port) -> f64 {
        self.0[(t_a + 1) as usize][port_a.index()][(t_b + 1) as usize][port_b.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().flatten().flatten().sum()
    }
}

/// Amplitude for a photon created in bin `created` (0 early, 1 late) to leave
/// `port` in slot `t`, as `(signed modulus, phase)`. Each pass through a 50:50
/// splitter contributes `1/sqrt2`; the long arm carries `phase` and a sign
/// flip in the dark port. Keeping modulus and phase apart makes the
/// non-interfering cells exactly phase independent.
fn photon_amplitude(created: i8, t: i8, port: Port, phase: f64) -> (f64, f64) {
    match t - created + 1 {
        0 => (0.5, 0.0),
        1 if port == Port::Detected => (0.5, phase),
        1 => (-0.5, phase),
        _ => (0.0, 0.0),
    }
}

/// Outcome probabilities of the interferometer model. The visibility
/// multiplies the early/late interference term only.
pub fn joint_outcome_probabilities(cfg: &ExperimentConfig) -> JointProbabilities {
    let pump = cfg.effective_pump_phase();
    let pair = [(std::f64::consts::FRAC_1_SQRT_2, 0.0), (std::f64::consts::FRAC_1_SQRT_2, pump)];
    let mut p = [[[[0.0; 2]; 3]; 2]; 3];
    for ta in -1i8..=1 {
        for pa in Port::ALL {
            for tb in -1i8..=1 {
                for pb in Port::ALL {
                    let amp = |e: i8| {
                        let (m0, p0) = pair[e as usize];
                        let (ma, phia) = photon_amplitude(e, ta, pa, cfg.alice_phase);
                        let (mb, phib) = photon_amplitude(e, tb, pb, cfg.bob_phase);
                        (m0 * ma * mb, p0 + phia + phib)
                    };
                    let ((me, pe), (ml, pl)) = (amp(0), amp(1));
                    let prob = me * me + ml * ml + cfg.visibility * 2.0 * me * ml * (pe - pl).cos();
                    p[(ta + 1) as usize][pa.index()][(tb + 1) as usize][pb.index()] = prob.max(0.0);
                }
            }
        }
    }
    JointProbabilities(p)
}

/// Detected coincidence rate per cell for the configured pair rate,
/// efficiencies and transmissions (background excluded).
pub fn expected_cell_rates(cfg: &ExperimentConfig) -> Result<CellRates> {
    cfg.validate()?;
    let p = joint_outcome_probabilities(cfg);
    let eta = cfg.survival();
    let scale = cfg.pair_prob * cfg.rep_rate * eta.alice * eta.bob;
    let mut rate = [[0.0; 3]; 3];
    for ta in -1i8..=1 {
        for tb in -1i8..=1 {
            rate[(ta + 1) as usize][(tb + 1) as usize] = scale * p.get(ta, Port::Detected, tb, Port::Detected);
        }
    }
    Ok(CellRates { rate })
}
