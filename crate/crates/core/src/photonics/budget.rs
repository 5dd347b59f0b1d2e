use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossEntry {
    pub component: String,
    pub loss_db: f64,
}

/// Named optical path (e.g. the TE or TM output) as a list of losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPath {
    pub name: String,
    pub entries: Vec<LossEntry>,
}

impl LossPath {
    pub fn total_db(&self) -> f64 {
        self.entries.iter().map(|e| e.loss_db).sum()
    }

    /// Power transmission `10^(-total/10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.total_db() / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub paths: Vec<LossPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTotal {
    pub name: String,
    pub total_db: f64,
    pub transmission: f64,
}

impl LossBudget {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let b: LossBudget = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if b.paths.iter().flat_map(|p| &p.entries).any(|e| !e.loss_db.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(b)
    }

    pub fn path(&self, name: &str) -> Option<&LossPath> {
        self.paths.iter().find(|p| p.name == name)
    }

    pub fn totals(&self) -> Vec<PathTotal> {
        self.paths
            .iter()
            .map(|p| PathTotal { name: p.name.clone(), total_db: p.total_db(), transmission: p.transmission() })
            .collect()
    }
}

/// Coincidence rates before and after correcting for the two analysis arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    pub measured: f64,
    pub transmission_a: f64,
    pub transmission_b: f64,
    /// `measured / (T_A T_B)`
    pub corrected: f64,
}

fn check_transmission(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::ZeroTransmission(t))
    }
}

/// Corrects a measured coincidence rate for per-arm transmissions.
pub fn rate_budget(measured: f64, transmission_a: f64, transmission_b: f64) -> Result<RateBudget> {
    check_transmission(transmission_a)?;
    check_transmission(transmission_b)?;
    Ok(RateBudget { measured, transmission_a, transmission_b, corrected: measured / (transmission_a * transmission_b) })
}

/// Inverse direction: a source rate times every per-photon efficiency of
/// both arms gives the expected detected coincidence rate.
pub fn predicted_rate(source_rate: f64, efficiencies_a: &[f64], efficiencies_b: &[f64]) -> Result<f64> {
    for &e in efficiencies_a.iter().chain(efficiencies_b) {
        check_transmission(e)?;
    }
    Ok(source_rate * efficiencies_a.iter().product::<f64>() * efficiencies_b.iter().product::<f64>())
}
