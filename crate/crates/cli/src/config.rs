use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use timebin::photonics::{CalibrationTargets, LossBudget, LossPath, ScanSpec};
use timebin::simulator::{ExperimentConfig, FringeMode};
use timebin::tomography::MleOptions;

const SECTIONS: [&str; 4] = ["experiment", "analysis", "fringe", "photonics"];

/// Everything a command may need. Each section falls back to its defaults,
/// which match `configs/default.toml` and `configs/photonics.toml`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub analysis: Analysis,
    pub fringe: FringeSection,
    pub photonics: PhotonicsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub bin_width_ps: u64,
    pub cell_halfwidth_ps: u64,
    pub include_forbidden_cells: bool,
    pub mc_samples: usize,
    /// Monte Carlo resampling seed.
    pub seed: u64,
    pub mle: MleOptions,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            bin_width_ps: 200,
            cell_halfwidth_ps: 500,
            include_forbidden_cells: true,
            mc_samples: 1000,
            seed: 1,
            mle: MleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeSection {
    pub points: usize,
    pub mode: FringeMode,
}

impl Default for FringeSection {
    fn default() -> Self {
        FringeSection { points: 16, mode: FringeMode::Analytic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonicsSection {
    /// Mode specs, see `modes::parse_mode`.
    pub mode_a: String,
    pub mode_b: String,
    /// Displacement of `mode_b` for `overlap`, micrometres.
    pub displacement: (f64, f64),
    pub scan: ScanSpec,
    pub calibration: CalibrationTargets,
    pub budget: BudgetSection,
}

impl Default for PhotonicsSection {
    fn default() -> Self {
        PhotonicsSection {
            mode_a: "brw".into(),
            mode_b: "partner".into(),
            displacement: (0.0, 0.0),
            scan: ScanSpec { x_range: (-2.5, 2.5), y_range: (-1.5, 1.5), step: 0.05 },
            calibration: CalibrationTargets::default(),
            budget: BudgetSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Measured coincidence rate, Hz per mW of pump.
    pub measured_rate: f64,
    /// Per-photon transmission range swept symmetrically for both parties.
    pub transmission: (f64, f64),
    pub paths: Vec<LossPath>,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection { measured_rate: 1.4, transmission: (0.05, 0.07), paths: Vec::new() }
    }
}

impl BudgetSection {
    pub fn loss_budget(&self) -> LossBudget {
        LossBudget { paths: self.paths.clone() }
    }
}

impl RunConfig {
    /// Parses a sectioned document, or a bare experiment document whose keys
    /// are `ExperimentConfig` field names.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let json = path.extension().is_some_and(|e| e == "json");
        let keys: Vec<String> = if json {
            let v: serde_json::Value = serde_json::from_str(&text).context("config is not valid JSON")?;
            v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
        } else {
            let t: toml::Table = text.parse().context("config is not valid TOML")?;
            t.keys().cloned().collect()
        };
        let sectioned = keys.iter().any(|k| SECTIONS.contains(&k.as_str()));
        let cfg = match (sectioned, json) {
            (true, true) => serde_json::from_str(&text).map_err(anyhow::Error::from),
            (true, false) => toml::from_str(&text).map_err(anyhow::Error::from),
            (false, true) => serde_json::from_str(&text)
                .map(|experiment| RunConfig { experiment, ..Default::default() })
                .map_err(anyhow::Error::from),
            (false, false) => toml::from_str(&text)
                .map(|experiment| RunConfig { experiment, ..Default::default() })
                .map_err(anyhow::Error::from),
        }
        .with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        let a = &self.analysis;
        if a.bin_width_ps == 0 {
            bail!("invalid config field `analysis.bin_width_ps`: must be > 0");
        }
        if a.cell_halfwidth_ps == 0 {
            bail!("invalid config field `analysis.cell_halfwidth_ps`: must be > 0");
        }
        if self.fringe.points < 5 {
            bail!("invalid config field `fringe.points`: need at least 5 phases");
        }
        let (lo, hi) = self.photonics.budget.transmission;
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            bail!("invalid config field `photonics.budget.transmission`: need 0 < lo <= hi <= 1");
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        self.analysis.bin_width_ps as f64 * 1e-12
    }

    pub fn cell_halfwidth(&self) -> f64 {
        self.analysis.cell_halfwidth_ps as f64 * 1e-12
    }
}
