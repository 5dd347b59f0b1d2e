use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest accepted pair probability per pump cycle; multi-pair emission is
/// not modelled.
pub const MAX_PAIR_PROB: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerParty {
    pub alice: f64,
    pub bob: f64,
}

impl PerParty {
    pub const fn both(v: f64) -> Self {
        PerParty { alice: v, bob: v }
    }
}

/// Ties the pump phase to the analysis phases:
/// `phi_p = alice_coeff * alpha + bob_coeff * beta + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLock {
    pub alice_coeff: f64,
    pub bob_coeff: f64,
    pub offset: f64,
}

/// Physical parameters of the simulated apparatus. Times in seconds, rates
/// in Hz, phases in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rep_rate: f64,
    pub bin_delay: f64,
    pub pair_prob: f64,
    pub pump_phase: f64,
    pub alice_phase: f64,
    pub bob_phase: f64,
    pub visibility: f64,
    pub detector_jitter_sigma: f64,
    pub tagger_jitter_rms: f64,
    pub dead_time: f64,
    pub det_efficiency: PerParty,
    pub interferometer_transmission: PerParty,
    /// Uniform dark/background count rate per detector.
    pub background_rate: f64,
    pub integration_time: f64,
    pub rng_seed: u64,
    /// Keep one trigger every `trigger_decimation` pump cycles.
    pub trigger_decimation: u64,
    /// Delay between a trigger and the `t_-1` arrival slot.
    pub trigger_latency: f64,
    pub phase_lock: Option<PhaseLock>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rep_rate: 76e6,
            bin_delay: 3e-9,
            pair_prob: 0.01,
            pump_phase: 0.0,
            alice_phase: 0.0,
            bob_phase: 0.0,
            visibility: 0.91,
            detector_jitter_sigma: 40e-12,
            tagger_jitter_rms: 10e-12,
            dead_time: 2e-9,
            det_efficiency: PerParty::both(0.6),
            interferometer_transmission: PerParty::both(0.06),
            background_rate: 0.0,
            integration_time: 0.01,
            rng_seed: 1,
            trigger_decimation: 1,
            trigger_latency: 3e-9,
            phase_lock: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a `.json` or `.toml` document (decided by extension, TOML otherwise).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Pump phase actually applied, honouring `phase_lock`.
    pub fn effective_pump_phase(&self) -> f64 {
        match self.phase_lock {
            Some(l) => l.alice_coeff * self.alice_phase + l.bob_coeff * self.bob_phase + l.offset,
            None => self.pump_phase,
        }
    }

    /// Combined timing jitter (detector and tagger in quadrature).
    pub fn timing_sigma(&self) -> f64 {
        self.detector_jitter_sigma.hypot(self.tagger_jitter_rms)
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rep_rate
    }

    /// Per-photon survival probability for each party.
    pub fn survival(&self) -> PerParty {
        PerParty {
            alice: self.det_efficiency.alice * self.interferometer_transmission.alice,
            bob: self.det_efficiency.bob * self.interferometer_transmission.bob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::InvalidConfig { field, reason: reason.into() })
        }
        fn finite_nonneg(field: &'static str, v: f64) -> Result<()> {
            if !v.is_finite() || v < 0.0 {
                return bad(field, format!("must be finite and >= 0, got {v}"));
            }
            Ok(())
        }
        fn probability(field: &'static str, v: f64) -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return bad(field, format!("must be in [0, 1], got {v}"));
            }
            Ok(())
        }
        if !(self.rep_rate.is_finite() && self.rep_rate > 0.0) {
            return bad("rep_rate", "must be > 0");
        }
        if !(self.bin_delay.is_finite() && self.bin_delay > 0.0) {
            return bad("bin_delay", "must be > 0");
        }
        probability("pair_prob", self.pair_prob)?;
        if self.pair_prob > MAX_PAIR_PROB {
            return bad("pair_prob", format!("must be <= {MAX_PAIR_PROB} (multi-pair emission is not modelled)"));
        }
        probability("visibility", self.visibility)?;
        probability("det_efficiency.alice", self.det_efficiency.alice)?;
        probability("det_efficiency.bob", self.det_efficiency.bob)?;
        probability("interferometer_transmission.alice", self.interferometer_transmission.alice)?;
        probability("interferometer_transmission.bob", self.interferometer_transmission.bob)?;
        for (field, v) in [
            ("pump_phase", self.pump_phase),
            ("alice_phase", self.alice_phase),
            ("bob_phase", self.bob_phase),
        ] {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        finite_nonneg("detector_jitter_sigma", self.detector_jitter_sigma)?;
        finite_nonneg("tagger_jitter_rms", self.tagger_jitter_rms)?;
        finite_nonneg("dead_time", self.dead_time)?;
        finite_nonneg("background_rate", self.background_rate)?;
        finite_nonneg("integration_time", self.integration_time)?;
        finite_nonneg("trigger_latency", self.trigger_latency)?;
        if self.bin_delay <= 3.0 * self.detector_jitter_sigma {
            return bad("bin_delay", "must exceed 3x detector_jitter_sigma");
        }
        if self.trigger_decimation == 0 {
            return bad("trigger_decimation", "must be >= 1");
        }
        if self.trigger_latency + 2.0 * self.bin_delay >= self.period() {
            return bad("trigger_latency", "latest arrival slot must fall before the next pump cycle");
        }
        if let Some(l) = self.phase_lock {
            if !(l.alice_coeff.is_finite() && l.bob_coeff.is_finite() && l.offset.is_finite()) {
                return bad("phase_lock", "coefficients must be finite");
            }
        }
        Ok(())
    }
}
