//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export returns a JSON string. The `*_json` functions hold the logic
//! and are plain Rust so they can be tested natively.

use std::f64::consts::TAU;

use serde::Serialize;
use serde_json::json;
use timebin::coincidence::{assemble_projections, build_histogram, extract_peaks, AssemblyOptions, HistogramParams, Setting, DEFAULT_CELL_HALFWIDTH};
use timebin::photonics::{brw_mode_v1, scan_displacement, ModeModel, ScanSpec};
use timebin::simulator::{fringe_scan, simulate_stream, ExperimentConfig, FringeMode, PerParty};
use timebin::tomography::{reconstruct, TomographyOptions};
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Lossless desk-scale source; `integration_time` sets the statistics.
fn desk_config(visibility: f64, integration_time: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        visibility,
        pair_prob: 0.01,
        integration_time,
        rng_seed: seed,
        det_efficiency: PerParty::both(1.0),
        interferometer_transmission: PerParty::both(1.0),
        ..Default::default()
    }
}

/// Central-peak fringe against Alice's phase with the fitted visibility.
pub fn fringe_json(visibility: f64, pump_phase: f64, points: usize, sampled: bool, seed: u64) -> Result<String> {
    let cfg = ExperimentConfig { pump_phase, ..desk_config(visibility, 0.005, seed) };
    let phases: Vec<f64> = (0..points).map(|k| TAU * k as f64 / points as f64).collect();
    let mode = if sampled { FringeMode::Sampled } else { FringeMode::Analytic };
    let scan = fringe_scan(&cfg, &phases, mode).map_err(|e| e.to_string())?;
    to_json(&scan)
}

/// Coupling-loss map of the calibrated BRW mode against a Gaussian fiber
/// mode of the given diameter.
pub fn loss_map_json(partner_diameter: f64, step: f64) -> Result<String> {
    let brw = brw_mode_v1().model;
    let partner = ModeModel::gaussian(partner_diameter);
    partner.validate().map_err(|e| e.to_string())?;
    let spec = ScanSpec { x_range: (-3.0, 3.0), y_range: (-2.0, 2.0), step };
    let map = scan_displacement(&brw, &partner, &spec).map_err(|e| e.to_string())?;
    to_json(&map)
}

/// Simulates the four tomography settings, reconstructs the state and
/// reports the density matrix with its metrics.
pub fn tomography_json(visibility: f64, integration_time: f64, mc_samples: usize, seed: u64) -> Result<String> {
    let base = desk_config(visibility, integration_time, seed);
    let mut counts = Vec::new();
    for (i, s) in Setting::ALL.into_iter().enumerate() {
        let (alpha, beta) = s.phases();
        let cfg = ExperimentConfig { alice_phase: alpha, bob_phase: beta, rng_seed: seed + i as u64, ..base.clone() };
        let events = simulate_stream(&cfg).map_err(|e| e.to_string())?;
        let h = build_histogram(&events, &HistogramParams::for_config(&cfg, 200e-12)).map_err(|e| e.to_string())?;
        counts.push((s, extract_peaks(&h, cfg.bin_delay, DEFAULT_CELL_HALFWIDTH).map_err(|e| e.to_string())?));
    }
    let records = assemble_projections(&counts, AssemblyOptions::default()).map_err(|e| e.to_string())?;
    let opts = TomographyOptions { mc_samples, seed, ..Default::default() };
    let result = reconstruct(&records, &opts).map_err(|e| e.to_string())?;
    let cells: Vec<_> = counts.iter().map(|(s, p)| json!({ "setting": s, "cells": p.cells })).collect();
    to_json(&json!({ "result": result, "counts": cells }))
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fringe(visibility: f64, pump_phase: f64, points: usize, sampled: bool, seed: u64) -> std::result::Result<String, JsError> {
    js(fringe_json(visibility, pump_phase, points, sampled, seed))
}

#[wasm_bindgen]
pub fn loss_map(partner_diameter: f64, step: f64) -> std::result::Result<String, JsError> {
    js(loss_map_json(partner_diameter, step))
}

#[wasm_bindgen]
pub fn tomography(visibility: f64, integration_time: f64, mc_samples: usize, seed: u64) -> std::result::Result<String, JsError> {
    js(tomography_json(visibility, integration_time, mc_samples, seed))
}
