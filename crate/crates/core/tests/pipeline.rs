use timebin::coincidence::{
    assemble_projections, build_histogram, extract_peaks, AssemblyOptions, CoincidenceHistogram2D, HistogramParams,
    Setting, DEFAULT_CELL_HALFWIDTH,
};
use timebin::metrics::MetricsReport;
use timebin::qcore::{fidelity_pure, Ket4};
use timebin::simulator::{read_stream_binary, read_stream_csv, simulate_stream, write_stream_binary, write_stream_csv, ExperimentConfig, PerParty};
use timebin::tomography::{read_records_json, reconstruct, TomographyOptions, TomographyResult};

fn ideal(s: Setting, seed: u64) -> ExperimentConfig {
    let (alice_phase, bob_phase) = s.phases();
    ExperimentConfig {
        visibility: 1.0,
        integration_time: 0.03,
        det_efficiency: PerParty::both(1.0),
        interferometer_transmission: PerParty::both(1.0),
        alice_phase,
        bob_phase,
        rng_seed: seed,
        ..Default::default()
    }
}

#[test]
fn files_in_files_out() {
    let mut counts = Vec::new();
    for (i, s) in Setting::ALL.into_iter().enumerate() {
        let cfg = ideal(s, 40 + i as u64);
        let events = simulate_stream(&cfg).unwrap();

        // both stream encodings carry the same events
        let mut bin = Vec::new();
        write_stream_binary(&mut bin, &events).unwrap();
        let mut csv = Vec::new();
        write_stream_csv(&mut csv, &events).unwrap();
        let back = read_stream_binary(&bin[..]).unwrap();
        assert_eq!(back, events);
        assert_eq!(read_stream_csv(&csv[..]).unwrap(), events);

        let h = build_histogram(&back, &HistogramParams::for_config(&cfg, 200e-12)).unwrap();
        let mut text = Vec::new();
        h.write_csv(&mut text).unwrap();
        let h = CoincidenceHistogram2D::read_csv(&text[..]).unwrap();
        counts.push((s, extract_peaks(&h, cfg.bin_delay, DEFAULT_CELL_HALFWIDTH).unwrap()));
    }

    let records = assemble_projections(&counts, AssemblyOptions::default()).unwrap();
    let records = read_records_json(&serde_json::to_string(&records).unwrap()).unwrap();
    let opts = TomographyOptions { mc_samples: 100, seed: 9, ..Default::default() };
    let result = reconstruct(&records, &opts).unwrap();

    let f = fidelity_pure(&result.rho_mle, &Ket4::phi_plus()).unwrap();
    assert!(f > 0.98, "fidelity {f}");
    let iv = result.metrics.intervals.unwrap();
    assert!(iv.fidelity_phi_plus.contains(result.metrics.fidelity_phi_plus));
    assert!(iv.concurrence.upper <= 1.0);

    let json = serde_json::to_string(&result).unwrap();
    let back: TomographyResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, result);
    assert_eq!(MetricsReport::compute(&back.rho_mle).unwrap().concurrence, result.metrics.concurrence);
}
