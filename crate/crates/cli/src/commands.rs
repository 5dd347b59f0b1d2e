use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use timebin::coincidence::{
    assemble_projections, background_estimate, build_histogram, extract_peaks, AssemblyOptions, CoincidenceHistogram2D,
    HistogramParams, PeakCounts, Setting,
};
use timebin::metrics::MetricsReport;
use timebin::photonics::{calibrate_two_lobe, overlap, rate_budget, scan_displacement};
use timebin::qcore::{DensityMatrix, Mat4, MatrixJson, Tolerance};
use timebin::simulator::{
    fringe_scan, read_stream_binary, read_stream_csv, simulate_stream, write_stream_binary, write_stream_csv, Channel,
    TimeTagEvent, STREAM_MAGIC,
};
use timebin::tomography::{read_records_json, reconstruct, TomographyOptions};

use crate::config::RunConfig;
use crate::manifest::{Outputs, RunManifest};
use crate::modes::parse_mode;
use crate::{Cli, Command, Format, Global, StreamFormat};

struct Ctx<'a> {
    global: &'a Global,
    cfg: RunConfig,
}

impl Ctx<'_> {
    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, self.global.config.as_deref())
    }

    fn outputs(&self) -> Result<Outputs> {
        Outputs::new(&self.global.out_dir)
    }
}

fn load(global: &Global) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.experiment.rng_seed = seed;
        cfg.analysis.seed = seed;
    }
    if let Some(n) = global.mc_samples {
        cfg.analysis.mc_samples = n;
    }
    if let Some(b) = global.bin_width_ps {
        cfg.analysis.bin_width_ps = b;
    }
    if let Some(h) = global.cell_halfwidth_ps {
        cfg.analysis.cell_halfwidth_ps = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx { global: &cli.global, cfg: load(&cli.global)? };
    match &cli.command {
        Command::Simulate { setting, all_settings, stream_format } => {
            simulate(&ctx, setting.as_deref(), *all_settings, *stream_format)
        }
        Command::Histogram { input } => histogram(&ctx, input),
        Command::Tomo { plus_plus, plus_l, l_plus, l_l, records } => {
            let inputs = [plus_plus, plus_l, l_plus, l_l].map(|p| p.clone());
            tomo(&ctx, inputs, records.as_deref())
        }
        Command::Metrics { input } => metrics(&ctx, input),
        Command::Overlap { mode_a, mode_b, dx, dy } => cmd_overlap(&ctx, mode_a, mode_b, *dx, *dy),
        Command::Scan { mode_a, mode_b, step } => scan(&ctx, mode_a, mode_b, *step),
        Command::Budget => budget(&ctx),
        Command::Calibrate => calibrate(&ctx),
        Command::Fringe { points, mode } => fringe(&ctx, *points, mode.map(Into::into)),
    }
}

fn file_tag(s: Setting) -> &'static str {
    match s {
        Setting::PlusPlus => "pp",
        Setting::PlusL => "pl",
        Setting::LPlus => "lp",
        Setting::LL => "ll",
    }
}

fn simulate(ctx: &Ctx, setting: Option<&str>, all: bool, format: StreamFormat) -> Result<()> {
    let runs: Vec<Option<Setting>> = match (setting, all) {
        (_, true) => Setting::ALL.map(Some).to_vec(),
        (Some(s), false) => vec![Some(s.parse()?)],
        (None, false) => vec![None],
    };
    let base = &ctx.cfg.experiment;
    if base.integration_time == 0.0 {
        eprintln!("warning: integration_time is 0, the stream is empty");
    }
    let mut out = ctx.outputs()?;
    let mut seeds = Vec::new();
    for (i, s) in runs.iter().enumerate() {
        let mut cfg = base.clone();
        if let Some(s) = s {
            (cfg.alice_phase, cfg.bob_phase) = s.phases();
        }
        // distinct, reproducible streams per setting
        cfg.rng_seed = base.rng_seed + i as u64;
        seeds.push(cfg.rng_seed);
        let events = simulate_stream(&cfg)?;
        let mut buf = Vec::new();
        let ext = match format {
            StreamFormat::Bin => {
                write_stream_binary(&mut buf, &events)?;
                "bin"
            }
            StreamFormat::Csv => {
                write_stream_csv(&mut buf, &events)?;
                "csv"
            }
        };
        let name = match s {
            Some(s) => format!("stream_{}.{ext}", file_tag(*s)),
            None => format!("stream.{ext}"),
        };
        let path = out.write(&name, &buf)?;
        let counts: Vec<String> = Channel::ALL
            .iter()
            .map(|c| format!("{}={}", c.name(), events.iter().filter(|e| e.channel == *c).count()))
            .collect();
        println!("{}: {} events ({})", path.display(), events.len(), counts.join(", "));
    }
    let mut m = ctx.manifest("simulate");
    m.seed = Some(base.rng_seed);
    m.parameters = json!({ "experiment": base, "stream_seeds": seeds });
    out.finish(m)?;
    Ok(())
}

fn read_events(bytes: &[u8]) -> Result<Vec<TimeTagEvent>> {
    Ok(if bytes.starts_with(&STREAM_MAGIC) { read_stream_binary(bytes)? } else { read_stream_csv(bytes)? })
}

/// Histogram from a time-tag stream (binary or CSV) or a histogram CSV.
fn load_histogram(cfg: &RunConfig, path: &Path) -> Result<CoincidenceHistogram2D> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let h = if bytes.starts_with(b"bin_width_ps") {
        CoincidenceHistogram2D::read_csv(&bytes[..])
    } else {
        let events = read_events(&bytes)?;
        build_histogram(&events, &HistogramParams::for_config(&cfg.experiment, cfg.bin_width()))
    };
    h.with_context(|| format!("invalid input {}", path.display()))
}

fn cells_csv(p: &PeakCounts) -> String {
    let mut s = String::from("t_a,t_b,counts\n");
    for ta in -1i8..=1 {
        for tb in -1i8..=1 {
            writeln!(s, "{ta},{tb},{}", p.cell(ta, tb)).unwrap();
        }
    }
    s
}

fn histogram(ctx: &Ctx, input: &Path) -> Result<()> {
    let cfg = &ctx.cfg;
    let h = load_histogram(cfg, input)?;
    let peaks = extract_peaks(&h, cfg.experiment.bin_delay, cfg.cell_halfwidth())?;
    let bg = background_estimate(&h, cfg.experiment.bin_delay, cfg.cell_halfwidth())?;
    let mut out = ctx.outputs()?;
    let mut buf = Vec::new();
    h.write_csv(&mut buf)?;
    out.write("histogram.csv", &buf)?;
    match ctx.global.format {
        Format::Json => out.write_json(
            "cells.json",
            &json!({ "cells": peaks, "peaks": peaks.peaks(), "total": peaks.total(), "background": bg,
                     "integration_time": h.integration_time }),
        )?,
        Format::Csv => out.write("cells.csv", cells_csv(&peaks).as_bytes())?,
    };
    println!("peaks 1-5: {:?}, background per cell {:.3}", peaks.peaks(), bg.per_cell);
    let mut m = ctx.manifest("histogram");
    m.inputs = vec![input.to_path_buf()];
    m.parameters = json!({ "bin_width_ps": cfg.analysis.bin_width_ps, "cell_halfwidth_ps": cfg.analysis.cell_halfwidth_ps });
    out.finish(m)?;
    Ok(())
}

fn bars_csv(rho: &Mat4) -> String {
    const LABELS: [&str; 4] = ["11", "12", "21", "22"];
    let mut s = String::from("row,col,re,im\n");
    for (i, row) in rho.0.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            writeln!(s, "{},{},{},{}", LABELS[i], LABELS[j], c.re, c.im).unwrap();
        }
    }
    s
}

fn tomo(ctx: &Ctx, inputs: [Option<PathBuf>; 4], records_path: Option<&Path>) -> Result<()> {
    let cfg = &ctx.cfg;
    let mut used = Vec::new();
    let records = match records_path {
        Some(p) => {
            used.push(p.to_path_buf());
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            read_records_json(&text).with_context(|| format!("invalid records {}", p.display()))?
        }
        None => {
            let mut counts = Vec::new();
            for (s, p) in Setting::ALL.into_iter().zip(inputs) {
                let Some(p) = p else { bail!("missing input for setting {s}") };
                let h = load_histogram(cfg, &p)?;
                counts.push((s, extract_peaks(&h, cfg.experiment.bin_delay, cfg.cell_halfwidth())?));
                used.push(p);
            }
            let opts = AssemblyOptions { include_forbidden_cells: cfg.analysis.include_forbidden_cells };
            assemble_projections(&counts, opts)?
        }
    };
    let opts = TomographyOptions { mle: cfg.analysis.mle, mc_samples: cfg.analysis.mc_samples, seed: cfg.analysis.seed };
    let result = reconstruct(&records, &opts)?;
    let mut out = ctx.outputs()?;
    out.write_json("records.json", &records)?;
    out.write_json("tomo.json", &result)?;
    out.write("rho_bars.csv", bars_csv(result.rho_mle.matrix()).as_bytes())?;
    print_metrics(&result.metrics);
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let mut m = ctx.manifest("tomo");
    m.inputs = used;
    m.seed = Some(opts.seed);
    m.parameters = json!({
        "mc_samples": opts.mc_samples,
        "mle": opts.mle,
        "bin_width_ps": cfg.analysis.bin_width_ps,
        "cell_halfwidth_ps": cfg.analysis.cell_halfwidth_ps,
        "include_forbidden_cells": cfg.analysis.include_forbidden_cells,
    });
    out.finish(m)?;
    Ok(())
}

fn print_metrics(r: &MetricsReport) {
    let iv = r.intervals;
    let row = |name: &str, v: f64, pick: fn(&timebin::metrics::MetricIntervals) -> timebin::metrics::Interval| match iv {
        Some(i) => {
            let i = pick(&i);
            println!("{name:<12} {v:.4}  (68%: {:.4} .. {:.4})", i.lower, i.upper)
        }
        None => println!("{name:<12} {v:.4}"),
    };
    row("concurrence", r.concurrence, |i| i.concurrence);
    row("fidelity", r.fidelity_phi_plus, |i| i.fidelity_phi_plus);
    row("chsh_s", r.chsh_s, |i| i.chsh_s);
    row("purity", r.purity, |i| i.purity);
}

#[derive(Serialize)]
struct MetricsOutput {
    #[serde(flatten)]
    report: MetricsReport,
    eigenvalues: [f64; 4],
}

fn metrics(ctx: &Ctx, input: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).context("matrix file is not JSON")?;
    // a tomography result carries its estimate under `rho_mle`
    if let Some(inner) = v.get_mut("rho_mle") {
        v = inner.take();
    }
    let mj: MatrixJson = serde_json::from_value(v).context("expected a matrix as {\"re\": 4x4, \"im\": 4x4}")?;
    let m = Mat4::try_from(mj)?;
    let tol = ctx.global.printed_decimals.map_or(Tolerance::RECONSTRUCTED, Tolerance::printed);
    let rho = DensityMatrix::with_tolerance(m, tol)?;
    let report = MetricsReport::compute(&rho)?;
    print_metrics(&report);
    let mut out = ctx.outputs()?;
    let res = MetricsOutput { report, eigenvalues: rho.eigenvalues() };
    match ctx.global.format {
        Format::Json => out.write_json("metrics.json", &res)?,
        Format::Csv => {
            let r = &res.report;
            let s = format!(
                "metric,value\nconcurrence,{}\nfidelity_phi_plus,{}\nchsh_s,{}\npurity,{}\n",
                r.concurrence, r.fidelity_phi_plus, r.chsh_s, r.purity
            );
            out.write("metrics.csv", s.as_bytes())?
        }
    };
    let mut m = ctx.manifest("metrics");
    m.inputs = vec![input.to_path_buf()];
    m.parameters = json!({ "printed_decimals": ctx.global.printed_decimals });
    out.finish(m)?;
    Ok(())
}

fn cmd_overlap(ctx: &Ctx, a: &Option<String>, b: &Option<String>, dx: Option<f64>, dy: Option<f64>) -> Result<()> {
    let p = &ctx.cfg.photonics;
    let (sa, sb) = (a.as_deref().unwrap_or(&p.mode_a), b.as_deref().unwrap_or(&p.mode_b));
    let (dx, dy) = (dx.unwrap_or(p.displacement.0), dy.unwrap_or(p.displacement.1));
    let o = overlap(&*parse_mode(sa)?, &*parse_mode(sb)?, dx, dy)?;
    if let Some(w) = &o.warning {
        eprintln!("warning: {w}");
    }
    println!("eta = {:.6}, loss = {:.4} dB", o.eta, o.loss_db);
    let mut out = ctx.outputs()?;
    match ctx.global.format {
        Format::Json => out.write_json(
            "overlap.json",
            &json!({ "mode_a": sa, "mode_b": sb, "dx": dx, "dy": dy, "eta": o.eta, "loss_db": o.loss_db, "warning": o.warning }),
        )?,
        Format::Csv => out.write("overlap.csv", format!("dx,dy,eta,loss_db\n{dx},{dy},{},{}\n", o.eta, o.loss_db).as_bytes())?,
    };
    let mut m = ctx.manifest("overlap");
    m.parameters = json!({ "mode_a": sa, "mode_b": sb });
    out.finish(m)?;
    Ok(())
}

fn scan(ctx: &Ctx, a: &Option<String>, b: &Option<String>, step: Option<f64>) -> Result<()> {
    let p = &ctx.cfg.photonics;
    let (sa, sb) = (a.as_deref().unwrap_or(&p.mode_a), b.as_deref().unwrap_or(&p.mode_b));
    let mut spec = p.scan;
    if let Some(s) = step {
        spec.step = s;
    }
    let map = scan_displacement(&*parse_mode(sa)?, &*parse_mode(sb)?, &spec)?;
    let o = map.optimum;
    println!("minimum {:.4} dB at ({:.4}, {:.4}) um", o.loss_db, o.dx, o.dy);
    let hw = map.half_widths;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!("+1 dB half-widths x {} / y {} um; +3 dB x {} / y {} um", fmt(hw.x_1db), fmt(hw.y_1db), fmt(hw.x_3db), fmt(hw.y_3db));
    let mut out = ctx.outputs()?;
    match ctx.global.format {
        Format::Json => out.write_json("loss_map.json", &map)?,
        Format::Csv => {
            let mut buf = Vec::new();
            map.write_csv(&mut buf)?;
            out.write("loss_map.csv", &buf)?
        }
    };
    out.write_json(
        "scan_summary.json",
        &json!({ "grid_minimum": map.grid_minimum, "optimum": map.optimum, "half_widths": map.half_widths }),
    )?;
    let mut m = ctx.manifest("scan");
    m.parameters = json!({ "mode_a": sa, "mode_b": sb, "scan": spec });
    out.finish(m)?;
    Ok(())
}

fn budget(ctx: &Ctx) -> Result<()> {
    let b = &ctx.cfg.photonics.budget;
    let totals = b.loss_budget().totals();
    for t in &totals {
        println!("{:<10} {:.2} dB  (T = {:.4})", t.name, t.total_db, t.transmission);
    }
    let (lo, hi) = b.transmission;
    let rates = [rate_budget(b.measured_rate, hi, hi)?, rate_budget(b.measured_rate, lo, lo)?];
    println!(
        "{} Hz/mW measured -> {:.1} .. {:.1} Hz/mW at the source (T = {hi} .. {lo})",
        b.measured_rate, rates[0].corrected, rates[1].corrected
    );
    let mut out = ctx.outputs()?;
    match ctx.global.format {
        Format::Json => out.write_json("budget.json", &json!({ "paths": totals, "rates": rates }))?,
        Format::Csv => {
            let mut s = String::from("kind,name,value\n");
            for t in &totals {
                writeln!(s, "path_db,{},{}", t.name, t.total_db).unwrap();
            }
            for r in &rates {
                writeln!(s, "corrected_rate,T={},{}", r.transmission_a, r.corrected).unwrap();
            }
            out.write("budget.csv", s.as_bytes())?
        }
    };
    let mut m = ctx.manifest("budget");
    m.parameters = json!({ "measured_rate": b.measured_rate, "transmission": b.transmission });
    out.finish(m)?;
    Ok(())
}

fn calibrate(ctx: &Ctx) -> Result<()> {
    let t = &ctx.cfg.photonics.calibration;
    let cal = calibrate_two_lobe(t)?;
    let a = cal.achieved;
    println!(
        "eta {:.4} ({:.3} dB); +1 dB half-widths {:.3} / {:.3} um; +3 dB {:.3} / {:.3} um",
        a.eta, a.loss_db, a.x_1db, a.y_1db, a.x_3db, a.y_3db
    );
    let mut out = ctx.outputs()?;
    out.write_json("brw_mode.json", &cal)?;
    let mut m = ctx.manifest("calibrate");
    m.parameters = json!({ "targets": t });
    out.finish(m)?;
    Ok(())
}

fn fringe(ctx: &Ctx, points: Option<usize>, mode: Option<timebin::simulator::FringeMode>) -> Result<()> {
    let f = &ctx.cfg.fringe;
    let n = points.unwrap_or(f.points);
    let mode = mode.unwrap_or(f.mode);
    let phases: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let scan = fringe_scan(&ctx.cfg.experiment, &phases, mode)?;
    println!("V = {:.4} +- {:.4}", scan.fit.visibility, scan.fit.visibility_stderr);
    let mut out = ctx.outputs()?;
    match ctx.global.format {
        Format::Json => out.write_json("fringe.json", &scan)?,
        Format::Csv => {
            let mut s = String::from("phase,central_rate,counts\n");
            for p in &scan.points {
                let c = p.counts.map(|c| c.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{c}", p.phase, p.central_rate).unwrap();
            }
            out.write("fringe.csv", s.as_bytes())?;
            out.write_json("fringe_fit.json", &scan.fit)?
        }
    };
    let mut m = ctx.manifest("fringe");
    m.seed = Some(ctx.cfg.experiment.rng_seed);
    m.parameters = json!({ "points": n, "mode": mode });
    out.finish(m)?;
    Ok(())
}
