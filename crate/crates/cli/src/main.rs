mod commands;
mod config;
mod manifest;
mod modes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use timebin::simulator::FringeMode;

#[derive(Parser, Debug)]
#[command(name = "timebin", version, about = "Time-bin entanglement simulation, tomography and coupling analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// TOML or JSON config; built-in defaults otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides both the simulation and the Monte Carlo seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "TIMEBIN_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    #[arg(long, global = true)]
    pub bin_width_ps: Option<u64>,
    #[arg(long, global = true)]
    pub cell_halfwidth_ps: Option<u64>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Validate input matrices as rounded to this many decimals.
    #[arg(long, global = true)]
    pub printed_decimals: Option<u32>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Bin,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Analytic,
    Sampled,
}

impl From<ModeArg> for FringeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analytic => FringeMode::Analytic,
            ModeArg::Sampled => FringeMode::Sampled,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a time-tag stream.
    Simulate {
        /// Analyzer setting (++, +L, L+, LL) overriding the configured phases.
        #[arg(long, conflicts_with = "all_settings")]
        setting: Option<String>,
        /// Write one stream per tomography setting.
        #[arg(long)]
        all_settings: bool,
        #[arg(long, value_enum, default_value_t = StreamFormat::Bin)]
        stream_format: StreamFormat,
    },
    /// Fold a time-tag stream into a coincidence histogram and cell counts.
    Histogram { input: PathBuf },
    /// Reconstruct the two-photon state from the four tomography settings.
    Tomo {
        /// `++` input: time-tag stream (binary or CSV) or histogram CSV.
        #[arg(long = "pp", required_unless_present = "records")]
        plus_plus: Option<PathBuf>,
        #[arg(long = "pl", required_unless_present = "records")]
        plus_l: Option<PathBuf>,
        #[arg(long = "lp", required_unless_present = "records")]
        l_plus: Option<PathBuf>,
        #[arg(long = "ll", required_unless_present = "records")]
        l_l: Option<PathBuf>,
        /// Projection records JSON instead of the four inputs.
        #[arg(long, conflicts_with_all = ["plus_plus", "plus_l", "l_plus", "l_l"])]
        records: Option<PathBuf>,
    },
    /// Entanglement metrics of a density matrix file.
    Metrics { input: PathBuf },
    /// Coupling between two modes at one displacement.
    Overlap {
        #[arg(long)]
        mode_a: Option<String>,
        #[arg(long)]
        mode_b: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        dx: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dy: Option<f64>,
    },
    /// Loss map over a grid of displacements.
    Scan {
        #[arg(long)]
        mode_a: Option<String>,
        #[arg(long)]
        mode_b: Option<String>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Loss-path totals and loss-corrected pair rates.
    Budget,
    /// Fit the two-lobe waveguide mode to the coupling targets.
    Calibrate,
    /// Central-peak fringe against Alice's phase, with a visibility fit.
    Fringe {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
