//! Model of a time-bin entanglement source analysed by two unbalanced
//! interferometers: analytic coincidence rates and sampled time-tag streams.
//!
//! A pump pulse pair (early/late, separated by `bin_delay`) creates at most
//! one photon pair per pump cycle in `(|11> + e^{i phi_p}|22>)/sqrt2`. Each
//! photon then crosses an unbalanced Mach-Zehnder with the same delay, so it
//! arrives in one of three time slots `t_-1, t_0, t_+1` relative to the
//! trigger and leaves through one of two output ports. Only one port per
//! party carries a detector.

mod config;
mod fringe;
mod io;
mod rates;
mod stream;

pub use config::{ExperimentConfig, PerParty, PhaseLock};
pub use fringe::{fit_fringe, fringe_scan, FringeFit, FringeMode, FringeScan};
pub use io::{read_stream, read_stream_binary, read_stream_csv, write_stream_binary, write_stream_csv, STREAM_MAGIC, STREAM_VERSION};
pub use rates::{expected_cell_rates, joint_outcome_probabilities, CellRates, JointProbabilities, Port};
pub use stream::{dead_time_filter, simulate_stream, Channel, PairSampler, TimeTagEvent};
