//! Time-bin entanglement analysis pipeline.
//!
//! The crate covers the whole chain from a simulated photon source to
//! entanglement figures of merit:
//!
//! * [`simulator`] produces analytic coincidence rates and sampled time-tag
//!   streams for a pump interferometer feeding two unbalanced analysis
//!   interferometers.
//! * [`coincidence`] folds a stream into a trigger-referenced 2D histogram,
//!   integrates the nine time-bin cells and turns them into projection
//!   records.
//! * [`tomography`] reconstructs the two-qubit density matrix (linear
//!   inversion and maximum likelihood) and propagates Poisson noise by
//!   Monte Carlo resampling.
//! * [`metrics`] computes concurrence, Bell-state fidelity, CHSH value and
//!   purity.
//! * [`photonics`] handles mode-overlap coupling losses, spectra and rate
//!   budgets.
//!
//! All two-qubit objects use the basis order `|11>, |12>, |21>, |22>` where
//! `|1>` is the early and `|2>` the late time bin.

// Index loops read like the formulas; `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod coincidence;
pub mod error;
pub mod metrics;
pub mod photonics;
pub mod qcore;
pub mod simulator;
pub mod tomography;
pub(crate) mod util;

pub use error::{Error, Result};
