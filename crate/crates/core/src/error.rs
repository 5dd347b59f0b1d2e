use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invariant `hermitian` violated: max |m_ij - conj(m_ji)| = {deviation:.3e} (tolerance {tolerance:.1e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("invariant `unit_trace` violated: trace = {trace:.12} (tolerance {tolerance:.1e})")]
    TraceNotUnit { trace: f64, tolerance: f64 },
    #[error("invariant `positive_semidefinite` violated: minimum eigenvalue {min:.3e} (tolerance {tolerance:.1e})")]
    NegativeEigenvalue { min: f64, tolerance: f64 },
    #[error("invariant `finite` violated: non-finite matrix entry")]
    NonFinite,
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{channel} events out of order at index {index}")]
    UnorderedStream { channel: &'static str, index: usize },
    #[error("cell windows overlap: half-width {halfwidth:.3e} s >= half the bin delay {bin_delay:.3e} s")]
    OverlappingWindows { halfwidth: f64, bin_delay: f64 },
    #[error("missing measurement setting {0}")]
    MissingSetting(String),
    #[error("duplicate measurement setting {0}")]
    DuplicateSetting(String),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("wavelength ranges do not overlap")]
    DisjointRanges,
    #[error("transmission must be in (0, 1], got {0}")]
    ZeroTransmission(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
