//! Trigger-referenced triple coincidences: 2D histogram, cell integration
//! and projection records for tomography.

mod histogram;
mod peaks;
mod projections;

pub use histogram::{build_histogram, CoincidenceHistogram2D, HistogramParams};
pub use peaks::{background_estimate, extract_peaks, BackgroundEstimate, PeakCounts, DEFAULT_CELL_HALFWIDTH};
pub use projections::{assemble_projections, AssemblyOptions, ProjectionRecord, RecordSource, Setting};
