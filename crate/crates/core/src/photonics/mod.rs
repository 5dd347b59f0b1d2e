//! Facet mode overlap and coupling loss, spectra-derived figures and
//! loss/rate budgets. Lengths in micrometres, wavelengths in nanometres.

mod budget;
mod calibrate;
mod mode;
mod overlap;
mod spectra;

pub use budget::{predicted_rate, rate_budget, LossBudget, LossEntry, LossPath, PathTotal, RateBudget};
pub use calibrate::{brw_mode_v1, calibrate_two_lobe, BrwCalibration, CalibrationFigures, CalibrationTargets, BRW_MODE_V1_JSON};
pub use mode::{Extent, Field, ModeField, ModeKind, ModeModel, Polarization, Profile};
pub use overlap::{half_widths, loss_db, overlap, refine_optimum, scan_displacement, HalfWidths, LossMap, LossPoint, Overlap, ScanSpec};
pub use spectra::{per_from_spectra, suppression_from_spectra, Spectrum, SpectrumDifference};
