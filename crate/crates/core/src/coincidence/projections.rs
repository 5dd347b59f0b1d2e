use std::fmt;

use serde::{Deserialize, Serialize};

use super::PeakCounts;
use crate::qcore::{tensor, Ket2, Ket4};
use crate::{Error, Result};

/// Analyzer phase pair used for one measurement run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "+L")]
    PlusL,
    #[serde(rename = "L+")]
    LPlus,
    #[serde(rename = "LL")]
    LL,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::PlusPlus, Setting::PlusL, Setting::LPlus, Setting::LL];

    /// Interferometer phases `(alpha, beta)`: 0 selects `|+>`, pi/2 `|L>`.
    pub fn phases(self) -> (f64, f64) {
        use std::f64::consts::FRAC_PI_2;
        match self {
            Setting::PlusPlus => (0.0, 0.0),
            Setting::PlusL => (0.0, FRAC_PI_2),
            Setting::LPlus => (FRAC_PI_2, 0.0),
            Setting::LL => (FRAC_PI_2, FRAC_PI_2),
        }
    }

    /// Kets selected by the central arrival slot for each party.
    pub fn analyzers(self) -> (Ket2, Ket2) {
        let (a, b) = self.phases();
        (Ket2::equator(a), Ket2::equator(b))
    }

    pub fn label(self) -> &'static str {
        match self {
            Setting::PlusPlus => "++",
            Setting::PlusL => "+L",
            Setting::LPlus => "L+",
            Setting::LL => "LL",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|x| x.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown setting `{s}`")))
    }
}

/// Where a record's count came from: antidiagonal peak (1..=5) and the
/// arrival-slot cell `(t_A, t_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordSource {
    pub peak: u8,
    pub cell: (i8, i8),
}

/// One measured projector with its raw count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub projector: Ket4,
    pub count: u64,
    pub setting: Setting,
    pub source: RecordSource,
    /// Relative detection efficiency of this projector (1 for the central
    /// cell, 1/2 per photon that took a definite path).
    pub normalization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Also emit the `(-1,+1)` and `(+1,-1)` cells as `|12>` and `|21>`
    /// records. They are empty for an ideal source but make the projector
    /// set informationally complete.
    pub include_forbidden_cells: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { include_forbidden_cells: true }
    }
}

const CELL_ORDER: [(i8, i8); 9] = [(-1, -1), (-1, 0), (0, -1), (-1, 1), (0, 0), (1, -1), (0, 1), (1, 0), (1, 1)];

/// Ket measured by slot `t` of an analyzer that selects `xi` in the centre.
fn slot_ket(t: i8, xi: Ket2) -> Ket2 {
    match t {
        -1 => Ket2::early(),
        0 => xi,
        _ => Ket2::late(),
    }
}

/// Turns per-setting cell counts into projection records. The output is in
/// canonical order (setting, then cell), independent of input order.
pub fn assemble_projections(inputs: &[(Setting, PeakCounts)], opts: AssemblyOptions) -> Result<Vec<ProjectionRecord>> {
    let mut by_setting: [Option<&PeakCounts>; 4] = [None; 4];
    for (s, p) in inputs {
        let slot = &mut by_setting[*s as usize];
        if slot.is_some() {
            return Err(Error::DuplicateSetting(s.to_string()));
        }
        *slot = Some(p);
    }
    let mut out = Vec::with_capacity(36);
    for s in Setting::ALL {
        let peaks = by_setting[s as usize].ok_or_else(|| Error::MissingSetting(s.to_string()))?;
        let (xa, xb) = s.analyzers();
        for (ta, tb) in CELL_ORDER {
            if ta * tb == -1 && !opts.include_forbidden_cells {
                continue;
            }
            let definite = (ta != 0) as i32 + (tb != 0) as i32;
            out.push(ProjectionRecord {
                projector: tensor(&slot_ket(ta, xa), &slot_ket(tb, xb)),
                count: peaks.cell(ta, tb),
                setting: s,
                source: RecordSource { peak: (ta + tb + 3) as u8, cell: (ta, tb) },
                normalization: 0.5f64.powi(definite),
            });
        }
    }
    Ok(out)
}
