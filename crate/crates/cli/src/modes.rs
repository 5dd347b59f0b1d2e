use std::path::Path;

use anyhow::{bail, Context, Result};
use timebin::photonics::{brw_mode_v1, Field, ModeField, ModeModel};

/// Resolves a mode spec: `brw` (calibrated waveguide mode), `partner` (its
/// PolyBoard partner), `gaussian:<diameter_um>`, a `.json` mode model or a
/// `.csv` sampled field.
pub fn parse_mode(spec: &str) -> Result<Box<dyn Field>> {
    if spec == "brw" {
        return Ok(Box::new(brw_mode_v1().model));
    }
    if spec == "partner" {
        return Ok(Box::new(brw_mode_v1().partner));
    }
    if let Some(d) = spec.strip_prefix("gaussian:") {
        let d: f64 = d.parse().with_context(|| format!("bad Gaussian diameter in `{spec}`"))?;
        let m = ModeModel::gaussian(d);
        m.validate()?;
        return Ok(Box::new(m));
    }
    let path = Path::new(spec);
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading mode {spec}"))?;
            let m: ModeModel = serde_json::from_str(&text).with_context(|| format!("invalid mode model {spec}"))?;
            m.validate()?;
            Ok(Box::new(m))
        }
        Some("csv") => {
            let f = std::fs::File::open(path).with_context(|| format!("reading field {spec}"))?;
            Ok(Box::new(ModeField::read_csv(f).with_context(|| format!("invalid field {spec}"))?))
        }
        _ => bail!("unknown mode `{spec}` (expected brw, partner, gaussian:<d>, *.json or *.csv)"),
    }
}
