//! Control files: one JSON document
//!
//! ```text
//! { "format": "decumulate-controls", "schema_version": 1,
//!   "controls": { "grid", "scenario", "objective", "w_star",
//!                 "n_q", "n_p", "wealth": [..], "q": [[..]], "p": [[..]] } }
//! ```
//!
//! `q[i][k]` is the withdrawal at date `i` for pre-withdrawal wealth
//! `wealth[k]`; `p[i][k]` is the stock fraction for post-withdrawal wealth
//! `wealth[k]`. Floats are written with round-trip precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ControlField;
use crate::atomic::write_atomic;
use crate::error::{Error, Result};
use crate::lattice::GridSpec;

pub const CONTROL_FORMAT: &str = "decumulate-controls";
pub const CONTROL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    schema_version: u32,
    controls: &'a ControlField,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: String,
    schema_version: u32,
    controls: serde_json::Value,
}

pub fn save_controls(c: &ControlField, path: &Path) -> Result<()> {
    c.validate()?;
    let doc = EnvelopeOut {
        format: CONTROL_FORMAT,
        schema_version: CONTROL_SCHEMA_VERSION,
        controls: c,
    };
    let bytes = serde_json::to_vec(&doc)
        .map_err(|e| Error::Format(format!("cannot serialize controls: {e}")))?;
    write_atomic(path, &bytes)
}

pub fn load_controls(path: &Path) -> Result<ControlField> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let env: EnvelopeIn = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if env.format != CONTROL_FORMAT {
        return Err(Error::Format(format!(
            "{}: not a control file (format {:?})",
            path.display(),
            env.format
        )));
    }
    if env.schema_version != CONTROL_SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "{}: schema version {} is not supported (expected {})",
            path.display(),
            env.schema_version,
            CONTROL_SCHEMA_VERSION
        )));
    }
    let c: ControlField = serde_json::from_value(env.controls)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    c.validate()?;
    Ok(c)
}

impl ControlField {
    /// Refuse controls computed on a different lattice unless
    /// `allow_interpolation` is set. Rule-based controls always pass.
    pub fn check_grid(&self, expected: &GridSpec, allow_interpolation: bool) -> Result<()> {
        match &self.grid {
            Some(g) if g != expected && !allow_interpolation => Err(Error::Format(format!(
                "controls were computed on a {}x{} lattice over s in [{}, {}], b in [{}, {}]; \
                 expected {}x{} over s in [{}, {}], b in [{}, {}] (enable interpolation to use them anyway)",
                g.n_s, g.n_b, g.s_min, g.s_max, g.b_min, g.b_max,
                expected.n_s, expected.n_b, expected.s_min, expected.s_max, expected.b_min, expected.b_max
            ))),
            _ => Ok(()),
        }
    }
}
