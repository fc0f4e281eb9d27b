pub mod classify;
pub mod segment;
pub mod track;
pub mod train;
pub mod vae;

use std::io::Write;

use serde_json::Value;

/// Writes one JSON object per line to standard output.
pub(crate) fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{v}");
}
