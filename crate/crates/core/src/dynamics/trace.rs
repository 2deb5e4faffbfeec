//! JSON-lines export of orbit states.

use std::io::{self, Write};

use serde_json::json;

use crate::spaces::{norm, SeqVector};

/// States longer than this are written without coordinates.
pub const TRACE_COORD_LIMIT: usize = 10_000;

/// Writes one line `{"n", "log_norm", "coords"?}` per state, numbered from 1.
pub fn write_trace<'a, W: Write>(out: &mut W, states: impl IntoIterator<Item = &'a SeqVector>) -> io::Result<()> {
    for (i, s) in states.into_iter().enumerate() {
        let ln = norm(s);
        let log_norm = if ln.is_finite() { json!(ln) } else { json!(null) };
        let line = if s.len() <= TRACE_COORD_LIMIT {
            json!({ "n": i + 1, "log_norm": log_norm, "coords": s.to_json()["coords"] })
        } else {
            json!({ "n": i + 1, "log_norm": log_norm })
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}
