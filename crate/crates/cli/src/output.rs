//! Trace and result-envelope writers. Floats in CSV carry 17 significant
//! digits so a trace round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::scenarios::Outcome;
use crate::{CliError, Format};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// `trace.csv` -> `trace.result.json`.
pub fn envelope_path(out: &Path) -> PathBuf {
    out.with_extension("result.json")
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace(
    path: &Path,
    format: Format,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record(columns).map_err(|e| io_err(path, e))?;
            for row in rows {
                w.write_record(row.iter().map(|&x| format_float(x)))
                    .map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))?;
        }
        Format::Json => {
            let mut w = BufWriter::new(file);
            let doc = json!({ "columns": columns, "rows": rows });
            serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| io_err(path, e))?;
            writeln!(w).map_err(|e| io_err(path, e))?;
        }
    }
    Ok(())
}

pub fn envelope(
    scenario: &str,
    parameters: Value,
    outcome: &Outcome,
    trace: Option<&Path>,
) -> Value {
    json!({
        "scenario": scenario,
        "parameters": parameters,
        "expected": outcome.expected,
        "computed": outcome.computed,
        "tolerance": outcome.tolerance,
        "pass": outcome.pass,
        "trace_file": trace.map(|p| p.display().to_string()),
    })
}

pub fn write_envelope(path: &Path, envelope: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(envelope).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
