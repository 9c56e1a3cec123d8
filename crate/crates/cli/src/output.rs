use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        match s.str("format")? {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::config(format!("format `{other}`: expected csv or json"))),
        }
    }
}

/// What a subcommand produced: the file body plus a summary for the
/// manifest and a one-line report for stderr.
pub struct Output {
    pub body: Vec<u8>,
    pub summary: serde_json::Value,
    pub line: String,
}

pub fn csv_bytes<R: Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn json_bytes<V: Serialize + ?Sized>(v: &V) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Rows as CSV, or as a JSON array of row objects.
pub fn table<R: Serialize>(format: Format, rows: &[R]) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => csv_bytes(rows),
        Format::Json => json_bytes(rows),
    }
}
