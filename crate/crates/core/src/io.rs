//! CSV and JSON output. Floats are written with 17 significant digits so
//! that files round-trip bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column-oriented CSV: one header per column, all columns the same length.
pub fn write_columns<W: Write>(w: W, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::InvalidInput(format!("{} headers for {} columns", headers.len(), columns.len())));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidInput("columns differ in length".into()));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(headers)?;
    for i in 0..rows {
        out.write_record(columns.iter().map(|c| fmt17(c[i])))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_columns_to(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    write_columns(fs::File::create(path)?, headers, columns)
}

pub fn write_json_to<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
