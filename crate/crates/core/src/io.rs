//! CSV dataset interchange and versioned JSON artifacts.
//!
//! Dataset CSV layout: one observation per row, features first, response in
//! the last column; a header row is optional and flag-controlled. JSON
//! artifacts (traces, reports, experiment configs) carry
//! `"schema_version": 1` and are validated on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::{ExperimentResults, MetricRow, SummaryRow};
use crate::model::{Dataset, LabelEncoding, SelectionTrace, SCHEMA_VERSION};

/// Read a dataset from CSV; the last column is the response.
pub fn read_dataset_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    encoding: LabelEncoding,
) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} columns; need at least one feature plus the response",
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidParameter(format!("row {i}, column {j}: cannot parse '{field}'"))
            })?;
            values.push(v);
        }
        y.push(values.pop().expect("checked length"));
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::DimensionMismatch("CSV contains no data rows".into()));
    }
    let p = rows[0].len();
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * p);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} feature columns, expected {p}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    let x = ndarray::Array2::from_shape_vec((n, p), flat)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    Dataset::new(x, ndarray::Array1::from_vec(y), encoding)
}

/// Write a dataset as CSV (features then response; header optional).
pub fn write_dataset_csv(path: impl AsRef<Path>, data: &Dataset, header: bool) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    if header {
        let mut names: Vec<String> = (0..data.p()).map(|j| format!("x{j}")).collect();
        names.push("y".into());
        writer.write_record(&names)?;
    }
    let mut record: Vec<String> = Vec::with_capacity(data.p() + 1);
    for i in 0..data.n() {
        record.clear();
        for j in 0..data.p() {
            record.push(format_float(data.x()[(i, j)]));
        }
        record.push(format_float(data.y()[i]));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Shortest round-trip decimal representation.
fn format_float(v: f64) -> String {
    let mut buffer = ryu_buffer(v);
    // Trim the trailing ".0" ryu emits for integral values, matching the
    // compact form most CSV tooling expects.
    if buffer.ends_with(".0") {
        buffer.truncate(buffer.len() - 2);
    }
    buffer
}

fn ryu_buffer(v: f64) -> String {
    // `{}` on f64 uses the shortest representation that round-trips.
    format!("{v}")
}

/// Pretty-printed JSON plus trailing newline.
pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let file = File::open(path.as_ref())?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Load a trace, checking the schema version and structural invariants.
pub fn read_trace_json(path: impl AsRef<Path>) -> Result<SelectionTrace> {
    let trace: SelectionTrace = read_json(path)?;
    if trace.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported trace schema_version {} (expected {SCHEMA_VERSION})",
            trace.schema_version
        )));
    }
    trace.validate()?;
    Ok(trace)
}

/// Long-format experiment rows: `run,algo,s,metric,value`.
pub fn write_experiment_csv(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Summary rows: `algo,s,metric,mean,stderr,n_runs`.
pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write both the long-format CSV and a `<stem>.summary.csv` sibling.
pub fn write_experiment_outputs(path: impl AsRef<Path>, results: &ExperimentResults) -> Result<()> {
    let path = path.as_ref();
    write_experiment_csv(path, &results.rows)?;
    let summary_path = match path.extension() {
        Some(ext) => path.with_extension(format!("summary.{}", ext.to_string_lossy())),
        None => path.with_extension("summary"),
    };
    write_summary_csv(&summary_path, &results.summary)?;
    Ok(())
}
