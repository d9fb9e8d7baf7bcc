//! CSV serialization of repetition records and aggregates.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{NpError, Result};
use crate::numerics::format_real;

use super::config::Method;
use super::run::{AggregateRow, RepStatus, RepetitionRecord};

pub const RECORD_HEADER: [&str; 13] = [
    "method",
    "rep_index",
    "n0",
    "n1",
    "p",
    "alpha",
    "delta",
    "threshold",
    "type1_emp",
    "type2_emp",
    "type1_pop",
    "type2_pop",
    "status",
];

pub const AGGREGATE_HEADER: [&str; 6] =
    ["method", "axis_value", "mean_type1", "mean_type2", "violation_rate", "feasible_fraction"];

const MISSING: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), format_real)
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field == MISSING {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| NpError::InvalidData(format!("not a number: `{field}`")))
}

fn parse_usize(field: &str) -> Result<usize> {
    field.parse().map_err(|_| NpError::InvalidData(format!("not an integer: `{field}`")))
}

fn parse_method(field: &str) -> Result<Method> {
    Method::from_name(field).ok_or_else(|| NpError::InvalidData(format!("unknown method `{field}`")))
}

/// Writes records in the given order; [`crate::experiments::run_experiment`]
/// already returns them sorted by `(method, axis_value, rep_index)`.
pub fn write_records<W: Write>(out: W, records: &[RepetitionRecord]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            r.rep_index.to_string(),
            r.n0.to_string(),
            r.n1.to_string(),
            r.p.to_string(),
            format_real(r.alpha),
            format_real(r.delta),
            opt(r.threshold),
            opt(r.type1_emp),
            opt(r.type2_emp),
            opt(r.type1_pop),
            opt(r.type2_pop),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates<W: Write>(out: W, rows: &[AggregateRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for a in rows {
        w.write_record([
            a.method.name().to_string(),
            a.axis_value.to_string(),
            opt(a.mean_type1),
            opt(a.mean_type2),
            opt(a.violation_rate),
            format_real(a.feasible_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| NpError::io(path, e))
}

pub fn write_records_csv(path: &Path, records: &[RepetitionRecord]) -> Result<()> {
    write_records(create(path)?, records).map_err(|e| NpError::csv(path, e))
}

pub fn write_aggregates_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_aggregates(create(path)?, rows).map_err(|e| NpError::csv(path, e))
}

fn check_header(reader: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| NpError::InvalidData(e.to_string()))?;
    if header.iter().ne(want.iter().copied()) {
        return Err(NpError::InvalidData(format!("unexpected header {header:?}")));
    }
    Ok(())
}

pub fn read_aggregates<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &AGGREGATE_HEADER)?;
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| NpError::InvalidData(e.to_string()))?;
            Ok(AggregateRow {
                method: parse_method(&row[0])?,
                axis_value: parse_usize(&row[1])?,
                mean_type1: parse_opt(&row[2])?,
                mean_type2: parse_opt(&row[3])?,
                violation_rate: parse_opt(&row[4])?,
                feasible_fraction: parse_opt(&row[5])?.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RepetitionRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &RECORD_HEADER)?;
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| NpError::InvalidData(e.to_string()))?;
            Ok(RepetitionRecord {
                method: parse_method(&row[0])?,
                rep_index: parse_usize(&row[1])?,
                n0: parse_usize(&row[2])?,
                n1: parse_usize(&row[3])?,
                p: parse_usize(&row[4])?,
                alpha: parse_opt(&row[5])?.unwrap_or(f64::NAN),
                delta: parse_opt(&row[6])?.unwrap_or(f64::NAN),
                threshold: parse_opt(&row[7])?,
                type1_emp: parse_opt(&row[8])?,
                type2_emp: parse_opt(&row[9])?,
                type1_pop: parse_opt(&row[10])?,
                type2_pop: parse_opt(&row[11])?,
                status: RepStatus::parse(&row[12]),
            })
        })
        .collect()
}
