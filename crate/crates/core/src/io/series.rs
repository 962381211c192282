//! CSV ingestion and export of series frames.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::fmt_f64;
use crate::error::{Error, Result};
use crate::synth::GenOutput;
use crate::task::{Matrix, SeriesFrame};

/// Which columns of a CSV file hold what.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp_column: String,
    pub targets: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<String>,
}

impl CsvSchema {
    pub fn new(
        timestamp_column: impl Into<String>,
        targets: impl IntoIterator<Item = impl Into<String>>,
        covariates: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        CsvSchema {
            timestamp_column: timestamp_column.into(),
            targets: targets.into_iter().map(Into::into).collect(),
            covariates: covariates.into_iter().map(Into::into).collect(),
        }
    }
}

/// Parses an integer step or an ISO-8601 instant (epoch seconds, UTC).
/// Returns whether the text was a plain integer.
pub fn parse_timestamp(text: &str) -> Option<(i64, bool)> {
    let text = text.trim();
    if let Ok(v) = text.parse::<i64>() {
        return Some((v, true));
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some((dt.timestamp(), false));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some((dt.and_utc().timestamp(), false));
        }
    }
    let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()?;
    Some((date.and_hms_opt(0, 0, 0)?.and_utc().timestamp(), false))
}

fn parse_value(text: &str, line: u64, column: &str) -> Result<f64> {
    let parse_err = |reason: &str| Error::Parse {
        line,
        column: column.to_string(),
        reason: reason.to_string(),
    };
    let text = text.trim();
    if text.is_empty() {
        return Err(parse_err("empty cell"));
    }
    let v: f64 = text.parse().map_err(|_| parse_err(&format!("not a number: {text:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(&format!("non-finite value {text:?}")));
    }
    Ok(v)
}

/// Reads a frame from CSV text. Line numbers count the header as line 1.
pub fn parse_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<SeriesFrame<f64>> {
    if schema.targets.is_empty() {
        return Err(Error::Schema("targets: schema names no target column".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            line: 1,
            column: name.to_string(),
            reason: "column not found in header".into(),
        })
    };
    let ts_idx = index_of(&schema.timestamp_column)?;
    let target_idx: Vec<usize> = schema.targets.iter().map(|c| index_of(c)).collect::<Result<_>>()?;
    let cov_idx: Vec<usize> = schema.covariates.iter().map(|c| index_of(c)).collect::<Result<_>>()?;

    let mut timestamps = Vec::new();
    let mut labels = Vec::new();
    let mut all_integer = true;
    let mut targets: Vec<Vec<f64>> = vec![Vec::new(); target_idx.len()];
    let mut covariates: Vec<Vec<f64>> = vec![Vec::new(); cov_idx.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or("");
        let raw_ts = cell(ts_idx);
        let (ts, is_int) = parse_timestamp(raw_ts).ok_or_else(|| Error::Parse {
            line,
            column: schema.timestamp_column.clone(),
            reason: format!("unparseable timestamp {raw_ts:?}"),
        })?;
        if timestamps.last().is_some_and(|&prev| ts <= prev) {
            return Err(Error::NonMonotonicTimestamps { line });
        }
        all_integer &= is_int;
        timestamps.push(ts);
        labels.push(raw_ts.trim().to_string());
        for (k, &i) in target_idx.iter().enumerate() {
            targets[k].push(parse_value(cell(i), line, &schema.targets[k])?);
        }
        for (k, &i) in cov_idx.iter().enumerate() {
            covariates[k].push(parse_value(cell(i), line, &schema.covariates[k])?);
        }
    }
    let len = timestamps.len();
    let covariates = if covariates.is_empty() {
        Matrix::empty(len)
    } else {
        Matrix::from_rows(&covariates)?
    };
    Ok(SeriesFrame {
        timestamps,
        labels: (!all_integer).then_some(labels),
        targets: Matrix::from_rows(&targets)?,
        covariates,
    })
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SeriesFrame<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, schema)
}

/// Serializes a frame under `schema`'s column names. Timestamps are written
/// as their original labels when present.
pub fn frame_to_csv(frame: &SeriesFrame<f64>, schema: &CsvSchema) -> Result<String> {
    if schema.targets.len() != frame.targets.rows() || schema.covariates.len() != frame.covariates.rows() {
        return Err(Error::Schema("columns: schema does not match frame".into()));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once(&schema.timestamp_column)
        .chain(&schema.targets)
        .chain(&schema.covariates);
    wtr.write_record(header)?;
    for t in 0..frame.len() {
        let ts = match &frame.labels {
            Some(labels) => labels[t].clone(),
            None => frame.timestamps[t].to_string(),
        };
        let values = frame
            .targets
            .iter_rows()
            .chain(frame.covariates.iter_rows())
            .map(|row| fmt_f64(row[t]));
        wtr.write_record(std::iter::once(ts).chain(values))?;
    }
    finish(wtr)
}

pub fn write_frame_csv(path: impl AsRef<Path>, frame: &SeriesFrame<f64>, schema: &CsvSchema) -> Result<()> {
    write_text(path.as_ref(), &frame_to_csv(frame, schema)?)
}

/// `t,y` columns, plus `y_base` when `with_base` is set.
pub fn generated_to_csv(out: &GenOutput, with_base: bool) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    if with_base {
        wtr.write_record(["t", "y", "y_base"])?;
    } else {
        wtr.write_record(["t", "y"])?;
    }
    for i in 0..out.t.len() {
        let mut row = vec![out.t[i].to_string(), fmt_f64(out.y[i])];
        if with_base {
            row.push(fmt_f64(out.y_base[i]));
        }
        wtr.write_record(&row)?;
    }
    finish(wtr)
}

fn finish(wtr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wtr.into_inner().map_err(|e| Error::Schema(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub(super) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
