//! Files in and out: series CSVs, run manifests and report bundles.

mod manifest;
mod report;
mod series;

pub use manifest::{effective_seed, ExternalSpec, Manifest, ModelSpec, ResolvedRun, TaskEntry, TuningSpec, SEED_ENV};
pub use report::{
    aggregate_to_csv, check_traceability, config_hash, leaderboard_to_csv, parse_pivot_csv, pivot_to_csv,
    read_pivot_csv, rebuild_reports, summary_markdown, write_reports, ReportBundle, RunMetadata,
};
pub use series::{
    frame_to_csv, generated_to_csv, load_csv, parse_csv, parse_timestamp, write_frame_csv, CsvSchema,
};

use std::path::Path;

use crate::error::Result;

/// 17 significant digits; parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Missing values become empty fields.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    series::write_text(path.as_ref(), text)
}
