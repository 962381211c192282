//! Report bundle: pivots, leaderboard, summary, audit log and run metadata.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{fmt_opt, series::write_text};
use crate::aggregate::{aggregate_all, leaderboard, AggregateReport, ErrorPivot, Leaderboard};
use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::pipeline::{AuditRecord, AuditRole};

pub const METADATA_FILE: &str = "metadata.json";
pub const AUDIT_FILE: &str = "audit.jsonl";
pub const LEADERBOARD_FILE: &str = "leaderboard.csv";
pub const SUMMARY_FILE: &str = "summary.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub run_id: String,
    pub seed: u64,
    /// SHA-256 of the manifest bytes, lowercase hex.
    pub config_hash: String,
    pub harness_version: String,
    pub protocol_version: u32,
    pub baseline: String,
    pub n_tune: usize,
    pub n_test: usize,
    pub tasks: Vec<String>,
    pub models: Vec<String>,
    pub missing_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub dir: PathBuf,
    /// File names inside `dir`, sorted.
    pub files: Vec<String>,
    pub leaderboard: Leaderboard,
    /// Empty cells across all pivots.
    pub missing_cells: usize,
}

pub fn config_hash(manifest_bytes: &[u8]) -> String {
    Sha256::digest(manifest_bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn pivot_file(metric: MetricId) -> String {
    format!("pivot_{metric}.csv")
}

fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Schema(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Header is the metric id followed by task ids; one row per model.
pub fn pivot_to_csv(pivot: &ErrorPivot) -> Result<String> {
    let header = std::iter::once(pivot.metric_id.to_string())
        .chain(pivot.tasks.iter().cloned())
        .collect();
    let rows = pivot.models.iter().zip(&pivot.cells).map(|(model, cells)| {
        std::iter::once(model.clone())
            .chain(cells.iter().map(|&c| fmt_opt(c)))
            .collect()
    });
    csv_string(std::iter::once(header).chain(rows))
}

pub fn parse_pivot_csv(text: &str) -> Result<ErrorPivot> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Schema("pivot: empty file".into()))??;
    let metric_id: MetricId = header.get(0).unwrap_or("").parse()?;
    let tasks: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut models = Vec::new();
    let mut cells = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        models.push(record.get(0).unwrap_or("").to_string());
        let row = record
            .iter()
            .skip(1)
            .zip(&tasks)
            .map(|(field, task)| {
                if field.is_empty() {
                    return Ok(None);
                }
                field.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                    line,
                    column: task.clone(),
                    reason: format!("not a number: {field:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    ErrorPivot::new(metric_id, models, tasks, cells)
}

pub fn read_pivot_csv(path: impl AsRef<Path>) -> Result<ErrorPivot> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pivot_csv(&text)
}

/// Models in ranking order.
pub fn aggregate_to_csv(report: &AggregateReport) -> Result<String> {
    let header = ["rank", "model", "win_rate", "skill_score", "n_valid_comparisons", "n_valid_tasks_vs_baseline"]
        .map(String::from)
        .to_vec();
    let rows = report.ranking.iter().enumerate().map(|(i, name)| {
        let m = report
            .models
            .iter()
            .find(|m| &m.model == name)
            .expect("ranking names come from models");
        vec![
            (i + 1).to_string(),
            m.model.clone(),
            fmt_opt(m.win_rate),
            fmt_opt(m.skill_score),
            m.n_valid_comparisons.to_string(),
            m.n_valid_tasks_vs_baseline.to_string(),
        ]
    });
    csv_string(std::iter::once(header).chain(rows))
}

pub fn leaderboard_to_csv(board: &Leaderboard) -> Result<String> {
    let mut header = vec!["rank".to_string(), "model".to_string()];
    for m in &board.metrics {
        header.push(format!("{m}_win_rate"));
        header.push(format!("{m}_skill_score"));
    }
    header.push("mean_win_rate".into());
    header.push("mean_skill_score".into());
    let rows = board.rows.iter().map(|r| {
        let mut row = vec![r.rank.to_string(), r.model.clone()];
        for &(win, skill) in &r.per_metric {
            row.push(fmt_opt(win));
            row.push(fmt_opt(skill));
        }
        row.push(fmt_opt(r.mean_win_rate));
        row.push(fmt_opt(r.mean_skill_score));
        row
    });
    csv_string(std::iter::once(header).chain(rows))
}

fn short(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

pub fn summary_markdown(meta: &RunMetadata, board: &Leaderboard) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Run `{}`\n", meta.run_id);
    let _ = writeln!(s, "- seed: {}", meta.seed);
    let _ = writeln!(s, "- config hash: `{}`", meta.config_hash);
    let _ = writeln!(s, "- harness version: {}", meta.harness_version);
    let _ = writeln!(s, "- baseline: {}", meta.baseline);
    let _ = writeln!(s, "- windows: {} tuning, {} test", meta.n_tune, meta.n_test);
    let _ = writeln!(s, "- tasks: {}, models: {}", meta.tasks.len(), meta.models.len());
    let _ = writeln!(s, "- missing cells: {}\n", meta.missing_cells);
    let _ = writeln!(s, "## Leaderboard\n");
    let mut header = String::from("| rank | model |");
    let mut rule = String::from("|---:|---|");
    for m in &board.metrics {
        let _ = write!(header, " {m} win | {m} skill |");
        rule.push_str("---:|---:|");
    }
    header.push_str(" mean win | mean skill |");
    rule.push_str("---:|---:|");
    let _ = writeln!(s, "{header}\n{rule}");
    for r in &board.rows {
        let _ = write!(s, "| {} | {} |", r.rank, r.model);
        for &(win, skill) in &r.per_metric {
            let _ = write!(s, " {} | {} |", short(win), short(skill));
        }
        let _ = writeln!(s, " {} | {} |", short(r.mean_win_rate), short(r.mean_skill_score));
    }
    s
}

/// Pivot cells (as `task/model`) with no test or failure record in the audit.
pub fn check_traceability(pivots: &[ErrorPivot], audit: &[AuditRecord]) -> Vec<String> {
    let traced: BTreeSet<(&str, &str)> = audit
        .iter()
        .filter(|r| matches!(r.role, AuditRole::Test | AuditRole::Failure))
        .map(|r| (r.task_id.as_str(), r.model.as_str()))
        .collect();
    let mut untraced = BTreeSet::new();
    for p in pivots {
        for model in &p.models {
            for task in &p.tasks {
                if !traced.contains(&(task.as_str(), model.as_str())) {
                    untraced.insert(format!("{task}/{model}"));
                }
            }
        }
    }
    untraced.into_iter().collect()
}

fn audit_jsonl(audit: &[AuditRecord]) -> Result<String> {
    let mut s = String::new();
    for r in audit {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_derived(dir: &Path, meta: &RunMetadata, aggregates: &[AggregateReport]) -> Result<Leaderboard> {
    let board = leaderboard(aggregates)?;
    write_text(&dir.join(LEADERBOARD_FILE), &leaderboard_to_csv(&board)?)?;
    write_text(&dir.join(SUMMARY_FILE), &summary_markdown(meta, &board))?;
    Ok(board)
}

fn bundle(dir: &Path, pivots: &[ErrorPivot], board: Leaderboard) -> ReportBundle {
    let mut files: Vec<String> = pivots.iter().map(|p| pivot_file(p.metric_id)).collect();
    files.extend([AUDIT_FILE, LEADERBOARD_FILE, METADATA_FILE, SUMMARY_FILE].map(String::from));
    files.sort();
    let missing_cells = pivots
        .iter()
        .flat_map(|p| p.cells.iter().flatten())
        .filter(|c| c.is_none())
        .count();
    ReportBundle {
        dir: dir.to_path_buf(),
        files,
        leaderboard: board,
        missing_cells,
    }
}

/// Writes the full bundle into `dir`, creating it if needed.
pub fn write_reports(
    pivots: &[ErrorPivot],
    aggregates: &[AggregateReport],
    audit: &[AuditRecord],
    meta: &RunMetadata,
    dir: impl AsRef<Path>,
) -> Result<ReportBundle> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for p in pivots {
        write_text(&dir.join(pivot_file(p.metric_id)), &pivot_to_csv(p)?)?;
    }
    write_text(&dir.join(AUDIT_FILE), &audit_jsonl(audit)?)?;
    let mut meta_json = serde_json::to_string_pretty(meta)?;
    meta_json.push('\n');
    write_text(&dir.join(METADATA_FILE), &meta_json)?;
    let board = write_derived(dir, meta, aggregates)?;
    Ok(bundle(dir, pivots, board))
}

/// Re-reads pivots, audit and metadata from a run directory, checks that every
/// pivot cell is traced in the audit, and regenerates the leaderboard and
/// summary.
pub fn rebuild_reports(dir: impl AsRef<Path>) -> Result<ReportBundle> {
    let dir = dir.as_ref();
    let meta_path = dir.join(METADATA_FILE);
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: RunMetadata = serde_json::from_str(&meta_text)?;
    let mut pivots = Vec::new();
    for m in MetricId::ALL {
        let path = dir.join(pivot_file(m));
        if path.exists() {
            pivots.push(read_pivot_csv(&path)?);
        }
    }
    if pivots.is_empty() {
        return Err(Error::Schema(format!("pivots: none found in {}", dir.display())));
    }
    let audit_path = dir.join(AUDIT_FILE);
    let audit_text = fs::read_to_string(&audit_path).map_err(|e| Error::io(&audit_path, e))?;
    let audit = audit_text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<std::result::Result<Vec<AuditRecord>, _>>()?;
    let untraced = check_traceability(&pivots, &audit);
    if !untraced.is_empty() {
        return Err(Error::Schema(format!("audit: untraced cells {}", untraced.join(", "))));
    }
    let aggregates = pivots
        .iter()
        .map(|p| aggregate_all(p, &meta.baseline))
        .collect::<Result<Vec<_>>>()?;
    let board = write_derived(dir, &meta, &aggregates)?;
    Ok(bundle(dir, &pivots, board))
}
