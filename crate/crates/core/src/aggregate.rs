//! Win-rate and skill-score aggregation over a models × tasks error pivot.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricId;

/// Lower clip bound for per-task error ratios.
pub const CLIP_LOWER: f64 = 1e-2;
/// Upper clip bound for per-task error ratios; also the ratio used when the
/// baseline error is zero and the model's is not.
pub const CLIP_UPPER: f64 = 100.0;

/// Models × tasks matrix of one metric. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPivot {
    pub metric_id: MetricId,
    pub models: Vec<String>,
    pub tasks: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl ErrorPivot {
    pub fn new(
        metric_id: MetricId,
        models: Vec<String>,
        tasks: Vec<String>,
        cells: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let pivot = ErrorPivot {
            metric_id,
            models,
            tasks,
            cells,
        };
        pivot.validate()?;
        Ok(pivot)
    }

    pub fn validate(&self) -> Result<()> {
        let unique = |ids: &[String]| ids.iter().collect::<HashSet<_>>().len() == ids.len();
        if !unique(&self.models) {
            return Err(Error::Schema("models: duplicate model id".into()));
        }
        if !unique(&self.tasks) {
            return Err(Error::Schema("tasks: duplicate task id".into()));
        }
        if self.cells.len() != self.models.len() || self.cells.iter().any(|r| r.len() != self.tasks.len()) {
            return Err(Error::ShapeMismatch {
                expected: (self.models.len(), self.tasks.len()),
                found: (self.cells.len(), self.cells.first().map_or(0, Vec::len)),
            });
        }
        if self.cells.iter().flatten().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Schema("cells: values must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn model_index(&self, model: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m == model)
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    pub fn cell(&self, model: usize, task: usize) -> Option<f64> {
        self.cells[model][task]
    }
}

fn win_indicator(own: f64, other: f64) -> f64 {
    match own.partial_cmp(&other).expect("finite cells") {
        Ordering::Less => 1.0,
        Ordering::Equal => 0.5,
        Ordering::Greater => 0.0,
    }
}

/// Win score sum and number of valid comparisons for row `m`.
fn win_counts(pivot: &ErrorPivot, m: usize) -> (f64, usize) {
    let mut score = 0.0;
    let mut valid = 0usize;
    for b in 0..pivot.tasks.len() {
        let Some(own) = pivot.cell(m, b) else { continue };
        for other in (0..pivot.models.len()).filter(|&o| o != m) {
            if let Some(theirs) = pivot.cell(other, b) {
                score += win_indicator(own, theirs);
                valid += 1;
            }
        }
    }
    (score, valid)
}

/// Fraction of valid (task, opponent) comparisons the model wins, ties
/// counting one half. `None` when the model has no valid comparison.
pub fn win_rate(pivot: &ErrorPivot, model: &str) -> Result<Option<f64>> {
    let m = pivot.model_index(model)?;
    let (score, valid) = win_counts(pivot, m);
    Ok((valid > 0).then(|| score / valid as f64))
}

/// Per-task error ratio against the baseline, clipped to
/// `[CLIP_LOWER, CLIP_UPPER]`. A zero baseline error maps to 1 when the
/// model's error is also zero and to `CLIP_UPPER` otherwise.
pub fn clipped_ratio(model_err: f64, baseline_err: f64) -> f64 {
    let ratio = if baseline_err == 0.0 {
        if model_err == 0.0 {
            1.0
        } else {
            CLIP_UPPER
        }
    } else {
        model_err / baseline_err
    };
    ratio.clamp(CLIP_LOWER, CLIP_UPPER)
}

fn skill_parts(pivot: &ErrorPivot, m: usize, base: usize) -> (Option<f64>, usize) {
    let logs: Vec<f64> = (0..pivot.tasks.len())
        .filter_map(|b| Some(clipped_ratio(pivot.cell(m, b)?, pivot.cell(base, b)?).ln()))
        .collect();
    if logs.is_empty() {
        return (None, 0);
    }
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;
    (Some(1.0 - mean_log.exp()), logs.len())
}

/// One minus the geometric mean of clipped error ratios against `baseline`,
/// over tasks where both cells are present. `None` when there are none.
pub fn skill_score(pivot: &ErrorPivot, model: &str, baseline: &str) -> Result<Option<f64>> {
    let m = pivot.model_index(model)?;
    let base = pivot.model_index(baseline)?;
    Ok(skill_parts(pivot, m, base).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub model: String,
    pub win_rate: Option<f64>,
    pub skill_score: Option<f64>,
    pub n_valid_comparisons: usize,
    pub n_valid_tasks_vs_baseline: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub metric_id: MetricId,
    pub baseline: String,
    /// In pivot row order.
    pub models: Vec<ModelAggregate>,
    /// Model ids, best first.
    pub ranking: Vec<String>,
}

/// Descending on present values, missing last.
fn desc_missing_last(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

fn rank<'a>(rows: impl Iterator<Item = (&'a str, Option<f64>, Option<f64>)>) -> Vec<String> {
    let mut rows: Vec<_> = rows.collect();
    rows.sort_by(|a, b| {
        desc_missing_last(a.1, b.1)
            .then_with(|| desc_missing_last(a.2, b.2))
            .then_with(|| a.0.cmp(b.0))
    });
    rows.into_iter().map(|r| r.0.to_string()).collect()
}

/// Win rate and skill score for every model, ranked by win rate, then skill
/// score, then model id.
pub fn aggregate_all(pivot: &ErrorPivot, baseline: &str) -> Result<AggregateReport> {
    let base = pivot.model_index(baseline)?;
    let models: Vec<ModelAggregate> = (0..pivot.models.len())
        .map(|m| {
            let (score, valid) = win_counts(pivot, m);
            let (skill, n_tasks) = skill_parts(pivot, m, base);
            ModelAggregate {
                model: pivot.models[m].clone(),
                win_rate: (valid > 0).then(|| score / valid as f64),
                skill_score: skill,
                n_valid_comparisons: valid,
                n_valid_tasks_vs_baseline: n_tasks,
            }
        })
        .collect();
    let ranking = rank(models.iter().map(|a| (a.model.as_str(), a.win_rate, a.skill_score)));
    Ok(AggregateReport {
        metric_id: pivot.metric_id,
        baseline: baseline.to_string(),
        models,
        ranking,
    })
}

fn mean_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub model: String,
    /// `(win_rate, skill_score)` per metric, aligned with `Leaderboard::metrics`.
    pub per_metric: Vec<(Option<f64>, Option<f64>)>,
    /// Unweighted mean over metrics where the value is defined.
    pub mean_win_rate: Option<f64>,
    pub mean_skill_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub baseline: String,
    pub metrics: Vec<MetricId>,
    pub rows: Vec<LeaderboardRow>,
}

/// Combines per-metric reports (all over the same model list) into one table
/// ranked by mean win rate, then mean skill score, then model id.
pub fn leaderboard(reports: &[AggregateReport]) -> Result<Leaderboard> {
    let Some(first) = reports.first() else {
        return Err(Error::Schema("leaderboard: no metric reports".into()));
    };
    let names: Vec<&str> = first.models.iter().map(|m| m.model.as_str()).collect();
    for r in reports {
        let other: Vec<&str> = r.models.iter().map(|m| m.model.as_str()).collect();
        if other != names {
            return Err(Error::Schema("leaderboard: reports disagree on models".into()));
        }
    }
    let mut rows: Vec<LeaderboardRow> = names
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let per_metric: Vec<_> = reports
                .iter()
                .map(|r| (r.models[i].win_rate, r.models[i].skill_score))
                .collect();
            LeaderboardRow {
                rank: 0,
                model: name.to_string(),
                mean_win_rate: mean_present(per_metric.iter().map(|p| p.0)),
                mean_skill_score: mean_present(per_metric.iter().map(|p| p.1)),
                per_metric,
            }
        })
        .collect();
    let order = rank(rows.iter().map(|r| (r.model.as_str(), r.mean_win_rate, r.mean_skill_score)));
    rows.sort_by_key(|r| order.iter().position(|m| *m == r.model));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(Leaderboard {
        baseline: first.baseline.clone(),
        metrics: reports.iter().map(|r| r.metric_id).collect(),
        rows,
    })
}
