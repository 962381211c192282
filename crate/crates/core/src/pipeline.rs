//! Grid tuning on rolling windows, test-window evaluation and whole-benchmark
//! runs.
//!
//! Every assignment is fit on each tuning window's context and scored by MAE
//! on the window's eval segment; the first assignment with the lowest mean
//! MAE wins. The winner is then scored on every test window with all metrics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::ErrorPivot;
use crate::error::{Error, Result};
use crate::forecasters::{default_grid, fit_forecast, HyperAssignment, HyperGrid, ModelId, ParamValue};
use crate::metrics::{self, MetricId};
use crate::protocol::{AdapterCommand, AdapterSession, ForecastRequest};
use crate::task::{validate_task, ForecastMatrix};
use crate::window::{plan_windows_shrinking, Window, WindowPlan};
use crate::TaskSpec;

pub type Params = BTreeMap<String, ParamValue>;
pub type MetricMap = BTreeMap<MetricId, Option<f64>>;

/// A benchmark entry: a native model or an external adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelEntry {
    Native(ModelId),
    External { name: String, adapter: AdapterCommand },
}

impl ModelEntry {
    pub fn name(&self) -> String {
        match self {
            ModelEntry::Native(m) => m.as_str().to_string(),
            ModelEntry::External { name, .. } => name.clone(),
        }
    }
}

/// Anything that can produce a forecast for a window of a task.
pub trait WindowForecaster {
    fn forecast(&mut self, task: &TaskSpec, window: &Window, params: &Params) -> Result<ForecastMatrix<f64>>;
}

/// Native model, dispatched through [`fit_forecast`] on the window's target
/// context. Covariates are ignored.
pub struct NativeForecaster(pub ModelId);

impl WindowForecaster for NativeForecaster {
    fn forecast(&mut self, task: &TaskSpec, window: &Window, params: &Params) -> Result<ForecastMatrix<f64>> {
        let context = task.data.targets.slice_cols(window.context_start, window.context_end);
        let assignment = HyperAssignment {
            model_id: self.0,
            params: params.clone(),
        };
        fit_forecast(&context, task.horizon, &assignment)
    }
}

impl WindowForecaster for AdapterSession {
    fn forecast(&mut self, task: &TaskSpec, window: &Window, params: &Params) -> Result<ForecastMatrix<f64>> {
        let context = task.data.targets.slice_cols(window.context_start, window.context_end);
        let mut request = ForecastRequest::new(&task.id, &context, task.horizon);
        let cov = &task.data.covariates;
        if cov.rows() > 0 {
            request.covariates_past = cov.slice_cols(window.context_start, window.context_end).to_rows();
            request.covariates_future = cov.slice_cols(window.eval_start, window.eval_end).to_rows();
        }
        request.params = (!params.is_empty()).then(|| params.clone());
        AdapterSession::forecast(self, request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub model: String,
    pub chosen: Params,
    /// `None` when tuning was skipped.
    pub validation_mae: Option<f64>,
    /// Aligned with the candidate list; `None` marks a failed assignment.
    pub per_assignment_mae: Vec<Option<f64>>,
    pub n_windows_used: usize,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window: usize,
    pub kind: String,
    pub message: String,
}

impl WindowFailure {
    fn new(window: usize, err: &Error) -> Self {
        WindowFailure {
            window,
            kind: err.kind().to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub task_id: String,
    pub model: String,
    pub chosen: Params,
    pub metrics: MetricMap,
    pub per_window: Vec<MetricMap>,
    pub failures: Vec<WindowFailure>,
}

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub run_id: String,
    pub task_id: String,
    pub model: String,
    pub role: AuditRole,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Window>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Params>,
    pub metrics: MetricMap,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditRole {
    Tune,
    Test,
    Failure,
}

struct Audit<'a> {
    run_id: &'a str,
    task_id: &'a str,
    model: &'a str,
    records: Vec<AuditRecord>,
}

impl Audit<'_> {
    fn push(
        &mut self,
        role: AuditRole,
        window: Option<(usize, Window)>,
        assignment: Option<&Params>,
        metrics: MetricMap,
        error: Option<&Error>,
    ) {
        self.records.push(AuditRecord {
            run_id: self.run_id.to_string(),
            task_id: self.task_id.to_string(),
            model: self.model.to_string(),
            role,
            window: window.map(|w| w.0),
            bounds: window.map(|w| w.1),
            assignment: assignment.cloned(),
            metrics,
            error: error.map(|e| format!("{}: {e}", e.kind())),
        });
    }
}

fn window_mae(
    forecaster: &mut dyn WindowForecaster,
    task: &TaskSpec,
    window: &Window,
    params: &Params,
) -> Result<f64> {
    let forecast = forecaster.forecast(task, window, params)?;
    let actual = task.data.targets.slice_cols(window.eval_start, window.eval_end);
    let context = task.data.targets.slice_cols(window.context_start, window.context_end);
    metrics::mae(forecast.values(), &actual, &context)
}

fn tune_inner(
    forecaster: &mut dyn WindowForecaster,
    model: &str,
    task: &TaskSpec,
    candidates: &[Params],
    plan: &WindowPlan,
    mut audit: Option<&mut Audit<'_>>,
) -> Result<TuneResult> {
    let Some(first) = candidates.first() else {
        return Err(Error::AllAssignmentsFailed { model: model.to_string() });
    };
    if plan.tune_windows.is_empty() {
        return Ok(TuneResult {
            model: model.to_string(),
            chosen: first.clone(),
            validation_mae: None,
            per_assignment_mae: vec![None; candidates.len()],
            n_windows_used: 0,
            skipped: true,
        });
    }
    let mut per_assignment = Vec::with_capacity(candidates.len());
    for params in candidates {
        let mut total = 0.0;
        let mut failed = false;
        for (k, window) in plan.tune_windows.iter().enumerate() {
            let result = window_mae(forecaster, task, window, params);
            if let Some(audit) = audit.as_deref_mut() {
                let metrics = BTreeMap::from([(MetricId::Mae, result.as_ref().ok().copied())]);
                audit.push(AuditRole::Tune, Some((k, *window)), Some(params), metrics, result.as_ref().err());
            }
            match result {
                Ok(v) => total += v,
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        per_assignment.push((!failed).then(|| total / plan.tune_windows.len() as f64));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, mae) in per_assignment.iter().enumerate() {
        if let Some(v) = *mae {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    let (idx, mae) = best.ok_or_else(|| Error::AllAssignmentsFailed { model: model.to_string() })?;
    Ok(TuneResult {
        model: model.to_string(),
        chosen: candidates[idx].clone(),
        validation_mae: Some(mae),
        per_assignment_mae: per_assignment,
        n_windows_used: plan.tune_windows.len(),
        skipped: false,
    })
}

/// Grid search over `grid` on the plan's tuning windows, by mean MAE.
pub fn tune(task: &TaskSpec, grid: &HyperGrid, plan: &WindowPlan) -> Result<TuneResult> {
    let candidates: Vec<Params> = grid.assignments.iter().map(|a| a.params.clone()).collect();
    tune_inner(
        &mut NativeForecaster(grid.model_id),
        grid.model_id.as_str(),
        task,
        &candidates,
        plan,
        None,
    )
}

fn evaluate_inner(
    forecaster: &mut dyn WindowForecaster,
    model: &str,
    task: &TaskSpec,
    chosen: &Params,
    plan: &WindowPlan,
    mut audit: Option<&mut Audit<'_>>,
) -> EvalResult {
    let mut per_window = Vec::with_capacity(plan.test_windows.len());
    let mut failures = Vec::new();
    for (k, window) in plan.test_windows.iter().enumerate() {
        let context = task.data.targets.slice_cols(window.context_start, window.context_end);
        let actual = task.data.targets.slice_cols(window.eval_start, window.eval_end);
        let outcome = forecaster.forecast(task, window, chosen);
        let scores: MetricMap = MetricId::ALL
            .into_iter()
            .map(|m| {
                let v = outcome
                    .as_ref()
                    .ok()
                    .and_then(|f| m.compute(f.values(), &actual, &context).ok());
                (m, v)
            })
            .collect();
        if let Some(audit) = audit.as_deref_mut() {
            audit.push(AuditRole::Test, Some((k, *window)), Some(chosen), scores.clone(), outcome.as_ref().err());
        }
        if let Err(e) = &outcome {
            failures.push(WindowFailure::new(k, e));
        }
        per_window.push(scores);
    }
    let metrics = MetricId::ALL
        .into_iter()
        .map(|m| {
            let values: Option<Vec<f64>> = per_window.iter().map(|w| w[&m]).collect();
            let mean = values
                .filter(|v| !v.is_empty())
                .map(|v| v.iter().sum::<f64>() / v.len() as f64);
            (m, mean)
        })
        .collect();
    EvalResult {
        task_id: task.id.clone(),
        model: model.to_string(),
        chosen: chosen.clone(),
        metrics,
        per_window,
        failures,
    }
}

/// Scores `chosen` on every test window of `plan`. Failures and undefined
/// metrics never abort; they leave the affected aggregates missing.
pub fn evaluate(task: &TaskSpec, chosen: &HyperAssignment, plan: &WindowPlan) -> EvalResult {
    evaluate_inner(
        &mut NativeForecaster(chosen.model_id),
        chosen.model_id.as_str(),
        task,
        &chosen.params,
        plan,
        None,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub run_id: String,
    pub n_tune: usize,
    pub n_test: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            run_id: "run".into(),
            n_tune: 3,
            n_test: 3,
        }
    }
}

/// Outcome of one (task, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub task_id: String,
    pub model: String,
    pub tune: Option<TuneResult>,
    pub eval: Option<EvalResult>,
    /// Set when the cell failed before evaluation.
    pub error: Option<String>,
}

impl CellOutcome {
    pub fn metric(&self, m: MetricId) -> Option<f64> {
        self.eval.as_ref().and_then(|e| e.metrics[&m])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub run_id: String,
    pub models: Vec<String>,
    pub tasks: Vec<String>,
    /// Row-major over tasks, then models.
    pub cells: Vec<CellOutcome>,
    pub pivots: Vec<ErrorPivot>,
    pub audit: Vec<AuditRecord>,
}

impl BenchOutput {
    pub fn pivot(&self, m: MetricId) -> &ErrorPivot {
        self.pivots
            .iter()
            .find(|p| p.metric_id == m)
            .expect("one pivot per metric")
    }

    pub fn missing_cells(&self) -> usize {
        self.pivots
            .iter()
            .flat_map(|p| p.cells.iter().flatten())
            .filter(|c| c.is_none())
            .count()
    }
}

enum Runner {
    Native(NativeForecaster),
    External(Box<AdapterSession>),
}

impl Runner {
    fn start(model: &ModelEntry) -> Result<Self> {
        Ok(match model {
            ModelEntry::Native(id) => Runner::Native(NativeForecaster(*id)),
            ModelEntry::External { adapter, .. } => Runner::External(Box::new(AdapterSession::start(adapter)?)),
        })
    }

    /// Candidate parameter sets and whether tuning applies. Adapters without
    /// a declared grid run once with no parameters.
    fn candidates(&self, task: &TaskSpec) -> (Vec<Params>, bool) {
        match self {
            Runner::Native(n) => (
                default_grid(n.0, task).assignments.into_iter().map(|a| a.params).collect(),
                true,
            ),
            Runner::External(s) => match s.capabilities.hyper_grid {
                Some(_) => (s.capabilities.expand_grid(), true),
                None => (vec![Params::new()], false),
            },
        }
    }

    fn forecaster(&mut self) -> &mut dyn WindowForecaster {
        match self {
            Runner::Native(n) => n,
            Runner::External(s) => s.as_mut(),
        }
    }
}

fn run_cell(task: &TaskSpec, model: &ModelEntry, config: &BenchConfig) -> (CellOutcome, Vec<AuditRecord>) {
    let name = model.name();
    let mut audit = Audit {
        run_id: &config.run_id,
        task_id: &task.id,
        model: &name,
        records: Vec::new(),
    };
    let outcome = run_cell_inner(task, &name, model, config, &mut audit);
    let outcome = outcome.unwrap_or_else(|err| {
        audit.push(AuditRole::Failure, None, None, MetricMap::new(), Some(&err));
        CellOutcome {
            task_id: task.id.clone(),
            model: name.clone(),
            tune: None,
            eval: None,
            error: Some(format!("{}: {err}", err.kind())),
        }
    });
    (outcome, audit.records)
}

fn run_cell_inner(
    task: &TaskSpec,
    name: &str,
    model: &ModelEntry,
    config: &BenchConfig,
    audit: &mut Audit<'_>,
) -> Result<CellOutcome> {
    let task = validate_task(task.clone())?;
    let plan = plan_windows_shrinking(task.data.len(), task.context_len, task.horizon, config.n_tune, config.n_test)?;
    let mut runner = Runner::start(model)?;
    let (candidates, tunable) = runner.candidates(&task);
    let tune_plan = if tunable {
        plan.clone()
    } else {
        WindowPlan {
            tune_windows: Vec::new(),
            ..plan.clone()
        }
    };
    let tuned = tune_inner(runner.forecaster(), name, &task, &candidates, &tune_plan, Some(&mut *audit))?;
    let eval = evaluate_inner(runner.forecaster(), name, &task, &tuned.chosen, &plan, Some(audit));
    Ok(CellOutcome {
        task_id: task.id.clone(),
        model: name.to_string(),
        tune: Some(tuned),
        eval: Some(eval),
        error: None,
    })
}

/// Tunes and evaluates every (task, model) cell, concurrently, and assembles
/// one pivot per metric. Cells are ordered by task, then model, regardless
/// of scheduling.
pub fn run_benchmark(tasks: &[TaskSpec], models: &[ModelEntry], config: &BenchConfig) -> BenchOutput {
    let pairs: Vec<(usize, usize)> = (0..tasks.len())
        .flat_map(|t| (0..models.len()).map(move |m| (t, m)))
        .collect();
    let results: Vec<(CellOutcome, Vec<AuditRecord>)> = pairs
        .par_iter()
        .map(|&(t, m)| run_cell(&tasks[t], &models[m], config))
        .collect();

    let model_names: Vec<String> = models.iter().map(ModelEntry::name).collect();
    let task_ids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
    let mut cells = Vec::with_capacity(results.len());
    let mut audit = Vec::new();
    for (cell, records) in results {
        cells.push(cell);
        audit.extend(records);
    }
    let pivots = MetricId::ALL
        .into_iter()
        .map(|metric| {
            let grid = (0..models.len())
                .map(|m| {
                    (0..tasks.len())
                        .map(|t| cells[t * models.len() + m].metric(metric))
                        .collect()
                })
                .collect();
            ErrorPivot {
                metric_id: metric,
                models: model_names.clone(),
                tasks: task_ids.clone(),
                cells: grid,
            }
        })
        .collect();
    BenchOutput {
        run_id: config.run_id.clone(),
        models: model_names,
        tasks: task_ids,
        cells,
        pivots,
        audit,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakageViolation {
    pub task_id: String,
    pub model: String,
    pub max_tune_timestamp: usize,
    pub min_test_eval: usize,
}

/// Checks, per (task, model), that every timestamp touched by tuning precedes
/// the first test eval timestamp.
pub fn check_leakage(records: &[AuditRecord]) -> Vec<LeakageViolation> {
    let mut spans: BTreeMap<(&str, &str), (Option<usize>, Option<usize>)> = BTreeMap::new();
    for r in records {
        let Some(w) = r.bounds else { continue };
        let entry = spans.entry((&r.task_id, &r.model)).or_default();
        match r.role {
            AuditRole::Tune => {
                let last = w.eval_end.max(w.context_end) - 1;
                entry.0 = Some(entry.0.map_or(last, |v: usize| v.max(last)));
            }
            AuditRole::Test => {
                entry.1 = Some(entry.1.map_or(w.eval_start, |v: usize| v.min(w.eval_start)));
            }
            AuditRole::Failure => {}
        }
    }
    spans
        .into_iter()
        .filter_map(|((task, model), span)| match span {
            (Some(max_tune), Some(min_test)) if max_tune >= min_test => Some(LeakageViolation {
                task_id: task.to_string(),
                model: model.to_string(),
                max_tune_timestamp: max_tune,
                min_test_eval: min_test,
            }),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::SeriesFrame;
    use crate::window::plan_windows;

    fn periodic_task(n: usize, period: usize, l: usize, h: usize) -> TaskSpec {
        let y = (0..n)
            .map(|t| 10.0 + (2.0 * std::f64::consts::PI * t as f64 / period as f64).sin())
            .collect();
        TaskSpec::new("periodic", l, h, SeriesFrame::univariate(y))
    }

    fn period_grid(periods: &[i64]) -> HyperGrid {
        HyperGrid::new(
            ModelId::SeasonalNaive,
            periods
                .iter()
                .map(|&p| HyperAssignment::new(ModelId::SeasonalNaive, [("L", ParamValue::Int(p))]))
                .collect(),
        )
    }

    #[test]
    fn tune_picks_true_period() {
        let task = periodic_task(300, 12, 48, 12);
        let plan = plan_windows(300, 48, 12, 3, 3).unwrap();
        let result = tune(&task, &period_grid(&[4, 7, 12]), &plan).unwrap();
        assert_eq!(result.chosen["L"], ParamValue::Int(12));
        assert!(result.validation_mae.unwrap() < 1e-9);
        assert_eq!(result.n_windows_used, 3);
    }

    #[test]
    fn ties_go_to_first_assignment() {
        // 12 and 24 both reproduce an integer period-12 pattern exactly.
        let y = (0..300).map(|t| (t % 12) as f64).collect();
        let task = TaskSpec::new("ramp", 48, 12, SeriesFrame::univariate(y));
        let plan = plan_windows(300, 48, 12, 3, 3).unwrap();
        let result = tune(&task, &period_grid(&[24, 12]), &plan).unwrap();
        assert_eq!(result.per_assignment_mae, vec![Some(0.0), Some(0.0)]);
        assert_eq!(result.chosen["L"], ParamValue::Int(12));
    }

    #[test]
    fn failed_assignments_are_recorded_not_fatal() {
        let task = periodic_task(120, 12, 20, 5);
        let plan = plan_windows(120, 20, 5, 2, 2).unwrap();
        let result = tune(&task, &period_grid(&[12, 168]), &plan).unwrap();
        assert_eq!(result.per_assignment_mae.len(), 2);
        assert!(result.per_assignment_mae[1].is_none());
        assert_eq!(result.chosen["L"], ParamValue::Int(12));
    }

    #[test]
    fn all_failed_is_an_error() {
        let task = periodic_task(120, 12, 20, 5);
        let plan = plan_windows(120, 20, 5, 2, 2).unwrap();
        let err = tune(&task, &period_grid(&[52, 168]), &plan).unwrap_err();
        assert!(matches!(err, Error::AllAssignmentsFailed { .. }));
    }

    #[test]
    fn no_tuning_windows_returns_first_flagged() {
        let task = periodic_task(120, 12, 20, 5);
        let plan = plan_windows(120, 20, 5, 0, 2).unwrap();
        let result = tune(&task, &period_grid(&[7, 12]), &plan).unwrap();
        assert!(result.skipped);
        assert_eq!(result.chosen["L"], ParamValue::Int(7));
        assert_eq!(result.validation_mae, None);
    }

    #[test]
    fn evaluate_marks_undefined_metrics_missing() {
        let mut y = vec![1.0; 60];
        y[55] = 0.0;
        let task = TaskSpec::new("zeros", 10, 5, SeriesFrame::univariate(y));
        let plan = plan_windows(60, 10, 5, 0, 2).unwrap();
        let chosen = HyperAssignment::new(ModelId::Drift, Vec::<(&str, ParamValue)>::new());
        let result = evaluate(&task, &chosen, &plan);
        assert_eq!(result.metrics[&MetricId::Mape], None);
        assert!(result.metrics[&MetricId::Mae].is_some());
        assert!(result.per_window[0][&MetricId::Mape].is_some());
    }

    #[test]
    fn benchmark_is_ordered_and_leak_free() {
        let tasks: Vec<TaskSpec> = [7, 12, 24]
            .iter()
            .map(|&p| {
                let mut t = periodic_task(400, p, 60, 12);
                t.id = format!("p{p}");
                t
            })
            .collect();
        let models = [ModelId::SeasonalNaive, ModelId::Ses, ModelId::Theta, ModelId::Drift]
            .map(ModelEntry::Native)
            .to_vec();
        let out = run_benchmark(&tasks, &models, &BenchConfig::default());
        assert_eq!(out.cells.len(), 12);
        assert_eq!(out.cells[5].task_id, "p12");
        assert_eq!(out.cells[5].model, "ses");
        assert_eq!(out.pivots.len(), 5);
        assert!(check_leakage(&out.audit).is_empty());
        assert_eq!(out.missing_cells(), 0);
        let again = run_benchmark(&tasks, &models, &BenchConfig::default());
        assert_eq!(out.pivots, again.pivots);
        assert_eq!(out.audit, again.audit);
    }

    #[test]
    fn short_task_becomes_missing_cell() {
        let tasks = vec![periodic_task(10, 4, 20, 5)];
        let out = run_benchmark(&tasks, &[ModelEntry::Native(ModelId::Drift)], &BenchConfig::default());
        assert!(out.cells[0].error.as_deref().unwrap().starts_with("InsufficientHistory"));
        assert_eq!(out.audit[0].role, AuditRole::Failure);
        assert_eq!(out.missing_cells(), 5);
    }

    #[test]
    fn leakage_checker_flags_overlap() {
        let rec = |role, start, end| AuditRecord {
            run_id: "r".into(),
            task_id: "t".into(),
            model: "m".into(),
            role,
            window: Some(0),
            bounds: Some(Window {
                context_start: 0,
                context_end: start,
                eval_start: start,
                eval_end: end,
            }),
            assignment: None,
            metrics: MetricMap::new(),
            error: None,
        };
        assert!(check_leakage(&[rec(AuditRole::Tune, 10, 15), rec(AuditRole::Test, 15, 20)]).is_empty());
        let v = check_leakage(&[rec(AuditRole::Tune, 10, 16), rec(AuditRole::Test, 15, 20)]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].max_tune_timestamp, 15);
    }
}
