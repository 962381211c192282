//! Forecasting-task model: series frames, task specifications and forecast
//! matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix. Rows are variates, columns are time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (data.len() / cols.max(1), cols),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: (rows.len(), cols),
                    found: (rows.len(), r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row_vector(values: Vec<T>) -> Self {
        Matrix {
            rows: 1,
            cols: values.len(),
            data: values,
        }
    }

    pub fn empty(cols: usize) -> Self {
        Matrix {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Column range `[start, end)` of every row.
    pub fn slice_cols(&self, start: usize, end: usize) -> Matrix<T> {
        assert!(start <= end && end <= self.cols, "column range out of bounds");
        let mut data = Vec::with_capacity(self.rows * (end - start));
        for r in self.iter_rows() {
            data.extend_from_slice(&r[start..end]);
        }
        Matrix {
            rows: self.rows,
            cols: end - start,
            data,
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.iter_rows().map(<[T]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Continuous,
    Count,
    Categorical,
    Binary,
}

impl ValueKind {
    fn admits<T: Scalar>(self, v: T) -> bool {
        match self {
            ValueKind::Continuous => true,
            ValueKind::Count => v >= T::zero() && v.fract() == T::zero(),
            ValueKind::Categorical => v.fract() == T::zero(),
            ValueKind::Binary => v == T::zero() || v == T::one(),
        }
    }
}

/// Target and covariate series sharing one time axis.
///
/// Time is indexed by integer step; `timestamps` holds the step labels (or
/// epoch seconds for parsed instants) and `labels` the original text, when any.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame<T> {
    pub timestamps: Vec<i64>,
    pub labels: Option<Vec<String>>,
    pub targets: Matrix<T>,
    pub covariates: Matrix<T>,
}

impl<T: Scalar> SeriesFrame<T> {
    /// Frame indexed `0..T` with no covariates.
    pub fn from_targets(targets: Matrix<T>) -> Self {
        let len = targets.cols();
        SeriesFrame {
            timestamps: (0..len as i64).collect(),
            labels: None,
            covariates: Matrix::empty(len),
            targets,
        }
    }

    pub fn univariate(values: Vec<T>) -> Self {
        Self::from_targets(Matrix::row_vector(values))
    }

    pub fn len(&self) -> usize {
        self.targets.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.len();
        if self.timestamps.len() != len {
            return Err(Error::Schema(format!(
                "timestamps: {} entries for {} columns",
                self.timestamps.len(),
                len
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != len {
                return Err(Error::Schema("timestamps: label count mismatch".into()));
            }
        }
        if let Some(i) = self.timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Schema(format!(
                "timestamps: not strictly increasing at index {}",
                i + 1
            )));
        }
        if self.covariates.cols() != len {
            return Err(Error::Schema(format!(
                "covariates: {} columns, expected {}",
                self.covariates.cols(),
                len
            )));
        }
        if self.targets.as_slice().iter().any(|v| v.is_nan()) {
            return Err(Error::Schema("targets: NaN value".into()));
        }
        Ok(())
    }
}

/// A forecasting task: context length, horizon, target schema and data.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec<T> {
    pub id: String,
    pub context_len: usize,
    pub horizon: usize,
    pub n_targets: usize,
    pub n_covariates: usize,
    pub value_kinds: Vec<ValueKind>,
    pub frequency_label: String,
    pub data: SeriesFrame<T>,
}

impl<T: Scalar> TaskSpec<T> {
    /// Continuous-valued task over `data`, with `n_targets`/`n_covariates`
    /// taken from the frame.
    pub fn new(id: impl Into<String>, context_len: usize, horizon: usize, data: SeriesFrame<T>) -> Self {
        TaskSpec {
            id: id.into(),
            context_len,
            horizon,
            n_targets: data.targets.rows(),
            n_covariates: data.covariates.rows(),
            value_kinds: vec![ValueKind::Continuous; data.targets.rows()],
            frequency_label: String::new(),
            data,
        }
    }

    pub fn is_univariate(&self) -> bool {
        self.n_targets == 1
    }

    pub fn is_unconditional(&self) -> bool {
        self.n_covariates == 0
    }
}

/// Checks every task invariant and returns the task unchanged.
///
/// The error names the first violated invariant.
pub fn validate_task<T: Scalar>(spec: TaskSpec<T>) -> Result<TaskSpec<T>> {
    if spec.context_len < 1 {
        return Err(Error::Schema("context_len: must be at least 1".into()));
    }
    if spec.horizon < 1 {
        return Err(Error::Schema("horizon: must be at least 1".into()));
    }
    if spec.n_targets < 1 {
        return Err(Error::Schema("n_targets: must be at least 1".into()));
    }
    if spec.data.targets.rows() != spec.n_targets {
        return Err(Error::Schema(format!(
            "n_targets: declared {}, data has {}",
            spec.n_targets,
            spec.data.targets.rows()
        )));
    }
    if spec.data.covariates.rows() != spec.n_covariates {
        return Err(Error::Schema(format!(
            "n_covariates: declared {}, data has {}",
            spec.n_covariates,
            spec.data.covariates.rows()
        )));
    }
    if spec.value_kinds.len() != spec.n_targets {
        return Err(Error::Schema(format!(
            "value_kind: {} kinds for {} targets",
            spec.value_kinds.len(),
            spec.n_targets
        )));
    }
    spec.data.validate()?;
    for (i, (kind, row)) in spec.value_kinds.iter().zip(spec.data.targets.iter_rows()).enumerate() {
        if let Some(t) = row.iter().position(|&v| !kind.admits(v)) {
            return Err(Error::Schema(format!(
                "value_kind: target {i} is {kind:?} but holds {} at step {t}",
                row[t]
            )));
        }
    }
    Ok(spec)
}

/// Point forecast: one row per target, one column per horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMatrix<T>(Matrix<T>);

impl<T: Scalar> ForecastMatrix<T> {
    /// Wraps `values`, rejecting non-finite entries.
    pub fn new(values: Matrix<T>) -> Result<Self> {
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ForecastMatrix(values))
    }

    /// Wraps `values` after checking they answer a `(n_targets, horizon)` task.
    pub fn for_task(values: Matrix<T>, n_targets: usize, horizon: usize) -> Result<Self> {
        if values.shape() != (n_targets, horizon) {
            return Err(Error::ShapeMismatch {
                expected: (n_targets, horizon),
                found: values.shape(),
            });
        }
        Self::new(values)
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix<T> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.0.row(i)
    }
}
