//! Point-forecast error metrics.
//!
//! Every metric takes the forecast, the realized values and the context that
//! preceded them (`n × h`, `n × h`, `n × l`). Only MASE reads the context.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::task::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "MAE")]
    Mae,
    #[serde(rename = "MSE")]
    Mse,
    #[serde(rename = "RMSE")]
    Rmse,
    #[serde(rename = "MAPE")]
    Mape,
    #[serde(rename = "MASE")]
    Mase,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Mae,
        MetricId::Mse,
        MetricId::Rmse,
        MetricId::Mape,
        MetricId::Mase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Mae => "MAE",
            MetricId::Mse => "MSE",
            MetricId::Rmse => "RMSE",
            MetricId::Mape => "MAPE",
            MetricId::Mase => "MASE",
        }
    }

    pub fn compute<T: Scalar>(self, forecast: &Matrix<T>, actual: &Matrix<T>, context: &Matrix<T>) -> Result<T> {
        match self {
            MetricId::Mae => mae(forecast, actual, context),
            MetricId::Mse => mse(forecast, actual, context),
            MetricId::Rmse => rmse(forecast, actual, context),
            MetricId::Mape => mape(forecast, actual, context),
            MetricId::Mase => mase(forecast, actual, context),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown metric '{s}'")))
    }
}

/// A metric evaluated on one forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue<T> {
    pub metric_id: MetricId,
    pub value: T,
}

fn check_shapes<T: Copy>(forecast: &Matrix<T>, actual: &Matrix<T>) -> Result<()> {
    if forecast.shape() != actual.shape() {
        return Err(Error::ShapeMismatch {
            expected: actual.shape(),
            found: forecast.shape(),
        });
    }
    Ok(())
}

fn mean_of<T: Scalar>(
    forecast: &Matrix<T>,
    actual: &Matrix<T>,
    term: impl Fn(usize, T, T) -> T,
) -> Result<T> {
    check_shapes(forecast, actual)?;
    let n = forecast.as_slice().len();
    if n == 0 {
        return Err(Error::ShapeMismatch {
            expected: (1, 1),
            found: forecast.shape(),
        });
    }
    let cols = forecast.cols();
    let sum: T = forecast
        .as_slice()
        .iter()
        .zip(actual.as_slice())
        .enumerate()
        .map(|(k, (&f, &y))| term(k / cols, f, y))
        .sum();
    Ok(sum / T::of_usize(n))
}

pub fn mae<T: Scalar>(forecast: &Matrix<T>, actual: &Matrix<T>, _context: &Matrix<T>) -> Result<T> {
    mean_of(forecast, actual, |_, f, y| (f - y).abs())
}

pub fn mse<T: Scalar>(forecast: &Matrix<T>, actual: &Matrix<T>, _context: &Matrix<T>) -> Result<T> {
    mean_of(forecast, actual, |_, f, y| (f - y) * (f - y))
}

pub fn rmse<T: Scalar>(forecast: &Matrix<T>, actual: &Matrix<T>, context: &Matrix<T>) -> Result<T> {
    mse(forecast, actual, context).map(Float::sqrt)
}

/// Percentage error; undefined when any realized value is zero.
pub fn mape<T: Scalar>(forecast: &Matrix<T>, actual: &Matrix<T>, _context: &Matrix<T>) -> Result<T> {
    check_shapes(forecast, actual)?;
    if actual.as_slice().iter().any(|y| y.is_zero()) {
        return Err(Error::undefined("MAPE", "realized value equal to zero"));
    }
    let pct = mean_of(forecast, actual, |_, f, y| (f - y).abs() / y.abs())?;
    Ok(T::lit(100.0) * pct)
}

/// Error scaled per variate by the mean absolute first difference of its
/// context, `Dᵢ = Σ|yₜ₊₁ − yₜ| / (l − 1)`.
pub fn mase<T: Scalar>(forecast: &Matrix<T>, actual: &Matrix<T>, context: &Matrix<T>) -> Result<T> {
    check_shapes(forecast, actual)?;
    if context.rows() != forecast.rows() {
        return Err(Error::ShapeMismatch {
            expected: (forecast.rows(), context.cols()),
            found: context.shape(),
        });
    }
    if context.cols() < 2 {
        return Err(Error::undefined("MASE", "context shorter than two steps"));
    }
    let scales = context
        .iter_rows()
        .map(|row| {
            let diffs: T = row.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            diffs / T::of_usize(row.len() - 1)
        })
        .collect::<Vec<T>>();
    if scales.iter().any(|d| d.is_zero()) {
        return Err(Error::undefined("MASE", "constant context"));
    }
    mean_of(forecast, actual, |i, f, y| (f - y).abs() / scales[i])
}
