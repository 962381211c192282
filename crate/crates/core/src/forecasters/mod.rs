//! Native classical forecasters and their hyperparameter grids.
//!
//! Multivariate contexts are forecast channel by channel with shared
//! parameters. Covariates are never consulted.

pub mod arima;
pub mod grid;
mod linalg;
pub mod naive;
mod simplex;
pub mod smoothing;
pub mod theta;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::task::{ForecastMatrix, Matrix};

pub use arima::ArimaOrder;
pub use grid::{default_grid, holt_winters_grid, HyperGrid};
pub use smoothing::{HoltWintersParams, Seasonality};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    SeasonalNaive,
    Croston,
    Ses,
    HoltWintersAdd,
    HoltWintersMul,
    Theta,
    Arima,
    Drift,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::SeasonalNaive,
        ModelId::Croston,
        ModelId::Ses,
        ModelId::HoltWintersAdd,
        ModelId::HoltWintersMul,
        ModelId::Theta,
        ModelId::Arima,
        ModelId::Drift,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::SeasonalNaive => "seasonal_naive",
            ModelId::Croston => "croston",
            ModelId::Ses => "ses",
            ModelId::HoltWintersAdd => "holt_winters_add",
            ModelId::HoltWintersMul => "holt_winters_mul",
            ModelId::Theta => "theta",
            ModelId::Arima => "arima",
            ModelId::Drift => "drift",
        }
    }

    /// Parameter names an assignment for this model must carry.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelId::SeasonalNaive => &["L"],
            ModelId::Croston | ModelId::Ses => &["alpha"],
            ModelId::HoltWintersAdd | ModelId::HoltWintersMul => &["L", "alpha", "beta", "gamma"],
            ModelId::Theta => &["alpha", "theta_coef"],
            ModelId::Arima => &["d", "p", "q", "with_constant"],
            ModelId::Drift => &[],
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// A single hyperparameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
}

impl ParamValue {
    fn rank(&self) -> u8 {
        match self {
            ParamValue::Bool(_) => 0,
            ParamValue::Int(_) => 1,
            ParamValue::Real(_) => 2,
        }
    }

    /// Total order: by kind, then by value.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (ParamValue::Bool(a), ParamValue::Bool(b)) => a.cmp(b),
            (ParamValue::Int(a), ParamValue::Int(b)) => a.cmp(b),
            (ParamValue::Real(a), ParamValue::Real(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(v) => Some(v as f64),
            ParamValue::Real(v) => Some(v),
            ParamValue::Bool(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(v) => write!(f, "{v}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
        }
    }
}

/// One point of a model's hyperparameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperAssignment {
    pub model_id: ModelId,
    pub params: BTreeMap<String, ParamValue>,
}

impl HyperAssignment {
    pub fn new<'a>(model_id: ModelId, params: impl IntoIterator<Item = (&'a str, ParamValue)>) -> Self {
        HyperAssignment {
            model_id,
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    fn get(&self, name: &str) -> Result<&ParamValue> {
        self.params
            .get(name)
            .ok_or_else(|| Error::InvalidParams(format!("{} requires parameter '{name}'", self.model_id)))
    }

    pub fn get_usize(&self, name: &str) -> Result<usize> {
        match *self.get(name)? {
            ParamValue::Int(v) if v >= 0 => Ok(v as usize),
            other => Err(Error::InvalidParams(format!(
                "'{name}' must be a non-negative integer, got {other}"
            ))),
        }
    }

    pub fn get_real(&self, name: &str) -> Result<f64> {
        self.get(name)?
            .as_f64()
            .ok_or_else(|| Error::InvalidParams(format!("'{name}' must be numeric")))
    }

    pub fn get_bool(&self, name: &str) -> Result<bool> {
        match *self.get(name)? {
            ParamValue::Bool(v) => Ok(v),
            other => Err(Error::InvalidParams(format!("'{name}' must be a boolean, got {other}"))),
        }
    }

    /// Checks that exactly the required names are present.
    pub fn validate(&self) -> Result<()> {
        let required = self.model_id.param_names();
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        if names != required {
            return Err(Error::InvalidParams(format!(
                "{} expects parameters {required:?}, got {names:?}",
                self.model_id
            )));
        }
        if self.model_id == ModelId::Theta && self.get_real("theta_coef")? != 2.0 {
            return Err(Error::InvalidParams("theta_coef is fixed at 2".into()));
        }
        Ok(())
    }

    /// Compact `name=value` rendering, in parameter-name order.
    pub fn label(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub(crate) fn cmp_values(&self, other: &Self) -> std::cmp::Ordering {
        self.params
            .iter()
            .zip(&other.params)
            .map(|((ka, va), (kb, vb))| ka.cmp(kb).then_with(|| va.total_cmp(vb)))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.params.len().cmp(&other.params.len()))
    }
}

fn per_channel<T: Scalar>(
    context: &Matrix<T>,
    horizon: usize,
    f: impl Fn(&[T]) -> Result<Vec<T>>,
) -> Result<ForecastMatrix<T>> {
    let rows = context.iter_rows().map(&f).collect::<Result<Vec<_>>>()?;
    let values = if rows.is_empty() {
        Matrix::empty(horizon)
    } else {
        Matrix::from_rows(&rows)?
    };
    ForecastMatrix::for_task(values, context.rows(), horizon)
}

pub fn seasonal_naive_forecast<T: Scalar>(context: &Matrix<T>, horizon: usize, period: usize) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| naive::seasonal_naive(y, horizon, period))
}

pub fn croston_forecast<T: Scalar>(context: &Matrix<T>, horizon: usize, alpha: T) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| smoothing::croston(y, horizon, alpha))
}

pub fn ses_forecast<T: Scalar>(context: &Matrix<T>, horizon: usize, alpha: T) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| smoothing::ses(y, horizon, alpha))
}

pub fn holt_winters_forecast<T: Scalar>(
    context: &Matrix<T>,
    horizon: usize,
    params: &HoltWintersParams<T>,
) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| smoothing::holt_winters(y, horizon, params))
}

pub fn theta_forecast<T: Scalar>(context: &Matrix<T>, horizon: usize, alpha: T) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| theta::theta(y, horizon, alpha))
}

pub fn arima_fit_forecast<T: Scalar>(context: &Matrix<T>, horizon: usize, order: &ArimaOrder) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| arima::arima(y, horizon, order))
}

pub fn drift_forecast<T: Scalar>(context: &Matrix<T>, horizon: usize) -> Result<ForecastMatrix<T>> {
    per_channel(context, horizon, |y| naive::drift(y, horizon))
}

/// Fits the model named by `assignment` on `context` and forecasts `horizon`
/// steps.
pub fn fit_forecast<T: Scalar>(
    context: &Matrix<T>,
    horizon: usize,
    assignment: &HyperAssignment,
) -> Result<ForecastMatrix<T>> {
    assignment.validate()?;
    let real = |name: &str| assignment.get_real(name).map(T::lit);
    match assignment.model_id {
        ModelId::SeasonalNaive => seasonal_naive_forecast(context, horizon, assignment.get_usize("L")?),
        ModelId::Croston => croston_forecast(context, horizon, real("alpha")?),
        ModelId::Ses => ses_forecast(context, horizon, real("alpha")?),
        ModelId::Theta => theta_forecast(context, horizon, real("alpha")?),
        ModelId::Drift => drift_forecast(context, horizon),
        ModelId::HoltWintersAdd | ModelId::HoltWintersMul => {
            let seasonality = if assignment.model_id == ModelId::HoltWintersAdd {
                Seasonality::Additive
            } else {
                Seasonality::Multiplicative
            };
            let params = HoltWintersParams {
                seasonality,
                alpha: real("alpha")?,
                beta: real("beta")?,
                gamma: real("gamma")?,
                period: assignment.get_usize("L")?,
            };
            holt_winters_forecast(context, horizon, &params)
        }
        ModelId::Arima => {
            let order = ArimaOrder {
                p: assignment.get_usize("p")?,
                d: assignment.get_usize("d")?,
                q: assignment.get_usize("q")?,
                with_constant: assignment.get_bool("with_constant")?,
            };
            arima_fit_forecast(context, horizon, &order)
        }
    }
}
