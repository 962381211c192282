//! Forecasting-model evaluation harness.
//!
//! The numeric core ([`task`], [`metrics`], [`forecasters`]) is generic over the
//! scalar type through [`Scalar`]; the benchmark pipeline, aggregation and file
//! formats work in `f64`. The aliases below name the concrete `f64` types used
//! throughout the pipeline.

pub mod aggregate;
pub mod cli;
pub mod error;
pub mod forecasters;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod protocol;
pub mod scalar;
pub mod synth;
pub mod task;
pub mod window;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use task::{Matrix, ValueKind};
pub use window::{plan_windows, Window, WindowPlan};

/// `f64` forecast matrix.
pub type Forecast = task::ForecastMatrix<f64>;
/// `f32` forecast matrix.
pub type Forecast32 = task::ForecastMatrix<f32>;
/// `f64` series frame.
pub type SeriesFrame = task::SeriesFrame<f64>;
/// `f64` task specification.
pub type TaskSpec = task::TaskSpec<f64>;
/// `f64` matrix.
pub type Matrix64 = task::Matrix<f64>;
