use crate::error::{Error, Result};
use crate::scalar::{anchored_mean, Scalar};

use super::smoothing::ses_level;

/// Ordinary least-squares line over steps `1..=l`; returns `(intercept, slope)`.
pub fn linear_trend<T: Scalar>(series: &[T]) -> Result<(T, T)> {
    let len = series.len();
    if len < 2 {
        return Err(Error::InvalidParams("trend fit needs at least two values".into()));
    }
    let t_mean = T::of_usize(len + 1) / T::lit(2.0);
    let y_mean = anchored_mean(series).expect("non-empty");
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (i, &y) in series.iter().enumerate() {
        let dt = T::of_usize(i + 1) - t_mean;
        sxy = sxy + dt * (y - y_mean);
        sxx = sxx + dt * dt;
    }
    let slope = sxy / sxx;
    Ok((y_mean - slope * t_mean, slope))
}

/// Theta method with coefficient 2: the mean of the extrapolated OLS trend and
/// the SES forecast of `zₜ = 2yₜ − trendₜ`.
pub fn theta<T: Scalar>(series: &[T], horizon: usize, alpha: T) -> Result<Vec<T>> {
    let (a, b) = linear_trend(series)?;
    let two = T::lit(2.0);
    let modified: Vec<T> = series
        .iter()
        .enumerate()
        .map(|(i, &y)| two * y - (a + b * T::of_usize(i + 1)))
        .collect();
    let short_term = ses_level(&modified, alpha)?;
    let len = series.len();
    Ok((1..=horizon)
        .map(|j| {
            let trend = a + b * T::of_usize(len + j);
            (trend + short_term) / two
        })
        .collect())
}
