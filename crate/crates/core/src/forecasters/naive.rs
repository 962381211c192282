use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Seasonal naive: step `j` repeats `y[l + j − L·⌈j/L⌉]` (1-indexed).
pub fn seasonal_naive<T: Scalar>(series: &[T], horizon: usize, period: usize) -> Result<Vec<T>> {
    let len = series.len();
    if period < 1 || period > len {
        return Err(Error::InvalidPeriod { period, len });
    }
    Ok((1..=horizon)
        .map(|j| {
            let back = period * j.div_ceil(period);
            // 1-indexed position l + j − back, always in [l − L + 1, l]
            series[len + j - back - 1]
        })
        .collect())
}

/// Straight line through the first and last context values.
pub fn drift<T: Scalar>(series: &[T], horizon: usize) -> Result<Vec<T>> {
    let len = series.len();
    if len < 2 {
        return Err(Error::InvalidParams("drift needs at least two context values".into()));
    }
    let last = series[len - 1];
    let slope = (last - series[0]) / T::of_usize(len - 1);
    Ok((1..=horizon).map(|j| last + T::of_usize(j) * slope).collect())
}
