//! Exponential-smoothing family: SES, Croston and Holt-Winters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_unit<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Final SES level, `ℓₜ = ℓₜ₋₁ + α(yₜ − ℓₜ₋₁)` with `ℓ₁ = y₁`.
pub fn ses_level<T: Scalar>(series: &[T], alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let (&first, rest) = series
        .split_first()
        .ok_or_else(|| Error::InvalidParams("empty context".into()))?;
    Ok(rest.iter().fold(first, |level, &y| level + alpha * (y - level)))
}

pub fn ses<T: Scalar>(series: &[T], horizon: usize, alpha: T) -> Result<Vec<T>> {
    Ok(vec![ses_level(series, alpha)?; horizon])
}

/// Croston's intermittent-demand method.
///
/// Size and interval estimates start from the first non-zero demand and its
/// 1-indexed position; both are smoothed at every later non-zero demand. An
/// all-zero context forecasts zero.
pub fn croston<T: Scalar>(series: &[T], horizon: usize, alpha: T) -> Result<Vec<T>> {
    check_alpha(alpha)?;
    if series.iter().any(|&y| y < T::zero()) {
        return Err(Error::InvalidParams("croston requires non-negative demand".into()));
    }
    let mut demands = series.iter().enumerate().filter(|(_, y)| !y.is_zero());
    let Some((first_at, &first)) = demands.next() else {
        return Ok(vec![T::zero(); horizon]);
    };
    let mut size = first;
    let mut interval = T::of_usize(first_at + 1);
    let mut last_at = first_at;
    for (t, &y) in demands {
        let q = T::of_usize(t - last_at);
        size = size + alpha * (y - size);
        interval = interval + alpha * (q - interval);
        last_at = t;
    }
    Ok(vec![size / interval; horizon])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seasonality {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoltWintersParams<T> {
    pub seasonality: Seasonality,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub period: usize,
}

/// Holt-Winters with level, trend and seasonal recursions.
///
/// Start-up uses the first two seasons: level is the first-season mean, trend
/// the difference of the two season means divided by the period, and the
/// seasonal indices are the first-season deviations (additive) or ratios
/// (multiplicative) from that level. Recursions run from step `L + 1`.
pub fn holt_winters<T: Scalar>(series: &[T], horizon: usize, params: &HoltWintersParams<T>) -> Result<Vec<T>> {
    let HoltWintersParams {
        seasonality,
        alpha,
        beta,
        gamma,
        period,
    } = *params;
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    check_unit("gamma", gamma)?;
    let len = series.len();
    if period < 2 || 2 * period > len {
        return Err(Error::InvalidPeriod { period, len });
    }
    let mult = seasonality == Seasonality::Multiplicative;
    if mult && series.iter().any(|&y| y <= T::zero()) {
        return Err(Error::NonPositiveData);
    }

    let lp = T::of_usize(period);
    let first = crate::scalar::anchored_mean(&series[..period]).expect("period ≥ 2");
    let second = crate::scalar::anchored_mean(&series[period..2 * period]).expect("period ≥ 2");
    let mut level = first;
    let mut trend = (second - first) / lp;
    // season[t] holds the seasonal index for 0-indexed step t.
    let mut season: Vec<T> = series[..period]
        .iter()
        .map(|&y| if mult { y / level } else { y - level })
        .collect();
    season.reserve(len - period);

    for t in period..len {
        let y = series[t];
        let back = season[t - period];
        let prev_level = level;
        let deseasoned = if mult { y / back } else { y - back };
        level = alpha * deseasoned + (T::one() - alpha) * (prev_level + trend);
        trend = beta * (level - prev_level) + (T::one() - beta) * trend;
        let fresh = if mult { y / level } else { y - level };
        season.push(gamma * fresh + (T::one() - gamma) * back);
    }

    let out: Vec<T> = (1..=horizon)
        .map(|j| {
            let s = season[len - period + (j - 1) % period];
            let base = level + T::of_usize(j) * trend;
            if mult {
                base * s
            } else {
                base + s
            }
        })
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(out)
}
