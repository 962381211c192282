//! ARIMA(p, d, q) with orders p, q ≤ 2 and d ≤ 1.
//!
//! Pure AR models are estimated by OLS on the lagged regression. Models with
//! an MA part minimize the conditional sum of squares (pre-sample shocks set
//! to zero) with a box-constrained simplex search. Forecasts set future shocks
//! to zero and undo the differencing.

use crate::error::{Error, Result};
use crate::scalar::{anchored_mean, Scalar};

use super::linalg::least_squares;
use super::simplex::{minimize, SimplexOptions};

pub const COEF_BOUND: f64 = 0.99;
pub const MAX_ITER: usize = 500;
pub const OBJECTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub with_constant: bool,
}

/// Fitted ARMA part on the differenced series.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaFit<T> {
    pub constant: T,
    pub ar: Vec<T>,
    pub ma: Vec<T>,
    /// In-sample shocks, aligned with the differenced series.
    pub residuals: Vec<T>,
}

impl<T: Scalar> ArmaFit<T> {
    /// Recursive forecast of the (differenced) series `w`.
    pub fn forecast(&self, w: &[T], horizon: usize) -> Vec<T> {
        let n = w.len();
        let mut ext = w.to_vec();
        let mut shocks = self.residuals.clone();
        shocks.resize(n, T::zero());
        for _ in 0..horizon {
            let t = ext.len();
            let mut v = self.constant;
            for (i, &phi) in self.ar.iter().enumerate() {
                if t > i {
                    v = v + phi * ext[t - 1 - i];
                }
            }
            for (j, &theta) in self.ma.iter().enumerate() {
                if t > j {
                    v = v + theta * shocks[t - 1 - j];
                }
            }
            ext.push(v);
            shocks.push(T::zero());
        }
        ext.split_off(n)
    }
}

fn check_order(order: &ArimaOrder, len: usize) -> Result<()> {
    if order.p > 2 || order.q > 2 || order.d > 1 {
        return Err(Error::InvalidParams(format!(
            "orders must satisfy p, q ≤ 2 and d ≤ 1, got ({}, {}, {})",
            order.p, order.d, order.q
        )));
    }
    if len < order.d || len - order.d <= order.p + order.q + 1 {
        return Err(Error::InvalidParams(format!(
            "context of {len} values too short for ARIMA({}, {}, {})",
            order.p, order.d, order.q
        )));
    }
    Ok(())
}

fn css_residuals<T: Scalar>(w: &[T], p: usize, constant: T, ar: &[T], ma: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); w.len()];
    for t in p..w.len() {
        let mut pred = constant;
        for (i, &phi) in ar.iter().enumerate() {
            pred = pred + phi * w[t - 1 - i];
        }
        for (j, &theta) in ma.iter().enumerate() {
            if t > j {
                pred = pred + theta * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

/// OLS regression of `w[t]` on an optional intercept and `p` lags.
///
/// On a constant `w` the regressors are collinear; the fit returned is the
/// exact one with zero lags (or a unit first lag when there is no intercept).
pub fn fit_ar_ols<T: Scalar>(w: &[T], p: usize, with_constant: bool) -> Result<ArmaFit<T>> {
    if p == 0 {
        let constant = if with_constant {
            anchored_mean(w).ok_or(Error::SingularFit)?
        } else {
            T::zero()
        };
        let residuals = w.iter().map(|&v| v - constant).collect();
        return Ok(ArmaFit {
            constant,
            ar: Vec::new(),
            ma: Vec::new(),
            residuals,
        });
    }
    if let Some(&first) = w.first().filter(|_| w.iter().all(|&v| v == w[0])) {
        let mut ar = vec![T::zero(); p];
        let constant = if with_constant {
            first
        } else {
            if first != T::zero() {
                ar[0] = T::one();
            }
            T::zero()
        };
        let residuals = css_residuals(w, p, constant, &ar, &[]);
        return Ok(ArmaFit {
            constant,
            ar,
            ma: Vec::new(),
            residuals,
        });
    }
    let design: Vec<Vec<T>> = (p..w.len())
        .map(|t| {
            let mut row = Vec::with_capacity(p + 1);
            if with_constant {
                row.push(T::one());
            }
            row.extend((1..=p).map(|i| w[t - i]));
            row
        })
        .collect();
    let beta = least_squares(&design, &w[p..])?;
    let (constant, ar) = if with_constant {
        (beta[0], beta[1..].to_vec())
    } else {
        (T::zero(), beta)
    };
    let residuals = css_residuals(w, p, constant, &ar, &[]);
    Ok(ArmaFit {
        constant,
        ar,
        ma: Vec::new(),
        residuals,
    })
}

/// Conditional-sum-of-squares ARMA fit.
pub fn fit_arma_css<T: Scalar>(w: &[T], p: usize, q: usize, with_constant: bool) -> Result<ArmaFit<T>> {
    if q == 0 {
        return fit_ar_ols(w, p, with_constant);
    }
    let bound = T::lit(COEF_BOUND);
    let start_ar = match fit_ar_ols(w, p, with_constant) {
        Ok(fit) => fit.ar.into_iter().map(|v| v.max(-bound).min(bound)).collect(),
        Err(_) => vec![T::zero(); p],
    };
    let mean = anchored_mean(w).unwrap_or_else(T::zero);
    let ar_sum: T = start_ar.iter().copied().sum();

    let offset = usize::from(with_constant);
    let dim = offset + p + q;
    let mut start = Vec::with_capacity(dim);
    let mut steps = Vec::with_capacity(dim);
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    if with_constant {
        let spread = w.iter().map(|&v| (v - mean).abs()).fold(T::zero(), T::max);
        start.push(mean * (T::one() - ar_sum));
        steps.push(T::lit(0.1) * spread.max(mean.abs()).max(T::lit(1e-3)));
        lower.push(T::neg_infinity());
        upper.push(T::infinity());
    }
    start.extend(start_ar);
    start.extend(std::iter::repeat(T::zero()).take(q));
    steps.extend(std::iter::repeat(T::lit(0.1)).take(p + q));
    lower.extend(std::iter::repeat(-bound).take(p + q));
    upper.extend(std::iter::repeat(bound).take(p + q));

    let split = |x: &[T]| -> (T, Vec<T>, Vec<T>) {
        let c = if with_constant { x[0] } else { T::zero() };
        (c, x[offset..offset + p].to_vec(), x[offset + p..].to_vec())
    };
    let count = T::of_usize(w.len() - p);
    let objective = |x: &[T]| {
        let (c, ar, ma) = split(x);
        let e = css_residuals(w, p, c, &ar, &ma);
        e[p..].iter().map(|&v| v * v).sum::<T>() / count
    };
    let opts = SimplexOptions {
        max_iter: MAX_ITER,
        tol: T::lit(OBJECTIVE_TOL),
        lower,
        upper,
    };
    let best = minimize(objective, &start, &steps, &opts)?;
    let (constant, ar, ma) = split(&best.x);
    let residuals = css_residuals(w, p, constant, &ar, &ma);
    Ok(ArmaFit {
        constant,
        ar,
        ma,
        residuals,
    })
}

/// Fits ARIMA on `series` and forecasts `horizon` steps.
pub fn arima<T: Scalar>(series: &[T], horizon: usize, order: &ArimaOrder) -> Result<Vec<T>> {
    check_order(order, series.len())?;
    let w: Vec<T> = if order.d == 1 {
        series.windows(2).map(|s| s[1] - s[0]).collect()
    } else {
        series.to_vec()
    };
    let fit = fit_arma_css(&w, order.p, order.q, order.with_constant)?;
    let mut out = fit.forecast(&w, horizon);
    if order.d == 1 {
        let mut level = *series.last().expect("checked length");
        for v in &mut out {
            level = level + *v;
            *v = level;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(out)
}
