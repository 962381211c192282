//! Nelder-Mead downhill simplex over a box-constrained parameter vector.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) struct SimplexOptions<T> {
    pub max_iter: usize,
    /// Converged once `f_max − f_min ≤ tol · (1 + |f_min|)` across the simplex.
    pub tol: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

pub(crate) struct SimplexResult<T> {
    pub x: Vec<T>,
    #[allow(dead_code)]
    pub value: T,
}

fn project<T: Scalar>(x: &mut [T], lo: &[T], hi: &[T]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.max(l).min(h);
    }
}

/// Minimizes `f` from `start`, with initial edge lengths `steps`. Trial points
/// are projected onto the box before evaluation.
pub(crate) fn minimize<T: Scalar>(
    f: impl Fn(&[T]) -> T,
    start: &[T],
    steps: &[T],
    opts: &SimplexOptions<T>,
) -> Result<SimplexResult<T>> {
    let n = start.len();
    let eval = |x: &[T]| {
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    let mut x0 = start.to_vec();
    project(&mut x0, &opts.lower, &opts.upper);
    let mut pts = vec![x0.clone()];
    for i in 0..n {
        let mut p = x0.clone();
        p[i] = p[i] + steps[i];
        if p[i] > opts.upper[i] {
            p[i] = x0[i] - steps[i];
        }
        project(&mut p, &opts.lower, &opts.upper);
        pts.push(p);
    }
    let mut vals: Vec<T> = pts.iter().map(|p| eval(p)).collect();

    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    for _ in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("no NaN"));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let (best, worst) = (vals[0], vals[n]);
        if worst - best <= opts.tol * (T::one() + best.abs()) {
            return Ok(SimplexResult {
                x: pts.swap_remove(0),
                value: best,
            });
        }

        let centroid: Vec<T> = (0..n)
            .map(|d| pts[..n].iter().map(|p| p[d]).sum::<T>() / T::of_usize(n))
            .collect();
        let along = |coef: T| -> Vec<T> {
            let mut p: Vec<T> = (0..n)
                .map(|d| centroid[d] + coef * (pts[n][d] - centroid[d]))
                .collect();
            project(&mut p, &opts.lower, &opts.upper);
            p
        };

        let reflected = along(-alpha);
        let fr = eval(&reflected);
        if fr < vals[0] {
            let expanded = along(-gamma);
            let fe = eval(&expanded);
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
        } else {
            let contracted = if fr < vals[n] { along(-rho) } else { along(rho) };
            let fc = eval(&contracted);
            if fc < fr.min(vals[n]) {
                pts[n] = contracted;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<T> = (0..n)
                        .map(|d| pts[0][d] + sigma * (pts[i][d] - pts[0][d]))
                        .collect();
                    vals[i] = eval(&shrunk);
                    pts[i] = shrunk;
                }
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
    })
}
