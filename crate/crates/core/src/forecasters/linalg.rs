use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves the least-squares problem `min ‖Xβ − y‖` through the normal
/// equations. `rows` are the rows of `X`.
pub(crate) fn least_squares<T: Scalar>(rows: &[Vec<T>], y: &[T]) -> Result<Vec<T>> {
    let k = rows.first().map_or(0, Vec::len);
    if k == 0 {
        return Ok(Vec::new());
    }
    if rows.len() < k {
        return Err(Error::SingularFit);
    }
    let mut gram = vec![vec![T::zero(); k]; k];
    let mut rhs = vec![T::zero(); k];
    for (x, &target) in rows.iter().zip(y) {
        for i in 0..k {
            rhs[i] = rhs[i] + x[i] * target;
            for j in 0..k {
                gram[i][j] = gram[i][j] + x[i] * x[j];
            }
        }
    }
    solve(gram, rhs)
}

/// Gaussian elimination with partial pivoting. A pivot below `1e-10` of the
/// largest diagonal entry counts as rank deficiency.
pub(crate) fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(T::zero(), T::max);
    if scale.is_zero() || !scale.is_finite() {
        return Err(Error::SingularFit);
    }
    let tol = scale * T::lit(1e-10);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))
            .expect("non-empty range");
        if a[pivot][col].abs() <= tol {
            return Err(Error::SingularFit);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let tail: T = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    Ok(x)
}
