use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar accepted by the metrics and the native forecasters.
///
/// Blanket-implemented for every `Float` that can be built from primitives,
/// so `f32` and `f64` both qualify.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parameter value.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Conversion from a count or index.
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Arithmetic mean anchored at the first element.
///
/// `x₀ + Σ(xᵢ − x₀)/n` is exact for constant input, which the plain `Σxᵢ/n`
/// is not. Returns `None` on empty input.
pub fn anchored_mean<T: Scalar>(xs: &[T]) -> Option<T> {
    let first = *xs.first()?;
    let dev: T = xs.iter().map(|&x| x - first).sum();
    Some(first + dev / T::of_usize(xs.len()))
}
