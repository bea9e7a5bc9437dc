//! Scalar abstraction for the numeric parts of the crate.
//!
//! Metrics and path scoring are written once against [`Scalar`] and used at
//! `f64` by the rest of the engine; `f32` works for callers that want it.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or stored value into this scalar.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Scalar")
    }

    /// Converts a count into this scalar.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; `None` for an empty input.
pub fn mean<F: Scalar>(values: impl IntoIterator<Item = F>) -> Option<F> {
    let mut n = 0usize;
    let mut total = F::zero();
    for v in values {
        total = total + v;
        n += 1;
    }
    (n > 0).then(|| total / F::count(n))
}
