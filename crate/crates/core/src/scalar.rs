use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

/// Floating point scalar the numerical core runs on: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + Serialize + 'static {
    /// Converts an `f64` literal. Panics only if `Self` cannot represent
    /// finite doubles at all, which never happens for `f32`/`f64`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance for "sums to one" checks: `1e-12` in double
    /// precision, widened to a few hundred ulps for narrower types.
    fn prob_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(256.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
