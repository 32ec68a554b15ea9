//! Floating-point scalar used by the metric and exponent code.

use num_traits::{Float, FromPrimitive, NumCast};

pub trait Real: Float + FromPrimitive + NumCast + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `(1 + √2)`, the growth rate of the standard monodromy.
pub fn silver_ratio<T: Real>() -> T {
    T::one() + T::lit(2.0).sqrt()
}
