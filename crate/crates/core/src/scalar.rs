//! Scalar abstraction shared by the geometric and statistical code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the geometry, feature and divergence code.
///
/// Implemented for `f32` and `f64`. The planner and inference layers work in
/// `f64` (see the aliases at the crate root).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle<T: Scalar>(angle: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut a = angle % two_pi;
    if a <= -T::PI() {
        a = a + two_pi;
    } else if a > T::PI() {
        a = a - two_pi;
    }
    a
}
