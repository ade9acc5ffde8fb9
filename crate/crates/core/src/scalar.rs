use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;
use twofloat::TwoFloat;

/// Scalar type the analysis routines are generic over.
///
/// Implemented for `f32`, `f64` and the double-double [`TwoFloat`].
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Serialize + Send + Sync + 'static
{
    /// Converts an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable")
    }

    /// Converts a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative spacing of representable values near 1.
    #[inline]
    fn unit_roundoff() -> Self {
        Self::epsilon()
    }

    /// Absolute tolerance `abs`, widened to `ulps` units of roundoff when the
    /// scalar cannot resolve `abs`.
    #[inline]
    fn tol(abs: f64, ulps: f64) -> Self {
        Self::lit(abs).max(Self::unit_roundoff() * Self::lit(ulps))
    }
}

impl Real for f32 {}

impl Real for f64 {}

// `TwoFloat`'s `from_f64` goes through an integer conversion and its
// `epsilon` is the smallest normal `f64`.
impl Real for TwoFloat {
    #[inline]
    fn lit(x: f64) -> Self {
        TwoFloat::from(x)
    }

    #[inline]
    fn unit_roundoff() -> Self {
        TwoFloat::from(f64::EPSILON * f64::EPSILON)
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(v), 2.0);
    }

    #[test]
    fn tolerance_widens_for_single_precision() {
        assert_eq!(<f64 as Real>::tol(1e-12, 16.0), 1e-12);
        assert!(<f32 as Real>::tol(1e-12, 16.0) > 1e-6);
    }

    #[test]
    fn double_double_constants() {
        assert_eq!(TwoFloat::lit(0.5).hi(), 0.5);
        assert!(TwoFloat::unit_roundoff().hi() < 1e-31);
        assert_eq!(<TwoFloat as Real>::tol(1e-12, 16.0).hi(), 1e-12);
    }
}
