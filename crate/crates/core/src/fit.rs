//! Ordinary least-squares line fits used by the diagnostics.

use serde::Serialize;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination; 1 when the data has no spread.
    pub r_squared: T,
    pub max_residual: T,
}

/// Fits `y = slope * x + intercept`. Returns `None` for fewer than two points
/// or when all `x` coincide.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Option<LinearFit<T>> {
    assert_eq!(xs.len(), ys.len(), "fit inputs differ in length");
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nt = T::count(n);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / nt;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / nt;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = T::zero();
    let mut max_residual = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss_res = ss_res + r * r;
        max_residual = max_residual.max(r.abs());
    }
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero())
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        max_residual,
    })
}
