//! Closed-form invariant density of the full logistic map `4x(1 - x)`.

use crate::scalar::Real;
use crate::transfer::Density;

/// `1 / (π √(x(1 - x)))`.
pub fn logistic_density<T: Real>(x: T) -> T {
    T::one() / (T::PI() * (x * (T::one() - x)).sqrt())
}

/// Distribution function `(2/π) asin(√x)`.
pub fn logistic_cdf<T: Real>(x: T) -> T {
    let x = x.max(T::zero()).min(T::one());
    T::lit(2.0) / T::PI() * x.sqrt().asin()
}

/// Exact mass of each of `k` uniform bins.
pub fn logistic_bin_masses<T: Real>(k: usize) -> Vec<T> {
    (0..k)
        .map(|i| logistic_cdf(T::count(i + 1) / T::count(k)) - logistic_cdf(T::count(i) / T::count(k)))
        .collect()
}

/// Exact `L¹` distance between a piecewise-constant density and the
/// logistic density.
///
/// On each bin the analytic density crosses the constant level `v` at most
/// twice, at `x = (1 ± √(1 - 4/(πv)²)) / 2`, so `|v - g|` integrates in
/// closed form between the crossings.
pub fn logistic_l1_distance<T: Real>(d: &Density<T>) -> T {
    let k = d.partition().bins();
    let pi = T::PI();
    let mut total = T::zero();
    for (i, &v) in d.values().iter().enumerate() {
        let (a, b) = (T::count(i) / T::count(k), T::count(i + 1) / T::count(k));
        let mut cuts = vec![a, b];
        let s = T::one() - T::lit(4.0) / (pi * v).powi(2);
        if v > T::zero() && s > T::zero() {
            let r = s.sqrt();
            for x in [(T::one() - r) / T::lit(2.0), (T::one() + r) / T::lit(2.0)] {
                if x > a && x < b {
                    cuts.push(x);
                }
            }
        }
        cuts.sort_by(|p, q| p.partial_cmp(q).expect("NaN cut"));
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mass = logistic_cdf(hi) - logistic_cdf(lo);
            total = total + (mass - v * (hi - lo)).abs();
        }
    }
    total
}
