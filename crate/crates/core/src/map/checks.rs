//! Numerical checks of the structural hypotheses: negative Schwarzian
//! derivative and one-sided critical orders.

use serde::Serialize;

use super::{CriticalPoint, MapSpec, Side};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::scalar::Real;

/// Fraction of each branch width skipped at both ends when sampling `Sf`.
pub const SCHWARZIAN_MARGIN: f64 = 1e-4;
/// Half-width of the "boundary" band around zero.
pub const SCHWARZIAN_TOLERANCE: f64 = 1e-8;
/// Below this `|Df|` the Schwarzian is not formed.
pub const SINGULAR_DERIVATIVE: f64 = 1e-12;

/// Schwarzian derivative `D³f/Df - 3/2 (D²f/Df)²` at a non-critical point.
pub fn schwarzian<T: Real>(map: &MapSpec<T>, x: T) -> Result<T> {
    let d1 = map.deriv(x, 1, Side::Interior)?;
    let d2 = map.deriv(x, 2, Side::Interior)?;
    let d3 = map.deriv(x, 3, Side::Interior)?;
    if !(d1.abs() >= T::tol(SINGULAR_DERIVATIVE, 16.0)) {
        return Err(Error::SingularDerivative {
            x: x.as_f64(),
            value: d1.as_f64(),
        });
    }
    let r = d2 / d1;
    Ok(d3 / d1 - T::lit(1.5) * r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchwarzianVerdict {
    /// Every sample is strictly negative.
    Holds,
    /// The largest sample lies within the tolerance band around zero.
    Boundary,
    Fails,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchwarzianReport<T> {
    pub verdict: SchwarzianVerdict,
    pub worst_value: T,
    pub worst_x: T,
    pub samples: usize,
    /// Samples where `|Df|` was too small to form `Sf`.
    pub skipped: usize,
}

/// Samples `Sf` on a uniform grid inside every branch, away from the ends.
pub fn check_negative_schwarzian<T: Real>(
    map: &MapSpec<T>,
    samples_per_branch: usize,
) -> Result<SchwarzianReport<T>> {
    if samples_per_branch < 2 {
        return Err(Error::InvalidArgument(
            "samples_per_branch must be at least 2".into(),
        ));
    }
    let mut worst_value = T::neg_infinity();
    let mut worst_x = T::nan();
    let (mut samples, mut skipped) = (0, 0);
    let steps = T::count(samples_per_branch - 1);
    for branch in map.branches() {
        let dom = branch.domain();
        let margin = dom.measure() * T::lit(SCHWARZIAN_MARGIN);
        let (lo, hi) = (dom.lo + margin, dom.hi - margin);
        for j in 0..samples_per_branch {
            let x = lo + (hi - lo) * T::count(j) / steps;
            match schwarzian(map, x) {
                Ok(s) => {
                    samples += 1;
                    if s > worst_value || worst_x.is_nan() {
                        worst_value = s;
                        worst_x = x;
                    }
                }
                Err(Error::SingularDerivative { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let tol = T::lit(SCHWARZIAN_TOLERANCE);
    let verdict = if worst_value < -tol {
        SchwarzianVerdict::Holds
    } else if worst_value <= tol {
        SchwarzianVerdict::Boundary
    } else {
        SchwarzianVerdict::Fails
    };
    Ok(SchwarzianReport {
        verdict,
        worst_value,
        worst_x,
        samples,
        skipped,
    })
}

/// Offsets `2^-k * w` for `k` in this range enter the order fit.
pub const ORDER_FIT_EXPONENTS: std::ops::RangeInclusive<i32> = 4..=24;

#[derive(Debug, Clone, Serialize)]
pub struct OrderFit<T> {
    pub side: Side,
    /// Fitted exponent in `|f(x) - f(c±)| ~ |x - c|^l`.
    pub l_hat: T,
    /// Largest residual of the log-log line fit.
    pub fit_residual: T,
    pub points_used: usize,
}

/// Estimates the one-sided order `l(c±)` as the log-log slope of
/// `|f(x) - f(c±)|` against `|x - c|` over geometric offsets into the
/// adjacent branch.
///
/// Offsets whose image difference is swamped by rounding are discarded.
pub fn estimate_critical_order<T: Real>(
    map: &MapSpec<T>,
    c: &CriticalPoint<T>,
    side: Side,
) -> Result<OrderFit<T>> {
    let limit = c.value(side)?;
    let branch = map.branch_at(c.location, side)?;
    let width = branch.domain().measure();
    let noise = T::lit(1e4) * T::unit_roundoff() * limit.abs().max(T::one());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in ORDER_FIT_EXPONENTS {
        let h = width * T::lit(2f64.powi(-k));
        let x = match side {
            Side::Left => c.location - h,
            _ => c.location + h,
        };
        // Use the offset actually represented after rounding.
        let h = (x - c.location).abs();
        let dy = (branch.value(x) - limit).abs();
        if h > T::zero() && dy > noise && dy.is_finite() {
            xs.push(h.ln());
            ys.push(dy.ln());
        }
    }
    if xs.len() < 5 {
        return Err(Error::DegenerateFit {
            c: c.location.as_f64(),
            usable: xs.len(),
        });
    }
    let fit = linear_fit(&xs, &ys).ok_or(Error::DegenerateFit {
        c: c.location.as_f64(),
        usable: xs.len(),
    })?;
    Ok(OrderFit {
        side,
        l_hat: fit.slope,
        fit_residual: fit.max_residual,
        points_used: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::interval::Interval;
    use crate::map::{builtin, Branch, FAMILIES};

    fn one_branch(
        f: fn(f64) -> f64,
        d1: fn(f64) -> f64,
        d2: fn(f64) -> f64,
        d3: fn(f64) -> f64,
    ) -> MapSpec<f64> {
        let b = Branch::new(Interval::unit(), Arc::new(f), f(0.0), f(1.0))
            .unwrap()
            .with_derivatives(Arc::new(d1), Arc::new(d2), Arc::new(d3));
        MapSpec::new("custom", BTreeMap::new(), vec![b], &[]).unwrap()
    }

    fn logistic() -> MapSpec<f64> {
        builtin("logistic", &BTreeMap::new()).unwrap()
    }

    /// Schwarzian from central differences of the map values alone.
    fn schwarzian_fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let (fm2, fm1, f0, fp1, fp2) = (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
        let d1 = (fp1 - fm1) / (2.0 * h);
        let d2 = (fp1 - 2.0 * f0 + fm1) / (h * h);
        let d3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h);
        d3 / d1 - 1.5 * (d2 / d1).powi(2)
    }

    #[test]
    fn logistic_closed_form() {
        let s = schwarzian(&logistic(), 0.25).unwrap();
        assert!((s + 24.0).abs() < 1e-12, "{s}");
        for x in [0.1f64, 0.3, 0.45, 0.7, 0.95] {
            let exact = -6.0 / (1.0 - 2.0 * x).powi(2);
            assert!((schwarzian(&logistic(), x).unwrap() - exact).abs() < 1e-9 * exact.abs());
        }
    }

    #[test]
    fn cube_at_one() {
        let m = one_branch(|x| x * x * x, |x| 3.0 * x * x, |x| 6.0 * x, |_| 6.0);
        assert!((schwarzian(&m, 1.0).unwrap() + 4.0).abs() < 1e-14);
    }

    #[test]
    fn affine_is_zero() {
        let d: MapSpec<f64> = builtin("doubling", &BTreeMap::new()).unwrap();
        assert_eq!(schwarzian(&d, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn singular_and_side_errors() {
        let m = one_branch(|x| x * x * x, |x| 3.0 * x * x, |x| 6.0 * x, |_| 6.0);
        assert!(matches!(
            schwarzian(&m, 0.0),
            Err(Error::SingularDerivative { .. })
        ));
        assert!(matches!(
            schwarzian(&logistic(), 0.5),
            Err(Error::SideRequired { .. })
        ));
    }

    #[test]
    fn power_branches_agree_with_finite_differences() {
        let m: MapSpec<f64> = builtin(
            "lorenz_power",
            &BTreeMap::from([("v_left".into(), 0.9), ("v_right".into(), 0.1)]),
        )
        .unwrap();
        for x in [0.1, 0.3, 0.45, 0.6, 0.8] {
            let b = m.branch_at(x, Side::Interior).unwrap();
            let fd = schwarzian_fd(|t| b.value(t), x, 1e-3);
            let an = schwarzian(&m, x).unwrap();
            assert!((fd - an).abs() < 1e-3 * an.abs().max(1.0), "x={x}: {fd} vs {an}");
        }
    }

    #[test]
    fn verdicts() {
        let r = check_negative_schwarzian(&logistic(), 200).unwrap();
        assert_eq!(r.verdict, SchwarzianVerdict::Holds);
        assert!(r.worst_value <= -6.0 + 1e-9);

        let d: MapSpec<f64> = builtin("doubling", &BTreeMap::new()).unwrap();
        let r = check_negative_schwarzian(&d, 50).unwrap();
        assert_eq!(r.verdict, SchwarzianVerdict::Boundary);

        // x + a sin(4 pi x) with 4 pi a < 1 stays monotone; Sf > 0 near x = 1/4.
        const A: f64 = 0.05;
        const W: f64 = 4.0 * std::f64::consts::PI;
        let wiggle = one_branch(
            |x| x + A * (W * x).sin(),
            |x| 1.0 + A * W * (W * x).cos(),
            |x| -A * W * W * (W * x).sin(),
            |x| -A * W * W * W * (W * x).cos(),
        );
        let r = check_negative_schwarzian(&wiggle, 401).unwrap();
        assert_eq!(r.verdict, SchwarzianVerdict::Fails);
        // Closed form at the maximiser x = 1/4 + k/2 where cos = -1 and sin = 0.
        let peak = A * W.powi(3) / (1.0 - A * W);
        assert!((r.worst_value - peak).abs() < 1e-3 * peak, "{}", r.worst_value);
        let frac: f64 = (r.worst_x - 0.25f64).rem_euclid(0.5);
        assert!(frac.min(0.5 - frac) < 1e-2, "{}", r.worst_x);

        assert!(check_negative_schwarzian(&d, 1).is_err());
    }

    #[test]
    fn order_estimates_logistic_and_doubling() {
        let l = logistic();
        let c = l.critical_points()[0];
        for side in [Side::Left, Side::Right] {
            let fit = estimate_critical_order(&l, &c, side).unwrap();
            assert!((fit.l_hat - 2.0).abs() < 0.05, "{}", fit.l_hat);
        }
        let d: MapSpec<f64> = builtin("doubling", &BTreeMap::new()).unwrap();
        let c = d.critical_points()[0];
        let fit = estimate_critical_order(&d, &c, Side::Right).unwrap();
        assert!((fit.l_hat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn order_estimates_synthetic_asymmetric() {
        // f(c) - (c - x)^2 on the left, f(c+) + (x - c)^3 on the right.
        let c = 0.5;
        let left = Branch::new(
            Interval::new(0.0, c).unwrap(),
            Arc::new(move |x: f64| 0.8 - (c - x).powi(2)),
            0.8 - c * c,
            0.8,
        )
        .unwrap();
        let right = Branch::new(
            Interval::new(c, 1.0).unwrap(),
            Arc::new(move |x: f64| 0.1 + (x - c).powi(3)),
            0.1,
            0.1 + (1.0 - c).powi(3),
        )
        .unwrap();
        let m = MapSpec::new("synthetic", BTreeMap::new(), vec![left, right], &[(2.0, 3.0)]).unwrap();
        let cp = m.critical_points()[0];
        let l = estimate_critical_order(&m, &cp, Side::Left).unwrap();
        let r = estimate_critical_order(&m, &cp, Side::Right).unwrap();
        assert!((l.l_hat - 2.0).abs() < 0.05, "{}", l.l_hat);
        assert!((r.l_hat - 3.0).abs() < 0.05, "{}", r.l_hat);
    }

    #[test]
    fn order_estimates_every_builtin() {
        for name in FAMILIES {
            let m: MapSpec<f64> = builtin(name, &BTreeMap::new()).unwrap();
            for c in m.critical_points() {
                for side in [Side::Left, Side::Right] {
                    let fit = estimate_critical_order(&m, c, side).unwrap();
                    let declared = c.order(side).unwrap();
                    assert!(
                        (fit.l_hat - declared).abs() < 0.05,
                        "{name} {side}: {} vs {declared}",
                        fit.l_hat
                    );
                }
            }
        }
    }

    #[test]
    fn order_fit_needs_a_side() {
        let l = logistic();
        let c = l.critical_points()[0];
        assert!(estimate_critical_order(&l, &c, Side::Interior).is_err());
    }
}
