//! Critical orbits and the two summability series along them.
//!
//! Derivatives along an orbit are accumulated as running sums of
//! `log|Df|`; products are never formed directly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::map::{CriticalPoint, MapSpec, Side};
use crate::scalar::Real;

/// Default orbit length.
pub const DEFAULT_ORBIT_LENGTH: usize = 200;
/// Orbits stop when they come this close to the critical set.
pub const CRITICAL_HIT_TOLERANCE: f64 = 1e-12;
/// Minimum coefficient of determination for a tail fit to decide a verdict.
pub const TAIL_FIT_GOODNESS: f64 = 0.9;
/// Minimum per-step slope of `log|Dfⁿ|` counted as growth.
pub const GROWTH_SLOPE_MIN: f64 = 1e-3;

/// Which critical point is closest to an orbit point, and from which side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearestCritical<T> {
    pub index: usize,
    pub location: T,
    /// Side of the critical point facing the orbit point.
    pub approach: Side,
    pub distance: T,
    /// `l(c̃)` on the approach side.
    pub order: T,
    /// Another critical point was exactly as close.
    pub tie: bool,
}

/// Rule for choosing between equidistant critical points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Smaller coordinate wins (the default).
    Lower,
    Upper,
}

/// Nearest point of the critical set to `x`, or `None` if the set is empty.
pub fn nearest_critical<T: Real>(
    map: &MapSpec<T>,
    x: T,
    tie_break: TieBreak,
) -> Option<NearestCritical<T>> {
    let mut best: Option<NearestCritical<T>> = None;
    for (index, c) in map.critical_points().iter().enumerate() {
        let distance = (x - c.location).abs();
        let approach = if x < c.location { Side::Left } else { Side::Right };
        let candidate = NearestCritical {
            index,
            location: c.location,
            approach,
            distance,
            order: if approach == Side::Left {
                c.order_left
            } else {
                c.order_right
            },
            tie: false,
        };
        best = match best {
            None => Some(candidate),
            Some(b) if distance < b.distance => Some(candidate),
            Some(b) if distance == b.distance => {
                // Critical points are sorted, so the later one is the upper one.
                let winner = match tie_break {
                    TieBreak::Lower => b,
                    TieBreak::Upper => candidate,
                };
                Some(NearestCritical { tie: true, ..winner })
            }
            keep => keep,
        };
    }
    best
}

/// Forward orbit of a one-sided critical value.
///
/// `points[i]` is `f^(i+1)(c±)`, starting at the critical value `f(c±)`, and
/// `log_deriv[i]` is `log|Df^(i+1)(f(c±))| = Σ_{k<=i} log|Df(points[k])|`.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord<T> {
    pub critical: CriticalPoint<T>,
    pub side: Side,
    /// `l(c±)` on the side the orbit departs from.
    pub departure_order: T,
    pub points: Vec<T>,
    pub log_deriv: Vec<T>,
    pub nearest: Vec<NearestCritical<T>>,
    /// Orbit index `n` at which `fⁿ(c)` landed on the critical set.
    pub hit_critical: Option<usize>,
    pub requested: usize,
}

impl<T: Real> OrbitRecord<T> {
    /// Assembles a record from precomputed data (used for synthetic orbits).
    pub fn from_parts(
        critical: CriticalPoint<T>,
        side: Side,
        points: Vec<T>,
        log_deriv: Vec<T>,
        nearest: Vec<NearestCritical<T>>,
    ) -> Result<Self> {
        let departure_order = critical.order(side)?;
        if points.len() != log_deriv.len() || points.len() != nearest.len() {
            return Err(Error::InvalidArgument(
                "orbit record columns differ in length".into(),
            ));
        }
        let requested = points.len();
        Ok(Self {
            critical,
            side,
            departure_order,
            points,
            log_deriv,
            nearest,
            hit_critical: None,
            requested,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Iterates the one-sided critical value `f(c±)` up to `n` times.
///
/// Stops early, setting `hit_critical`, if an orbit point comes within
/// [`CRITICAL_HIT_TOLERANCE`] of the critical set.
pub fn critical_orbit<T: Real>(
    map: &MapSpec<T>,
    c: &CriticalPoint<T>,
    side: Side,
    n: usize,
) -> Result<OrbitRecord<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("orbit length must be at least 1".into()));
    }
    let departure_order = c.order(side)?;
    let hit_tol = T::tol(CRITICAL_HIT_TOLERANCE, 4.0);
    let mut points = Vec::with_capacity(n);
    let mut log_deriv = Vec::with_capacity(n);
    let mut nearest = Vec::with_capacity(n);
    let mut hit_critical = None;
    let mut x = c.value(side)?;
    let mut acc = T::zero();
    for i in 0..n {
        let near = nearest_critical(map, x, TieBreak::Lower);
        if near.is_some_and(|nc| nc.distance <= hit_tol) {
            hit_critical = Some(i + 1);
            break;
        }
        let d = map.deriv(x, 1, Side::Interior)?;
        acc = acc + d.abs().ln();
        points.push(x);
        log_deriv.push(acc);
        if let Some(nc) = near {
            nearest.push(nc);
        }
        x = map.eval(x, Side::Interior)?;
    }
    Ok(OrbitRecord {
        critical: *c,
        side,
        departure_order,
        points,
        log_deriv,
        nearest,
        hit_critical,
        requested: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    /// `Σ (|fⁿ(c)-c̃|^l(c̃) / (|fⁿ(c)-c̃|^l(c) |Dfⁿ(f(c))|))^(1/l(c))`
    First,
    /// `Σ |Dfⁿ(f(c))|^(-1/l(c))`
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailModel {
    /// `log term ≈ a + n log(rate)`
    Geometric,
    /// `log term ≈ a + rate log n`
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit<T> {
    pub model: TailModel,
    /// Ratio per step (geometric) or exponent (power).
    pub rate: T,
    /// Coefficient of determination of the chosen fit.
    pub goodness: T,
    /// First orbit index `n` in the fit window.
    pub window_start: usize,
    pub window_len: usize,
}

impl<T: Real> TailFit<T> {
    pub fn indicates_summable(&self) -> bool {
        match self.model {
            TailModel::Geometric => self.rate < T::one(),
            TailModel::Power => self.rate < -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Terms and partial sums of a summability series with a fitted-tail verdict.
///
/// The verdict is a heuristic: a finite run cannot decide an infinite series.
#[derive(Debug, Clone, Serialize)]
pub struct SummabilityReport<T> {
    pub series: SeriesKind,
    pub critical: T,
    pub side: Side,
    /// `terms[i]` is the summand for `n = i + 1`.
    pub terms: Vec<T>,
    pub log_terms: Vec<T>,
    pub partial_sums: Vec<T>,
    pub tail_fit: Option<TailFit<T>>,
    pub verdict: SeriesVerdict,
    pub heuristic: bool,
    pub note: Option<String>,
}

impl<T: Real> SummabilityReport<T> {
    pub fn total(&self) -> T {
        self.partial_sums.last().copied().unwrap_or_else(T::zero)
    }
}

/// Terms `1 / |Dfⁿ(f(c))|^(1/l(c))`.
pub fn summability_series_2<T: Real>(record: &OrbitRecord<T>) -> SummabilityReport<T> {
    let inv_l = T::one() / record.departure_order;
    let log_terms = record.log_deriv.iter().map(|&ld| -ld * inv_l).collect();
    build_report(record, SeriesKind::Second, log_terms)
}

/// Terms `(|fⁿ(c)-c̃|^l(c̃) / (|fⁿ(c)-c̃|^l(c) |Dfⁿ(f(c))|))^(1/l(c))`, with
/// `l(c̃)` taken on the side of `c̃` facing `fⁿ(c)`.
pub fn summability_series_1<T: Real>(record: &OrbitRecord<T>) -> SummabilityReport<T> {
    let l = record.departure_order;
    let log_terms = record
        .log_deriv
        .iter()
        .zip(&record.nearest)
        .map(|(&ld, nc)| {
            let excess = nc.order - l;
            let dist_part = if excess == T::zero() {
                T::zero()
            } else {
                excess * nc.distance.ln()
            };
            (dist_part - ld) / l
        })
        .collect();
    build_report(record, SeriesKind::First, log_terms)
}

fn build_report<T: Real>(
    record: &OrbitRecord<T>,
    series: SeriesKind,
    log_terms: Vec<T>,
) -> SummabilityReport<T> {
    let terms: Vec<T> = log_terms.iter().map(|lt: &T| lt.exp()).collect();
    let mut partial_sums = Vec::with_capacity(terms.len());
    let (mut sum, mut comp) = (T::zero(), T::zero());
    for &t in &terms {
        let next = sum + t;
        comp = comp + if sum.abs() >= t.abs() { (sum - next) + t } else { (t - next) + sum };
        sum = next;
        partial_sums.push(sum + comp);
    }
    let tail_fit = fit_tail(&log_terms);
    let mut note = None;
    let verdict = if let Some(n) = record.hit_critical {
        note = Some(format!(
            "orbit reached the critical set at n = {n}; the series is undefined beyond it"
        ));
        SeriesVerdict::Inconclusive
    } else {
        match tail_fit {
            Some(fit) if fit.goodness >= T::lit(TAIL_FIT_GOODNESS) => {
                if fit.indicates_summable() {
                    SeriesVerdict::Converges
                } else {
                    SeriesVerdict::Diverges
                }
            }
            _ => SeriesVerdict::Inconclusive,
        }
    };
    SummabilityReport {
        series,
        critical: record.critical.location,
        side: record.side,
        terms,
        log_terms,
        partial_sums,
        tail_fit,
        verdict,
        heuristic: true,
        note,
    }
}

/// Fits the last half of the log-terms with both tail models and keeps the
/// better one. Constant tails count as geometric with rate 1.
fn fit_tail<T: Real>(log_terms: &[T]) -> Option<TailFit<T>> {
    let len = log_terms.len();
    if len < 8 {
        return None;
    }
    let start = len / 2;
    let window = &log_terms[start..];
    if window.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // Orbit index n = i + 1.
    let ns: Vec<T> = (start..len).map(|i| T::count(i + 1)).collect();
    let log_ns: Vec<T> = ns.iter().map(|n| n.ln()).collect();
    let (lo, hi) = window
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
    let base = TailFit {
        model: TailModel::Geometric,
        rate: T::one(),
        goodness: T::one(),
        window_start: start + 1,
        window_len: window.len(),
    };
    if hi - lo <= T::tol(1e-12, 64.0) * hi.abs().max(T::one()) {
        return Some(base);
    }
    let geo = linear_fit(&ns, window)?;
    let pow = linear_fit(&log_ns, window)?;
    Some(if geo.r_squared >= pow.r_squared {
        TailFit {
            rate: geo.slope.exp(),
            goodness: geo.r_squared,
            ..base
        }
    } else {
        TailFit {
            model: TailModel::Power,
            rate: pow.slope,
            goodness: pow.r_squared,
            ..base
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Grows,
    NotGrows,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport<T> {
    pub verdict: GrowthVerdict,
    pub min_log_deriv_tail: T,
    /// Fitted per-step slope of `log|Dfⁿ|` over the last half of the orbit.
    pub tail_slope: T,
}

/// Checks that `|Dfⁿ(f(c))|` grows along the orbit (needs `N >= 20`).
pub fn derivative_growth_check<T: Real>(record: &OrbitRecord<T>) -> GrowthReport<T> {
    let len = record.log_deriv.len();
    if len < 20 {
        return GrowthReport {
            verdict: GrowthVerdict::Inconclusive,
            min_log_deriv_tail: T::nan(),
            tail_slope: T::nan(),
        };
    }
    let start = len / 2;
    let tail = &record.log_deriv[start..];
    let ns: Vec<T> = (start..len).map(|i| T::count(i + 1)).collect();
    let min_log_deriv_tail = tail.iter().fold(T::infinity(), |m, &v| m.min(v));
    let slope = linear_fit(&ns, tail).map_or(T::nan(), |f| f.slope);
    let verdict = if !slope.is_finite() {
        GrowthVerdict::Inconclusive
    } else if slope > T::lit(GROWTH_SLOPE_MIN) {
        GrowthVerdict::Grows
    } else {
        GrowthVerdict::NotGrows
    };
    GrowthReport {
        verdict,
        min_log_deriv_tail,
        tail_slope: slope,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::map::builtin;

    fn family(name: &str) -> MapSpec<f64> {
        builtin(name, &BTreeMap::new()).unwrap()
    }

    fn orbit(name: &str, side: Side, n: usize) -> OrbitRecord<f64> {
        let m = family(name);
        let c = m.critical_points()[0];
        critical_orbit(&m, &c, side, n).unwrap()
    }

    fn synthetic(log_deriv: Vec<f64>, order: f64) -> OrbitRecord<f64> {
        let c = CriticalPoint {
            location: 0.5,
            order_left: order,
            order_right: order,
            value_left: 1.0,
            value_right: 1.0,
        };
        let n = log_deriv.len();
        let near = NearestCritical {
            index: 0,
            location: 0.5,
            approach: Side::Right,
            distance: 0.25,
            order,
            tie: false,
        };
        OrbitRecord::from_parts(c, Side::Right, vec![0.75; n], log_deriv, vec![near; n]).unwrap()
    }

    #[test]
    fn doubling_right_orbit_is_fixed_at_zero() {
        let r = orbit("doubling", Side::Right, 50);
        assert!(r.points.iter().all(|&p| p == 0.0));
        for (i, &ld) in r.log_deriv.iter().enumerate() {
            assert!((ld - (i + 1) as f64 * 2f64.ln()).abs() < 1e-12);
        }
        assert!(r.hit_critical.is_none());
    }

    #[test]
    fn logistic_orbit_and_derivative_product() {
        let r = orbit("logistic", Side::Left, 30);
        assert_eq!(r.points[0], 1.0);
        assert!(r.points[1..].iter().all(|&p| p == 0.0));
        for (i, &ld) in r.log_deriv.iter().enumerate() {
            let direct: f64 = r.points[..=i]
                .iter()
                .map(|&p| (4.0 - 8.0 * p).abs())
                .product();
            assert!((ld.exp() / direct - 1.0).abs() < 1e-9);
            assert!((direct - 4f64.powi(i as i32 + 1)).abs() < 1e-9 * direct);
        }
    }

    #[test]
    fn tent_orbit() {
        let r = orbit("tent", Side::Left, 20);
        assert_eq!(r.points[0], 1.0);
        assert_eq!(r.points[1], 0.0);
        assert!((r.log_deriv[9] - 10.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hit_critical_stops_early() {
        // Tent of slope 1 sends c=0.5 to 0.5 and 0 to 0; use slope 1: f(c)=0.5.
        let m: MapSpec<f64> =
            builtin("tent", &BTreeMap::from([("slope".into(), 1.0)])).unwrap();
        let c = m.critical_points()[0];
        let r = critical_orbit(&m, &c, Side::Left, 10).unwrap();
        assert_eq!(r.hit_critical, Some(1));
        assert!(r.points.is_empty());
        let s = summability_series_2(&r);
        assert_eq!(s.verdict, SeriesVerdict::Inconclusive);
        assert!(s.note.is_some());
    }

    #[test]
    fn orbit_rejects_bad_arguments() {
        let m = family("doubling");
        let c = m.critical_points()[0];
        assert!(critical_orbit(&m, &c, Side::Interior, 5).is_err());
        assert!(critical_orbit(&m, &c, Side::Left, 0).is_err());
    }

    #[test]
    fn series_2_geometric_cases() {
        let s = summability_series_2(&orbit("doubling", Side::Right, 100));
        assert_eq!(s.verdict, SeriesVerdict::Converges);
        assert!((s.total() - (1.0 - 2f64.powi(-100))).abs() < 1e-12);
        let fit = s.tail_fit.unwrap();
        assert_eq!(fit.model, TailModel::Geometric);
        assert!((fit.rate - 0.5).abs() < 1e-9);

        let s = summability_series_2(&orbit("logistic", Side::Left, 100));
        assert_eq!(s.verdict, SeriesVerdict::Converges);
        for (i, &t) in s.terms.iter().enumerate() {
            assert!((t - 2f64.powi(-(i as i32 + 1))).abs() < 1e-12 * t);
        }
    }

    #[test]
    fn series_2_harmonic_diverges() {
        // |Dfⁿ| = n² with l = 2 gives terms 1/n.
        let ld: Vec<f64> = (1..=200).map(|n| 2.0 * (n as f64).ln()).collect();
        let s = summability_series_2(&synthetic(ld, 2.0));
        for (i, &t) in s.terms.iter().enumerate() {
            assert!((t - 1.0 / (i + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(s.tail_fit.unwrap().model, TailModel::Power);
        assert_eq!(s.verdict, SeriesVerdict::Diverges);
    }

    #[test]
    fn series_2_power_law_converges() {
        // |Dfⁿ| = n³ with l = 1.5 gives terms n^-2.
        let ld: Vec<f64> = (1..=200).map(|n| 3.0 * (n as f64).ln()).collect();
        let s = summability_series_2(&synthetic(ld, 1.5));
        let fit = s.tail_fit.unwrap();
        assert_eq!(fit.model, TailModel::Power);
        assert!((fit.rate + 2.0).abs() < 1e-9);
        assert_eq!(s.verdict, SeriesVerdict::Converges);
    }

    #[test]
    fn constant_terms_diverge() {
        let s = summability_series_2(&synthetic(vec![0.0; 100], 1.0));
        assert_eq!(s.verdict, SeriesVerdict::Diverges);
    }

    #[test]
    fn series_1_equal_orders_matches_series_2() {
        for (name, side) in [("doubling", Side::Right), ("logistic", Side::Left)] {
            let r = orbit(name, side, 60);
            let s1 = summability_series_1(&r);
            let s2 = summability_series_2(&r);
            for (a, b) in s1.terms.iter().zip(&s2.terms) {
                assert!((a / b - 1.0).abs() < 1e-12);
            }
            assert_eq!(s1.verdict, SeriesVerdict::Converges);
        }
    }

    #[test]
    fn partial_sums_monotone() {
        let m: MapSpec<f64> = builtin(
            "lorenz_power",
            &BTreeMap::from([("v_left".into(), 0.9), ("v_right".into(), 0.1)]),
        )
        .unwrap();
        let c = m.critical_points()[0];
        for side in [Side::Left, Side::Right] {
            let r = critical_orbit(&m, &c, side, 200).unwrap();
            for s in [summability_series_1(&r), summability_series_2(&r)] {
                assert!(s.terms.iter().all(|&t| t >= 0.0));
                assert!(s.partial_sums.windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }

    #[test]
    fn nearest_critical_ties_and_sides() {
        use crate::interval::Interval;
        use crate::map::Branch;
        use std::sync::Arc;
        let mk = |lo: f64, hi: f64| {
            Branch::new(
                Interval::new(lo, hi).unwrap(),
                Arc::new(move |x: f64| (x - lo) / (hi - lo)),
                0.0,
                1.0,
            )
            .unwrap()
        };
        let m = MapSpec::new(
            "three",
            BTreeMap::new(),
            vec![mk(0.0, 0.25), mk(0.25, 0.75), mk(0.75, 1.0)],
            &[(1.0, 2.0), (3.0, 4.0)],
        )
        .unwrap();
        let lower = nearest_critical(&m, 0.5, TieBreak::Lower).unwrap();
        let upper = nearest_critical(&m, 0.5, TieBreak::Upper).unwrap();
        assert!(lower.tie && upper.tie);
        assert_eq!((lower.location, lower.approach, lower.order), (0.25, Side::Right, 2.0));
        assert_eq!((upper.location, upper.approach, upper.order), (0.75, Side::Left, 3.0));
        let plain = nearest_critical(&m, 0.9, TieBreak::Lower).unwrap();
        assert!(!plain.tie);
        assert_eq!((plain.location, plain.approach), (0.75, Side::Right));
    }

    #[test]
    fn growth_check() {
        assert_eq!(
            derivative_growth_check(&orbit("doubling", Side::Right, 40)).verdict,
            GrowthVerdict::Grows
        );
        let r = derivative_growth_check(&orbit("logistic", Side::Left, 40));
        assert_eq!(r.verdict, GrowthVerdict::Grows);
        assert!((r.tail_slope - 4f64.ln()).abs() < 1e-9);
        let neutral: Vec<f64> = (0..40).map(|i| 1e-6 * (i as f64).sin()).collect();
        assert_eq!(
            derivative_growth_check(&synthetic(neutral, 1.0)).verdict,
            GrowthVerdict::NotGrows
        );
        assert_eq!(
            derivative_growth_check(&orbit("doubling", Side::Right, 10)).verdict,
            GrowthVerdict::Inconclusive
        );
    }
}
