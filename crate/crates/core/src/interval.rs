//! Closed intervals of `[0, 1]` and finite unions of them.

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{neumaier_sum, Real};

/// Components whose closures are closer than this are merged.
pub const TOUCH_TOLERANCE: f64 = 1e-13;

/// An interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "interval endpoints out of order: [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Builds the interval spanned by two points in either order.
    pub fn spanning(a: T, b: T) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    /// The ball `(center - radius, center + radius)`.
    pub fn ball(center: T, radius: T) -> Self {
        Self::spanning(center - radius, center + radius)
    }

    pub fn unit() -> Self {
        Self {
            lo: T::zero(),
            hi: T::one(),
        }
    }

    #[inline]
    pub fn measure(&self) -> T {
        self.hi - self.lo
    }

    #[inline]
    pub fn midpoint(&self) -> T {
        self.lo + (self.hi - self.lo) / T::lit(2.0)
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Length of the intersection, zero when disjoint.
    #[inline]
    pub fn overlap(&self, other: &Self) -> T {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(T::zero())
    }

    pub fn is_within_unit(&self) -> bool {
        self.lo >= T::zero() && self.hi <= T::one()
    }
}

/// A finite union of disjoint intervals, kept sorted by left endpoint.
///
/// Components whose closures touch (within [`TOUCH_TOLERANCE`]) are merged on
/// construction. Arbitrarily short components are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet<T> {
    intervals: Vec<Interval<T>>,
    measure: T,
}

impl<T: Real> Default for IntervalSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> IntervalSet<T> {
    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
            measure: T::zero(),
        }
    }

    pub fn single(interval: Interval<T>) -> Self {
        Self::from_intervals(vec![interval])
    }

    /// Sorts and merges arbitrary (possibly overlapping) intervals.
    pub fn from_intervals(mut intervals: Vec<Interval<T>>) -> Self {
        intervals.sort_unstable_by(|a, b| {
            a.lo.partial_cmp(&b.lo)
                .expect("NaN interval endpoint")
                .then(a.hi.partial_cmp(&b.hi).expect("NaN interval endpoint"))
        });
        Self::from_sorted(intervals)
    }

    /// Merges intervals already sorted by left endpoint.
    pub(crate) fn from_sorted(intervals: Vec<Interval<T>>) -> Self {
        debug_assert!(intervals.windows(2).all(|w| w[0].lo <= w[1].lo));
        let touch = T::lit(TOUCH_TOLERANCE);
        let mut merged: Vec<Interval<T>> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi + touch => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        let measure = neumaier_sum(merged.iter().map(Interval::measure));
        Self {
            intervals: merged,
            measure,
        }
    }

    #[inline]
    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    #[inline]
    pub fn measure(&self) -> T {
        self.measure
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Membership in the closure, widened by `tol` on each side.
    pub fn contains(&self, x: T, tol: T) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi + tol < x);
        self.intervals
            .get(idx)
            .is_some_and(|iv| iv.lo - tol <= x && x <= iv.hi + tol)
    }

    /// Measure of the intersection with a single interval.
    pub fn overlap(&self, other: &Interval<T>) -> T {
        let start = self.intervals.partition_point(|iv| iv.hi <= other.lo);
        neumaier_sum(
            self.intervals[start..]
                .iter()
                .take_while(|iv| iv.lo < other.hi)
                .map(|iv| iv.overlap(other)),
        )
    }

    /// Whether every component of `self` lies inside some component of `other`
    /// (up to `tol`).
    pub fn is_subset_of(&self, other: &Self, tol: T) -> bool {
        self.intervals.iter().all(|iv| {
            other
                .intervals
                .iter()
                .any(|o| o.lo - tol <= iv.lo && iv.hi <= o.hi + tol)
        })
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }
}

impl<T: Real> FromIterator<Interval<T>> for IntervalSet<T> {
    fn from_iter<I: IntoIterator<Item = Interval<T>>>(iter: I) -> Self {
        Self::from_intervals(iter.into_iter().collect())
    }
}

/// Serializes as a list of `[lo, hi]` pairs.
impl<T: Real> Serialize for IntervalSet<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.intervals.len()))?;
        for iv in &self.intervals {
            seq.serialize_element(&[iv.lo, iv.hi])?;
        }
        seq.end()
    }
}
