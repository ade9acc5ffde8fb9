//! Piecewise-monotone interval maps with one-sided critical orders.
//!
//! A [`MapSpec`] is an ordered list of [`Branch`]es whose domains tile
//! `[0, 1]`. Every interior branch boundary is a [`CriticalPoint`]: a
//! discontinuity, a turning point, or a point where the derivative vanishes or
//! stays bounded, each side carrying its own order `l(c±) >= 1`.
//!
//! Points of the critical set are treated as two points `c-` and `c+`; every
//! query there must say which side it means.

mod checks;
mod family;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use checks::{
    check_negative_schwarzian, estimate_critical_order, schwarzian, OrderFit, SchwarzianReport,
    SchwarzianVerdict,
};
pub use family::{builtin, FAMILIES};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Real;

/// Real function of a real variable, shared between threads.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Which one-sided limit a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Interior,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Interior => "interior",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// The map restricted to one component of `[0, 1] \ C`.
#[derive(Clone)]
pub struct Branch<T> {
    domain: Interval<T>,
    orientation: Orientation,
    eval: ScalarFn<T>,
    derivs: [Option<ScalarFn<T>>; 3],
    lo_value: T,
    hi_value: T,
}

impl<T: Real> Branch<T> {
    /// `lo_value` and `hi_value` are the one-sided limits of the map at the
    /// two ends of `domain`; orientation is read off from them.
    pub fn new(domain: Interval<T>, eval: ScalarFn<T>, lo_value: T, hi_value: T) -> Result<Self> {
        let orientation = if hi_value > lo_value {
            Orientation::Increasing
        } else if hi_value < lo_value {
            Orientation::Decreasing
        } else {
            return Err(Error::InvalidMap(format!(
                "branch on [{}, {}] is constant",
                domain.lo, domain.hi
            )));
        };
        if !(domain.lo < domain.hi) {
            return Err(Error::InvalidMap(format!(
                "branch domain [{}, {}] is empty",
                domain.lo, domain.hi
            )));
        }
        Ok(Self {
            domain,
            orientation,
            eval,
            derivs: [None, None, None],
            lo_value,
            hi_value,
        })
    }

    /// Attaches analytic first, second and third derivatives.
    pub fn with_derivatives(mut self, d1: ScalarFn<T>, d2: ScalarFn<T>, d3: ScalarFn<T>) -> Self {
        self.derivs = [Some(d1), Some(d2), Some(d3)];
        self
    }

    #[inline]
    pub fn domain(&self) -> Interval<T> {
        self.domain
    }

    #[inline]
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Limit of the map at the left end of the domain.
    #[inline]
    pub fn lo_value(&self) -> T {
        self.lo_value
    }

    /// Limit of the map at the right end of the domain.
    #[inline]
    pub fn hi_value(&self) -> T {
        self.hi_value
    }

    /// The closed image `[min, max]` of the branch.
    #[inline]
    pub fn range(&self) -> Interval<T> {
        Interval::spanning(self.lo_value, self.hi_value)
    }

    /// Raw evaluation of the branch formula.
    #[inline]
    pub fn value(&self, x: T) -> T {
        (self.eval)(x)
    }

    /// Evaluation that returns the stored one-sided limits at the domain ends.
    #[inline]
    pub fn value_closed(&self, x: T) -> T {
        if x <= self.domain.lo {
            self.lo_value
        } else if x >= self.domain.hi {
            self.hi_value
        } else {
            (self.eval)(x)
        }
    }

    /// Analytic derivative of order 1, 2 or 3, if supplied.
    #[inline]
    pub fn derivative(&self, x: T, order: u8) -> Option<T> {
        match order {
            1..=3 => self.derivs[usize::from(order - 1)].as_ref().map(|d| d(x)),
            _ => None,
        }
    }

    #[inline]
    pub fn has_derivatives(&self) -> bool {
        self.derivs.iter().all(Option::is_some)
    }
}

impl<T: fmt::Debug> fmt::Debug for Branch<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .field("lo_value", &self.lo_value)
            .field("hi_value", &self.hi_value)
            .finish_non_exhaustive()
    }
}

/// A point of the critical set with its one-sided orders and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint<T> {
    pub location: T,
    pub order_left: T,
    pub order_right: T,
    pub value_left: T,
    pub value_right: T,
}

impl<T: Real> CriticalPoint<T> {
    /// `l(c-)` or `l(c+)`.
    pub fn order(&self, side: Side) -> Result<T> {
        match side {
            Side::Left => Ok(self.order_left),
            Side::Right => Ok(self.order_right),
            Side::Interior => Err(Error::SideRequired {
                x: self.location.as_f64(),
            }),
        }
    }

    /// `f(c-)` or `f(c+)`.
    pub fn value(&self, side: Side) -> Result<T> {
        match side {
            Side::Left => Ok(self.value_left),
            Side::Right => Ok(self.value_right),
            Side::Interior => Err(Error::SideRequired {
                x: self.location.as_f64(),
            }),
        }
    }

    /// Whether either side is a genuine critical point (`l > 1`).
    pub fn is_critical(&self) -> bool {
        self.order_left > T::one() || self.order_right > T::one()
    }
}

/// A piecewise-monotone map of `[0, 1]` into itself.
///
/// Immutable after construction; cheap to clone (branch formulas are shared).
#[derive(Debug, Clone)]
pub struct MapSpec<T> {
    name: String,
    params: BTreeMap<String, f64>,
    branches: Vec<Branch<T>>,
    critical: Vec<CriticalPoint<T>>,
}

impl<T: Real> MapSpec<T> {
    /// Assembles a map from branches listed left to right.
    ///
    /// `orders[i]` holds `(l(c-), l(c+))` for the boundary between branch `i`
    /// and branch `i + 1`.
    pub fn new(
        name: impl Into<String>,
        params: BTreeMap<String, f64>,
        branches: Vec<Branch<T>>,
        orders: &[(T, T)],
    ) -> Result<Self> {
        let name = name.into();
        if branches.is_empty() {
            return Err(Error::InvalidMap(format!("{name}: no branches")));
        }
        if orders.len() + 1 != branches.len() {
            return Err(Error::InvalidMap(format!(
                "{name}: {} branches need {} boundary orders, got {}",
                branches.len(),
                branches.len() - 1,
                orders.len()
            )));
        }
        if branches[0].domain.lo != T::zero() || branches[branches.len() - 1].domain.hi != T::one()
        {
            return Err(Error::InvalidMap(format!(
                "{name}: branch domains must cover [0, 1]"
            )));
        }
        for w in branches.windows(2) {
            if w[0].domain.hi != w[1].domain.lo {
                return Err(Error::InvalidMap(format!(
                    "{name}: branch domains do not abut at {} / {}",
                    w[0].domain.hi, w[1].domain.lo
                )));
            }
        }
        let unit = Interval::unit();
        for b in &branches {
            if !unit.contains(b.lo_value) || !unit.contains(b.hi_value) {
                return Err(Error::InvalidMap(format!(
                    "{name}: branch on [{}, {}] leaves [0, 1]",
                    b.domain.lo, b.domain.hi
                )));
            }
        }
        let mut critical = Vec::with_capacity(orders.len());
        for (i, &(l_left, l_right)) in orders.iter().enumerate() {
            for l in [l_left, l_right] {
                if !(l >= T::one()) || !l.is_finite() {
                    return Err(Error::InvalidMap(format!(
                        "{name}: critical order {l} is outside [1, inf)"
                    )));
                }
            }
            critical.push(CriticalPoint {
                location: branches[i].domain.hi,
                order_left: l_left,
                order_right: l_right,
                value_left: branches[i].hi_value,
                value_right: branches[i + 1].lo_value,
            });
        }
        Ok(Self {
            name,
            params,
            branches,
            critical,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn critical_points(&self) -> &[CriticalPoint<T>] {
        &self.critical
    }

    /// Largest one-sided order over the critical set (1 when it is empty).
    pub fn l_max(&self) -> T {
        self.critical
            .iter()
            .fold(T::one(), |m, c| m.max(c.order_left).max(c.order_right))
    }

    /// Index of the critical point located exactly at `x`.
    pub fn critical_index(&self, x: T) -> Option<usize> {
        self.critical.iter().position(|c| c.location == x)
    }

    /// Index of the branch owning `x` on the given side.
    pub fn branch_index(&self, x: T, side: Side) -> Result<usize> {
        if !(x >= T::zero() && x <= T::one()) {
            return Err(Error::OutOfDomain { x: x.as_f64() });
        }
        if let Some(i) = self.critical_index(x) {
            return match side {
                Side::Left => Ok(i),
                Side::Right => Ok(i + 1),
                Side::Interior => Err(Error::SideRequired { x: x.as_f64() }),
            };
        }
        let idx = self.branches.partition_point(|b| b.domain.hi < x);
        Ok(idx.min(self.branches.len() - 1))
    }

    /// The branch owning `x` on the given side.
    pub fn branch_at(&self, x: T, side: Side) -> Result<&Branch<T>> {
        self.branch_index(x, side).map(|i| &self.branches[i])
    }

    /// `f(x)`, or the one-sided limit `f(c±)` when `x` is a critical point.
    pub fn eval(&self, x: T, side: Side) -> Result<T> {
        let branch = self.branch_at(x, side)?;
        Ok(branch.value_closed(x))
    }

    /// Analytic derivative of order 1, 2 or 3 of the branch owning `x`.
    pub fn deriv(&self, x: T, order: u8, side: Side) -> Result<T> {
        let branch = self.branch_at(x, side)?;
        branch
            .derivative(x, order)
            .ok_or(Error::UndefinedDerivative { order })
    }

    /// Structural description suitable for report provenance.
    pub fn descriptor(&self) -> MapDescriptor<T> {
        MapDescriptor {
            name: self.name.clone(),
            params: self.params.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchDescriptor {
                    domain: b.domain,
                    orientation: b.orientation,
                    lo_value: b.lo_value,
                    hi_value: b.hi_value,
                })
                .collect(),
            critical: self.critical.clone(),
        }
    }
}

impl<T: Real> Serialize for MapSpec<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.descriptor().serialize(serializer)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchDescriptor<T> {
    pub domain: Interval<T>,
    pub orientation: Orientation,
    pub lo_value: T,
    pub hi_value: T,
}

/// Everything about a map except its formulas.
#[derive(Debug, Clone, Serialize)]
pub struct MapDescriptor<T> {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub branches: Vec<BranchDescriptor<T>>,
    pub critical: Vec<CriticalPoint<T>>,
}
