//! Numerical analysis of piecewise C¹ interval maps on `[0, 1]` with
//! critical points and discontinuities.
//!
//! The crate checks the structural hypotheses a map is expected to satisfy
//! (one-sided critical orders, negative Schwarzian derivative, summability of
//! the derivative growth along critical orbits) and empirically probes their
//! consequences: preimage measure bounds, absence of wandering-interval
//! chains, absolutely continuous invariant densities and their `Lᵖ`
//! regularity, and bounded backward contraction.
//!
//! All numerical routines are generic over a [`Real`] scalar. The aliases at
//! the crate root fix the scalar to `f64`, which is what the experiment
//! driver uses by default, or to the double-double [`DoubleDouble`] where
//! `f64` endpoint rounding is the limiting error.

pub mod bbc;
pub mod error;
pub mod export;
pub mod fit;
pub mod interval;
pub mod map;
pub mod orbit;
pub mod preimage;
pub mod reference;
pub mod scalar;
pub mod transfer;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalSet};
pub use map::{Branch, CriticalPoint, MapSpec, Orientation, Side};
pub use scalar::Real;
pub use twofloat::TwoFloat as DoubleDouble;

/// Double-precision map.
pub type Map = MapSpec<f64>;
/// Double-double map.
pub type MapDD = MapSpec<DoubleDouble>;
/// Single-precision map.
pub type Map32 = MapSpec<f32>;
/// Double-precision interval.
pub type Interval64 = Interval<f64>;
/// Double-precision interval set.
pub type IntervalSet64 = IntervalSet<f64>;
/// Double-precision critical orbit.
pub type OrbitRecord64 = orbit::OrbitRecord<f64>;
/// Double-precision Ulam operator.
pub type UlamOperator64 = transfer::UlamOperator<f64>;
/// Double-precision piecewise-constant density.
pub type Density64 = transfer::Density<f64>;
