//! Builtin map families.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Branch, MapSpec};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Real;

/// Names accepted by [`builtin`].
pub const FAMILIES: &[&str] = &[
    "doubling",
    "tent",
    "logistic",
    "asymmetric_unimodal",
    "lorenz_affine",
    "lorenz_power",
    "gap_affine",
];

/// Builds a named family member.
///
/// | family | parameters (defaults) |
/// |---|---|
/// | `doubling` | none |
/// | `tent` | `slope` (2) in (0, 2] |
/// | `logistic` | `mu` (4) in (0, 4] |
/// | `asymmetric_unimodal` | `c` (0.5), `l_left` (2), `l_right` (2.5), `top` (1) |
/// | `lorenz_affine` | `c` (0.5), `left0` (0), `v_left` (1), `v_right` (0), `right1` (1) |
/// | `lorenz_power` | as `lorenz_affine` plus `l_left` (1.5), `l_right` (2.5) |
/// | `gap_affine` | `c` (0.5), `slope` (0.4), `b_left` (0.3), `b_right` (0.35) |
///
/// Unknown parameter names are rejected.
pub fn builtin<T: Real>(name: &str, params: &BTreeMap<String, f64>) -> Result<MapSpec<T>> {
    let mut p = Params::new(name, params);
    let map = match name {
        "doubling" => doubling(&mut p),
        "tent" => tent(&mut p),
        "logistic" => logistic(&mut p),
        "asymmetric_unimodal" => asymmetric_unimodal(&mut p),
        "lorenz_affine" => lorenz_affine(&mut p),
        "lorenz_power" => lorenz_power(&mut p),
        "gap_affine" => gap_affine(&mut p),
        _ => return Err(Error::UnknownFamily(name.to_string())),
    }?;
    p.finish()?;
    Ok(map)
}

struct Params<'a> {
    family: &'a str,
    given: &'a BTreeMap<String, f64>,
    seen: BTreeSet<&'static str>,
    resolved: BTreeMap<String, f64>,
}

impl<'a> Params<'a> {
    fn new(family: &'a str, given: &'a BTreeMap<String, f64>) -> Self {
        Self {
            family,
            given,
            seen: BTreeSet::new(),
            resolved: BTreeMap::new(),
        }
    }

    fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.seen.insert(key);
        let v = self.given.get(key).copied().unwrap_or(default);
        self.resolved.insert(key.to_string(), v);
        v
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidParams {
            family: self.family.to_string(),
            reason: reason.into(),
        }
    }

    fn require(&self, ok: bool, reason: impl Into<String>) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.invalid(reason))
        }
    }

    fn finish(&self) -> Result<()> {
        match self.given.keys().find(|k| !self.seen.contains(k.as_str())) {
            Some(k) => Err(self.invalid(format!("unknown parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

fn constant<T: Real>(v: T) -> Arc<dyn Fn(T) -> T + Send + Sync> {
    Arc::new(move |_| v)
}

/// `x -> slope * x + intercept` on `[lo, hi]`.
fn affine_branch<T: Real>(lo: f64, hi: f64, slope: f64, intercept: f64) -> Result<Branch<T>> {
    let (s, b) = (lit::<T>(slope), lit::<T>(intercept));
    let (tlo, thi) = (lit::<T>(lo), lit::<T>(hi));
    Branch::new(
        Interval::new(tlo, thi)?,
        Arc::new(move |x| s * x + b),
        s * tlo + b,
        s * thi + b,
    )
    .map(|br| br.with_derivatives(constant(s), constant(T::zero()), constant(T::zero())))
}

/// `x -> v + a * u^l` with `u = sigma * (x - anchor) / width >= 0` on `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
fn power_branch<T: Real>(
    lo: f64,
    hi: f64,
    anchor: f64,
    width: f64,
    sigma: f64,
    v: f64,
    far: f64,
    l: f64,
) -> Result<Branch<T>> {
    let (anchor_t, width_t, sigma_t) = (lit::<T>(anchor), lit::<T>(width), lit::<T>(sigma));
    // `a` is formed in T so that the far end value is exact in every scalar.
    let (v_t, far_t, l_t) = (lit::<T>(v), lit::<T>(far), lit::<T>(l));
    let a_t = far_t - v_t;
    let u = move |x: T| (sigma_t * (x - anchor_t) / width_t).max(T::zero());
    // Coefficient times u^e, with zero coefficients short-circuiting 0 * inf.
    let term = move |coef: T, x: T, e: T| {
        if coef == T::zero() {
            T::zero()
        } else {
            coef * u(x).powf(e)
        }
    };
    let one = T::one();
    let two = lit::<T>(2.0);
    let ds = sigma_t / width_t;
    let c1 = a_t * l_t * ds;
    let c2 = a_t * l_t * (l_t - one) * ds * ds;
    let c3 = a_t * l_t * (l_t - one) * (l_t - two) * ds * ds * ds;
    let eval = move |x: T| v_t + a_t * u(x).powf(l_t);
    let (tlo, thi) = (lit::<T>(lo), lit::<T>(hi));
    let (lo_value, hi_value) = if sigma > 0.0 { (v_t, far_t) } else { (far_t, v_t) };
    Branch::new(Interval::new(tlo, thi)?, Arc::new(eval), lo_value, hi_value).map(|b| {
        b.with_derivatives(
            Arc::new(move |x| term(c1, x, l_t - one)),
            Arc::new(move |x| term(c2, x, l_t - two)),
            Arc::new(move |x| term(c3, x, l_t - lit::<T>(3.0))),
        )
    })
}

fn orders<T: Real>(l_left: f64, l_right: f64) -> (T, T) {
    (lit(l_left), lit(l_right))
}

fn doubling<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let branches = vec![
        affine_branch(0.0, 0.5, 2.0, 0.0)?,
        affine_branch(0.5, 1.0, 2.0, -1.0)?,
    ];
    MapSpec::new("doubling", p.resolved.clone(), branches, &[orders(1.0, 1.0)])
}

fn tent<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let s = p.get("slope", 2.0);
    p.require(s > 0.0 && s <= 2.0, format!("slope {s} outside (0, 2]"))?;
    let branches = vec![
        affine_branch(0.0, 0.5, s, 0.0)?,
        affine_branch(0.5, 1.0, -s, s)?,
    ];
    MapSpec::new("tent", p.resolved.clone(), branches, &[orders(1.0, 1.0)])
}

fn logistic<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let mu = p.get("mu", 4.0);
    p.require(mu > 0.0 && mu <= 4.0, format!("mu {mu} outside (0, 4]"))?;
    let m = lit::<T>(mu);
    let two = lit::<T>(2.0);
    let make = |lo: f64, hi: f64| -> Result<Branch<T>> {
        let (tlo, thi) = (lit::<T>(lo), lit::<T>(hi));
        let f = move |x: T| m * x * (T::one() - x);
        Branch::new(Interval::new(tlo, thi)?, Arc::new(f), f(tlo), f(thi)).map(|b| {
            b.with_derivatives(
                Arc::new(move |x| m * (T::one() - two * x)),
                constant(-two * m),
                constant(T::zero()),
            )
        })
    };
    let branches = vec![make(0.0, 0.5)?, make(0.5, 1.0)?];
    MapSpec::new("logistic", p.resolved.clone(), branches, &[orders(2.0, 2.0)])
}

fn check_location(p: &Params<'_>, c: f64) -> Result<()> {
    p.require(c > 0.0 && c < 1.0, format!("c {c} outside (0, 1)"))
}

fn check_order(p: &Params<'_>, key: &str, l: f64) -> Result<()> {
    p.require(
        l >= 1.0 && l.is_finite(),
        format!("{key} {l} outside [1, inf)"),
    )
}

fn check_value(p: &Params<'_>, key: &str, v: f64) -> Result<()> {
    p.require((0.0..=1.0).contains(&v), format!("{key} {v} outside [0, 1]"))
}

fn asymmetric_unimodal<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let c = p.get("c", 0.5);
    let l_left = p.get("l_left", 2.0);
    let l_right = p.get("l_right", 2.5);
    let top = p.get("top", 1.0);
    check_location(p, c)?;
    check_order(p, "l_left", l_left)?;
    check_order(p, "l_right", l_right)?;
    p.require(top > 0.0 && top <= 1.0, format!("top {top} outside (0, 1]"))?;
    let branches = vec![
        power_branch(0.0, c, c, c, -1.0, top, 0.0, l_left)?,
        power_branch(c, 1.0, c, 1.0 - c, 1.0, top, 0.0, l_right)?,
    ];
    MapSpec::new(
        "asymmetric_unimodal",
        p.resolved.clone(),
        branches,
        &[orders(l_left, l_right)],
    )
}

struct LorenzValues {
    c: f64,
    left0: f64,
    v_left: f64,
    v_right: f64,
    right1: f64,
}

fn lorenz_values(p: &mut Params<'_>) -> Result<LorenzValues> {
    let v = LorenzValues {
        c: p.get("c", 0.5),
        left0: p.get("left0", 0.0),
        v_left: p.get("v_left", 1.0),
        v_right: p.get("v_right", 0.0),
        right1: p.get("right1", 1.0),
    };
    check_location(p, v.c)?;
    for (key, x) in [
        ("left0", v.left0),
        ("v_left", v.v_left),
        ("v_right", v.v_right),
        ("right1", v.right1),
    ] {
        check_value(p, key, x)?;
    }
    p.require(
        v.v_left > v.left0 && v.right1 > v.v_right,
        "both branches must be increasing (v_left > left0, right1 > v_right)",
    )?;
    Ok(v)
}

fn lorenz_affine<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let v = lorenz_values(p)?;
    let sl = (v.v_left - v.left0) / v.c;
    let sr = (v.right1 - v.v_right) / (1.0 - v.c);
    let branches = vec![
        affine_branch(0.0, v.c, sl, v.left0)?,
        affine_branch(v.c, 1.0, sr, v.v_right - sr * v.c)?,
    ];
    MapSpec::new(
        "lorenz_affine",
        p.resolved.clone(),
        branches,
        &[orders(1.0, 1.0)],
    )
}

fn lorenz_power<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let v = lorenz_values(p)?;
    let l_left = p.get("l_left", 1.5);
    let l_right = p.get("l_right", 2.5);
    check_order(p, "l_left", l_left)?;
    check_order(p, "l_right", l_right)?;
    let branches = vec![
        power_branch(0.0, v.c, v.c, v.c, -1.0, v.v_left, v.left0, l_left)?,
        power_branch(v.c, 1.0, v.c, 1.0 - v.c, 1.0, v.v_right, v.right1, l_right)?,
    ];
    MapSpec::new(
        "lorenz_power",
        p.resolved.clone(),
        branches,
        &[orders(l_left, l_right)],
    )
}

fn gap_affine<T: Real>(p: &mut Params<'_>) -> Result<MapSpec<T>> {
    let c = p.get("c", 0.5);
    let slope = p.get("slope", 0.4);
    let b_left = p.get("b_left", 0.3);
    let b_right = p.get("b_right", 0.35);
    check_location(p, c)?;
    p.require(slope > 0.0, format!("slope {slope} must be positive"))?;
    for (key, v) in [
        ("b_left", b_left),
        ("slope * c + b_left", slope * c + b_left),
        ("slope * c + b_right", slope * c + b_right),
        ("slope + b_right", slope + b_right),
    ] {
        check_value(p, key, v)?;
    }
    let branches = vec![
        affine_branch(0.0, c, slope, b_left)?,
        affine_branch(c, 1.0, slope, b_right)?,
    ];
    MapSpec::new("gap_affine", p.resolved.clone(), branches, &[orders(1.0, 1.0)])
}
