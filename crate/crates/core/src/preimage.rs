//! Exact preimages of interval sets by branchwise inversion, and the
//! experiments built on them: preimage measure bounds near critical points,
//! worst-case preimage exponents, and the wandering-interval disjointness
//! test.
//!
//! Every branch is monotone, so the preimage of an interval under one branch
//! is the interval spanned by the inverses of its (clipped) endpoints. No grid
//! scan is involved; the only error is the root finder's.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::interval::{Interval, IntervalSet};
use crate::map::{Branch, MapSpec, Orientation, Side};
use crate::scalar::Real;

/// Iteration cap of the branch root finder.
pub const MAX_INVERSION_ITERATIONS: usize = 200;
/// Residual `|f(x) - y|` the root finder guarantees.
pub const INVERSION_RESIDUAL: f64 = 1e-12;
/// Iterates overlapping by less than this are not counted as colliding.
pub const COLLISION_OVERLAP: f64 = 1e-12;
/// Sets with more components than this are inverted in parallel.
const PARALLEL_THRESHOLD: usize = 4096;

/// Solves `branch(x) = y` on the branch domain.
///
/// Returns `None` when `y` lies outside the branch's closed image. Uses a
/// bracketed Newton iteration that falls back to bisection whenever the
/// Newton step leaves the bracket or the derivative is unusable (near
/// critical endpoints).
pub fn invert_branch<T: Real>(branch: &Branch<T>, y: T) -> Result<Option<T>> {
    let dom = branch.domain();
    let (f_lo, f_hi) = (branch.lo_value(), branch.hi_value());
    if !branch.range().contains(y) {
        return Ok(None);
    }
    if y == f_lo {
        return Ok(Some(dom.lo));
    }
    if y == f_hi {
        return Ok(Some(dom.hi));
    }
    let increasing = branch.orientation() == Orientation::Increasing;
    let (mut lo, mut hi) = (dom.lo, dom.hi);
    // Secant guess from the endpoint values.
    let mut x = lo + (y - f_lo) / (f_hi - f_lo) * (hi - lo);
    if !(x > lo && x < hi) {
        x = lo + (hi - lo) / T::lit(2.0);
    }
    let eps = T::unit_roundoff();
    let two = T::lit(2.0);
    let mut best = (T::infinity(), x);
    let mut prev_r = T::infinity();
    for _ in 0..MAX_INVERSION_ITERATIONS {
        let r = branch.value(x) - y;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r == T::zero() {
            return Ok(Some(x));
        }
        if (r < T::zero()) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= T::lit(4.0) * eps * lo.abs().max(hi.abs()) {
            return Ok(Some(best.1));
        }
        // Newton only while it is making progress; rounding noise in the
        // residual otherwise makes it wander inside the bracket.
        let newton = (r.abs() <= prev_r / two)
            .then(|| branch.derivative(x, 1))
            .flatten()
            .filter(|d| d.is_finite() && *d != T::zero())
            .map(|d| x - r / d);
        prev_r = r.abs();
        x = match newton {
            Some(n) if n > lo && n < hi => {
                if (n - x).abs() <= T::lit(4.0) * eps * x.abs() {
                    let rn = (branch.value(n) - y).abs();
                    return Ok(Some(if rn < best.0 { n } else { best.1 }));
                }
                n
            }
            _ => lo + (hi - lo) / two,
        };
    }
    Err(Error::NoConvergence {
        y: y.as_f64(),
        iterations: MAX_INVERSION_ITERATIONS,
    })
}

/// Preimage of one interval under one branch, `None` when empty.
pub fn branch_preimage<T: Real>(branch: &Branch<T>, target: &Interval<T>) -> Result<Option<Interval<T>>> {
    let range = branch.range();
    let (a, b) = (target.lo.max(range.lo), target.hi.min(range.hi));
    if !(a < b) {
        return Ok(None);
    }
    let xa = invert_branch(branch, a)?.expect("clipped endpoint lies in the image");
    let xb = invert_branch(branch, b)?.expect("clipped endpoint lies in the image");
    Ok(Some(Interval::spanning(xa, xb)))
}

/// `f⁻¹(target)`.
///
/// Produces at most (branch count) x (component count) components before
/// merging. Branch domains are ordered, and each branch maps a sorted target
/// to a sorted (or reversed) run, so the pieces concatenate in order.
pub fn preimage_once<T: Real>(map: &MapSpec<T>, target: &IntervalSet<T>) -> Result<IntervalSet<T>> {
    let mut pieces = Vec::with_capacity(target.len() * map.branches().len());
    for b in map.branches() {
        let run: Vec<Option<Interval<T>>> = if target.len() > PARALLEL_THRESHOLD {
            target
                .intervals()
                .par_iter()
                .map(|iv| branch_preimage(b, iv))
                .collect::<Result<_>>()?
        } else {
            target
                .intervals()
                .iter()
                .map(|iv| branch_preimage(b, iv))
                .collect::<Result<_>>()?
        };
        let start = pieces.len();
        pieces.extend(run.into_iter().flatten());
        if b.orientation() == Orientation::Decreasing {
            pieces[start..].reverse();
        }
    }
    Ok(IntervalSet::from_sorted(pieces))
}

/// `f⁻ⁿ(target)`; `n = 0` returns the target.
pub fn preimage_set<T: Real>(map: &MapSpec<T>, target: &IntervalSet<T>, n: usize) -> Result<IntervalSet<T>> {
    let mut set = target.clone();
    for _ in 0..n {
        set = preimage_once(map, &set)?;
    }
    Ok(set)
}

/// The sequence `f⁻¹(target), ..., f⁻ⁿ(target)`, reported measure by measure.
fn preimage_measures<T: Real>(map: &MapSpec<T>, target: &IntervalSet<T>, n: usize) -> Result<Vec<(T, usize)>> {
    let mut set = target.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        set = preimage_once(map, &set)?;
        out.push((set.measure(), set.len()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVerdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Cell<T> {
    pub n: usize,
    pub eps: T,
    pub measure: T,
    /// `|f⁻ⁿ(B(c, ε))| / ε`.
    pub ratio: T,
    pub components: usize,
}

/// Preimage measures of shrinking balls around a critical point.
#[derive(Debug, Clone, Serialize)]
pub struct Prop1Report<T> {
    pub critical: T,
    pub n_max: usize,
    pub cells: Vec<Prop1Cell<T>>,
    pub max_ratio: T,
    pub argmax_n: usize,
    pub argmax_eps: T,
    /// Largest ratio over `n` for each ε, in grid order.
    pub max_ratio_per_eps: Vec<(T, T)>,
    pub verdict: BoundVerdict,
}

/// Measures `|f⁻ⁿ(B(c, ε))|` for `1 <= n <= n_max` and every ε.
///
/// The verdict is `bounded` when the largest ratio at the two smallest ε
/// agree within a factor of 2.
pub fn prop1_check<T: Real>(
    map: &MapSpec<T>,
    c: T,
    eps_grid: &[T],
    n_max: usize,
) -> Result<Prop1Report<T>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if eps_grid.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon grid".into()));
    }
    for &eps in eps_grid {
        if !(eps > T::zero()) || !Interval::ball(c, eps).is_within_unit() {
            return Err(Error::InvalidArgument(format!(
                "B({c}, {eps}) is not contained in [0, 1]"
            )));
        }
    }
    let per_eps: Vec<Vec<Prop1Cell<T>>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let ball = IntervalSet::single(Interval::ball(c, eps));
            preimage_measures(map, &ball, n_max).map(|ms| {
                ms.into_iter()
                    .enumerate()
                    .map(|(i, (measure, components))| Prop1Cell {
                        n: i + 1,
                        eps,
                        measure,
                        ratio: measure / eps,
                        components,
                    })
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio_per_eps: Vec<(T, T)> = per_eps
        .iter()
        .zip(eps_grid)
        .map(|(cells, &eps)| (eps, cells.iter().fold(T::zero(), |m, c| m.max(c.ratio))))
        .collect();
    let cells: Vec<Prop1Cell<T>> = per_eps.into_iter().flatten().collect();
    let best = cells
        .iter()
        .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).expect("NaN ratio"))
        .expect("non-empty grid");
    let (max_ratio, argmax_n, argmax_eps) = (best.ratio, best.n, best.eps);

    let mut by_eps = max_ratio_per_eps.clone();
    by_eps.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN epsilon"));
    let verdict = match by_eps.as_slice() {
        [(_, smallest), (_, second), ..] => {
            let r = *smallest / *second;
            if r.is_finite() && r <= T::lit(2.0) && r >= T::lit(0.5) {
                BoundVerdict::Bounded
            } else {
                BoundVerdict::Unbounded
            }
        }
        _ => BoundVerdict::Inconclusive,
    };
    Ok(Prop1Report {
        critical: c,
        n_max,
        cells,
        max_ratio,
        argmax_n,
        argmax_eps,
        max_ratio_per_eps,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind<T> {
    Random { trial: usize },
    /// Interval of the given size around a one-sided critical value.
    CriticalValue { critical: T, side: Side, value: T },
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Prop2Target<T> {
    pub size: T,
    pub target: TargetKind<T>,
    pub set: IntervalSet<T>,
    /// `max_{n <= N} |f⁻ⁿ(A)|` and where it was attained.
    pub worst_measure: T,
    pub worst_n: usize,
    /// `|f⁻ⁿ(A)|` for `n = 1..=N`.
    #[serde(skip)]
    pub measures: Vec<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop2Cell<T> {
    pub n: usize,
    pub size: T,
    /// Largest `|f⁻ⁿ(A)|` over all targets of this size.
    pub max_measure: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop2Row<T> {
    pub size: T,
    pub worst_measure: T,
    pub worst_random: T,
    pub worst_critical: T,
}

/// Worst-case preimage measures against target size.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Prop2Report<T> {
    pub seed: u64,
    pub n_max: usize,
    pub trials: usize,
    pub l_max: T,
    /// `1 / l_max`, the exponent the bound permits.
    pub exponent_bound: T,
    pub rows: Vec<Prop2Row<T>>,
    pub grid: Vec<Prop2Cell<T>>,
    /// Log-log slope of the overall worst case against size.
    pub slope: T,
    /// Log-log slope over targets centred at critical values only.
    pub critical_slope: T,
    pub targets: Vec<Prop2Target<T>>,
}

/// Per-cell seed derived from the run seed.
pub fn cell_seed(seed: u64, cell: u64) -> u64 {
    seed ^ cell.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Union of up to three disjoint intervals of total measure `size`, placed
/// uniformly at random.
pub fn random_target<T: Real, R: Rng>(rng: &mut R, size: T) -> IntervalSet<T> {
    let parts = rng.random_range(1..=3usize);
    let mut weights: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let free = T::one() - size;
    let mut gaps: Vec<T> = (0..parts).map(|_| free * T::lit(rng.random::<f64>())).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("NaN gap"));
    let mut used = T::zero();
    let mut out = Vec::with_capacity(parts);
    for (gap, w) in gaps.into_iter().zip(weights) {
        let len = size * T::lit(w);
        let lo = gap + used;
        out.push(Interval::spanning(lo, (lo + len).min(T::one())));
        used = used + len;
    }
    IntervalSet::from_intervals(out)
}

/// Interval of length `size` centred at `value`, shifted to fit in `[0, 1]`.
pub fn centred_target<T: Real>(value: T, size: T) -> IntervalSet<T> {
    let half = size / T::lit(2.0);
    let lo = (value - half).max(T::zero()).min(T::one() - size);
    IntervalSet::single(Interval::spanning(lo, lo + size))
}

/// For each size, the worst preimage measure over `n <= n_max` among seeded
/// random targets and targets centred at every one-sided critical value.
pub fn prop2_check<T: Real>(
    map: &MapSpec<T>,
    sizes: &[T],
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Prop2Report<T>> {
    if trials < 10 {
        return Err(Error::InvalidArgument("at least 10 trials are required".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two target sizes".into()));
    }
    for &s in sizes {
        if !(s > T::zero() && s <= T::lit(0.1)) {
            return Err(Error::InvalidArgument(format!("target size {s} outside (0, 0.1]")));
        }
    }
    let mut jobs = Vec::new();
    for (si, &size) in sizes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, si as u64));
        for trial in 0..trials {
            jobs.push((size, TargetKind::Random { trial }, random_target(&mut rng, size)));
        }
        for c in map.critical_points() {
            for side in [Side::Left, Side::Right] {
                let value = c.value(side)?;
                jobs.push((
                    size,
                    TargetKind::CriticalValue {
                        critical: c.location,
                        side,
                        value,
                    },
                    centred_target(value, size),
                ));
            }
        }
    }
    let targets: Vec<Prop2Target<T>> = jobs
        .into_par_iter()
        .map(|(size, target, set)| {
            let ms = preimage_measures(map, &set, n_max)?;
            let (worst_n, worst_measure) = ms
                .iter()
                .enumerate()
                .fold((0, set.measure()), |(bn, bm), (i, &(m, _))| {
                    if m > bm {
                        (i + 1, m)
                    } else {
                        (bn, bm)
                    }
                });
            Ok(Prop2Target {
                size,
                target,
                set,
                worst_measure,
                worst_n,
                measures: ms.into_iter().map(|(m, _)| m).collect(),
            })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Prop2Row<T>> = sizes
        .iter()
        .map(|&size| {
            let of_size = targets.iter().filter(|t| t.size == size);
            let mut row = Prop2Row {
                size,
                worst_measure: T::zero(),
                worst_random: T::zero(),
                worst_critical: T::zero(),
            };
            for t in of_size {
                row.worst_measure = row.worst_measure.max(t.worst_measure);
                match t.target {
                    TargetKind::Random { .. } => row.worst_random = row.worst_random.max(t.worst_measure),
                    TargetKind::CriticalValue { .. } => {
                        row.worst_critical = row.worst_critical.max(t.worst_measure)
                    }
                }
            }
            row
        })
        .collect();
    let grid: Vec<Prop2Cell<T>> = sizes
        .iter()
        .flat_map(|&size| {
            let targets = &targets;
            (1..=n_max).map(move |n| Prop2Cell {
                n,
                size,
                max_measure: targets
                    .iter()
                    .filter(|t| t.size == size)
                    .fold(T::zero(), |m, t| m.max(t.measures[n - 1])),
            })
        })
        .collect();
    let log_sizes: Vec<T> = rows.iter().map(|r| r.size.ln()).collect();
    let slope_of = |ys: Vec<T>| linear_fit(&log_sizes, &ys).map_or(T::nan(), |f| f.slope);
    let slope = slope_of(rows.iter().map(|r| r.worst_measure.ln()).collect());
    let critical_slope = slope_of(rows.iter().map(|r| r.worst_critical.ln()).collect());
    let l_max = map.l_max();
    Ok(Prop2Report {
        seed,
        n_max,
        trials,
        l_max,
        exponent_bound: T::one() / l_max,
        rows,
        grid,
        slope,
        critical_slope,
        targets,
    })
}

/// Result of following an interval forward.
///
/// Only conditions (a) pairwise disjointness and (c) homeomorphic iterates
/// are tested; absorption by a periodic attractor is not examined.
#[derive(Debug, Clone, Serialize)]
pub struct WanderReport<T> {
    pub j: Interval<T>,
    pub steps: usize,
    /// Smallest `k` with `fᵏ(J)` meeting an earlier iterate.
    pub first_collision: Option<usize>,
    /// Index of the earlier iterate that was hit.
    pub collided_with: Option<usize>,
    /// Index of the first iterate whose interior contains a branch boundary.
    pub straddle: Option<usize>,
    /// Number of forward steps completed with all iterates pairwise disjoint.
    pub disjoint_count: usize,
    pub iterates: Vec<Interval<T>>,
    pub conditions_tested: &'static str,
}

/// Image of an interval lying inside one branch, using one-sided limits at
/// branch boundaries.
fn interval_image<T: Real>(branch: &Branch<T>, iv: &Interval<T>) -> Interval<T> {
    Interval::spanning(branch.value_closed(iv.lo), branch.value_closed(iv.hi))
}

/// Follows `J, f(J), ..., f^N(J)` and reports the first collision or the
/// first iterate that straddles a branch boundary.
pub fn wandering_search<T: Real>(map: &MapSpec<T>, j: Interval<T>, n: usize) -> Result<WanderReport<T>> {
    if !j.is_within_unit() || !(j.measure() > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "J = [{}, {}] must be a non-degenerate subinterval of [0, 1]",
            j.lo, j.hi
        )));
    }
    let overlap_tol = T::lit(COLLISION_OVERLAP);
    let mut iterates = vec![j];
    // Earlier iterates sorted by left endpoint, with their step index.
    let mut sorted: Vec<(Interval<T>, usize)> = vec![(j, 0)];
    let mut report = WanderReport {
        j,
        steps: n,
        first_collision: None,
        collided_with: None,
        straddle: None,
        disjoint_count: 0,
        iterates: Vec::new(),
        conditions_tested: "disjoint iterates and homeomorphic iterates; attractor basins not examined",
    };
    for k in 1..=n {
        let prev = iterates[k - 1];
        let Some(branch) = map
            .branches()
            .iter()
            .find(|b| b.domain().contains_interval(&prev))
        else {
            report.straddle = Some(k - 1);
            break;
        };
        let next = interval_image(branch, &prev);
        let pos = sorted.partition_point(|(iv, _)| iv.lo < next.lo);
        let hit = [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter_map(|i| sorted.get(i))
            .find(|(iv, _)| iv.overlap(&next) > overlap_tol);
        iterates.push(next);
        if let Some(&(_, idx)) = hit {
            report.first_collision = Some(k);
            report.collided_with = Some(idx);
            break;
        }
        sorted.insert(pos, (next, k));
        report.disjoint_count = k;
    }
    report.iterates = iterates;
    Ok(report)
}
