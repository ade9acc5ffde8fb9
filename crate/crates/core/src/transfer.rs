//! Ulam discretization of the transfer operator, stationary densities by
//! Cesàro-averaged power iteration, and `Lᵖ` refinement studies.
//!
//! The finite-dimensional fixed point together with a refinement study is a
//! computable surrogate for the invariant density; it does not establish
//! existence of the limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::map::{MapSpec, Side};
use crate::preimage::{cell_seed, invert_branch};
use crate::scalar::{neumaier_sum, Real};

/// Smallest supported bin count.
pub const MIN_BINS: usize = 16;
/// Rows whose raw sum is further than this from 1 are renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Stationary densities closer than this in `L¹` count as one fixed point.
pub const FIXED_POINT_SEPARATION: f64 = 1e-2;
/// Successive-refinement ratio of `∫ gᵖ` below which a norm counts as stable.
pub const LP_STABLE_RATIO: f64 = 1.1;

/// Uniform partition of `[0, 1]` into `k` bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Partition {
    bins: usize,
}

impl Partition {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("partition needs at least one bin".into()));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width<T: Real>(&self) -> T {
        T::one() / T::count(self.bins)
    }

    pub fn edge<T: Real>(&self, i: usize) -> T {
        if i == self.bins {
            T::one()
        } else {
            T::count(i) / T::count(self.bins)
        }
    }

    pub fn edges<T: Real>(&self) -> Vec<T> {
        (0..=self.bins).map(|i| self.edge(i)).collect()
    }

    pub fn bin<T: Real>(&self, i: usize) -> Interval<T> {
        Interval::spanning(self.edge(i), self.edge(i + 1))
    }

    /// Index of the bin containing `x`; the right end belongs to the last bin.
    pub fn locate<T: Real>(&self, x: T) -> usize {
        let i = (x * T::count(self.bins)).floor().to_usize().unwrap_or(0);
        i.min(self.bins - 1)
    }

    pub fn midpoint<T: Real>(&self, i: usize) -> T {
        (T::count(i) + T::lit(0.5)) / T::count(self.bins)
    }
}

/// Row-stochastic Ulam matrix in compressed sparse row form.
#[derive(Debug, Clone, Serialize)]
pub struct UlamOperator<T> {
    partition: Partition,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<T>,
    /// Rows whose raw sum missed 1 by more than the tolerance.
    renormalized: Vec<usize>,
    /// Largest `|row sum - 1|` before renormalization.
    max_row_defect: T,
}

impl<T: Real> UlamOperator<T> {
    /// Builds an operator from per-row `(column, value)` lists, renormalizing
    /// rows whose sum misses 1.
    pub fn from_rows(partition: Partition, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let k = partition.bins();
        if rows.len() != k {
            return Err(Error::InvalidArgument(format!("expected {k} rows, got {}", rows.len())));
        }
        let tol = T::tol(ROW_SUM_TOLERANCE, 64.0);
        let mut op = Self {
            partition,
            row_ptr: Vec::with_capacity(k + 1),
            cols: Vec::new(),
            values: Vec::new(),
            renormalized: Vec::new(),
            max_row_defect: T::zero(),
        };
        op.row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let sum = neumaier_sum(row.iter().map(|&(_, v)| v));
            let defect = (sum - T::one()).abs();
            op.max_row_defect = op.max_row_defect.max(defect);
            let scale = if defect > tol {
                if !(sum > T::zero()) {
                    return Err(Error::InvalidArgument(format!("row {i} has no mass")));
                }
                op.renormalized.push(i);
                T::one() / sum
            } else {
                T::one()
            };
            for (j, v) in row {
                if j >= k || v < T::zero() {
                    return Err(Error::InvalidArgument(format!("bad entry ({i}, {j}) = {v}")));
                }
                if v > T::zero() {
                    op.cols.push(j);
                    op.values.push((v * scale).min(T::one()));
                }
            }
            op.row_ptr.push(op.cols.len());
        }
        Ok(op)
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn bins(&self) -> usize {
        self.partition.bins()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn renormalized_rows(&self) -> &[usize] {
        &self.renormalized
    }

    pub fn max_row_defect(&self) -> T {
        self.max_row_defect
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.values[a..b])
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |p| vals[p])
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.bins())
            .map(|i| neumaier_sum(self.row(i).1.iter().copied()))
            .collect()
    }

    /// `(row, col, value)` for every stored entry, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.bins()).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Push-forward of a piecewise-constant density: `(gP)_j = Σᵢ gᵢ Pᵢⱼ`.
    pub fn push_forward(&self, g: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.bins()];
        for (i, &gi) in g.iter().enumerate() {
            if gi == T::zero() {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[j] = out[j] + gi * v;
            }
        }
        out
    }

    /// Composition action on bin functions: `(Ph)_i = Σⱼ Pᵢⱼ hⱼ`.
    pub fn pull_back(&self, h: &[T]) -> Vec<T> {
        (0..self.bins())
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).fold(T::zero(), |acc, (&j, &v)| acc + v * h[j])
            })
            .collect()
    }
}

/// Entries `(j, |Iᵢ ∩ f⁻¹(Iⱼ)|)` of row `i`, before division by `|Iᵢ|`.
fn ulam_row<T: Real>(map: &MapSpec<T>, part: Partition, i: usize) -> Result<Vec<(usize, T)>> {
    let bin = part.bin::<T>(i);
    let mut row: Vec<(usize, T)> = Vec::new();
    for b in map.branches() {
        let dom = b.domain();
        let (lo, hi) = (bin.lo.max(dom.lo), bin.hi.min(dom.hi));
        if !(lo < hi) {
            continue;
        }
        let (ylo, yhi) = (b.value_closed(lo), b.value_closed(hi));
        let image = Interval::spanning(ylo, yhi);
        let (j0, j1) = (part.locate(image.lo), part.locate(image.hi));
        // Points of [lo, hi] mapping onto interior bin edges, in image order.
        let (first, last) = if ylo <= yhi { (lo, hi) } else { (hi, lo) };
        let mut cuts = Vec::with_capacity(j1 - j0 + 2);
        cuts.push(first);
        for j in j0 + 1..=j1 {
            let edge = part.edge::<T>(j);
            cuts.push(if edge <= image.lo {
                first
            } else if edge >= image.hi {
                last
            } else {
                invert_branch(b, edge)?.expect("edge inside branch image")
            });
        }
        cuts.push(last);
        for (n, j) in (j0..=j1).enumerate() {
            let len = (cuts[n + 1] - cuts[n]).abs();
            if len > T::zero() {
                row.push((j, len));
            }
        }
    }
    row.sort_by_key(|&(j, _)| j);
    row.dedup_by(|later, earlier| {
        if later.0 == earlier.0 {
            earlier.1 = earlier.1 + later.1;
            true
        } else {
            false
        }
    });
    Ok(row)
}

/// Assembles the Ulam matrix `Pᵢⱼ = |Iᵢ ∩ f⁻¹(Iⱼ)| / |Iᵢ|` from exact branch
/// inverses of the bin edges, one row per bin.
pub fn build_ulam<T: Real>(map: &MapSpec<T>, k: usize) -> Result<UlamOperator<T>> {
    if k < MIN_BINS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_BINS} bins, got {k}")));
    }
    let part = Partition::new(k)?;
    let scale = T::count(k);
    let rows: Vec<Vec<(usize, T)>> = (0..k)
        .into_par_iter()
        .map(|i| {
            ulam_row(map, part, i).map(|r| r.into_iter().map(|(j, len)| (j, len * scale)).collect())
        })
        .collect::<Result<_>>()?;
    UlamOperator::from_rows(part, rows)
}

/// Piecewise-constant density on a uniform partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Density<T> {
    partition: Partition,
    values: Vec<T>,
}

impl<T: Real> Density<T> {
    /// Panics if the value count does not match the partition.
    pub fn new(partition: Partition, values: Vec<T>) -> Self {
        assert_eq!(partition.bins(), values.len(), "one value per bin");
        Self { partition, values }
    }

    pub fn uniform(partition: Partition) -> Self {
        Self::new(partition, vec![T::one(); partition.bins()])
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn integral(&self) -> T {
        neumaier_sum(self.values.iter().copied()) / T::count(self.partition.bins())
    }

    /// Rescales to integral 1.
    pub fn normalized(mut self) -> Self {
        let s = self.integral();
        self.values.iter_mut().for_each(|v| *v = *v / s);
        self
    }

    pub fn value_at(&self, x: T) -> T {
        self.values[self.partition.locate(x)]
    }

    /// `∫_A g`.
    pub fn mass(&self, a: &Interval<T>) -> T {
        let (i0, i1) = (self.partition.locate(a.lo), self.partition.locate(a.hi));
        neumaier_sum((i0..=i1).map(|i| self.values[i] * self.partition.bin::<T>(i).overlap(a)))
    }

    /// `L¹` distance to a density on any uniform partition, computed exactly
    /// on the common refinement.
    pub fn l1_distance(&self, other: &Self) -> T {
        let (ka, kb) = (self.partition.bins(), other.partition.bins());
        let (mut i, mut j) = (0usize, 0usize);
        let mut x = T::zero();
        let mut parts = Vec::with_capacity(ka + kb);
        while i < ka && j < kb {
            let ea = self.partition.edge::<T>(i + 1);
            let eb = other.partition.edge::<T>(j + 1);
            let next = ea.min(eb);
            parts.push((self.values[i] - other.values[j]).abs() * (next - x));
            x = next;
            // Compare exact rationals to step both indices on shared edges.
            let (na, nb) = ((i + 1) * kb, (j + 1) * ka);
            if na <= nb {
                i += 1;
            }
            if nb <= na {
                j += 1;
            }
        }
        neumaier_sum(parts)
    }

    /// `(Σ gᵢᵖ |Iᵢ|)^{1/p}`.
    pub fn lp_norm(&self, p: T) -> T {
        self.lp_integral(p).powf(T::one() / p)
    }

    /// `Σ gᵢᵖ |Iᵢ|`.
    pub fn lp_integral(&self, p: T) -> T {
        neumaier_sum(self.values.iter().map(|v| v.powf(p))) / T::count(self.partition.bins())
    }
}

/// `(Σ gᵢᵖ |Iᵢ|)^{1/p}`.
pub fn lp_norm<T: Real>(d: &Density<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    Ok(d.lp_norm(p))
}

/// Cesàro-averaged stationary density.
#[derive(Debug, Clone, Serialize)]
pub struct Stationary<T> {
    pub density: Density<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Final `L¹` difference between successive averages.
    pub residual: T,
    /// `‖gP - g‖₁` of the returned density.
    pub fixed_point_residual: T,
}

/// Cesàro average of `1, P1, P²1, ...` until successive averages differ by
/// less than `tol` in `L¹`.
pub fn stationary_density<T: Real>(op: &UlamOperator<T>, max_iters: usize, tol: T) -> Stationary<T> {
    stationary_density_from(op, Density::uniform(op.partition()), max_iters, tol)
}

/// As [`stationary_density`] from an arbitrary initial density.
pub fn stationary_density_from<T: Real>(
    op: &UlamOperator<T>,
    start: Density<T>,
    max_iters: usize,
    tol: T,
) -> Stationary<T> {
    let k = op.bins();
    let width = T::one() / T::count(k);
    let l1 = |a: &[T], b: &[T]| neumaier_sum(a.iter().zip(b).map(|(x, y)| (*x - *y).abs())) * width;
    let mut power = start.normalized().values;
    let mut sum = power.clone();
    let mut avg = power.clone();
    let mut residual = T::infinity();
    let mut iterations = 0;
    let mut converged = false;
    for n in 1..=max_iters {
        power = op.push_forward(&power);
        let inv = T::one() / T::count(n + 1);
        let next: Vec<T> = sum
            .iter_mut()
            .zip(&power)
            .map(|(s, p)| {
                *s = *s + *p;
                *s * inv
            })
            .collect();
        residual = l1(&next, &avg);
        avg = next;
        iterations = n;
        if residual < tol {
            converged = true;
            break;
        }
    }
    let density = Density::new(op.partition(), avg.into_iter().map(|v| v.max(T::zero())).collect()).normalized();
    let fixed_point_residual = l1(&op.push_forward(density.values()), density.values());
    Stationary {
        density,
        converged,
        iterations,
        residual,
        fixed_point_residual,
    }
}

/// Distinct stationary densities reached from different initial densities.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSurvey<T> {
    pub starts: usize,
    pub seed: u64,
    pub fixed_points: Vec<Stationary<T>>,
    /// For each start, the index of the fixed point it reached.
    pub assignment: Vec<usize>,
}

/// Runs the Cesàro iteration from the uniform density, from indicators of
/// evenly spaced bins, and from seeded random densities, and lists every
/// distinct limit rather than choosing one.
pub fn fixed_point_survey<T: Real>(
    op: &UlamOperator<T>,
    starts: usize,
    seed: u64,
    max_iters: usize,
    tol: T,
) -> FixedPointSurvey<T> {
    let k = op.bins();
    let part = op.partition();
    let initial: Vec<Density<T>> = (0..starts.max(1))
        .map(|s| {
            if s == 0 {
                Density::uniform(part)
            } else if s % 2 == 1 {
                let bin = ((s / 2) * k / starts.max(2)).min(k - 1);
                let mut v = vec![T::zero(); k];
                v[bin] = T::one();
                Density::new(part, v)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, s as u64));
                Density::new(part, (0..k).map(|_| T::lit(rng.random::<f64>())).collect())
            }
        })
        .collect();
    let limits: Vec<Stationary<T>> = initial
        .into_par_iter()
        .map(|d| stationary_density_from(op, d, max_iters, tol))
        .collect();
    let sep = T::lit(FIXED_POINT_SEPARATION);
    let mut fixed_points: Vec<Stationary<T>> = Vec::new();
    let mut assignment = Vec::with_capacity(limits.len());
    for lim in limits {
        match fixed_points
            .iter()
            .position(|f| f.density.l1_distance(&lim.density) < sep)
        {
            Some(idx) => assignment.push(idx),
            None => {
                assignment.push(fixed_points.len());
                fixed_points.push(lim);
            }
        }
    }
    FixedPointSurvey {
        starts: starts.max(1),
        seed,
        fixed_points,
        assignment,
    }
}

/// `max_m |∫ g_m∘f dμ - ∫ g_m dμ|` over `g_m(x) = cos(2πmx)`,
/// `m = 0..test_fns`, by the midpoint rule on the partition refined 4×.
pub fn invariance_residual<T: Real>(map: &MapSpec<T>, d: &Density<T>, test_fns: usize) -> Result<T> {
    let fine = Partition::new(d.partition().bins() * 4)?;
    let w = fine.width::<T>();
    let mut samples = Vec::with_capacity(fine.bins());
    for i in 0..fine.bins() {
        let x = fine.midpoint::<T>(i);
        let side = if map.critical_index(x).is_some() { Side::Left } else { Side::Interior };
        samples.push((x, map.eval(x, side)?, d.value_at(x) * w));
    }
    let two_pi = T::lit(2.0) * T::PI();
    Ok((0..test_fns)
        .into_par_iter()
        .map(|m| {
            let freq = two_pi * T::count(m);
            neumaier_sum(samples.iter().map(|&(x, fx, wt)| ((freq * fx).cos() - (freq * x).cos()) * wt)).abs()
        })
        .reduce(T::zero, |a, b| a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpVerdict {
    Bounded,
    Unbounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpRow<T> {
    pub p: T,
    /// `‖g_k‖_p` for each refinement.
    pub norms: Vec<T>,
    /// `∫ g_kᵖ` for each refinement.
    pub integrals: Vec<T>,
    /// Successive ratios of `∫ g_kᵖ`.
    pub ratios: Vec<T>,
    pub verdict: LpVerdict,
}

/// `Lᵖ` norms of stationary densities under refinement.
#[derive(Debug, Clone, Serialize)]
pub struct LpReport<T> {
    pub k_grid: Vec<usize>,
    pub rows: Vec<LpRow<T>>,
    /// `l_max / (l_max - 1)`, infinite when `l_max = 1`.
    pub threshold: T,
    /// Largest `p` judged bounded.
    pub largest_bounded: Option<T>,
    /// Smallest `p` judged unbounded.
    pub smallest_unbounded: Option<T>,
    /// Whether the empirical frontier brackets the threshold.
    pub frontier_consistent: bool,
    pub densities: Vec<Stationary<T>>,
    pub note: &'static str,
}

/// Computes stationary densities on each partition of `k_grid` and tracks
/// `∫ gᵖ` under refinement; `p` is judged bounded when every successive
/// ratio is below [`LP_STABLE_RATIO`].
pub fn lp_regularity_check<T: Real>(
    map: &MapSpec<T>,
    p_grid: &[T],
    k_grid: &[usize],
    max_iters: usize,
    tol: T,
) -> Result<LpReport<T>> {
    if k_grid.len() < 2 || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("k grid must be increasing with at least two entries".into()));
    }
    if let Some(p) = p_grid.iter().find(|p| !(**p >= T::one())) {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let densities: Vec<Stationary<T>> = k_grid
        .iter()
        .map(|&k| build_ulam(map, k).map(|op| stationary_density(&op, max_iters, tol)))
        .collect::<Result<_>>()?;
    let stable = T::lit(LP_STABLE_RATIO);
    let rows: Vec<LpRow<T>> = p_grid
        .iter()
        .map(|&p| {
            let norms: Vec<T> = densities.iter().map(|s| s.density.lp_norm(p)).collect();
            let integrals: Vec<T> = densities.iter().map(|s| s.density.lp_integral(p)).collect();
            let ratios: Vec<T> = integrals.windows(2).map(|w| w[1] / w[0]).collect();
            let verdict = if ratios.iter().all(|r| *r < stable) {
                LpVerdict::Bounded
            } else {
                LpVerdict::Unbounded
            };
            LpRow {
                p,
                norms,
                integrals,
                ratios,
                verdict,
            }
        })
        .collect();
    let l_max = map.l_max();
    let threshold = if l_max > T::one() { l_max / (l_max - T::one()) } else { T::infinity() };
    let largest_bounded = rows
        .iter()
        .filter(|r| r.verdict == LpVerdict::Bounded)
        .map(|r| r.p)
        .fold(None, |m: Option<T>, p| Some(m.map_or(p, |m| m.max(p))));
    let smallest_unbounded = rows
        .iter()
        .filter(|r| r.verdict == LpVerdict::Unbounded)
        .map(|r| r.p)
        .fold(None, |m: Option<T>, p| Some(m.map_or(p, |m| m.min(p))));
    let frontier_consistent = largest_bounded.is_none_or(|p| p < threshold)
        && smallest_unbounded.is_none_or(|p| p >= threshold)
        && largest_bounded.zip(smallest_unbounded).is_none_or(|(b, u)| b < u);
    Ok(LpReport {
        k_grid: k_grid.to_vec(),
        rows,
        threshold,
        largest_bounded,
        smallest_unbounded,
        frontier_consistent,
        densities,
        note: "finite-dimensional fixed points with a refinement study; not a proof of the limit",
    })
}
