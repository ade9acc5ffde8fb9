//! Bounded backward contraction: derivatives of iterates at the first entry
//! into the critical neighbourhood `N_δ = {x : |f(x) - f(c±)| < δ}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::map::{MapSpec, Side};
use crate::preimage::{branch_preimage, cell_seed};
use crate::scalar::Real;

/// Points this close to `∂N_δ` count as inside.
pub const BOUNDARY_TOLERANCE: f64 = 1e-13;
pub const MIN_SAMPLES: usize = 1_000;
pub const MIN_HORIZON: usize = 100;
/// Samples drawn per independently seeded batch.
pub const BATCH: usize = 1_024;
/// Factor within which the minima at the two smallest δ must agree.
pub const STABLE_FACTOR: f64 = 2.0;

/// `N_δ`: for every critical point and side, the points of the adjacent
/// branch whose image lies within `δ` of the one-sided critical value.
pub fn n_delta<T: Real>(map: &MapSpec<T>, delta: T) -> Result<IntervalSet<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    let mut parts = Vec::new();
    for c in map.critical_points() {
        for side in [Side::Left, Side::Right] {
            let value = c.value(side)?;
            let target = Interval::spanning((value - delta).max(T::zero()), (value + delta).min(T::one()));
            let branch = map.branch_at(c.location, side)?;
            if let Some(piece) = branch_preimage(branch, &target)? {
                parts.push(piece);
            }
        }
    }
    Ok(IntervalSet::from_intervals(parts))
}

/// First-entry statistics for one δ.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct FirstEntry<T> {
    pub delta: T,
    /// `min |Dfⁿ(x)|` over samples that entered; `None` when none did.
    pub min_first_entry_deriv: Option<T>,
    pub min_log_deriv: Option<T>,
    pub argmin_x: Option<T>,
    pub entry_time: Option<usize>,
    /// Minimum over samples that entered at `n >= 1`; samples starting
    /// inside `N_δ` contribute `|Df⁰| = 1` to the overall minimum.
    pub min_deriv_after_entry_zero: Option<T>,
    pub samples_used: usize,
    pub never_entered: usize,
    pub neighbourhood: IntervalSet<T>,
}

#[derive(Debug, Clone, Copy)]
struct Entry<T> {
    x: T,
    n: usize,
    log_deriv: T,
}

/// First `n <= horizon` with `fⁿ(x) ∈ N` and `ln |Dfⁿ(x)|`.
pub fn first_entry<T: Real>(
    map: &MapSpec<T>,
    region: &IntervalSet<T>,
    x: T,
    horizon: usize,
) -> Result<Option<(usize, T)>> {
    let tol = T::tol(BOUNDARY_TOLERANCE, 4.0);
    let mut y = x;
    let mut log_deriv = T::zero();
    for n in 0..=horizon {
        if region.contains(y, tol) {
            return Ok(Some((n, log_deriv)));
        }
        if n == horizon {
            break;
        }
        // Points of the critical set lie in the closure of N_δ, so `y` is
        // interior to a branch here.
        log_deriv = log_deriv + map.deriv(y, 1, Side::Interior)?.abs().ln();
        y = map.eval(y, Side::Interior)?;
    }
    Ok(None)
}

/// Scans `samples` seeded uniform points for their first entry into `N_δ`
/// within `horizon` steps.
pub fn first_entry_stats<T: Real>(
    map: &MapSpec<T>,
    delta: T,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<FirstEntry<T>> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples")));
    }
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidArgument(format!("horizon must be at least {MIN_HORIZON}")));
    }
    let region = n_delta(map, delta)?;
    let batches = samples.div_ceil(BATCH);
    let per_batch: Vec<(Option<Entry<T>>, Option<T>, usize, usize)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, b as u64));
            let count = BATCH.min(samples - b * BATCH);
            let mut best: Option<Entry<T>> = None;
            let mut later: Option<T> = None;
            let (mut used, mut never) = (0, 0);
            for _ in 0..count {
                let x = T::lit(rng.random::<f64>());
                match first_entry(map, &region, x, horizon)? {
                    Some((n, log_deriv)) => {
                        used += 1;
                        if best.is_none_or(|e| log_deriv < e.log_deriv) {
                            best = Some(Entry { x, n, log_deriv });
                        }
                        if n > 0 {
                            later = Some(later.map_or(log_deriv, |l| l.min(log_deriv)));
                        }
                    }
                    None => never += 1,
                }
            }
            Ok((best, later, used, never))
        })
        .collect::<Result<_>>()?;
    // Batches are reduced in order, so ties resolve to the earliest batch.
    let mut best: Option<Entry<T>> = None;
    let mut later: Option<T> = None;
    let (mut used, mut never) = (0, 0);
    for (b, l, u, n) in per_batch {
        used += u;
        never += n;
        if let Some(l) = l {
            later = Some(later.map_or(l, |cur| cur.min(l)));
        }
        if let Some(e) = b {
            if best.is_none_or(|cur| e.log_deriv < cur.log_deriv) {
                best = Some(e);
            }
        }
    }
    Ok(FirstEntry {
        delta,
        min_first_entry_deriv: best.map(|e| e.log_deriv.exp()),
        min_log_deriv: best.map(|e| e.log_deriv),
        argmin_x: best.map(|e| e.x),
        entry_time: best.map(|e| e.n),
        min_deriv_after_entry_zero: later.map(|l| l.exp()),
        samples_used: used,
        never_entered: never,
        neighbourhood: region,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BbcVerdict {
    Bounded,
    Degrading,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct BbcReport<T> {
    pub delta_grid: Vec<T>,
    pub samples: usize,
    pub horizon: usize,
    pub seed: u64,
    pub per_delta: Vec<FirstEntry<T>>,
    pub verdict: BbcVerdict,
    pub note: &'static str,
}

/// Runs [`first_entry_stats`] for each δ of a decreasing grid.
///
/// `bounded` when the minima at the two smallest δ agree within a factor of
/// 2; `degrading` when the minima fall by more than a factor of 2 per decade
/// of δ at every step; `inconclusive` otherwise.
pub fn bbc_scan<T: Real>(
    map: &MapSpec<T>,
    delta_grid: &[T],
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<BbcReport<T>> {
    if delta_grid.len() < 3 {
        return Err(Error::InvalidArgument("delta grid needs at least 3 values".into()));
    }
    if delta_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("delta grid must be decreasing".into()));
    }
    let per_delta: Vec<FirstEntry<T>> = delta_grid
        .iter()
        .map(|&d| first_entry_stats(map, d, samples, horizon, seed))
        .collect::<Result<_>>()?;
    let minima: Option<Vec<T>> = per_delta.iter().map(|p| p.min_first_entry_deriv).collect();
    let factor = T::lit(STABLE_FACTOR);
    let verdict = match minima {
        None => BbcVerdict::Inconclusive,
        Some(m) => {
            let n = m.len();
            let r = m[n - 1] / m[n - 2];
            let degrading = m.windows(2).zip(delta_grid.windows(2)).all(|(mw, dw)| {
                let decades = (dw[0] / dw[1]).log10();
                mw[1] < mw[0] && (mw[0] / mw[1]).log10() > factor.log10() * decades
            });
            if r <= factor && r >= factor.recip() {
                BbcVerdict::Bounded
            } else if degrading {
                BbcVerdict::Degrading
            } else {
                BbcVerdict::Inconclusive
            }
        }
    };
    Ok(BbcReport {
        delta_grid: delta_grid.to_vec(),
        samples,
        horizon,
        seed,
        per_delta,
        verdict,
        note: "minima are per-delta samples; a non-monotone profile is reported as observed",
    })
}
