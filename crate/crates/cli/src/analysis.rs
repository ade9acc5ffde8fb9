//! Runs the configured analysis and collects everything the writers need.

use intervalkit::bbc::bbc_scan;
use intervalkit::export::{label, num, write_triplets, Table, Tabular};
use intervalkit::map::{builtin, check_negative_schwarzian, estimate_critical_order, SchwarzianVerdict};
use intervalkit::orbit::{
    critical_orbit, derivative_growth_check, summability_series_1, summability_series_2, GrowthVerdict,
    SeriesVerdict, SummabilityReport,
};
use intervalkit::preimage::{cell_seed, prop1_check, prop2_check, wandering_search, WanderReport};
use intervalkit::reference::logistic_l1_distance;
use intervalkit::transfer::{build_ulam, fixed_point_survey, invariance_residual, lp_regularity_check};
use intervalkit::{DoubleDouble, Interval, MapSpec, Real, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{AnalysisConfig, Config, Kind, Precision, SideChoice};
use crate::error::CliError;

/// Verdicts within this distance of the permitted exponent count as consistent.
pub const EXPONENT_SLACK: f64 = 0.05;
/// Order estimates within this distance of the declared order are consistent.
pub const ORDER_SLACK: f64 = 0.05;

/// Result of one analysis run.
pub struct Outcome {
    pub verdict: String,
    pub metric_name: &'static str,
    pub metric: Option<f64>,
    pub lines: Vec<String>,
    pub map: Value,
    pub report: Value,
    pub table: Table,
    /// Additional text files as (suffix, contents).
    pub extra: Vec<(&'static str, Vec<u8>)>,
}

pub fn execute(cfg: &Config) -> Result<Outcome, CliError> {
    match cfg.analysis.precision.unwrap_or(Precision::F64) {
        Precision::F32 => execute_with::<f32>(cfg),
        Precision::F64 => execute_with::<f64>(cfg),
        Precision::DoubleDouble => execute_with::<DoubleDouble>(cfg),
    }
}

fn to_value<S: serde::Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn lits<T: Real>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::lit(x)).collect()
}

fn execute_with<T: Real>(cfg: &Config) -> Result<Outcome, CliError> {
    let map: MapSpec<T> = builtin(&cfg.map.family, &cfg.map.params).map_err(|e| CliError::Config {
        path: "map.params".into(),
        reason: e.to_string(),
    })?;
    let a = &cfg.analysis;
    let mut out = match a.kind {
        Kind::Orbit => orbit(&map, a)?,
        Kind::Summability => summability(&map, a)?,
        Kind::Prop1 => prop1(&map, a)?,
        Kind::Prop2 => prop2(&map, a)?,
        Kind::Density => density(&map, a)?,
        Kind::Lp => lp(&map, a)?,
        Kind::Bbc => bbc(&map, a)?,
        Kind::Wander => wander(&map, a)?,
        Kind::Schwarzian => schwarzian(&map, a)?,
        Kind::Order => order(&map)?,
    };
    out.map = to_value(&map.descriptor());
    Ok(out)
}

fn outcome(verdict: impl Into<String>, metric_name: &'static str, metric: Option<f64>) -> Outcome {
    Outcome {
        verdict: verdict.into(),
        metric_name,
        metric,
        lines: Vec::new(),
        map: Value::Null,
        report: Value::Null,
        table: Table::new(Vec::new()),
        extra: Vec::new(),
    }
}

/// Selected (critical index, side) pairs.
fn orbit_starts<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Vec<(usize, Side)>, CliError> {
    let count = map.critical_points().len();
    if count == 0 {
        return Err(CliError::Config {
            path: "map.family".into(),
            reason: "the map has no critical points to follow".into(),
        });
    }
    let indices: Vec<usize> = match a.critical {
        Some(i) if i >= count => {
            return Err(CliError::Config {
                path: "analysis.critical".into(),
                reason: format!("index {i} out of range ({count} critical points)"),
            })
        }
        Some(i) => vec![i],
        None => (0..count).collect(),
    };
    let sides: &[Side] = match a.side.unwrap_or(SideChoice::Both) {
        SideChoice::Left => &[Side::Left],
        SideChoice::Right => &[Side::Right],
        SideChoice::Both => &[Side::Left, Side::Right],
    };
    Ok(indices.iter().flat_map(|&i| sides.iter().map(move |&s| (i, s))).collect())
}

fn prefixed(prefix: [&'static str; 2], values: [String; 2], inner: Table, into: &mut Table) {
    if into.columns.is_empty() {
        into.columns = prefix.iter().copied().chain(inner.columns.iter().copied()).collect();
    }
    for row in inner.rows {
        into.push(values.iter().cloned().chain(row).collect());
    }
}

fn orbit<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(200);
    let mut table = Table::new(Vec::new());
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    let mut verdicts = Vec::new();
    let mut min_slope: Option<f64> = None;
    for (i, side) in orbit_starts(map, a)? {
        let c = map.critical_points()[i];
        let record = critical_orbit(map, &c, side, n).map_err(CliError::exec(format!("orbit of critical point {i}")))?;
        let growth = derivative_growth_check(&record);
        lines.push(format!(
            "c = {} {side}: {} points, growth {} (tail slope {})",
            num(c.location),
            record.len(),
            label(&growth.verdict),
            num(growth.tail_slope)
        ));
        if growth.tail_slope.is_finite() {
            let s = growth.tail_slope.as_f64();
            min_slope = Some(min_slope.map_or(s, |m| m.min(s)));
        }
        verdicts.push(growth.verdict);
        prefixed(["critical", "side"], [num(c.location), label(&side)], record.table(), &mut table);
        reports.push(json!({ "record": to_value(&record), "growth": to_value(&growth) }));
    }
    let verdict = if verdicts.iter().all(|v| *v == GrowthVerdict::Grows) {
        GrowthVerdict::Grows
    } else if verdicts.contains(&GrowthVerdict::NotGrows) {
        GrowthVerdict::NotGrows
    } else {
        GrowthVerdict::Inconclusive
    };
    let mut o = outcome(label(&verdict), "min_tail_slope", min_slope);
    o.lines = lines;
    o.report = json!({ "orbits": reports });
    o.table = table;
    Ok(o)
}

fn series_table<T: Real>(s: &SummabilityReport<T>, series: &str, into: &mut Table) {
    prefixed(["side", "series"], [label(&s.side), series.to_string()], s.table(), into);
}

fn summability<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(200);
    let mut table = Table::new(Vec::new());
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    let mut verdicts = Vec::new();
    let mut first_total = None;
    for (i, side) in orbit_starts(map, a)? {
        let c = map.critical_points()[i];
        let record = critical_orbit(map, &c, side, n).map_err(CliError::exec(format!("orbit of critical point {i}")))?;
        let s1 = summability_series_1(&record);
        let s2 = summability_series_2(&record);
        lines.push(format!(
            "c = {} {side}: series 1 sum {} ({}), series 2 sum {} ({})",
            num(c.location),
            num(s1.total()),
            label(&s1.verdict),
            num(s2.total()),
            label(&s2.verdict)
        ));
        first_total.get_or_insert(s2.total().as_f64());
        verdicts.extend([s1.verdict, s2.verdict]);
        let mut t = Table::new(Vec::new());
        series_table(&s1, "1", &mut t);
        series_table(&s2, "2", &mut t);
        if table.columns.is_empty() {
            table.columns = std::iter::once("critical").chain(t.columns.iter().copied()).collect();
        }
        for row in t.rows {
            table.push(std::iter::once(num(c.location)).chain(row).collect());
        }
        reports.push(json!({
            "critical": num(c.location),
            "side": label(&side),
            "series_1": to_value(&s1),
            "series_2": to_value(&s2),
        }));
    }
    let verdict = if verdicts.iter().all(|v| *v == SeriesVerdict::Converges) {
        SeriesVerdict::Converges
    } else if verdicts.contains(&SeriesVerdict::Diverges) {
        SeriesVerdict::Diverges
    } else {
        SeriesVerdict::Inconclusive
    };
    let mut o = outcome(label(&verdict), "series_2_sum", first_total);
    o.lines = lines;
    o.lines.push("verdicts are fitted-tail heuristics".into());
    o.report = json!({ "orbits": reports });
    o.table = table;
    Ok(o)
}

fn prop1<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let i = a.critical.unwrap_or(0);
    let c = map.critical_points().get(i).ok_or_else(|| CliError::Config {
        path: "analysis.critical".into(),
        reason: format!("index {i} out of range ({} critical points)", map.critical_points().len()),
    })?;
    let eps = lits::<T>(a.eps.as_deref().unwrap_or(&[1e-2, 1e-3, 1e-4]));
    let r = prop1_check(map, c.location, &eps, a.n.unwrap_or(20)).map_err(CliError::exec("prop1 check"))?;
    let mut o = outcome(label(&r.verdict), "max_ratio", Some(r.max_ratio.as_f64()));
    o.lines.push(format!(
        "max |f^-n(B(c, eps))| / eps = {} at n = {}, eps = {}",
        num(r.max_ratio),
        r.argmax_n,
        num(r.argmax_eps)
    ));
    for (e, m) in &r.max_ratio_per_eps {
        o.lines.push(format!("eps = {}: max ratio {}", num(*e), num(*m)));
    }
    o.table = r.table();
    o.report = to_value(&r);
    Ok(o)
}

fn prop2<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let sizes = lits::<T>(a.sizes.as_deref().unwrap_or(&[1e-2, 1e-3, 1e-4]));
    let r = prop2_check(map, &sizes, a.n.unwrap_or(10), a.trials.unwrap_or(10), a.seed.unwrap_or(0))
        .map_err(CliError::exec("prop2 check"))?;
    let consistent = r.critical_slope.as_f64() >= r.exponent_bound.as_f64() - EXPONENT_SLACK;
    let mut o = outcome(
        if consistent { "consistent" } else { "violates" },
        "critical_slope",
        Some(r.critical_slope.as_f64()),
    );
    o.lines.push(format!(
        "worst-case slope {}, critical-value slope {}, permitted exponent 1/l_max = {}",
        num(r.slope),
        num(r.critical_slope),
        num(r.exponent_bound)
    ));
    o.table = r.table();
    o.report = to_value(&r);
    Ok(o)
}

fn density<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let k = a.k.unwrap_or(1024);
    let op = build_ulam(map, k).map_err(CliError::exec("Ulam assembly"))?;
    let survey = fixed_point_survey(
        &op,
        a.starts.unwrap_or(1),
        a.seed.unwrap_or(0),
        a.max_iters.unwrap_or(intervalkit::transfer::DEFAULT_MAX_ITERS),
        T::lit(a.tol.unwrap_or(intervalkit::transfer::DEFAULT_TOLERANCE)),
    );
    let primary = &survey.fixed_points[0];
    let residual = invariance_residual(map, &primary.density, a.test_fns.unwrap_or(8))
        .map_err(CliError::exec("invariance residual"))?;
    let full_logistic = map.name() == "logistic" && map.params().get("mu") == Some(&4.0);
    let oracle = full_logistic.then(|| logistic_l1_distance(&primary.density).as_f64());
    let verdict = if survey.fixed_points.iter().all(|f| f.converged) { "converged" } else { "not-converged" };
    let mut o = match oracle {
        Some(d) => outcome(verdict, "l1_to_oracle", Some(d)),
        None => outcome(verdict, "invariance_residual", Some(residual.as_f64())),
    };
    o.lines.push(format!(
        "k = {k}: {} iterations, Cesaro residual {}, |gP - g| = {}",
        primary.iterations,
        num(primary.residual),
        num(primary.fixed_point_residual)
    ));
    o.lines.push(format!("invariance residual {}", num(residual)));
    if let Some(d) = oracle {
        o.lines.push(format!("L1 distance to the analytic density {d}"));
    }
    if survey.fixed_points.len() > 1 {
        o.lines.push(format!(
            "{} distinct fixed points from {} starts",
            survey.fixed_points.len(),
            survey.starts
        ));
    }
    o.table = if survey.fixed_points.len() > 1 { survey.table() } else { primary.density.table() };
    o.report = json!({
        "operator": {
            "bins": op.bins(),
            "nnz": op.nnz(),
            "max_row_defect": op.max_row_defect().as_f64(),
            "renormalized_rows": op.renormalized_rows(),
        },
        "survey": to_value(&survey),
        "invariance_residual": residual.as_f64(),
        "l1_to_oracle": oracle,
    });
    if a.operator == Some(true) {
        let mut buf = Vec::new();
        write_triplets(&op, &mut buf, &[]).expect("writing to memory");
        o.extra.push(("operator.txt", buf));
    }
    Ok(o)
}

fn lp<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let p_grid = lits::<T>(a.p_grid.as_deref().unwrap_or(&[1.2, 1.5, 1.8, 2.0, 2.5]));
    let k_grid = a.k_grid.clone().unwrap_or_else(|| vec![256, 1024, 4096]);
    let r = lp_regularity_check(
        map,
        &p_grid,
        &k_grid,
        a.max_iters.unwrap_or(intervalkit::transfer::DEFAULT_MAX_ITERS),
        T::lit(a.tol.unwrap_or(intervalkit::transfer::DEFAULT_TOLERANCE)),
    )
    .map_err(CliError::exec("Lp regularity check"))?;
    let mut o = outcome(
        if r.frontier_consistent { "consistent" } else { "inconsistent" },
        "largest_bounded_p",
        r.largest_bounded.map(Real::as_f64),
    );
    for row in &r.rows {
        let ratios: Vec<String> = row.ratios.iter().map(|x| num(*x)).collect();
        o.lines.push(format!("p = {}: {} (ratios {})", num(row.p), label(&row.verdict), ratios.join(", ")));
    }
    o.lines.push(format!("threshold l_max / (l_max - 1) = {}", num(r.threshold)));
    o.table = r.table();
    o.report = to_value(&r);
    Ok(o)
}

fn bbc<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let deltas = lits::<T>(a.deltas.as_deref().unwrap_or(&[1e-1, 1e-2, 1e-3]));
    let r = bbc_scan(
        map,
        &deltas,
        a.samples.unwrap_or(10_000),
        a.horizon.unwrap_or(1_000),
        a.seed.unwrap_or(0),
    )
    .map_err(CliError::exec("backward contraction scan"))?;
    let last = r.per_delta.last().and_then(|p| p.min_first_entry_deriv).map(Real::as_f64);
    let mut o = outcome(label(&r.verdict), "min_at_smallest_delta", last);
    for p in &r.per_delta {
        o.lines.push(format!(
            "delta = {}: min |Df^n| {} (entry time {}), {} never entered",
            num(p.delta),
            p.min_first_entry_deriv.map_or("none".into(), num),
            p.entry_time.map_or("-".into(), |n| n.to_string()),
            p.never_entered
        ));
    }
    o.table = r.table();
    o.report = to_value(&r);
    Ok(o)
}

fn stop_label<T: Real>(r: &WanderReport<T>) -> &'static str {
    match (r.first_collision, r.straddle) {
        (Some(c), Some(s)) if s < c => "straddle",
        (Some(_), _) => "collision",
        (None, Some(_)) => "straddle",
        (None, None) => "disjoint",
    }
}

fn wander<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let n = a.n.unwrap_or(50);
    let bad_interval = |reason: String| CliError::Config {
        path: "analysis.interval".into(),
        reason,
    };
    if let Some([lo, hi]) = a.interval {
        let j = Interval::new(T::lit(lo), T::lit(hi)).map_err(|e| bad_interval(e.to_string()))?;
        let r = wandering_search(map, j, n).map_err(|e| bad_interval(e.to_string()))?;
        let mut o = outcome(stop_label(&r), "disjoint_count", Some(r.disjoint_count as f64));
        o.lines.push(format!(
            "J = [{lo}, {hi}]: first collision {:?}, straddle {:?}, {} disjoint steps",
            r.first_collision, r.straddle, r.disjoint_count
        ));
        o.lines.push(format!("tested: {}", r.conditions_tested));
        o.table = r.table();
        o.report = to_value(&r);
        return Ok(o);
    }
    let trials = a.trials.unwrap_or(100);
    let seed = a.seed.unwrap_or(0);
    let mut table = Table::new(vec!["trial", "lo", "hi", "first_collision", "straddle", "disjoint_count", "stop"]);
    let mut reports = Vec::with_capacity(trials);
    let mut longest = 0;
    let mut chains = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, t as u64));
        let len = 10f64.powf(-rng.random_range(2.0..=4.0));
        let lo = rng.random::<f64>() * (1.0 - len);
        let j = Interval::new(T::lit(lo), T::lit(lo + len)).map_err(CliError::exec("random interval"))?;
        let r = wandering_search(map, j, n).map_err(CliError::exec(format!("wandering search, trial {t}")))?;
        longest = longest.max(r.disjoint_count);
        if r.first_collision.is_none() && r.straddle.is_none() {
            chains += 1;
        }
        let opt = |x: Option<usize>| x.map_or(String::new(), |k| k.to_string());
        table.push(vec![
            t.to_string(),
            num(j.lo),
            num(j.hi),
            opt(r.first_collision),
            opt(r.straddle),
            r.disjoint_count.to_string(),
            stop_label(&r).into(),
        ]);
        reports.push(json!({
            "j": to_value(&r.j),
            "first_collision": r.first_collision,
            "collided_with": r.collided_with,
            "straddle": r.straddle,
            "disjoint_count": r.disjoint_count,
        }));
    }
    let mut o = outcome(
        if chains == 0 { "no-disjoint-chain" } else { "disjoint-chain" },
        "longest_disjoint_run",
        Some(longest as f64),
    );
    o.lines.push(format!(
        "{trials} random intervals, {chains} stayed disjoint for {n} steps, longest disjoint run {longest}"
    ));
    o.lines.push("tested: (a) pairwise disjoint iterates and (c) homeomorphic iterates".into());
    o.table = table;
    o.report = json!({ "trials": reports, "steps": n });
    Ok(o)
}

fn schwarzian<T: Real>(map: &MapSpec<T>, a: &AnalysisConfig) -> Result<Outcome, CliError> {
    let r = check_negative_schwarzian(map, a.samples_per_branch.unwrap_or(1000))
        .map_err(CliError::exec("Schwarzian check"))?;
    let mut o = outcome(label(&r.verdict), "worst_value", Some(r.worst_value.as_f64()));
    o.lines.push(format!(
        "worst Sf = {} at x = {} ({} samples, {} skipped)",
        num(r.worst_value),
        num(r.worst_x),
        r.samples,
        r.skipped
    ));
    if r.verdict == SchwarzianVerdict::Boundary {
        o.lines.push("Sf vanishes within tolerance: affine branches".into());
    }
    o.table = r.table();
    o.report = to_value(&r);
    Ok(o)
}

fn order<T: Real>(map: &MapSpec<T>) -> Result<Outcome, CliError> {
    let mut fits = Vec::new();
    let mut worst = 0.0_f64;
    let mut lines = Vec::new();
    for c in map.critical_points() {
        for side in [Side::Left, Side::Right] {
            let fit = estimate_critical_order(map, c, side)
                .map_err(CliError::exec(format!("order fit at {} {side}", num(c.location))))?;
            let declared = c.order(side).map_err(CliError::exec("declared order"))?;
            let err = (fit.l_hat - declared).abs().as_f64();
            worst = worst.max(err);
            lines.push(format!(
                "c = {} {side}: estimated {} declared {}",
                num(c.location),
                num(fit.l_hat),
                num(declared)
            ));
            fits.push((c.location, fit));
        }
    }
    let mut o = outcome(
        if worst < ORDER_SLACK { "consistent" } else { "inconsistent" },
        "max_order_error",
        Some(worst),
    );
    o.lines = lines;
    o.table = fits.as_slice().table();
    o.report = json!({ "fits": to_value(&fits) });
    Ok(o)
}
