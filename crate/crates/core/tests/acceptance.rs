//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use intervalkit::bbc::{bbc_scan, BbcVerdict};
use intervalkit::map::{
    builtin, check_negative_schwarzian, estimate_critical_order, SchwarzianVerdict, FAMILIES,
};
use intervalkit::orbit::{critical_orbit, summability_series_1, summability_series_2};
use intervalkit::preimage::{
    invert_branch, preimage_set, prop1_check, prop2_check, wandering_search, BoundVerdict,
};
use intervalkit::reference::{logistic_bin_masses, logistic_l1_distance};
use intervalkit::transfer::{
    build_ulam, invariance_residual, lp_regularity_check, stationary_density, Density, LpVerdict,
    Partition,
};
use intervalkit::{DoubleDouble, Interval, IntervalSet, Map, MapDD, Real, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta;

fn family(name: &str) -> Map {
    builtin(name, &BTreeMap::new()).unwrap()
}

fn family_dd(name: &str) -> MapDD {
    builtin(name, &BTreeMap::new()).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn c1_summability() -> Outcome {
    let d = family("doubling");
    let c = d.critical_points()[0];
    let s2 = summability_series_2(&critical_orbit(&d, &c, Side::Left, 100).unwrap());
    let expect = 1.0 - 0.5_f64.powi(100);
    let dev_doubling = (s2.total() - expect).abs();

    let l = family("logistic");
    let c = l.critical_points()[0];
    let record = critical_orbit(&l, &c, Side::Left, 100).unwrap();
    let (a, b) = (summability_series_1(&record), summability_series_2(&record));
    let termwise = a.terms.iter().zip(&b.terms).all(|(x, y)| x == y);
    let (dev_a, dev_b) = ((a.total() - 1.0).abs(), (b.total() - 1.0).abs());
    outcome(
        dev_doubling <= 1e-12 && dev_a <= 1e-9 && dev_b <= 1e-9 && termwise,
        format!(
            "doubling |S2 - (1 - 2^-100)| = {dev_doubling:.1e}; logistic |S1 - 1| = {dev_a:.1e}, |S2 - 1| = {dev_b:.1e}, termwise equal = {termwise}"
        ),
    )
}

fn c2_prop1() -> Outcome {
    let eps = [1e-2, 1e-3, 1e-4];
    let eps_dd: Vec<DoubleDouble> = eps.iter().map(|&e| DoubleDouble::lit(e)).collect();
    let mut worst_dd = 0.0_f64;
    let mut worst_f64 = 0.0_f64;
    for name in ["doubling", "tent"] {
        let m = family_dd(name);
        let c = m.critical_points()[0].location;
        let r = prop1_check(&m, c, &eps_dd, 20).unwrap();
        for cell in &r.cells {
            worst_dd = worst_dd.max((cell.ratio - DoubleDouble::lit(2.0)).abs().as_f64());
        }
        let m = family(name);
        let r = prop1_check(&m, 0.5, &eps, 20).unwrap();
        for cell in &r.cells {
            worst_f64 = worst_f64.max((cell.ratio - 2.0).abs());
        }
    }
    let l = family("logistic");
    let r = prop1_check(&l, 0.5, &eps, 20).unwrap();
    let stable = r.verdict == BoundVerdict::Bounded;
    outcome(
        worst_dd <= 1e-9 && stable,
        format!(
            "doubling/tent max |ratio - 2| = {worst_dd:.1e} (double-double; f64 gives {worst_f64:.1e}); logistic max ratio {:.4}, verdict {:?}",
            r.max_ratio, r.verdict
        ),
    )
}

fn c3_prop2() -> Outcome {
    let sizes = [1e-2, 1e-3, 1e-4, 1e-5];
    let l = prop2_check(&family("logistic"), &sizes, 10, 10, 7).unwrap();
    let d = prop2_check(&family("doubling"), &sizes, 10, 10, 7).unwrap();
    outcome(
        l.critical_slope >= 0.45 && (d.slope - 1.0).abs() <= 1e-6,
        format!(
            "logistic critical-value slope {:.4} (>= 0.45); doubling slope {:.9}",
            l.critical_slope, d.slope
        ),
    )
}

fn c4_wandering() -> Outcome {
    let l = family("logistic");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut stopped = 0;
    let mut latest = 0;
    for _ in 0..100 {
        let len = 10f64.powf(-rng.random_range(2.0..=4.0));
        let lo = rng.random::<f64>() * (1.0 - len);
        let r = wandering_search(&l, Interval::new(lo, lo + len).unwrap(), 50).unwrap();
        if let Some(k) = r.first_collision.or(r.straddle) {
            stopped += 1;
            latest = latest.max(k);
        }
    }
    let g = wandering_search(&family("gap_affine"), Interval::new(0.5, 0.55).unwrap(), 50).unwrap();
    let gap_ok = g.disjoint_count == 50 && g.first_collision.is_none() && g.straddle.is_none();
    outcome(
        stopped == 100 && gap_ok,
        format!(
            "logistic {stopped}/100 stopped (latest at step {latest}); gap map {}/50 disjoint",
            g.disjoint_count
        ),
    )
}

fn c5_density() -> Outcome {
    let l = family("logistic");
    let s = stationary_density(&build_ulam(&l, 4096).unwrap(), 100_000, 1e-8);
    let dist = logistic_l1_distance(&s.density);
    let resid = invariance_residual(&l, &s.density, 8).unwrap();
    let d = stationary_density(&build_ulam(&family("doubling"), 1024).unwrap(), 100_000, 1e-8);
    let flat = d.density.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        s.converged && dist < 0.05 && resid < 1e-2 && flat <= 1e-10,
        format!(
            "logistic k=4096 L1 to oracle {dist:.4}, invariance residual {resid:.1e}, {} iterations; doubling max |g - 1| = {flat:.1e}",
            s.iterations
        ),
    )
}

fn c6_lp() -> Outcome {
    let l = family("logistic");
    let p_grid = [1.2, 1.5, 1.8, 2.0, 2.5];
    let r = lp_regularity_check(&l, &p_grid, &[256, 1024, 4096], 100_000, 1e-8).unwrap();
    let expected = |p: f64| if p < 2.0 { LpVerdict::Bounded } else { LpVerdict::Unbounded };
    let verdicts_ok = r.rows.iter().all(|row| row.verdict == expected(row.p));
    let p = 1.5;
    let analytic = (beta(1.0 - p / 2.0, 1.0 - p / 2.0) / std::f64::consts::PI.powf(p)).powf(1.0 / p);
    let k = 1 << 16;
    let masses: Vec<f64> = logistic_bin_masses(k);
    let avg = Density::new(Partition::new(k).unwrap(), masses.iter().map(|m| m * k as f64).collect());
    let binned = avg.lp_norm(p);
    let summary: Vec<String> = r.rows.iter().map(|row| format!("p={} {:?}", row.p, row.verdict)).collect();
    outcome(
        verdicts_ok && (analytic - 1.21).abs() <= 0.05 && (binned - 1.21).abs() <= 0.05,
        format!(
            "{}; analytic L^1.5 norm {analytic:.5}, bin averages at k=2^16 {binned:.5}",
            summary.join(", ")
        ),
    )
}

fn c7_bbc() -> Outcome {
    let deltas = [1e-1, 1e-2, 1e-3];
    let d = bbc_scan(&family("doubling"), &deltas, 10_000, 1_000, 3).unwrap();
    let ones = d.per_delta.iter().all(|p| p.min_first_entry_deriv == Some(1.0));
    let l = bbc_scan(&family("logistic"), &deltas, 10_000, 1_000, 3).unwrap();
    let minima: Vec<f64> = l.per_delta.iter().filter_map(|p| p.min_first_entry_deriv).collect();
    let positive = minima.len() == 3 && minima.iter().all(|m| *m > 0.0);
    let g = bbc_scan(&family("gap_affine"), &deltas, 10_000, 1_000, 3).unwrap();
    let gap_minima: Vec<String> = g
        .per_delta
        .iter()
        .map(|p| p.min_first_entry_deriv.map_or("none".into(), |m| format!("{m:.3e}")))
        .collect();
    outcome(
        ones && positive && l.verdict == BbcVerdict::Bounded && g.verdict == BbcVerdict::Degrading,
        format!(
            "doubling minima all 1 = {ones}; logistic minima {minima:.3?} verdict {:?}; gap map minima [{}] verdict {:?}",
            l.verdict,
            gap_minima.join(", "),
            g.verdict
        ),
    )
}

fn iterate(map: &Map, mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        let side = if map.critical_index(x).is_some() { Side::Left } else { Side::Interior };
        x = map.eval(x, side).unwrap();
    }
    x
}

fn c8_structural() -> Outcome {
    let mut violations: Vec<String> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let target = IntervalSet::from_intervals(vec![
        Interval::new(0.05, 0.17).unwrap(),
        Interval::new(0.52, 0.6).unwrap(),
    ]);
    for name in FAMILIES {
        let map = family(name);
        for n in [1usize, 3, 6] {
            let pre = preimage_set(&map, &target, n).unwrap();
            // Round trip from inside the preimage.
            for comp in pre.intervals() {
                for _ in 0..20 {
                    let x = comp.lo + rng.random::<f64>() * comp.measure();
                    if !target.contains(iterate(&map, x, n), 1e-9) {
                        violations.push(format!("round-trip {name} n={n} x={x}"));
                    }
                }
            }
            // Monte Carlo completeness.
            for _ in 0..20_000 {
                let x: f64 = rng.random();
                if target.contains(iterate(&map, x, n), 0.0) && !pre.contains(x, 1e-12) {
                    violations.push(format!("completeness {name} n={n} x={x}"));
                }
            }
        }
        let op = build_ulam(&map, 1024).unwrap();
        if op.max_row_defect() > 1e-10 {
            violations.push(format!("row sums {name}: {:.1e}", op.max_row_defect()));
        }
        for c in map.critical_points() {
            for side in [Side::Left, Side::Right] {
                let fit = estimate_critical_order(&map, c, side).unwrap();
                let declared = c.order(side).unwrap();
                if (fit.l_hat - declared).abs() >= 0.05 {
                    violations.push(format!("order {name} {side}: {} vs {declared}", fit.l_hat));
                }
            }
        }
        let expected = match *name {
            "logistic" | "asymmetric_unimodal" | "lorenz_power" => SchwarzianVerdict::Holds,
            _ => SchwarzianVerdict::Boundary,
        };
        let s = check_negative_schwarzian(&map, 200).unwrap();
        if s.verdict != expected {
            violations.push(format!("schwarzian {name}: {:?}", s.verdict));
        }
    }

    // Koebe distortion on logistic pullbacks, collar tau = 1.
    let l = family("logistic");
    let bound = 4.0;
    let mut worst = 1.0_f64;
    for _ in 0..200 {
        let centre = rng.random_range(0.1..0.9);
        let half = rng.random_range(1e-4..0.02);
        let depth = rng.random_range(1..12);
        let path: Vec<usize> = (0..depth).map(|_| rng.random_range(0..2)).collect();
        let collar = Interval::new(centre - 3.0 * half, centre + 3.0 * half).unwrap();
        if collar.lo <= 0.0 || collar.hi >= 1.0 {
            continue;
        }
        let core = Interval::new(centre - half, centre + half).unwrap();
        let pull = |iv: Interval<f64>| {
            path.iter().fold(iv, |iv, &b| {
                let br = &l.branches()[b];
                let a = invert_branch(br, iv.lo).unwrap().unwrap();
                let c = invert_branch(br, iv.hi).unwrap().unwrap();
                Interval::spanning(a, c)
            })
        };
        let i = pull(core);
        let log_dfn = |mut x: f64| {
            let mut acc = 0.0;
            for _ in 0..depth {
                acc += l.deriv(x, 1, Side::Interior).unwrap().abs().ln();
                x = l.eval(x, Side::Interior).unwrap();
            }
            acc
        };
        let samples: Vec<f64> = (0..=64).map(|k| log_dfn(i.lo + i.measure() * k as f64 / 64.0)).collect();
        let spread = samples.iter().cloned().fold(f64::MIN, f64::max) - samples.iter().cloned().fold(f64::MAX, f64::min);
        worst = worst.max(spread.exp());
    }
    if worst > bound {
        violations.push(format!("koebe distortion {worst}"));
    }

    // Seed determinism.
    let sizes = [1e-2, 1e-3];
    let a = serde_json::to_string(&prop2_check(&l, &sizes, 6, 10, 42).unwrap()).unwrap();
    let b = serde_json::to_string(&prop2_check(&l, &sizes, 6, 10, 42).unwrap()).unwrap();
    let deltas = [1e-1, 1e-2, 1e-3];
    let c = serde_json::to_string(&bbc_scan(&l, &deltas, 2_000, 200, 42).unwrap()).unwrap();
    let d = serde_json::to_string(&bbc_scan(&l, &deltas, 2_000, 200, 42).unwrap()).unwrap();
    if a != b || c != d {
        violations.push("seeded reports differ between runs".into());
    }

    let shown: Vec<&String> = violations.iter().take(3).collect();
    outcome(
        violations.is_empty(),
        format!("{} violations {shown:?}; worst Koebe distortion {worst:.3} (bound {bound})", violations.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, u64); 8] = [
        ("summability series", c1_summability, 1),
        ("preimages of critical balls", c2_prop1, 30),
        ("preimage measure exponent", c3_prop2, 60),
        ("wandering intervals", c4_wandering, 10),
        ("invariant density", c5_density, 120),
        ("Lp frontier", c6_lp, 180),
        ("backward contraction", c7_bbc, 120),
        ("structural invariants", c8_structural, 120),
    ];
    let filter: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        if filter.is_some_and(|f| f != i + 1) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {} [{:.1}s, budget {budget}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
