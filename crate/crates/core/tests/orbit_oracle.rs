//! Summability series checked against an independent double-double
//! evaluation of the same orbits.

use std::collections::BTreeMap;

use intervalkit::map::builtin;
use intervalkit::orbit::{critical_orbit, summability_series_1, summability_series_2};
use intervalkit::{DoubleDouble as DD, Map, MapDD, Side};

fn dd(x: f64) -> DD {
    DD::from(x)
}

struct PowerLorenz {
    c: DD,
    v_left: DD,
    v_right: DD,
    l_left: DD,
    l_right: DD,
}

impl PowerLorenz {
    fn f(&self, x: DD) -> DD {
        let one = dd(1.0);
        if x < self.c {
            let u = (self.c - x) / self.c;
            self.v_left - self.v_left * (self.l_left * u.ln()).exp()
        } else {
            let u = (x - self.c) / (one - self.c);
            self.v_right + (one - self.v_right) * (self.l_right * u.ln()).exp()
        }
    }

    fn df(&self, x: DD) -> DD {
        let one = dd(1.0);
        if x < self.c {
            let u = (self.c - x) / self.c;
            self.v_left * self.l_left * ((self.l_left - one) * u.ln()).exp() / self.c
        } else {
            let u = (x - self.c) / (one - self.c);
            (one - self.v_right) * self.l_right * ((self.l_right - one) * u.ln()).exp() / (one - self.c)
        }
    }

    fn order_facing(&self, x: DD) -> DD {
        if x < self.c {
            self.l_left
        } else {
            self.l_right
        }
    }
}

/// Series-1 terms starting from `f(c-) = v_left`.
fn oracle_series_1(m: &PowerLorenz, n: usize) -> Vec<f64> {
    let l = m.l_left;
    let mut x = m.v_left;
    let mut log_deriv = dd(0.0);
    let mut terms = Vec::new();
    for _ in 0..n {
        log_deriv += m.df(x).abs().ln();
        let excess = m.order_facing(x) - l;
        let log_term = (excess * (x - m.c).abs().ln() - log_deriv) / l;
        terms.push(f64::from(log_term.exp()));
        x = m.f(x);
    }
    terms
}

fn lorenz_params() -> BTreeMap<String, f64> {
    BTreeMap::from([("v_left".to_string(), 0.9), ("v_right".to_string(), 0.1)])
}

fn lorenz_oracle() -> PowerLorenz {
    PowerLorenz {
        c: dd(0.5),
        v_left: dd(0.9),
        v_right: dd(0.1),
        l_left: dd(1.5),
        l_right: dd(2.5),
    }
}

#[test]
fn lorenz_power_series_1_matches_double_double() {
    let n = 10;
    let expect = oracle_series_1(&lorenz_oracle(), n);

    // Same scalar as the oracle: agreement to the oracle's own rounding.
    let map: MapDD = builtin("lorenz_power", &lorenz_params()).unwrap();
    let c = map.critical_points()[0];
    let got = summability_series_1(&critical_orbit(&map, &c, Side::Left, n).unwrap());
    assert_eq!(got.terms.len(), n);
    for (i, (a, b)) in got.terms.iter().zip(&expect).enumerate() {
        let a = f64::from(*a);
        assert!(((a - b) / b).abs() < 1e-14, "n = {}: {a} vs {b}", i + 1);
    }

    // In f64 the orbit drifts by roughly the accumulated expansion times the
    // unit roundoff, about 1e-9 relative by n = 10.
    let map: Map = builtin("lorenz_power", &lorenz_params()).unwrap();
    let c = map.critical_points()[0];
    let got = summability_series_1(&critical_orbit(&map, &c, Side::Left, n).unwrap());
    for (i, (a, b)) in got.terms.iter().zip(&expect).enumerate() {
        assert!(((a - b) / b).abs() < 1e-7, "n = {}: {a} vs {b}", i + 1);
    }
}

#[test]
fn frozen_lorenz_power_orbit() {
    // f(c-) = 0.9, f(0.9) = 0.1 + 0.9 * 0.8^2.5, f of that on the right branch again.
    let map: Map = builtin("lorenz_power", &lorenz_params()).unwrap();
    let c = map.critical_points()[0];
    let record = critical_orbit(&map, &c, Side::Left, 3).unwrap();
    let x1 = 0.1 + 0.9 * 0.8_f64.powf(2.5);
    assert!((record.points[0] - 0.9).abs() < 1e-15);
    assert!((record.points[1] - x1).abs() < 1e-15);
}

#[test]
fn doubling_series_2_is_geometric() {
    let map: Map = builtin("doubling", &BTreeMap::new()).unwrap();
    let c = map.critical_points()[0];
    let record = critical_orbit(&map, &c, Side::Left, 100).unwrap();
    let s = summability_series_2(&record);
    for (i, t) in s.terms.iter().enumerate() {
        let expect = 0.5_f64.powi(i as i32 + 1);
        assert!(((t - expect) / expect).abs() < 1e-12);
    }
    assert!((s.total() - (1.0 - 0.5_f64.powi(100))).abs() < 1e-12);
}

#[test]
fn logistic_series_agree_termwise() {
    let map: Map = builtin("logistic", &BTreeMap::new()).unwrap();
    let c = map.critical_points()[0];
    let record = critical_orbit(&map, &c, Side::Left, 60).unwrap();
    let s1 = summability_series_1(&record);
    let s2 = summability_series_2(&record);
    for (a, b) in s1.terms.iter().zip(&s2.terms) {
        assert!((a - b).abs() <= 1e-15 * b.abs());
    }
    assert!((s1.total() - 1.0).abs() < 1e-9);
    assert!((s2.total() - 1.0).abs() < 1e-9);
}
