use std::collections::BTreeMap;

use intervalkit::bbc::{bbc_scan, first_entry_stats, n_delta, BOUNDARY_TOLERANCE};
use intervalkit::map::builtin;
use intervalkit::{Map, Side};
use proptest::prelude::*;

fn family(name: &str) -> Map {
    builtin(name, &BTreeMap::new()).unwrap()
}

/// Re-walks the orbit of the witness point by hand.
fn check_witness(map: &Map, delta: f64, seed: u64) {
    let s = first_entry_stats(map, delta, 2_000, 500, seed).unwrap();
    let (Some(x), Some(n), Some(logged)) = (s.argmin_x, s.entry_time, s.min_first_entry_deriv) else {
        panic!("no sample entered");
    };
    let region = n_delta(map, delta).unwrap();
    let mut y = x;
    let mut product = 1.0_f64;
    for i in 0..n {
        assert!(!region.contains(y, BOUNDARY_TOLERANCE), "f^{i}(x) already inside");
        product *= map.deriv(y, 1, Side::Interior).unwrap().abs();
        y = map.eval(y, Side::Interior).unwrap();
    }
    assert!(region.contains(y, BOUNDARY_TOLERANCE));
    assert!(((product - logged) / logged).abs() < 1e-8, "{product} vs {logged}");
}

#[test]
fn witnesses_reproduce() {
    for name in ["logistic", "asymmetric_unimodal", "tent", "lorenz_power"] {
        for delta in [1e-2, 1e-3] {
            check_witness(&family(name), delta, 11);
        }
    }
}

#[test]
fn seeds_are_deterministic() {
    let map = family("logistic");
    let a = serde_json::to_string(&bbc_scan(&map, &[1e-1, 1e-2, 1e-3], 3_000, 200, 5).unwrap()).unwrap();
    let b = serde_json::to_string(&bbc_scan(&map, &[1e-1, 1e-2, 1e-3], 3_000, 200, 5).unwrap()).unwrap();
    let c = serde_json::to_string(&bbc_scan(&map, &[1e-1, 1e-2, 1e-3], 3_000, 200, 6).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn neighbourhoods_are_nested(
        name in prop::sample::select(vec!["doubling", "tent", "logistic", "asymmetric_unimodal", "lorenz_power", "gap_affine"]),
        small in 1e-6..0.2_f64,
        factor in 1.0..10.0_f64,
    ) {
        let map = family(name);
        let inner = n_delta(&map, small).unwrap();
        let outer = n_delta(&map, small * factor).unwrap();
        prop_assert!(inner.is_subset_of(&outer, 0.0));
    }
}
