use num_complex::Complex64;
use proptest::prelude::*;

use sqint::group::{
    delta_iso, make_affine, make_exotic, make_exotic_quotient, make_polarized_wh, make_standard_wh, make_wh_quotient,
    AxisKind, GroupDescriptor,
};
use sqint::io::{parse_signal, signal_csv};
use sqint::multiplier::{
    act_on_quotient, central_extension, exotic_section, exotic_tsr, multiplier_from_section, wh_center, wh_section,
    wh_section_prime, Multiplier,
};
use sqint::rep::{displacement_rep, wh_rep, Representation};
use sqint::state::StateGrid;
use sqint::vectors;

/// Chart point from unconstrained coordinates: positive axes go through `exp`.
fn point(g: &GroupDescriptor, raw: &[f64]) -> Vec<f64> {
    g.axes()
        .iter()
        .zip(raw)
        .map(|(a, v)| match a.kind {
            AxisKind::Positive => v.exp(),
            AxisKind::Circle => v.rem_euclid(std::f64::consts::TAU),
            AxisKind::Real => *v,
        })
        .collect()
}

fn raw(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, d)
}

fn groups() -> Vec<GroupDescriptor> {
    let k = wh_center(1, 1.0).unwrap();
    let m = multiplier_from_section(&wh_section(&k));
    vec![
        make_polarized_wh(1).unwrap(),
        make_standard_wh(2).unwrap(),
        make_wh_quotient(1).unwrap(),
        make_affine(2).unwrap(),
        make_exotic(1).unwrap(),
        make_exotic_quotient(1).unwrap(),
        central_extension(&m),
    ]
}

fn cocycle_defect(m: &Multiplier, x: &[f64], y: &[f64], z: &[f64], g: &GroupDescriptor) -> f64 {
    let lhs = m.value(x, y) * m.value(&g.product(x, y), z);
    let rhs = m.value(y, z) * m.value(x, &g.product(y, z));
    (lhs - rhs).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_laws(a in raw(9), b in raw(9), c in raw(9)) {
        for g in groups() {
            let d = g.dim();
            let (x, y, z) = (point(&g, &a[..d]), point(&g, &b[..d]), point(&g, &c[..d]));
            let left = g.product(&g.product(&x, &y), &z);
            let right = g.product(&x, &g.product(&y, &z));
            prop_assert!(g.distance(&left, &right) < 1e-12, "{}", g.name());
            prop_assert!(g.distance(&g.product(&x, &g.inverse(&x)), &g.identity()) < 1e-12, "{}", g.name());
            prop_assert!(g.distance(&g.product(&g.identity(), &x), &x) < 1e-12, "{}", g.name());
        }
    }

    #[test]
    fn modular_function_is_a_character(a in raw(7), b in raw(7)) {
        for g in groups() {
            let d = g.dim();
            let (x, y) = (point(&g, &a[..d]), point(&g, &b[..d]));
            let lhs = g.modular(&g.product(&x, &y));
            prop_assert!((lhs / (g.modular(&x) * g.modular(&y)) - 1.0).abs() < 1e-12, "{}", g.name());
        }
    }

    #[test]
    fn delta_iso_is_a_homomorphism(a in raw(5), b in raw(5)) {
        let (hs, hp) = (make_standard_wh(2).unwrap(), make_polarized_wh(2).unwrap());
        let (x, y) = (point(&hs, &a), point(&hs, &b));
        let lhs = delta_iso(&hs.product(&x, &y));
        prop_assert!(hp.distance(&lhs, &hp.product(&delta_iso(&x), &delta_iso(&y))) < 1e-12);
    }

    #[test]
    fn section_multipliers_are_normalized_cocycles(a in raw(4), b in raw(4), c in raw(4), kc in 0.2..3.0f64) {
        let k = wh_center(1, kc).unwrap();
        let ek = exotic_tsr(1).unwrap();
        for (s, x) in [(wh_section(&k), k.quotient()), (wh_section_prime(&k), k.quotient()), (exotic_section(&ek), ek.quotient())] {
            let m = multiplier_from_section(&s);
            let d = x.dim();
            let (p, q, r) = (point(x, &a[..d]), point(x, &b[..d]), point(x, &c[..d]));
            prop_assert!(cocycle_defect(&m, &p, &q, &r, x) < 1e-12);
            prop_assert!((m.value(&x.identity(), &p) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            prop_assert!((m.value(&p, &x.identity()) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn quotient_action_is_an_action(a in raw(7), b in raw(7), c in raw(4)) {
        let k = exotic_tsr(1).unwrap();
        let (g, x) = (k.ambient(), k.quotient());
        let (g1, g2, x0) = (point(g, &a), point(g, &b), point(x, &c));
        let lhs = act_on_quotient(&k, &g.product(&g1, &g2), &x0);
        let rhs = act_on_quotient(&k, &g1, &act_on_quotient(&k, &g2, &x0));
        prop_assert!(x.distance(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn wh_rep_is_unitary(k in -3.0..3.0f64, p in -2.0..2.0f64, q in -2.0..2.0f64, seed in 0u64..1000) {
        let grid = StateGrid::centered(1, 16.0, 256);
        let f = vectors::random_band_limited(&grid, 2.0, seed);
        let u = wh_rep(1, 1.0).unwrap();
        let g = u.act(&[k, p, q], &f).unwrap();
        prop_assert!((g.norm() - f.norm()).abs() < 1e-10 * f.norm());
    }

    #[test]
    fn displacement_inverse_undoes(p in -2.0..2.0f64, q in -2.0..2.0f64, seed in 0u64..1000) {
        let grid = StateGrid::centered(1, 16.0, 256);
        let f = vectors::random_band_limited(&grid, 2.0, seed);
        let d = displacement_rep(1).unwrap();
        let x = [p, q];
        let back = d.act(&d.group().inverse(&x), &d.act(&x, &f).unwrap()).unwrap();
        // D(x⁻¹)D(x) = conj(m(x⁻¹, x)) Id, a unit scalar.
        let ip = back.inner(&f).unwrap();
        prop_assert!((ip.norm() - f.norm_sq()).abs() < 1e-9 * f.norm_sq());
    }

    #[test]
    fn signal_csv_round_trips(seed in 0u64..10_000) {
        let grid = StateGrid::centered(1, 4.0, 32);
        let f = vectors::random_band_limited(&grid, 1.5, seed);
        let g = parse_signal(&signal_csv(&f), &grid).unwrap();
        prop_assert_eq!(f.data(), g.data());
    }
}
