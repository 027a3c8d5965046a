mod common;

use atm_kit::operators::*;
use atm_kit::{energy_norm, inner_product, norm, Coefficient, Grid, GridFunction};
use common::{random_grid_function, rel_err, rng, to_dense, Dense, SmoothK};
use proptest::prelude::*;

fn variable(grid: Grid, kf: SmoothK) -> Coefficient {
    Coefficient::from_fn(grid, move |x1, x2| kf.eval(x1, x2)).unwrap()
}

#[test]
fn matrix_free_operators_match_dense_assembly() {
    let mut r = rng(11);
    for (n1, n2, l1, l2) in [(4, 4, 1.0, 1.0), (5, 7, 1.0, 2.0), (16, 9, 0.5, 1.5)] {
        let grid = Grid::new(l1, l2, n1, n2).unwrap();
        let kf = SmoothK::random(&mut r);
        let k = variable(grid, kf);
        let d = Dense::assemble(grid, |x1, x2| kf.eval(x1, x2));
        let y = random_grid_function(grid, &mut r);
        let yd = to_dense(&y);
        let (sigma, tau) = (0.7, 3e-3);
        let c = sigma * tau;
        let cases: Vec<(&str, GridFunction, nalgebra::DVector<f64>)> = vec![
            ("A", apply_a(&k, &y).unwrap(), &d.a * &yd),
            ("D1", apply_d1(&k, &y).unwrap(), &d.d1 * &yd),
            ("D2", apply_d2(&k, &y).unwrap(), &d.d2 * &yd),
            ("A1", apply_a1(&k, &y).unwrap(), &d.a1 * &yd),
            ("A2", apply_a2(&k, &y).unwrap(), &d.a2 * &yd),
            ("A1A2", apply_a1a2(&k, &y).unwrap(), &d.a1 * (&d.a2 * &yd)),
            ("B", apply_b(&k, sigma, tau, &y).unwrap(), d.factorized(c) * &yd),
            ("G", apply_g_hyperbolic(&k, sigma, tau, &y).unwrap(), d.factorized(sigma * tau * tau) * &yd),
            ("C", apply_c(&k, sigma, tau, &y).unwrap(), (d.identity() + &d.a * c) * &yd),
            (
                "R_hyp",
                apply_r_hyperbolic(&k, sigma, tau, &y).unwrap(),
                (d.factorized(sigma * tau * tau) - &d.a * (tau * tau / 4.0)) * &yd,
            ),
            (
                "R_multi",
                apply_r_multilevel(&k, sigma, tau, &y).unwrap(),
                (d.identity() * (tau / 2.0)
                    + &d.a * (tau * tau / 4.0 * (2.0 * sigma - 1.0))
                    + &d.a1 * &d.a2 * (sigma * sigma * tau * tau * tau))
                    * &yd,
            ),
        ];
        for (name, got, want) in cases {
            let e = rel_err(&to_dense(&got), &want);
            assert!(e <= 1e-13, "{name} on {n1}x{n2}: {e:e}");
        }
    }
}

#[test]
fn dense_halves_are_mutual_transposes_and_triangular() {
    let grid = Grid::new(1.0, 1.0, 6, 5).unwrap();
    let kf = SmoothK { a: 2.0, b: 5.0, c: 0.3 };
    let d = Dense::assemble(grid, |x1, x2| kf.eval(x1, x2));
    // face positions are computed from either neighbour, so allow rounding
    let scale = d.a.abs().max();
    assert!((d.a1.transpose() - &d.a2).abs().max() <= 1e-14 * scale);
    assert!((&d.a - d.a.transpose()).abs().max() <= 1e-14 * scale);
    for r in 0..d.n() {
        for c in 0..r {
            assert_eq!(d.a1[(r, c)], 0.0);
        }
    }
}

#[test]
fn single_point_hand_values() {
    let g = Grid::unit_square(2).unwrap();
    let k = Coefficient::constant(g, 1.0).unwrap();
    let y = GridFunction::from_values(g, vec![1.0]).unwrap();
    assert_eq!(apply_a(&k, &y).unwrap().values(), &[16.0]);
    assert_eq!(apply_a1(&k, &y).unwrap().values(), &[8.0]);
    assert_eq!(apply_a2(&k, &y).unwrap().values(), &[8.0]);
}

#[test]
fn constant_coefficient_halves_are_the_flux_halves() {
    // forward fluxes: -(k/h1^2)(y_e - y) - (k/h2^2)(y_n - y)
    let g = Grid::new(1.0, 2.0, 7, 5).unwrap();
    let kv = 1.7;
    let k = Coefficient::constant(g, kv).unwrap();
    let mut r = rng(3);
    let y = random_grid_function(g, &mut r);
    let a1 = apply_a1(&k, &y).unwrap();
    let (h1, h2) = (g.h1(), g.h2());
    let flux = GridFunction::from_indices(g, |i1, i2| {
        let at = |a: usize, b: usize| if a < g.n1() && b < g.n2() { y.get(a, b) } else { 0.0 };
        let c = y.get(i1, i2);
        -kv / (h1 * h1) * (at(i1 + 1, i2) - c) - kv / (h2 * h2) * (at(i1, i2 + 1) - c)
    });
    assert!(norm(&a1.sub(&flux).unwrap()) <= 1e-13 * norm(&flux));
}

#[test]
fn power_iteration_matches_top_of_spectrum() {
    for n in [8, 16, 32] {
        let k = Coefficient::constant(Grid::unit_square(n).unwrap(), 1.3).unwrap();
        let est = power_iteration(&k, 1e-12, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_SEED).unwrap();
        let exact = 1.3 * spectral_bounds(&k).big_delta;
        assert!((est.value - exact).abs() <= 1e-6 * exact, "n={n}: {} vs {exact}", est.value);
    }
}

#[test]
fn power_iteration_is_reproducible_and_seeded() {
    let g = Grid::unit_square(12).unwrap();
    let k = Coefficient::checkerboard(g, 1.0, 2.0, 3).unwrap();
    let a = power_iteration(&k, 1e-9, DEFAULT_POWER_MAX_ITER, 5).unwrap();
    let b = power_iteration(&k, 1e-9, DEFAULT_POWER_MAX_ITER, 5).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.vector, b.vector);
    let c = power_iteration(&k, 1e-9, DEFAULT_POWER_MAX_ITER, 6).unwrap();
    assert_ne!(a.vector, c.vector);
}

#[test]
fn spectral_bounds_hand_value() {
    let k = Coefficient::constant(Grid::unit_square(4).unwrap(), 1.0).unwrap();
    let b = spectral_bounds(&k);
    assert!((b.big_delta - 109.2548).abs() < 1e-3, "{}", b.big_delta);
    assert!((2.0 / b.big_delta - 0.018306).abs() < 1e-5);
}

#[test]
fn checkerboard_bounds_are_the_tile_values() {
    let g = Grid::unit_square(16).unwrap();
    let k = Coefficient::checkerboard(g, 1.0, 3.0, 4).unwrap();
    assert_eq!((k.k_lower(), k.k_upper()), (1.0, 3.0));
    assert!(Coefficient::checkerboard(g, 0.0, 3.0, 4).is_err());
    assert!(Coefficient::checkerboard(g, 1.0, 3.0, 0).is_err());
    assert!(Coefficient::from_fn_with_bounds(g, |x1, _| 1.0 + x1, 1.0, 1.5).is_err());
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (2usize..14, 2usize..14, 0.3f64..3.0, 0.3f64..3.0).prop_map(|(n1, n2, l1, l2)| Grid::new(l1, l2, n1, n2).unwrap())
}

fn setup_strategy() -> impl Strategy<Value = (Coefficient, GridFunction, GridFunction)> {
    (grid_strategy(), 0.5f64..6.0, 0.5f64..6.0, 0.0f64..6.3, any::<u64>()).prop_map(|(g, a, b, c, seed)| {
        let k = variable(g, SmoothK { a, b, c });
        let mut r = rng(seed);
        let y = random_grid_function(g, &mut r);
        let w = random_grid_function(g, &mut r);
        (k, y, w)
    })
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splitting_identity((k, y, _w) in setup_strategy()) {
        let a = apply_a(&k, &y).unwrap();
        let split = apply_a1(&k, &y).unwrap().add(&apply_a2(&k, &y).unwrap()).unwrap();
        prop_assert!(norm(&a.sub(&split).unwrap()) <= 1e-14 * norm(&a));
        let d = apply_d1(&k, &y).unwrap().add(&apply_d2(&k, &y).unwrap()).unwrap();
        prop_assert!(norm(&a.sub(&d).unwrap()) <= 1e-14 * norm(&a));
    }

    #[test]
    fn adjointness((k, y, w) in setup_strategy()) {
        let a1y = apply_a1(&k, &y).unwrap();
        let lhs = inner_product(&a1y, &w).unwrap();
        let rhs = inner_product(&y, &apply_a2(&k, &w).unwrap()).unwrap();
        prop_assert!(close(lhs, rhs, norm(&a1y) * norm(&w), 1e-13));
    }

    #[test]
    fn self_adjointness((k, y, w) in setup_strategy()) {
        for apply in [apply_a, apply_d1, apply_d2, apply_a1a2] {
            let ay = apply(&k, &y).unwrap();
            let lhs = inner_product(&ay, &w).unwrap();
            let rhs = inner_product(&y, &apply(&k, &w).unwrap()).unwrap();
            prop_assert!(close(lhs, rhs, norm(&ay) * norm(&w), 1e-13));
        }
    }

    #[test]
    fn factorized_expansion((k, y, _w) in setup_strategy(), sigma in 0.0f64..2.0, tau in 1e-5f64..1.0) {
        let b = apply_b(&k, sigma, tau, &y).unwrap();
        let mut e = y.clone();
        e.add_scaled(sigma * tau, &apply_a(&k, &y).unwrap()).unwrap();
        e.add_scaled(sigma * sigma * tau * tau, &apply_a1a2(&k, &y).unwrap()).unwrap();
        prop_assert!(norm(&b.sub(&e).unwrap()) <= 1e-13 * norm(&b));
        // B >= E + sigma tau A
        let by = inner_product(&b, &y).unwrap();
        let mut c = y.clone();
        c.add_scaled(sigma * tau, &apply_a(&k, &y).unwrap()).unwrap();
        prop_assert!(by >= inner_product(&c, &y).unwrap() * (1.0 - 1e-13));
    }

    #[test]
    fn rayleigh_quotient_within_spectral_bounds((k, y, _w) in setup_strategy()) {
        let b = spectral_bounds(&k);
        let q = inner_product(&apply_a(&k, &y).unwrap(), &y).unwrap() / inner_product(&y, &y).unwrap();
        prop_assert!(q >= b.lower * (1.0 - 1e-13) && q <= b.upper * (1.0 + 1e-13));
    }

    #[test]
    fn inner_product_bilinear_and_parallelogram((_k, y, w) in setup_strategy(), a in -3.0f64..3.0) {
        let lhs = inner_product(&y.combine(a, 1.0, &w).unwrap(), &w).unwrap();
        let rhs = a * inner_product(&y, &w).unwrap() + inner_product(&w, &w).unwrap();
        prop_assert!(close(lhs, rhs, (a.abs() * norm(&y) + norm(&w)) * norm(&w), 1e-14));
        let s = norm(&y.add(&w).unwrap()).powi(2) + norm(&y.sub(&w).unwrap()).powi(2);
        let t = 2.0 * (norm(&y).powi(2) + norm(&w).powi(2));
        prop_assert!(close(s, t, t, 1e-14));
        prop_assert_eq!(inner_product(&y, &w).unwrap(), inner_product(&w, &y).unwrap());
    }

    #[test]
    fn energy_norms_positive((k, y, _w) in setup_strategy(), sigma in 0.25f64..2.0, tau in 1e-4f64..1.0) {
        let na = energy_norm(&y, |v| apply_a(&k, v)).unwrap();
        prop_assert!(na > 0.0);
        let nr = energy_norm(&y, |v| apply_r_hyperbolic(&k, sigma, tau, v)).unwrap();
        prop_assert!(nr * nr >= inner_product(&y, &y).unwrap() * (1.0 - 1e-12));
        if sigma >= 0.5 {
            prop_assert!(energy_norm(&y, |v| apply_r_multilevel(&k, sigma, tau, v)).unwrap() > 0.0);
        }
    }
}
