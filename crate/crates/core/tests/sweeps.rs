mod common;

use atm_kit::operators::{apply_a1, apply_a2, apply_factorized};
use atm_kit::sweeps::{solve_factorized, solve_lower, solve_upper};
use atm_kit::{norm, Coefficient, Error, Grid, GridFunction, SweepOrder, SweepWorkspace};
use common::{random_grid_function, rel_err, rng, to_dense, Dense, SmoothK};
use rand::Rng;

fn shifted(
    k: &Coefficient,
    c: f64,
    x: &GridFunction,
    apply: fn(&Coefficient, &GridFunction) -> atm_kit::Result<GridFunction>,
) -> GridFunction {
    let mut r = apply(k, x).unwrap();
    r.scale(c);
    r.add_scaled(1.0, x).unwrap();
    r
}

#[test]
fn round_trip_over_six_decades() {
    let mut r = rng(21);
    let g = Grid::new(1.0, 1.3, 23, 17).unwrap();
    let kf = SmoothK::random(&mut r);
    let k = Coefficient::from_fn(g, move |x1, x2| kf.eval(x1, x2)).unwrap();
    let b = random_grid_function(g, &mut r);
    for c in [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0] {
        let x = solve_upper(&k, c, &b).unwrap();
        let back = shifted(&k, c, &x, apply_a1);
        assert!(norm(&back.sub(&b).unwrap()) <= 1e-12 * norm(&b), "upper, c={c}");

        let x = solve_lower(&k, c, &b).unwrap();
        let back = shifted(&k, c, &x, apply_a2);
        assert!(norm(&back.sub(&b).unwrap()) <= 1e-12 * norm(&b), "lower, c={c}");

        let x = solve_factorized(&k, c, &b).unwrap();
        let back = apply_factorized(&k, c, &x).unwrap();
        assert!(norm(&back.sub(&b).unwrap()) <= 1e-12 * norm(&b), "factorized, c={c}");
    }
}

#[test]
fn matches_dense_triangular_solves() {
    let mut r = rng(22);
    for (n1, n2) in [(4, 4), (9, 6), (16, 16)] {
        let g = Grid::new(1.0, 1.0, n1, n2).unwrap();
        let kf = SmoothK::random(&mut r);
        let k = Coefficient::from_fn(g, move |x1, x2| kf.eval(x1, x2)).unwrap();
        let d = Dense::assemble(g, |x1, x2| kf.eval(x1, x2));
        let b = random_grid_function(g, &mut r);
        let bd = to_dense(&b);
        let c = r.gen_range(1e-3..10.0);
        let upper = d.identity() + &d.a1 * c;
        let lower = d.identity() + &d.a2 * c;
        let want_u = upper.clone().solve_upper_triangular(&bd).unwrap();
        let want_l = lower.clone().solve_lower_triangular(&bd).unwrap();
        assert!(rel_err(&to_dense(&solve_upper(&k, c, &b).unwrap()), &want_u) <= 1e-12);
        assert!(rel_err(&to_dense(&solve_lower(&k, c, &b).unwrap()), &want_l) <= 1e-12);
        // A2 = A1*: the lower solve is the transposed upper solve
        let want_t = upper.transpose().lu().solve(&bd).unwrap();
        assert!(rel_err(&to_dense(&solve_lower(&k, c, &b).unwrap()), &want_t) <= 1e-12);
        let want_f = d.factorized(c).lu().solve(&bd).unwrap();
        assert!(rel_err(&to_dense(&solve_factorized(&k, c, &b).unwrap()), &want_f) <= 1e-12);
    }
}

#[test]
fn nonnegative_data_gives_nonnegative_solutions() {
    let mut r = rng(23);
    let g = Grid::unit_square(20).unwrap();
    let k = Coefficient::checkerboard(g, 1.0, 2.0, 4).unwrap();
    for _ in 0..10 {
        let b = GridFunction::from_indices(g, |_, _| r.gen_range(0.0..1.0));
        let c = 10f64.powf(r.gen_range(-4.0..2.0));
        for x in
            [solve_upper(&k, c, &b).unwrap(), solve_lower(&k, c, &b).unwrap(), solve_factorized(&k, c, &b).unwrap()]
        {
            assert!(x.values().iter().all(|v| *v >= 0.0));
        }
    }
}

#[test]
fn sweeps_do_not_amplify_max_norm_for_constant_coefficient() {
    let mut r = rng(24);
    let g = Grid::new(1.0, 2.0, 15, 19).unwrap();
    let k = Coefficient::constant(g, 1.4).unwrap();
    for _ in 0..20 {
        let b = GridFunction::from_indices(g, |_, _| r.gen_range(0.0..1.0));
        let c = 10f64.powf(r.gen_range(-4.0..2.0));
        for x in [solve_upper(&k, c, &b).unwrap(), solve_lower(&k, c, &b).unwrap()] {
            assert!(x.max_abs() <= b.max_abs() * (1.0 + 1e-15), "c={c}");
        }
    }
}

#[test]
fn wavefront_bit_identical_with_parallel_diagonals() {
    // 519 interior nodes per side: the longest anti-diagonals run in parallel
    let g = Grid::unit_square(520).unwrap();
    let k = Coefficient::from_fn(g, |x1, x2| 1.5 + 0.5 * (7.0 * x1 * x2).sin()).unwrap();
    let mut r = rng(25);
    let b = random_grid_function(g, &mut r);
    let mut lex = SweepWorkspace::new(g, SweepOrder::Lexicographic);
    let mut wav = SweepWorkspace::new(g, SweepOrder::Wavefront);
    for c in [1e-5, 2.5e-3] {
        let x = lex.solve_factorized(&k, c, &b).unwrap();
        let y = wav.solve_factorized(&k, c, &b).unwrap();
        assert!(x.values().iter().zip(y.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn rejects_bad_input() {
    let g = Grid::unit_square(5).unwrap();
    let k = Coefficient::constant(g, 1.0).unwrap();
    let other = GridFunction::zeros(Grid::unit_square(6).unwrap());
    assert_eq!(solve_upper(&k, 1.0, &other), Err(Error::GridMismatch));
    let b = GridFunction::zeros(g);
    assert_eq!(solve_lower(&k, -1.0, &b), Err(Error::NegativeShift(-1.0)));
}
