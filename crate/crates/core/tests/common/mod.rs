//! Dense-matrix reference implementations, assembled entry by entry from the
//! coefficient function. Used to cross-check the matrix-free code on small
//! grids.
#![allow(dead_code)]

use atm_kit::{Grid, GridFunction};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub grid: Grid,
    pub a: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Upper triangle of `A` with half its diagonal.
    pub a1: DMatrix<f64>,
    /// Lower triangle of `A` with half its diagonal.
    pub a2: DMatrix<f64>,
}

impl Dense {
    pub fn assemble(grid: Grid, k: impl Fn(f64, f64) -> f64) -> Self {
        let (m1, m2) = (grid.m1(), grid.m2());
        let n = m1 * m2;
        let (h1, h2) = (grid.h1(), grid.h2());
        let idx = |i1: usize, i2: usize| (i1 - 1) + (i2 - 1) * m1;
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        for i2 in 1..=m2 {
            for i1 in 1..=m1 {
                let (x1, x2) = (i1 as f64 * h1, i2 as f64 * h2);
                let p = idx(i1, i2);
                let ke = k(x1 + 0.5 * h1, x2) / (h1 * h1);
                let kw = k(x1 - 0.5 * h1, x2) / (h1 * h1);
                let kn = k(x1, x2 + 0.5 * h2) / (h2 * h2);
                let ks = k(x1, x2 - 0.5 * h2) / (h2 * h2);
                d1[(p, p)] = ke + kw;
                d2[(p, p)] = kn + ks;
                if i1 < m1 {
                    d1[(p, idx(i1 + 1, i2))] = -ke;
                }
                if i1 > 1 {
                    d1[(p, idx(i1 - 1, i2))] = -kw;
                }
                if i2 < m2 {
                    d2[(p, idx(i1, i2 + 1))] = -kn;
                }
                if i2 > 1 {
                    d2[(p, idx(i1, i2 - 1))] = -ks;
                }
            }
        }
        let a = &d1 + &d2;
        let mut a1 = DMatrix::zeros(n, n);
        let mut a2 = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                match r.cmp(&c) {
                    std::cmp::Ordering::Less => a1[(r, c)] = a[(r, c)],
                    std::cmp::Ordering::Greater => a2[(r, c)] = a[(r, c)],
                    std::cmp::Ordering::Equal => {
                        a1[(r, c)] = 0.5 * a[(r, c)];
                        a2[(r, c)] = 0.5 * a[(r, c)];
                    }
                }
            }
        }
        Self { grid, a, d1, d2, a1, a2 }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n())
    }

    /// `(E + c A1)(E + c A2)`
    pub fn factorized(&self, c: f64) -> DMatrix<f64> {
        (self.identity() + &self.a1 * c) * (self.identity() + &self.a2 * c)
    }

    pub fn explicit_step(&self, tau: f64, y0: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        y0 + (phi - &self.a * y0) * tau
    }

    /// `B (y1 - y0)/tau + A y0 = phi`.
    pub fn atm_step(&self, sigma: f64, tau: f64, y0: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        let b = self.factorized(sigma * tau);
        let d = b.lu().solve(&(phi - &self.a * y0)).expect("B is invertible");
        y0 + d * tau
    }

    /// The three-level scheme as a single linear system for `y2`:
    /// `(E + s tau A)(y2 - y1)/tau + s^2 tau A1 A2 (y2 - 2 y1 + y0) + A y1 = phi`.
    pub fn mlatm_step(
        &self,
        sigma: f64,
        tau: f64,
        y0: &DVector<f64>,
        y1: &DVector<f64>,
        phi: &DVector<f64>,
    ) -> DVector<f64> {
        let c = self.identity() + &self.a * (sigma * tau);
        let p = &self.a1 * &self.a2 * (sigma * sigma * tau);
        let m = &c / tau + &p;
        let rhs = phi - &self.a * y1 + &c * y1 / tau + &p * (y1 * 2.0 - y0);
        m.lu().solve(&rhs).expect("system is invertible")
    }

    /// `G (y2 - 2 y1 + y0)/tau^2 + A y1 = phi`, `G = (E + s tau^2 A1)(E + s tau^2 A2)`.
    pub fn hyperbolic_step(
        &self,
        sigma: f64,
        tau: f64,
        y0: &DVector<f64>,
        y1: &DVector<f64>,
        phi: &DVector<f64>,
    ) -> DVector<f64> {
        let g = self.factorized(sigma * tau * tau);
        let rhs = &g * (y1 * 2.0 - y0) + (phi - &self.a * y1) * (tau * tau);
        g.lu().solve(&rhs).expect("G is invertible")
    }
}

pub fn to_dense(y: &GridFunction) -> DVector<f64> {
    DVector::from_column_slice(y.values())
}

pub fn from_dense(grid: Grid, v: &DVector<f64>) -> GridFunction {
    GridFunction::from_values(grid, v.as_slice().to_vec()).unwrap()
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / b.norm().max(a.norm())
    }
}

pub fn random_grid_function(grid: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
    GridFunction::from_indices(grid, |_, _| rng.gen_range(-1.0..1.0))
}

/// A smooth coefficient with values in `[1, 2]` and random phase.
#[derive(Debug, Clone, Copy)]
pub struct SmoothK {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SmoothK {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self { a: rng.gen_range(0.5..6.0), b: rng.gen_range(0.5..6.0), c: rng.gen_range(0.0..6.3) }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        1.5 + 0.5 * (self.a * x1 + self.b * x2 + self.c).sin()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
