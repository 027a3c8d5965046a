//! Direct solution of the triangular factors `E + c A1` and `E + c A2`.
//!
//! `A1` only couples a node to its east and north neighbours, so
//! `(E + c A1) x = b` is solved by one pass from the last node back to the
//! first; `A2` couples to west and south and is solved front to back. Each
//! node update is explicit. The wavefront schedule visits anti-diagonals
//! `j1 + j2 = d` in dependency order; nodes on one anti-diagonal are
//! independent and the per-node arithmetic is the same in both schedules, so
//! results are bit-identical.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::operators::Coefficient;

/// Anti-diagonals at least this long are evaluated in parallel.
const PARALLEL_DIAGONAL: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Row by row in storage order.
    #[default]
    Lexicographic,
    /// Anti-diagonal by anti-diagonal.
    Wavefront,
}

/// Scratch storage for the factorized solve. One workspace per concurrent
/// solve.
#[derive(Debug, Clone)]
pub struct SweepWorkspace {
    grid: Grid,
    order: SweepOrder,
    scratch: Vec<f64>,
    diagonal: Vec<f64>,
}

impl SweepWorkspace {
    pub fn new(grid: Grid, order: SweepOrder) -> Self {
        Self {
            grid,
            order,
            scratch: vec![0.0; grid.interior_len()],
            diagonal: Vec::with_capacity(grid.m1().min(grid.m2())),
        }
    }

    pub fn order(&self) -> SweepOrder {
        self.order
    }

    /// `x = (E + c A1)^{-1} b`.
    pub fn solve_upper(&mut self, k: &Coefficient, c: f64, b: &GridFunction) -> Result<GridFunction> {
        self.check(k, c, b)?;
        let mut x = vec![0.0; b.values().len()];
        sweep_upper(k, c, b.values(), &mut x, self.order, &mut self.diagonal);
        Ok(GridFunction::from_values(self.grid, x).expect("interior length"))
    }

    /// `x = (E + c A2)^{-1} b`.
    pub fn solve_lower(&mut self, k: &Coefficient, c: f64, b: &GridFunction) -> Result<GridFunction> {
        self.check(k, c, b)?;
        let mut x = vec![0.0; b.values().len()];
        sweep_lower(k, c, b.values(), &mut x, self.order, &mut self.diagonal);
        Ok(GridFunction::from_values(self.grid, x).expect("interior length"))
    }

    /// `x = [(E + c A1)(E + c A2)]^{-1} b`: the upper sweep first, then the
    /// lower one.
    pub fn solve_factorized(&mut self, k: &Coefficient, c: f64, b: &GridFunction) -> Result<GridFunction> {
        self.check(k, c, b)?;
        let mut x = vec![0.0; b.values().len()];
        sweep_upper(k, c, b.values(), &mut self.scratch, self.order, &mut self.diagonal);
        sweep_lower(k, c, &self.scratch, &mut x, self.order, &mut self.diagonal);
        Ok(GridFunction::from_values(self.grid, x).expect("interior length"))
    }

    fn check(&self, k: &Coefficient, c: f64, b: &GridFunction) -> Result<()> {
        if c.is_nan() || c < 0.0 {
            return Err(Error::NegativeShift(c));
        }
        if k.grid() != &self.grid || b.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

pub fn solve_upper(k: &Coefficient, c: f64, b: &GridFunction) -> Result<GridFunction> {
    SweepWorkspace::new(*k.grid(), SweepOrder::Lexicographic).solve_upper(k, c, b)
}

pub fn solve_lower(k: &Coefficient, c: f64, b: &GridFunction) -> Result<GridFunction> {
    SweepWorkspace::new(*k.grid(), SweepOrder::Lexicographic).solve_lower(k, c, b)
}

pub fn solve_factorized(k: &Coefficient, c: f64, b: &GridFunction) -> Result<GridFunction> {
    SweepWorkspace::new(*k.grid(), SweepOrder::Lexicographic).solve_factorized(k, c, b)
}

#[inline]
fn upper_node(k: &Coefficient, c: f64, b: &[f64], x: &[f64], m: (usize, usize), j: (usize, usize)) -> f64 {
    let (m1, m2) = m;
    let (j1, j2) = j;
    let p = j1 + j2 * m1;
    let (we, _, wn, _) = k.weights(p);
    let xe = if j1 + 1 < m1 { x[p + 1] } else { 0.0 };
    let xn = if j2 + 1 < m2 { x[p + m1] } else { 0.0 };
    (b[p] + c * (we * xe + wn * xn)) / (1.0 + c * k.half_diagonal(p))
}

#[inline]
fn lower_node(k: &Coefficient, c: f64, b: &[f64], x: &[f64], m: (usize, usize), j: (usize, usize)) -> f64 {
    let m1 = m.0;
    let (j1, j2) = j;
    let p = j1 + j2 * m1;
    let (_, ww, _, ws) = k.weights(p);
    let xw = if j1 > 0 { x[p - 1] } else { 0.0 };
    let xs = if j2 > 0 { x[p - m1] } else { 0.0 };
    (b[p] + c * (ww * xw + ws * xs)) / (1.0 + c * k.half_diagonal(p))
}

type NodeFn = fn(&Coefficient, f64, &[f64], &[f64], (usize, usize), (usize, usize)) -> f64;

fn sweep_upper(k: &Coefficient, c: f64, b: &[f64], x: &mut [f64], order: SweepOrder, diag: &mut Vec<f64>) {
    let m = (k.grid().m1(), k.grid().m2());
    match order {
        SweepOrder::Lexicographic => {
            for j2 in (0..m.1).rev() {
                for j1 in (0..m.0).rev() {
                    x[j1 + j2 * m.0] = upper_node(k, c, b, x, m, (j1, j2));
                }
            }
        }
        SweepOrder::Wavefront => {
            for d in (0..m.0 + m.1 - 1).rev() {
                wavefront_diagonal(k, c, b, x, m, d, diag, upper_node);
            }
        }
    }
}

fn sweep_lower(k: &Coefficient, c: f64, b: &[f64], x: &mut [f64], order: SweepOrder, diag: &mut Vec<f64>) {
    let m = (k.grid().m1(), k.grid().m2());
    match order {
        SweepOrder::Lexicographic => {
            for j2 in 0..m.1 {
                for j1 in 0..m.0 {
                    x[j1 + j2 * m.0] = lower_node(k, c, b, x, m, (j1, j2));
                }
            }
        }
        SweepOrder::Wavefront => {
            for d in 0..m.0 + m.1 - 1 {
                wavefront_diagonal(k, c, b, x, m, d, diag, lower_node);
            }
        }
    }
}

/// Evaluates every node with `j1 + j2 = d`, reading only neighbours on
/// adjacent anti-diagonals, then scatters the results into `x`.
#[allow(clippy::too_many_arguments)]
fn wavefront_diagonal(
    k: &Coefficient,
    c: f64,
    b: &[f64],
    x: &mut [f64],
    m: (usize, usize),
    d: usize,
    diag: &mut Vec<f64>,
    node: NodeFn,
) {
    let (m1, m2) = m;
    let lo = d.saturating_sub(m2 - 1);
    let hi = d.min(m1 - 1);
    diag.clear();
    {
        let xr: &[f64] = x;
        if hi + 1 - lo >= PARALLEL_DIAGONAL {
            (lo..hi + 1).into_par_iter().map(|j1| node(k, c, b, xr, m, (j1, d - j1))).collect_into_vec(diag);
        } else {
            diag.extend((lo..=hi).map(|j1| node(k, c, b, xr, m, (j1, d - j1))));
        }
    }
    for (j1, v) in (lo..=hi).zip(diag.iter()) {
        x[j1 + (d - j1) * m1] = *v;
    }
}
