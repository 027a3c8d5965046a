//! Uniform rectangular grids and grid functions on their interior nodes.
//!
//! A [`Grid`] covers `(0, l1) x (0, l2)` with `n1 x n2` cells. Grid functions
//! only store the `(n1 - 1) * (n2 - 1)` interior values; the boundary is
//! implicitly zero (homogeneous Dirichlet). Storage is lexicographic with the
//! x1 index varying fastest.

use crate::error::{Error, Result};

/// Uniform mesh over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    l1: f64,
    l2: f64,
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
}

impl Grid {
    /// `n1`, `n2` are the cell counts per direction (`h_a = l_a / n_a`).
    pub fn new(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(l1 > 0.0 && l1.is_finite() && l2 > 0.0 && l2.is_finite()) {
            return Err(Error::InvalidGrid(format!("side lengths must be positive and finite, got ({l1}, {l2})")));
        }
        if n1 < 2 || n2 < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells per direction, got ({n1}, {n2})")));
        }
        Ok(Self { l1, l2, n1, n2, h1: l1 / n1 as f64, h2: l2 / n2 as f64 })
    }

    /// Unit square with `n x n` cells.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(1.0, 1.0, n, n)
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    /// Interior nodes along x1.
    pub fn m1(&self) -> usize {
        self.n1 - 1
    }

    /// Interior nodes along x2.
    pub fn m2(&self) -> usize {
        self.n2 - 1
    }

    pub fn interior_len(&self) -> usize {
        self.m1() * self.m2()
    }

    /// Storage index of interior node `(i1, i2)`, both in `1..n_a`.
    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        debug_assert!((1..self.n1).contains(&i1) && (1..self.n2).contains(&i2));
        (i1 - 1) + (i2 - 1) * self.m1()
    }

    /// Coordinates of the node with grid indices `(i1, i2)`.
    #[inline]
    pub fn node(&self, i1: usize, i2: usize) -> (f64, f64) {
        (i1 as f64 * self.h1, i2 as f64 * self.h2)
    }

    /// `|h|^2 = h1^2 + h2^2`.
    pub fn h_sq(&self) -> f64 {
        self.h1 * self.h1 + self.h2 * self.h2
    }

    /// Cell area `h1 * h2`, the quadrature weight of the discrete inner product.
    pub fn cell_area(&self) -> f64 {
        self.h1 * self.h2
    }

    pub(crate) fn check(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Scalar field on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.interior_len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.interior_len() {
            return Err(Error::LengthMismatch { expected: grid.interior_len(), actual: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Builds a field from a function of the grid indices `(i1, i2)`.
    pub fn from_indices(grid: Grid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.interior_len());
        for i2 in 1..grid.n2() {
            for i1 in 1..grid.n1() {
                values.push(f(i1, i2));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at interior node `(i1, i2)`.
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &GridFunction) -> Result<()> {
        self.grid.check(&other.grid)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// `a * self + b * other` as a new field.
    pub fn combine(&self, a: f64, b: f64, other: &GridFunction) -> Result<GridFunction> {
        self.grid.check(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// `self - other`.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.grid.check(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x - y).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// `self + other`.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(1.0, 1.0, other)
    }
}

/// Discrete L2 inner product `sum y w h1 h2` over interior nodes.
pub fn inner_product(y: &GridFunction, w: &GridFunction) -> Result<f64> {
    y.grid.check(&w.grid)?;
    let sum: f64 = y.values.iter().zip(&w.values).map(|(a, b)| a * b).sum();
    Ok(sum * y.grid.cell_area())
}

pub fn norm(y: &GridFunction) -> f64 {
    let sum: f64 = y.values.iter().map(|a| a * a).sum();
    (sum * y.grid.cell_area()).sqrt()
}

/// Relative slack below zero tolerated in `(Dy, y)` before the operator is
/// rejected as non-positive.
pub const POSITIVITY_SLACK: f64 = 1e-12;

/// `sqrt((Dy, y))` for a self-adjoint nonnegative operator `D`.
pub fn energy_norm<F>(y: &GridFunction, apply_d: F) -> Result<f64>
where
    F: FnOnce(&GridFunction) -> Result<GridFunction>,
{
    let dy = apply_d(y)?;
    let form = inner_product(&dy, y)?;
    let norm_sq = inner_product(y, y)?;
    if form < -POSITIVITY_SLACK * norm_sq {
        return Err(Error::OperatorNotPositive { form, norm_sq });
    }
    Ok(form.max(0.0).sqrt())
}

/// Samples `field(x1, x2, t)` at interior nodes.
pub fn sample<F>(grid: &Grid, field: F, t: f64) -> GridFunction
where
    F: Fn(f64, f64, f64) -> f64,
{
    GridFunction::from_indices(*grid, |i1, i2| {
        let (x1, x2) = grid.node(i1, i2);
        field(x1, x2, t)
    })
}
