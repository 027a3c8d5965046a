//! Matrix-free diffusion operators on the interior grid.
//!
//! `A = D1 + D2` is the five-point flux discretisation of `-div(k grad u)`.
//! The triangular splitting `A = A1 + A2` gives each half the forward
//! (east/north) or backward (west/south) couplings of `A` plus half of its
//! diagonal. `A1` is then upper and `A2` lower triangular in lexicographic
//! order, and `A2 = A1*` for any coefficient. For constant `k` this is the
//! forward/backward flux split.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{inner_product, norm, Grid, GridFunction};

/// Below this many interior nodes stencil applications run sequentially.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// Diffusion coefficient sampled at cell-face midpoints.
///
/// Face values are stored pre-divided by `h_a^2` as per-node stencil weights:
/// `east = k(x1 + h1/2, x2) / h1^2`, `west = k(x1 - h1/2, x2) / h1^2`, and
/// likewise `north`/`south` in x2. Faces adjacent to the boundary are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    grid: Grid,
    east: Vec<f64>,
    west: Vec<f64>,
    north: Vec<f64>,
    south: Vec<f64>,
    /// Half the diagonal of `A`: `(east + west + north + south) / 2`.
    half: Vec<f64>,
    k_lower: f64,
    k_upper: f64,
    constant: Option<f64>,
}

impl Coefficient {
    pub fn constant(grid: Grid, k: f64) -> Result<Self> {
        let mut c = Self::from_fn_with_bounds(grid, |_, _| k, k, k)?;
        c.constant = Some(k);
        Ok(c)
    }

    /// Samples `k` at face midpoints; the bounds are the extreme samples.
    pub fn from_fn(grid: Grid, k: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (face1, face2) = sample_faces(&grid, &k);
        let (lo, hi) =
            face1.iter().chain(&face2).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self::assemble(grid, face1, face2, lo, hi)
    }

    /// Samples `k` at face midpoints and checks every sample against the
    /// declared bounds `[k_lower, k_upper]`.
    pub fn from_fn_with_bounds(grid: Grid, k: impl Fn(f64, f64) -> f64, k_lower: f64, k_upper: f64) -> Result<Self> {
        let (face1, face2) = sample_faces(&grid, &k);
        Self::assemble(grid, face1, face2, k_lower, k_upper)
    }

    /// Piecewise-constant coefficient on a `tiles x tiles` board, `k_lower`
    /// on even tiles and `k_upper` on odd ones.
    pub fn checkerboard(grid: Grid, k_lower: f64, k_upper: f64, tiles: usize) -> Result<Self> {
        if tiles == 0 {
            return Err(Error::InvalidCoefficient("checkerboard needs at least one tile".into()));
        }
        let (l1, l2) = (grid.l1(), grid.l2());
        let t = tiles as f64;
        Self::from_fn_with_bounds(
            grid,
            move |x1, x2| {
                let a = ((x1 / l1 * t).floor() as i64).clamp(0, tiles as i64 - 1);
                let b = ((x2 / l2 * t).floor() as i64).clamp(0, tiles as i64 - 1);
                if (a + b) % 2 == 0 {
                    k_lower
                } else {
                    k_upper
                }
            },
            k_lower,
            k_upper,
        )
    }

    fn assemble(grid: Grid, face1: Vec<f64>, face2: Vec<f64>, k_lower: f64, k_upper: f64) -> Result<Self> {
        if !(k_lower > 0.0 && k_lower <= k_upper && k_upper.is_finite()) {
            return Err(Error::InvalidCoefficient(format!(
                "bounds must satisfy 0 < k_lower <= k_upper < inf, got [{k_lower}, {k_upper}]"
            )));
        }
        if let Some(v) = face1.iter().chain(&face2).find(|v| !(**v >= k_lower && **v <= k_upper)) {
            return Err(Error::InvalidCoefficient(format!("face value {v} outside [{k_lower}, {k_upper}]")));
        }
        let (n1, m1, m2) = (grid.n1(), grid.m1(), grid.m2());
        let s1 = 1.0 / (grid.h1() * grid.h1());
        let s2 = 1.0 / (grid.h2() * grid.h2());
        let len = grid.interior_len();
        let mut east = Vec::with_capacity(len);
        let mut west = Vec::with_capacity(len);
        let mut north = Vec::with_capacity(len);
        let mut south = Vec::with_capacity(len);
        for j2 in 0..m2 {
            for j1 in 0..m1 {
                // node (j1 + 1, j2 + 1); x1-faces indexed by their left node
                east.push(face1[(j1 + 1) + j2 * n1] * s1);
                west.push(face1[j1 + j2 * n1] * s1);
                north.push(face2[j1 + (j2 + 1) * m1] * s2);
                south.push(face2[j1 + j2 * m1] * s2);
            }
        }
        let half = (0..len).map(|p| 0.5 * (east[p] + west[p] + north[p] + south[p])).collect();
        Ok(Self { grid, east, west, north, south, half, k_lower, k_upper, constant: None })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_lower(&self) -> f64 {
        self.k_lower
    }

    pub fn k_upper(&self) -> f64 {
        self.k_upper
    }

    /// The value of a coefficient built with [`Coefficient::constant`].
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    /// Stencil weights `(east, west, north, south)` at storage index `p`.
    #[inline]
    pub fn weights(&self, p: usize) -> (f64, f64, f64, f64) {
        (self.east[p], self.west[p], self.north[p], self.south[p])
    }

    /// Diagonal of `A1` (and of `A2`) at storage index `p`.
    #[inline]
    pub fn half_diagonal(&self, p: usize) -> f64 {
        self.half[p]
    }

    fn check(&self, y: &GridFunction) -> Result<()> {
        if y.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Samples `k` on x1-faces (`n1 * (n2 - 1)` values, face `(i1 + 1/2, i2)` for
/// `i1 in 0..n1`) and x2-faces (`(n1 - 1) * n2` values).
fn sample_faces(grid: &Grid, k: &impl Fn(f64, f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let (h1, h2) = (grid.h1(), grid.h2());
    let mut face1 = Vec::with_capacity(grid.n1() * grid.m2());
    for i2 in 1..grid.n2() {
        for i1 in 0..grid.n1() {
            face1.push(k((i1 as f64 + 0.5) * h1, i2 as f64 * h2));
        }
    }
    let mut face2 = Vec::with_capacity(grid.m1() * grid.n2());
    for i2 in 0..grid.n2() {
        for i1 in 1..grid.n1() {
            face2.push(k(i1 as f64 * h1, (i2 as f64 + 0.5) * h2));
        }
    }
    (face1, face2)
}

/// Node value and its four neighbours; neighbours outside the interior are 0.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    c: f64,
    e: f64,
    w: f64,
    n: f64,
    s: f64,
}

fn map_nodes<F>(k: &Coefficient, y: &[f64], f: F) -> Vec<f64>
where
    F: Fn(usize, Stencil) -> f64 + Sync,
{
    let (m1, m2) = (k.grid.m1(), k.grid.m2());
    let mut out = vec![0.0; y.len()];
    let row = |j2: usize, dst: &mut [f64]| {
        for (j1, d) in dst.iter_mut().enumerate() {
            let p = j1 + j2 * m1;
            let st = Stencil {
                c: y[p],
                e: if j1 + 1 < m1 { y[p + 1] } else { 0.0 },
                w: if j1 > 0 { y[p - 1] } else { 0.0 },
                n: if j2 + 1 < m2 { y[p + m1] } else { 0.0 },
                s: if j2 > 0 { y[p - m1] } else { 0.0 },
            };
            *d = f(p, st);
        }
    };
    if y.len() >= PARALLEL_THRESHOLD {
        out.par_chunks_mut(m1).enumerate().for_each(|(j2, dst)| row(j2, dst));
    } else {
        out.chunks_mut(m1).enumerate().for_each(|(j2, dst)| row(j2, dst));
    }
    out
}

fn wrap(k: &Coefficient, values: Vec<f64>) -> GridFunction {
    GridFunction::from_values(k.grid, values).expect("stencil output has interior length")
}

pub fn apply_d1(k: &Coefficient, y: &GridFunction) -> Result<GridFunction> {
    k.check(y)?;
    Ok(wrap(k, map_nodes(k, y.values(), |p, s| -(k.east[p] * (s.e - s.c) - k.west[p] * (s.c - s.w)))))
}

pub fn apply_d2(k: &Coefficient, y: &GridFunction) -> Result<GridFunction> {
    k.check(y)?;
    Ok(wrap(k, map_nodes(k, y.values(), |p, s| -(k.north[p] * (s.n - s.c) - k.south[p] * (s.c - s.s)))))
}

/// `A y = (D1 + D2) y` in one pass.
pub fn apply_a(k: &Coefficient, y: &GridFunction) -> Result<GridFunction> {
    k.check(y)?;
    Ok(wrap(
        k,
        map_nodes(k, y.values(), |p, s| {
            -(k.east[p] * (s.e - s.c) - k.west[p] * (s.c - s.w)) - (k.north[p] * (s.n - s.c) - k.south[p] * (s.c - s.s))
        }),
    ))
}

/// Upper-triangular half of `A`: couples a node to its east and north
/// neighbours.
pub fn apply_a1(k: &Coefficient, y: &GridFunction) -> Result<GridFunction> {
    k.check(y)?;
    Ok(wrap(k, map_nodes(k, y.values(), |p, s| k.half[p] * s.c - k.east[p] * s.e - k.north[p] * s.n)))
}

/// Lower-triangular half of `A`, the adjoint of [`apply_a1`].
pub fn apply_a2(k: &Coefficient, y: &GridFunction) -> Result<GridFunction> {
    k.check(y)?;
    Ok(wrap(k, map_nodes(k, y.values(), |p, s| k.half[p] * s.c - k.west[p] * s.w - k.south[p] * s.s)))
}

/// `A1 A2 y`.
pub fn apply_a1a2(k: &Coefficient, y: &GridFunction) -> Result<GridFunction> {
    apply_a1(k, &apply_a2(k, y)?)
}

/// `(E + c A1)(E + c A2) y`.
pub fn apply_factorized(k: &Coefficient, c: f64, y: &GridFunction) -> Result<GridFunction> {
    let mut z = apply_a2(k, y)?;
    z.scale(c);
    z.add_scaled(1.0, y)?;
    let mut out = apply_a1(k, &z)?;
    out.scale(c);
    out.add_scaled(1.0, &z)?;
    Ok(out)
}

/// `B y = (E + sigma tau A1)(E + sigma tau A2) y`.
pub fn apply_b(k: &Coefficient, sigma: f64, tau: f64, y: &GridFunction) -> Result<GridFunction> {
    apply_factorized(k, sigma * tau, y)
}

/// `G y = (E + sigma tau^2 A1)(E + sigma tau^2 A2) y` of the wave scheme.
pub fn apply_g_hyperbolic(k: &Coefficient, sigma: f64, tau: f64, y: &GridFunction) -> Result<GridFunction> {
    apply_factorized(k, sigma * tau * tau, y)
}

/// `R y = G y - (tau^2 / 4) A y`, the energy operator of the wave scheme.
pub fn apply_r_hyperbolic(k: &Coefficient, sigma: f64, tau: f64, y: &GridFunction) -> Result<GridFunction> {
    let mut out = apply_g_hyperbolic(k, sigma, tau, y)?;
    out.add_scaled(-0.25 * tau * tau, &apply_a(k, y)?)?;
    Ok(out)
}

/// `C y = (E + sigma tau A) y`.
pub fn apply_c(k: &Coefficient, sigma: f64, tau: f64, y: &GridFunction) -> Result<GridFunction> {
    let mut out = apply_a(k, y)?;
    out.scale(sigma * tau);
    out.add_scaled(1.0, y)?;
    Ok(out)
}

/// Energy operator of the three-level scheme:
/// `R = (tau/2) E + (tau^2/4)(2 sigma - 1) A + sigma^2 tau^3 A1 A2`.
pub fn apply_r_multilevel(k: &Coefficient, sigma: f64, tau: f64, y: &GridFunction) -> Result<GridFunction> {
    let mut out = apply_a1a2(k, y)?;
    out.scale(sigma * sigma * tau * tau * tau);
    out.add_scaled(0.25 * tau * tau * (2.0 * sigma - 1.0), &apply_a(k, y)?)?;
    out.add_scaled(0.5 * tau, y)?;
    Ok(out)
}

/// Two-sided spectral bounds `k_lower delta E <= A <= k_upper Delta E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub delta1: f64,
    pub delta2: f64,
    pub big_delta1: f64,
    pub big_delta2: f64,
    pub delta: f64,
    pub big_delta: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn spectral_bounds(k: &Coefficient) -> SpectralBounds {
    let g = &k.grid;
    let ends = |h: f64, l: f64| {
        let a = PI * h / (2.0 * l);
        let s = 4.0 / (h * h);
        (s * a.sin().powi(2), s * a.cos().powi(2))
    };
    let (delta1, big_delta1) = ends(g.h1(), g.l1());
    let (delta2, big_delta2) = ends(g.h2(), g.l2());
    let delta = delta1 + delta2;
    let big_delta = big_delta1 + big_delta2;
    SpectralBounds {
        delta1,
        delta2,
        big_delta1,
        big_delta2,
        delta,
        big_delta,
        lower: k.k_lower * delta,
        upper: k.k_upper * big_delta,
    }
}

pub const DEFAULT_POWER_MAX_ITER: usize = 100_000;
pub const DEFAULT_POWER_SEED: u64 = 0x0A7_5EED;

#[derive(Debug, Clone)]
pub struct PowerEstimate {
    /// Rayleigh-quotient estimate of `||A|| = lambda_max(A)`.
    pub value: f64,
    /// Last normalised iterate (approximate top eigenvector).
    pub vector: GridFunction,
    pub iterations: usize,
}

/// Power iteration on `A` from a seeded pseudo-random start, stopping when
/// the Rayleigh quotient changes by less than `tol` relative.
pub fn power_iteration(k: &Coefficient, tol: f64, max_iter: usize, seed: u64) -> Result<PowerEstimate> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = GridFunction::from_indices(k.grid, |_, _| rng.gen_range(-1.0..1.0));
    x.scale(1.0 / norm(&x));
    let mut estimate = f64::NAN;
    for it in 1..=max_iter {
        let ax = apply_a(k, &x)?;
        let rq = inner_product(&ax, &x)?;
        let n = norm(&ax);
        if n == 0.0 {
            return Err(Error::NotConverged { what: "power iteration", iterations: it, last: 0.0 });
        }
        x = ax;
        x.scale(1.0 / n);
        if (rq - estimate).abs() < tol * rq.abs() {
            return Ok(PowerEstimate { value: rq, vector: x, iterations: it });
        }
        estimate = rq;
    }
    Err(Error::NotConverged { what: "power iteration", iterations: max_iter, last: estimate })
}

/// `||A||` via [`power_iteration`] with the default seed and iteration cap.
pub fn estimate_norm_a(k: &Coefficient, tol: f64) -> Result<f64> {
    power_iteration(k, tol, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_SEED).map(|e| e.value)
}
