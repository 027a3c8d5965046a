//! Numerical certification of the schemes.
//!
//! * energy functionals and a-priori estimates for each scheme,
//! * a closed-form oracle for the space-discrete ODE system when the data
//!   live in a single eigenmode of a constant-coefficient `A`,
//! * time-order studies against that oracle,
//! * a stability probe for the explicit scheme around `tau0 = 2 / ||A||`.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{energy_norm, inner_product, norm, GridFunction};
use crate::operators::{
    apply_a, apply_c, apply_r_hyperbolic, apply_r_multilevel, power_iteration, Coefficient, DEFAULT_POWER_MAX_ITER,
    DEFAULT_POWER_SEED,
};
use crate::schemes::{
    run, weighted_time, Forcing, HyperbolicProblem, ParabolicProblem, Problem, SchemeConfig, SchemeKind, SpaceData,
    Trajectory,
};
use crate::sweeps::SweepOrder;

/// One level of an energy certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub bound: f64,
    /// `max(0, energy - bound)`.
    pub violation: f64,
    /// `violation` divided by the reference energy plus accumulated forcing.
    pub relative_violation: f64,
    /// For the wave scheme: relative defect of the exact energy balance.
    pub identity_defect: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyReport {
    pub records: Vec<EnergyRecord>,
    /// Level 1 of a three-level scheme; excluded from violation statistics.
    pub startup: Option<EnergyRecord>,
    pub max_relative_violation: f64,
    pub max_identity_defect: Option<f64>,
}

impl EnergyReport {
    fn push(&mut self, r: EnergyRecord) {
        self.max_relative_violation = self.max_relative_violation.max(r.relative_violation);
        if let Some(d) = r.identity_defect {
            self.max_identity_defect = Some(self.max_identity_defect.unwrap_or(0.0).max(d));
        }
        self.records.push(r);
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_violation <= tol
    }
}

fn relative(excess: f64, scale: f64) -> f64 {
    if excess <= 0.0 {
        0.0
    } else if scale > 0.0 {
        excess / scale
    } else {
        f64::INFINITY
    }
}

/// `(D y, y)`, rejecting operators that are clearly not positive.
fn quadratic_form(y: &GridFunction, apply: impl FnOnce(&GridFunction) -> Result<GridFunction>) -> Result<f64> {
    energy_norm(y, apply).map(|v| v * v)
}

fn check_trajectory(levels: &[GridFunction], config: &SchemeConfig, min_levels: usize) -> Result<()> {
    if levels.len() < min_levels {
        return Err(Error::InvalidConfig(format!(
            "trajectory needs at least {min_levels} levels, got {}",
            levels.len()
        )));
    }
    if config.tau <= 0.0 {
        return Err(Error::InvalidConfig("tau must be positive".into()));
    }
    Ok(())
}

/// Explicit scheme: `||y^{n}||_A^2 <= ||u0||_A^2 + tau/(2 eps) sum_{k<n} ||phi^k||^2`,
/// valid for `tau <= (1 - eps) 2/||A||`.
pub fn energy_theorem1(
    levels: &[GridFunction],
    problem: &ParabolicProblem,
    config: &SchemeConfig,
    epsilon: f64,
) -> Result<EnergyReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    two_level_report(levels, problem, config, 1.0 / (2.0 * epsilon), |n| config.time(n))
}

/// Factorized ATM scheme with `sigma >= 1/2`:
/// `||y^{n}||_A^2 <= ||u0||_A^2 + tau/2 sum_{k<n} ||phi^k||^2`.
pub fn energy_theorem2(
    levels: &[GridFunction],
    problem: &ParabolicProblem,
    config: &SchemeConfig,
) -> Result<EnergyReport> {
    two_level_report(levels, problem, config, 0.5, |n| weighted_time(config, n))
}

fn two_level_report(
    levels: &[GridFunction],
    problem: &ParabolicProblem,
    config: &SchemeConfig,
    forcing_weight: f64,
    forcing_time: impl Fn(usize) -> f64,
) -> Result<EnergyReport> {
    check_trajectory(levels, config, 1)?;
    let k = &problem.coefficient;
    let e0 = quadratic_form(&levels[0], |y| apply_a(k, y))?;
    let mut accumulated = 0.0;
    let mut report = EnergyReport::default();
    for (n, y) in levels.iter().enumerate() {
        if n > 0 && !problem.forcing.is_zero() {
            let phi = problem.forcing.sample(k.grid(), forcing_time(n - 1))?;
            accumulated += config.tau * forcing_weight * inner_product(&phi, &phi)?;
        }
        let energy = quadratic_form(y, |y| apply_a(k, y))?;
        let bound = e0 + accumulated;
        let violation = (energy - bound).max(0.0);
        report.push(EnergyRecord {
            n,
            t: config.time(n),
            energy,
            bound,
            violation,
            relative_violation: relative(violation, bound),
            identity_defect: None,
        });
    }
    Ok(report)
}

/// Three-level scheme with `sigma >= 1/2`: level-wise
/// `E_{n+1} <= E_n + (tau/2) (C^{-1} phi^n, phi^n)` with
/// `E_n = ||v^n||_A^2 + ||w^n||_R^2`, `C = E + sigma tau A` and
/// `R = (tau/2) E + (tau^2/4)(2 sigma - 1) A + sigma^2 tau^3 A1 A2`.
pub fn energy_theorem3(
    levels: &[GridFunction],
    problem: &ParabolicProblem,
    config: &SchemeConfig,
) -> Result<EnergyReport> {
    check_trajectory(levels, config, 2)?;
    let k = &problem.coefficient;
    let (sigma, tau) = (config.sigma, config.tau);
    let energies = three_level_energies(levels, tau, |y| apply_a(k, y), |y| apply_r_multilevel(k, sigma, tau, y))?;
    let mut report = EnergyReport { startup: Some(startup_record(energies[0], config)), ..Default::default() };
    let mut accumulated = 0.0;
    for n in 1..energies.len() {
        // step n -> n + 1 of the scheme produced level n + 1
        let forcing = if problem.forcing.is_zero() {
            0.0
        } else {
            let phi = problem.forcing.sample(k.grid(), weighted_time(config, n))?;
            let x = solve_spd(|y| apply_c(k, sigma, tau, y), &phi, DEFAULT_SPD_TOL)?;
            0.5 * tau * inner_product(&x, &phi)?
        };
        accumulated += forcing;
        let bound = energies[n - 1] + forcing;
        let violation = (energies[n] - bound).max(0.0);
        report.push(EnergyRecord {
            n: n + 1,
            t: config.time(n + 1),
            energy: energies[n],
            bound,
            violation,
            relative_violation: relative(violation, energies[0] + accumulated),
            identity_defect: None,
        });
    }
    Ok(report)
}

/// Wave scheme with `sigma >= 1/4`.
///
/// Checks the exact balance `E_{n+1} = E_n + tau (phi^n, w^{n+1} + w^n)` and
/// the growth estimate
/// `E_{n+1} <= exp(tau) E_n + exp(0.75 tau) tau ||phi^n||^2_{R^{-1}}` with
/// `R = E + (sigma - 1/4) tau^2 A + sigma^2 tau^4 A1 A2`.
pub fn energy_theorem4(
    levels: &[GridFunction],
    problem: &HyperbolicProblem,
    config: &SchemeConfig,
) -> Result<EnergyReport> {
    check_trajectory(levels, config, 2)?;
    let k = &problem.coefficient;
    let (sigma, tau) = (config.sigma, config.tau);
    let apply_r = |y: &GridFunction| apply_r_hyperbolic(k, sigma, tau, y);
    let energies = three_level_energies(levels, tau, |y| apply_a(k, y), apply_r)?;
    let mut report = EnergyReport { startup: Some(startup_record(energies[0], config)), ..Default::default() };
    let mut accumulated = 0.0;
    let mut w_prev = levels[1].combine(1.0 / tau, -1.0 / tau, &levels[0])?;
    for n in 1..energies.len() {
        let w_next = levels[n + 1].combine(1.0 / tau, -1.0 / tau, &levels[n])?;
        let (work, forcing) = if problem.forcing.is_zero() {
            (0.0, 0.0)
        } else {
            let phi = problem.forcing.sample(k.grid(), config.time(n))?;
            let work = tau * inner_product(&phi, &w_next.add(&w_prev)?)?;
            let x = solve_spd(apply_r, &phi, DEFAULT_SPD_TOL)?;
            (work, (0.75 * tau).exp() * tau * inner_product(&x, &phi)?)
        };
        accumulated += forcing + work.abs();
        let scale = energies[0] + accumulated;
        let defect = (energies[n] - energies[n - 1] - work).abs();
        let bound = tau.exp() * energies[n - 1] + forcing;
        let violation = (energies[n] - bound).max(0.0);
        report.push(EnergyRecord {
            n: n + 1,
            t: config.time(n + 1),
            energy: energies[n],
            bound,
            violation,
            relative_violation: relative(violation, scale),
            identity_defect: Some(if defect == 0.0 { 0.0 } else { defect / scale }),
        });
        w_prev = w_next;
    }
    Ok(report)
}

/// `E_n = ||v^n||_A^2 + ||w^n||_R^2` for `n = 1..levels.len()`.
fn three_level_energies(
    levels: &[GridFunction],
    tau: f64,
    apply_a: impl Fn(&GridFunction) -> Result<GridFunction> + Sync,
    apply_r: impl Fn(&GridFunction) -> Result<GridFunction> + Sync,
) -> Result<Vec<f64>> {
    levels
        .par_windows(2)
        .map(|pair| {
            let v = pair[1].combine(0.5, 0.5, &pair[0])?;
            let w = pair[1].combine(1.0 / tau, -1.0 / tau, &pair[0])?;
            Ok(quadratic_form(&v, &apply_a)? + quadratic_form(&w, &apply_r)?)
        })
        .collect()
}

fn startup_record(energy: f64, config: &SchemeConfig) -> EnergyRecord {
    EnergyRecord {
        n: 1,
        t: config.time(1),
        energy,
        bound: energy,
        violation: 0.0,
        relative_violation: 0.0,
        identity_defect: None,
    }
}

pub const DEFAULT_SPD_TOL: f64 = 1e-12;

/// Conjugate gradients for a symmetric positive definite `M`, to relative
/// residual `tol`. The iteration cap is five times the unknown count.
pub fn solve_spd<F>(apply_m: F, b: &GridFunction, tol: f64) -> Result<GridFunction>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let b_norm = norm(b);
    let mut x = GridFunction::zeros(*b.grid());
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = inner_product(&r, &r)?;
    let cap = 5 * b.values().len();
    for _ in 0..cap {
        if rr.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        let mp = apply_m(&p)?;
        let pmp = inner_product(&p, &mp)?;
        if pmp.is_nan() || pmp <= 0.0 {
            return Err(Error::OperatorNotPositive { form: pmp, norm_sq: inner_product(&p, &p)? });
        }
        let alpha = rr / pmp;
        x.add_scaled(alpha, &p)?;
        r.add_scaled(-alpha, &mp)?;
        let rr_next = inner_product(&r, &r)?;
        p = r.combine(1.0, rr_next / rr, &p)?;
        rr = rr_next;
    }
    if rr.sqrt() <= tol * b_norm {
        return Ok(x);
    }
    Err(Error::NotConverged { what: "conjugate gradients", iterations: cap, last: rr.sqrt() / b_norm })
}

/// Time profile `g(t)` of a single-mode forcing `f(x, t) = g(t) e(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeForcing {
    None,
    /// `a exp(b t)`
    Exp {
        a: f64,
        b: f64,
    },
    /// `a cos(omega t)`
    Cos {
        a: f64,
        omega: f64,
    },
}

impl ModeForcing {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ModeForcing::None => 0.0,
            ModeForcing::Exp { a, b } => a * (b * t).exp(),
            ModeForcing::Cos { a, omega } => a * (omega * t).cos(),
        }
    }
}

/// Data confined to one discrete eigenmode
/// `e(x) = sin(m1 pi x1 / l1) sin(m2 pi x2 / l2)` of a constant-coefficient
/// operator, for which the space-discrete problem reduces to a scalar ODE.
#[derive(Debug, Clone)]
pub struct EigenmodeProblem {
    pub coefficient: Coefficient,
    pub mode: (usize, usize),
    /// `c(0)`
    pub amplitude: f64,
    /// `c'(0)`, used by the wave problem only.
    pub velocity: f64,
    pub forcing: ModeForcing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evolution {
    Parabolic,
    Hyperbolic,
}

impl EigenmodeProblem {
    pub fn new(coefficient: Coefficient, mode: (usize, usize), amplitude: f64) -> Result<Self> {
        if coefficient.constant_value().is_none() {
            return Err(Error::UnsupportedProblem("the eigenmode oracle needs a constant coefficient".into()));
        }
        let g = coefficient.grid();
        if !(1..g.n1()).contains(&mode.0) || !(1..g.n2()).contains(&mode.1) {
            return Err(Error::UnsupportedProblem(format!("mode {mode:?} outside 1..{} x 1..{}", g.n1(), g.n2())));
        }
        Ok(Self { coefficient, mode, amplitude, velocity: 0.0, forcing: ModeForcing::None })
    }

    pub fn with_velocity(mut self, velocity: f64) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn with_forcing(mut self, forcing: ModeForcing) -> Self {
        self.forcing = forcing;
        self
    }

    /// `lambda = k sum_a (4 / h_a^2) sin^2(m_a pi h_a / (2 l_a))`.
    pub fn eigenvalue(&self) -> f64 {
        let g = self.coefficient.grid();
        let k = self.coefficient.constant_value().expect("checked at construction");
        let part = |m: usize, h: f64, l: f64| 4.0 / (h * h) * (m as f64 * PI * h / (2.0 * l)).sin().powi(2);
        k * (part(self.mode.0, g.h1(), g.l1()) + part(self.mode.1, g.h2(), g.l2()))
    }

    pub fn eigenfunction(&self) -> GridFunction {
        mode_function(&self.coefficient, self.mode)
    }

    fn forcing_field(&self) -> Forcing {
        match self.forcing {
            ModeForcing::None => Forcing::Zero,
            profile => Forcing::separable(self.eigenfunction(), move |t| profile.eval(t)),
        }
    }

    fn scaled_mode(&self, c: f64) -> SpaceData {
        let mut e = self.eigenfunction();
        e.scale(c);
        SpaceData::Values(e)
    }

    pub fn parabolic(&self, horizon: f64) -> Result<ParabolicProblem> {
        ParabolicProblem::new(self.coefficient.clone(), self.scaled_mode(self.amplitude), self.forcing_field(), horizon)
    }

    pub fn hyperbolic(&self, horizon: f64) -> Result<HyperbolicProblem> {
        HyperbolicProblem::new(
            self.coefficient.clone(),
            self.scaled_mode(self.amplitude),
            self.scaled_mode(self.velocity),
            self.forcing_field(),
            horizon,
        )
    }

    /// Exact modal amplitude `c(t)` of the space-discrete solution.
    pub fn amplitude_at(&self, evolution: Evolution, t: f64) -> f64 {
        let lam = self.eigenvalue();
        let c0 = self.amplitude;
        match evolution {
            // c' + lam c = g
            Evolution::Parabolic => {
                let decay = (-lam * t).exp();
                match self.forcing {
                    ModeForcing::None => c0 * decay,
                    ModeForcing::Exp { a, b } => {
                        if b + lam == 0.0 {
                            (c0 + a * t) * decay
                        } else {
                            c0 * decay + a * ((b * t).exp() - decay) / (b + lam)
                        }
                    }
                    ModeForcing::Cos { a, omega } => {
                        let d = lam * lam + omega * omega;
                        let particular = a * (lam * (omega * t).cos() + omega * (omega * t).sin()) / d;
                        (c0 - a * lam / d) * decay + particular
                    }
                }
            }
            // c'' + lam c = g
            Evolution::Hyperbolic => {
                let w0 = lam.sqrt();
                let (cos, sin) = ((w0 * t).cos(), (w0 * t).sin());
                let v0 = self.velocity;
                match self.forcing {
                    ModeForcing::None => c0 * cos + v0 / w0 * sin,
                    ModeForcing::Exp { a, b } => {
                        let d = b * b + lam;
                        let p = a / d;
                        (c0 - p) * cos + (v0 - p * b) / w0 * sin + p * (b * t).exp()
                    }
                    ModeForcing::Cos { a, omega } => {
                        if (omega * omega - lam).abs() <= 1e-12 * lam {
                            c0 * cos + v0 / w0 * sin + a * t * sin / (2.0 * w0)
                        } else {
                            let p = a / (lam - omega * omega);
                            (c0 - p) * cos + v0 / w0 * sin + p * (omega * t).cos()
                        }
                    }
                }
            }
        }
    }
}

/// `sin(m1 pi x1 / l1) sin(m2 pi x2 / l2)` on the interior nodes.
pub fn mode_function(k: &Coefficient, mode: (usize, usize)) -> GridFunction {
    let g = *k.grid();
    GridFunction::from_indices(g, |i1, i2| {
        let (x1, x2) = g.node(i1, i2);
        (mode.0 as f64 * PI * x1 / g.l1()).sin() * (mode.1 as f64 * PI * x2 / g.l2()).sin()
    })
}

/// Exact space-discrete solution at time `t` for single-mode data.
pub fn semidiscrete_oracle(problem: &EigenmodeProblem, evolution: Evolution, t: f64) -> GridFunction {
    let mut e = problem.eigenfunction();
    e.scale(problem.amplitude_at(evolution, t));
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub tau: f64,
    pub error_a: Option<f64>,
    pub error_l2: Option<f64>,
    /// Order against the previous row, in the A-norm.
    pub order: Option<f64>,
    /// Level at which the run blew up, if it did.
    pub blow_up: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: SchemeKind,
    pub sigma: f64,
    pub horizon: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Least-squares slope of `ln e` against `ln tau` over all rows with a
    /// positive A-norm error.
    pub fn fitted_order(&self) -> Option<f64> {
        let (taus, errs): (Vec<f64>, Vec<f64>) =
            self.rows.iter().filter_map(|r| r.error_a.filter(|e| *e > 0.0).map(|e| (r.tau, e))).unzip();
        fit_order(&taus, &errs)
    }

    pub fn errors_a(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.error_a).collect()
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Integrates single-mode data to `horizon` for each step in `taus` and
/// measures the error against [`semidiscrete_oracle`].
pub fn time_order_study(
    kind: SchemeKind,
    sigma: f64,
    problem: &EigenmodeProblem,
    horizon: f64,
    taus: &[f64],
    order: SweepOrder,
) -> Result<ConvergenceTable> {
    if taus.is_empty() {
        return Err(Error::InvalidConfig("time-step sequence is empty".into()));
    }
    let evolution = if kind.is_hyperbolic() { Evolution::Hyperbolic } else { Evolution::Parabolic };
    let full: Problem = match evolution {
        Evolution::Parabolic => problem.parabolic(horizon)?.into(),
        Evolution::Hyperbolic => problem.hyperbolic(horizon)?.into(),
    };
    let k = &problem.coefficient;
    let g = k.grid();
    let h = g.h1().max(g.h2());
    let exact = semidiscrete_oracle(problem, evolution, horizon);

    let mut rows = taus
        .par_iter()
        .map(|&tau| -> Result<ConvergenceRow> {
            let steps = (horizon / tau).round() as usize;
            let config = SchemeConfig::new(kind, sigma, tau, steps).with_sweep_order(order);
            config.validate(horizon)?;
            let mut row = ConvergenceRow { h, tau, error_a: None, error_l2: None, order: None, blow_up: None };
            match run(&full, &config, &mut []) {
                Ok(state) => {
                    let z = state.current.sub(&exact)?;
                    row.error_a = Some(energy_norm(&z, |y| apply_a(k, y))?);
                    row.error_l2 = Some(norm(&z));
                }
                Err(Error::BlowUp { level, .. }) => row.blow_up = Some(level),
                Err(e) => return Err(e),
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        rows[i].order = match (prev.error_a, cur.error_a) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).ln() / (prev.tau / cur.tau).ln()),
            _ => None,
        };
    }
    Ok(ConvergenceTable { kind, sigma, horizon, rows })
}

/// Order band accepted around a fitted slope.
pub const ORDER_BAND: f64 = 0.25;

/// Expected global time order in the A-norm for the parabolic schemes.
pub fn target_order(kind: SchemeKind, sigma: f64) -> Option<f64> {
    let centred = (sigma - 0.5).abs() < 1e-12;
    match kind {
        SchemeKind::Explicit => Some(1.0),
        SchemeKind::Atm => Some(if centred { 2.0 } else { 1.0 }),
        SchemeKind::Mlatm => Some(if centred { 3.0 } else { 1.0 }),
        SchemeKind::HyperbolicAtm => Some(2.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    pub stable_ratio: f64,
    pub stable_steps: usize,
    pub unstable_ratio: f64,
    pub unstable_steps: usize,
    pub growth_factor: f64,
    /// Half-width of the band around `tau0` the threshold must fall in.
    pub bracket_tolerance: f64,
    pub bisections: usize,
    pub power_tol: f64,
    /// Seed of the power iteration's start vector.
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            stable_ratio: 0.99,
            stable_steps: 500,
            unstable_ratio: 1.05,
            unstable_steps: 200,
            growth_factor: 10.0,
            bracket_tolerance: 0.02,
            bisections: 12,
            power_tol: 1e-10,
            seed: DEFAULT_POWER_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub norm_a: f64,
    pub tau0: f64,
    /// `||y^n||_A` at `stable_ratio * tau0`.
    pub stable_norms: Vec<f64>,
    pub stable_nonincreasing: bool,
    /// `||y^n||_A` at `unstable_ratio * tau0` from top-mode data, up to blow-up.
    pub unstable_norms: Vec<f64>,
    pub unstable_growth: f64,
    pub unstable_blow_up: Option<usize>,
    /// Largest ratio found stable and smallest found unstable.
    pub bracket: (f64, f64),
}

impl StabilityReport {
    pub fn brackets_tau0(&self, tolerance: f64) -> bool {
        self.bracket.0 >= 1.0 - tolerance && self.bracket.1 <= 1.0 + tolerance
    }
}

/// Relative slack on "nonincreasing" for norm sequences.
pub const MONOTONE_SLACK: f64 = 1e-12;

fn is_nonincreasing(values: &[f64]) -> bool {
    let scale = values.first().copied().unwrap_or(0.0);
    values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK * scale)
}

/// Runs the explicit scheme around `tau0 = 2/||A||`.
pub fn stability_probe(problem: &ParabolicProblem, settings: &ProbeSettings) -> Result<StabilityReport> {
    let k = &problem.coefficient;
    let est = power_iteration(k, settings.power_tol, DEFAULT_POWER_MAX_ITER, settings.seed)?;
    let tau0 = 2.0 / est.value;

    let norms_a = |p: &ParabolicProblem, ratio: f64, steps: usize| -> Result<(Vec<f64>, Option<usize>)> {
        let tau = ratio * tau0;
        let cfg = SchemeConfig::new(SchemeKind::Explicit, 0.0, tau, steps);
        let problem = ParabolicProblem { horizon: cfg.final_time(), ..p.clone() };
        let mut norms = Vec::with_capacity(steps + 1);
        let mut err = None;
        let mut obs = |s: &crate::schemes::StepState| match energy_norm(&s.current, |y| apply_a(k, y)) {
            Ok(v) => norms.push(v),
            Err(e) => err = Some(e),
        };
        let blow_up = match run(&problem.into(), &cfg, &mut [&mut obs]) {
            Ok(_) => None,
            Err(Error::BlowUp { level, .. }) => Some(level),
            Err(e) => return Err(e),
        };
        if let Some(e) = err {
            return Err(e);
        }
        Ok((norms, blow_up))
    };

    let top = ParabolicProblem {
        coefficient: k.clone(),
        forcing: Forcing::Zero,
        initial: SpaceData::Values(est.vector.clone()),
        horizon: problem.horizon,
    };
    let grows = |ratio: f64| -> Result<(bool, Vec<f64>, Option<usize>)> {
        let (norms, blow_up) = norms_a(&top, ratio, settings.unstable_steps)?;
        let growth = norms.iter().copied().fold(0.0, f64::max) / norms[0];
        Ok((blow_up.is_some() || growth >= settings.growth_factor, norms, blow_up))
    };

    let (stable_norms, _) = norms_a(problem, settings.stable_ratio, settings.stable_steps)?;
    let stable_nonincreasing = is_nonincreasing(&stable_norms);
    let (_, unstable_norms, unstable_blow_up) = grows(settings.unstable_ratio)?;
    let unstable_growth = unstable_norms.last().copied().unwrap_or(0.0) / unstable_norms[0];

    let (mut lo, mut hi) = (settings.stable_ratio, settings.unstable_ratio);
    if grows(lo)?.0 || !grows(hi)?.0 {
        // no sign change on the probe interval
        return Ok(StabilityReport {
            norm_a: est.value,
            tau0,
            stable_norms,
            stable_nonincreasing,
            unstable_norms,
            unstable_growth,
            unstable_blow_up,
            bracket: (f64::NAN, f64::NAN),
        });
    }
    for _ in 0..settings.bisections {
        let mid = 0.5 * (lo + hi);
        if grows(mid)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(StabilityReport {
        norm_a: est.value,
        tau0,
        stable_norms,
        stable_nonincreasing,
        unstable_norms,
        unstable_growth,
        unstable_blow_up,
        bracket: (lo, hi),
    })
}

/// Worst relative error of one operator identity over random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub instances: usize,
    pub max_relative_error: f64,
}

/// Checks the splitting, adjointness, self-adjointness, factorized-operator
/// expansion and two-sided spectral bounds on `instances` pseudo-random
/// grid-function pairs.
pub fn operator_checks(
    k: &Coefficient,
    sigma: f64,
    tau: f64,
    instances: usize,
    seed: u64,
) -> Result<Vec<PropertyCheck>> {
    use crate::operators::{apply_a1, apply_a1a2, apply_a2, apply_b, spectral_bounds};
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = *k.grid();
    let bounds = spectral_bounds(k);
    let names = [
        "splitting",
        "adjointness",
        "self-adjointness",
        "product-symmetry",
        "factorized-expansion",
        "lower-bound",
        "upper-bound",
    ];
    let mut worst = [0.0f64; 7];
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    for _ in 0..instances {
        let y = GridFunction::from_indices(grid, |_, _| rng.gen_range(-1.0..1.0));
        let w = GridFunction::from_indices(grid, |_, _| rng.gen_range(-1.0..1.0));
        let (a1y, a2y, ay) = (apply_a1(k, &y)?, apply_a2(k, &y)?, apply_a(k, &y)?);
        let (a2w, aw) = (apply_a2(k, &w)?, apply_a(k, &w)?);
        let e = [
            ratio(norm(&ay.sub(&a1y.add(&a2y)?)?), norm(&ay)),
            ratio((inner_product(&a1y, &w)? - inner_product(&y, &a2w)?).abs(), norm(&a1y) * norm(&w)),
            ratio((inner_product(&ay, &w)? - inner_product(&y, &aw)?).abs(), norm(&ay) * norm(&w)),
            {
                let py = apply_a1a2(k, &y)?;
                let pw = apply_a1a2(k, &w)?;
                ratio((inner_product(&py, &w)? - inner_product(&y, &pw)?).abs(), norm(&py) * norm(&w))
            },
            {
                let by = apply_b(k, sigma, tau, &y)?;
                let mut expanded = y.clone();
                expanded.add_scaled(sigma * tau, &ay)?;
                expanded.add_scaled(sigma * sigma * tau * tau, &apply_a1a2(k, &y)?)?;
                ratio(norm(&by.sub(&expanded)?), norm(&by))
            },
            {
                let q = inner_product(&ay, &y)? / inner_product(&y, &y)?;
                (bounds.lower - q).max(0.0) / bounds.lower
            },
            {
                let q = inner_product(&ay, &y)? / inner_product(&y, &y)?;
                (q - bounds.upper).max(0.0) / bounds.upper
            },
        ];
        for (acc, v) in worst.iter_mut().zip(e) {
            *acc = acc.max(v);
        }
    }
    Ok(names
        .iter()
        .zip(worst)
        .map(|(name, max_relative_error)| PropertyCheck { name, instances, max_relative_error })
        .collect())
}

/// Runs a problem and returns every level.
pub fn trajectory(problem: &Problem, config: &SchemeConfig) -> Result<Trajectory> {
    let mut t = Trajectory::default();
    run(problem, config, &mut [&mut t])?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operators::spectral_bounds;

    fn unit(n: usize) -> Coefficient {
        Coefficient::constant(Grid::unit_square(n).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn oracle_requires_constant_coefficient() {
        let g = Grid::unit_square(4).unwrap();
        let k = Coefficient::from_fn(g, |x1, _| 1.0 + x1).unwrap();
        assert!(matches!(EigenmodeProblem::new(k, (1, 1), 1.0), Err(Error::UnsupportedProblem(_))));
        assert!(EigenmodeProblem::new(unit(4), (4, 1), 1.0).is_err());
    }

    #[test]
    fn mode_eigenvalue() {
        let p = EigenmodeProblem::new(unit(4), (1, 1), 1.0).unwrap();
        assert!((p.eigenvalue() - 18.745).abs() < 1e-3);
        assert!((p.eigenvalue() - spectral_bounds(&p.coefficient).delta).abs() < 1e-12);
        let e = p.eigenfunction();
        let ae = apply_a(&p.coefficient, &e).unwrap();
        for (a, b) in ae.values().iter().zip(e.values()) {
            assert!((a - p.eigenvalue() * b).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_oracles() {
        let p = EigenmodeProblem::new(unit(8), (1, 2), 2.0).unwrap();
        let lam = p.eigenvalue();
        assert!((p.amplitude_at(Evolution::Parabolic, 0.3) - 2.0 * (-0.3 * lam).exp()).abs() < 1e-15);
        assert!((p.amplitude_at(Evolution::Hyperbolic, 0.3) - 2.0 * (0.3 * lam.sqrt()).cos()).abs() < 1e-14);
    }

    /// Finite-difference check that the closed forms solve their ODEs.
    #[test]
    fn forced_oracles_solve_their_odes() {
        let base = EigenmodeProblem::new(unit(8), (2, 1), 0.7).unwrap().with_velocity(-0.4);
        let lam = base.eigenvalue();
        let forcings = [
            ModeForcing::Exp { a: 1.3, b: -2.0 },
            ModeForcing::Exp { a: 1.3, b: -lam },
            ModeForcing::Cos { a: 2.0, omega: 5.0 },
            ModeForcing::Cos { a: 2.0, omega: lam.sqrt() },
        ];
        let h = 1e-4;
        for f in forcings {
            let p = base.clone().with_forcing(f);
            let t = 0.37;
            let c = |t| p.amplitude_at(Evolution::Parabolic, t);
            let d1 = (c(t + h) - c(t - h)) / (2.0 * h);
            assert!((d1 + lam * c(t) - f.eval(t)).abs() < 1e-5 * (1.0 + lam), "{f:?}");
            assert!((c(0.0) - 0.7).abs() < 1e-14);

            let c = |t| p.amplitude_at(Evolution::Hyperbolic, t);
            let d2 = (c(t + h) - 2.0 * c(t) + c(t - h)) / (h * h);
            assert!((d2 + lam * c(t) - f.eval(t)).abs() < 1e-3, "{f:?}");
            assert!((c(0.0) - 0.7).abs() < 1e-13);
            let v0 = (c(h) - c(-h)) / (2.0 * h);
            assert!((v0 + 0.4).abs() < 1e-5, "{f:?}");
        }
    }

    #[test]
    fn spd_solver_basics() {
        let k = unit(2);
        let b = GridFunction::from_values(*k.grid(), vec![3.0]).unwrap();
        assert_eq!(solve_spd(|y| Ok(y.clone()), &b, 1e-12).unwrap(), b);
        let (sigma, tau) = (1.0, 0.25);
        let x = solve_spd(|y| apply_c(&k, sigma, tau, y), &b, 1e-12).unwrap();
        assert!((x.values()[0] - 3.0 / (1.0 + sigma * tau * 16.0)).abs() < 1e-14);
        let z = GridFunction::zeros(*k.grid());
        assert_eq!(solve_spd(|y| Ok(y.clone()), &z, 1e-12).unwrap(), z);
    }

    #[test]
    fn spd_solver_rejects_indefinite() {
        let k = unit(3);
        let b = mode_function(&k, (1, 1));
        let err = solve_spd(
            |y| {
                let mut n = y.clone();
                n.scale(-1.0);
                Ok(n)
            },
            &b,
            1e-12,
        )
        .unwrap_err();
        assert!(matches!(err, Error::OperatorNotPositive { .. }));
    }

    #[test]
    fn fit_order_of_power_law() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powi(2)).collect();
        assert!((fit_order(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&x, &[0.0; 4]), None);
    }

    #[test]
    fn zero_data_study_reports_undefined_orders() {
        let p = EigenmodeProblem::new(unit(8), (1, 1), 0.0).unwrap();
        let t =
            time_order_study(SchemeKind::Atm, 0.5, &p, 0.1, &[0.02, 0.01, 0.005], SweepOrder::Lexicographic).unwrap();
        assert!(t.rows.iter().all(|r| r.error_a == Some(0.0) && r.order.is_none()));
        assert_eq!(t.fitted_order(), None);
        assert!(time_order_study(SchemeKind::Atm, 0.5, &p, 0.1, &[], SweepOrder::Lexicographic).is_err());
    }

    #[test]
    fn zero_trajectory_energies() {
        let k = unit(5);
        let z = GridFunction::zeros(*k.grid());
        let levels = vec![z.clone(), z.clone(), z];
        let p = ParabolicProblem::new(k.clone(), SpaceData::Zero, Forcing::Zero, 0.2).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Mlatm, 0.5, 0.1, 2);
        for r in [
            energy_theorem1(&levels, &p, &cfg, 0.5).unwrap(),
            energy_theorem2(&levels, &p, &cfg).unwrap(),
            energy_theorem3(&levels, &p, &cfg).unwrap(),
        ] {
            assert!(r.records.iter().all(|r| r.energy == 0.0 && r.violation == 0.0));
        }
        let h = HyperbolicProblem::new(k, SpaceData::Zero, SpaceData::Zero, Forcing::Zero, 0.2).unwrap();
        let r = energy_theorem4(&levels, &h, &cfg).unwrap();
        assert_eq!(r.max_identity_defect, Some(0.0));
    }
}
