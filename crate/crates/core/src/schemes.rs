//! Time integrators for `du/dt + A u = f` and `d2u/dt2 + A u = f`.
//!
//! * explicit: `(y1 - y0)/tau + A y0 = f(t0)`
//! * atm: `B (y1 - y0)/tau + A y0 = f(sigma t1 + (1 - sigma) t0)` with
//!   `B = (E + sigma tau A1)(E + sigma tau A2)`
//! * mlatm: three-level scheme
//!   `(E + sigma tau A)(y2 - y1)/tau + sigma^2 tau A1 A2 (y2 - 2 y1 + y0) + A y1 = f`
//!   which lags the splitting term of `B` to the previous time difference
//! * hyperbolic-atm: `G (y2 - 2 y1 + y0)/tau^2 + A y1 = f(t1)` with
//!   `G = (E + sigma tau^2 A1)(E + sigma tau^2 A2)`
//!
//! Every new level costs one factorized solve (two explicit sweeps).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{norm, sample, Grid, GridFunction};
use crate::operators::{apply_a, apply_a1a2, Coefficient};
use crate::sweeps::{SweepOrder, SweepWorkspace};

pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A field over the domain: initial data and initial velocity.
#[derive(Clone)]
pub enum SpaceData {
    Zero,
    Function(SpaceFn),
    /// Values given directly on the interior nodes.
    Values(GridFunction),
}

impl SpaceData {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SpaceData::Function(Arc::new(f))
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        match self {
            SpaceData::Zero => Ok(GridFunction::zeros(*grid)),
            SpaceData::Function(f) => Ok(sample(grid, |x1, x2, _| f(x1, x2), 0.0)),
            SpaceData::Values(v) => {
                if v.grid() == grid {
                    Ok(v.clone())
                } else {
                    Err(Error::GridMismatch)
                }
            }
        }
    }
}

impl fmt::Debug for SpaceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceData::Zero => f.write_str("Zero"),
            SpaceData::Function(_) => f.write_str("Function(..)"),
            SpaceData::Values(v) => write!(f, "Values({} nodes)", v.values().len()),
        }
    }
}

/// Right-hand side `f(x, t)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Function(SpaceTimeFn),
    /// `f(x, t) = profile(t) * space(x)`.
    Separable {
        space: GridFunction,
        profile: TimeFn,
    },
}

impl Forcing {
    pub fn function(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Function(Arc::new(f))
    }

    pub fn separable(space: GridFunction, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Separable { space, profile: Arc::new(profile) }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Result<GridFunction> {
        match self {
            Forcing::Zero => Ok(GridFunction::zeros(*grid)),
            Forcing::Function(f) => Ok(sample(grid, |x1, x2, t| f(x1, x2, t), t)),
            Forcing::Separable { space, profile } => {
                if space.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                let mut out = space.clone();
                out.scale(profile(t));
                Ok(out)
            }
        }
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => f.write_str("Zero"),
            Forcing::Function(_) => f.write_str("Function(..)"),
            Forcing::Separable { .. } => f.write_str("Separable(..)"),
        }
    }
}

/// `du/dt + A u = f`, `u(0) = u0`, on `0 < t <= horizon`.
#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    pub coefficient: Coefficient,
    pub forcing: Forcing,
    pub initial: SpaceData,
    pub horizon: f64,
}

impl ParabolicProblem {
    pub fn new(coefficient: Coefficient, initial: SpaceData, forcing: Forcing, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(Self { coefficient, forcing, initial, horizon })
    }
}

/// `d2u/dt2 + A u = f`, `u(0) = u0`, `du/dt(0) = v0`.
#[derive(Debug, Clone)]
pub struct HyperbolicProblem {
    pub coefficient: Coefficient,
    pub forcing: Forcing,
    pub initial: SpaceData,
    pub velocity: SpaceData,
    pub horizon: f64,
}

impl HyperbolicProblem {
    pub fn new(
        coefficient: Coefficient,
        initial: SpaceData,
        velocity: SpaceData,
        forcing: Forcing,
        horizon: f64,
    ) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(Self { coefficient, forcing, initial, velocity, horizon })
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")))
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Parabolic(ParabolicProblem),
    Hyperbolic(HyperbolicProblem),
}

impl Problem {
    pub fn coefficient(&self) -> &Coefficient {
        match self {
            Problem::Parabolic(p) => &p.coefficient,
            Problem::Hyperbolic(p) => &p.coefficient,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Problem::Parabolic(p) => p.horizon,
            Problem::Hyperbolic(p) => p.horizon,
        }
    }

    pub fn forcing(&self) -> &Forcing {
        match self {
            Problem::Parabolic(p) => &p.forcing,
            Problem::Hyperbolic(p) => &p.forcing,
        }
    }
}

impl From<ParabolicProblem> for Problem {
    fn from(p: ParabolicProblem) -> Self {
        Problem::Parabolic(p)
    }
}

impl From<HyperbolicProblem> for Problem {
    fn from(p: HyperbolicProblem) -> Self {
        Problem::Hyperbolic(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Explicit,
    Atm,
    Mlatm,
    HyperbolicAtm,
}

impl SchemeKind {
    pub fn is_three_level(self) -> bool {
        matches!(self, SchemeKind::Mlatm | SchemeKind::HyperbolicAtm)
    }

    pub fn is_hyperbolic(self) -> bool {
        self == SchemeKind::HyperbolicAtm
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Explicit => "explicit",
            SchemeKind::Atm => "atm",
            SchemeKind::Mlatm => "mlatm",
            SchemeKind::HyperbolicAtm => "hyperbolic-atm",
        }
    }

    /// Smallest weight for which the scheme is unconditionally stable.
    pub fn sigma_threshold(self) -> Option<f64> {
        match self {
            SchemeKind::Explicit => None,
            SchemeKind::Atm | SchemeKind::Mlatm => Some(0.5),
            SchemeKind::HyperbolicAtm => Some(0.25),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(SchemeKind::Explicit),
            "atm" => Ok(SchemeKind::Atm),
            "mlatm" => Ok(SchemeKind::Mlatm),
            "hyperbolic-atm" | "hyperbolic" => Ok(SchemeKind::HyperbolicAtm),
            other => Err(Error::InvalidConfig(format!("unknown scheme kind `{other}`"))),
        }
    }
}

/// How the second level of the three-level parabolic scheme is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultilevelStartup {
    /// One factorized ATM step with the same weight and step.
    #[default]
    Atm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub sigma: f64,
    pub tau: f64,
    pub steps: usize,
    pub sweep_order: SweepOrder,
    pub startup: MultilevelStartup,
}

/// Relative tolerance for `steps * tau == horizon`.
pub const HORIZON_TOLERANCE: f64 = 1e-12;

impl SchemeConfig {
    pub fn new(kind: SchemeKind, sigma: f64, tau: f64, steps: usize) -> Self {
        Self { kind, sigma, tau, steps, sweep_order: SweepOrder::Lexicographic, startup: MultilevelStartup::Atm }
    }

    pub fn with_sweep_order(mut self, order: SweepOrder) -> Self {
        self.sweep_order = order;
        self
    }

    /// `t^n = n tau`.
    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.tau
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }

    /// Checks the configuration against a horizon and returns warnings for
    /// weights below the unconditional-stability threshold.
    pub fn validate(&self, horizon: f64) -> Result<Vec<String>> {
        let warnings = self.check(horizon)?;
        for w in &warnings {
            warn!("{w}");
        }
        Ok(warnings)
    }

    fn check(&self, horizon: f64) -> Result<Vec<String>> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if self.kind != SchemeKind::Explicit && !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        let t = self.final_time();
        if (t - horizon).abs() > HORIZON_TOLERANCE * horizon.abs() {
            return Err(Error::InvalidConfig(format!("steps * tau = {t} does not match horizon {horizon}")));
        }
        let mut warnings = Vec::new();
        if let Some(th) = self.kind.sigma_threshold() {
            if self.sigma < th {
                warnings.push(format!(
                    "{} with sigma = {} < {th} is not covered by the stability estimate",
                    self.kind, self.sigma
                ));
            }
        }
        Ok(warnings)
    }
}

/// Solution levels at `t^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub current: GridFunction,
    /// `y^{n-1}`, kept by the three-level schemes once `n >= 1`.
    pub previous: Option<GridFunction>,
    pub level: usize,
    pub time: f64,
}

impl StepState {
    pub fn initial(y0: GridFunction) -> Self {
        Self { current: y0, previous: None, level: 0, time: 0.0 }
    }

    /// `v^n = (y^n + y^{n-1}) / 2`.
    pub fn average(&self) -> Result<GridFunction> {
        let prev = self.previous.as_ref().ok_or(Error::MissingHistory)?;
        self.current.combine(0.5, 0.5, prev)
    }

    /// `w^n = (y^n - y^{n-1}) / tau`.
    pub fn difference(&self, tau: f64) -> Result<GridFunction> {
        let prev = self.previous.as_ref().ok_or(Error::MissingHistory)?;
        self.current.combine(1.0 / tau, -1.0 / tau, prev)
    }
}

fn advance(state: &StepState, next: GridFunction, keep_previous: bool, config: &SchemeConfig) -> StepState {
    let level = state.level + 1;
    StepState { previous: keep_previous.then(|| state.current.clone()), current: next, level, time: config.time(level) }
}

/// `phi^n - A y^n`.
fn residual(k: &Coefficient, phi: GridFunction, y: &GridFunction) -> Result<GridFunction> {
    let mut r = phi;
    r.add_scaled(-1.0, &apply_a(k, y)?)?;
    Ok(r)
}

/// Forcing sample time of the two-level factorized scheme.
pub fn weighted_time(config: &SchemeConfig, level: usize) -> f64 {
    config.sigma * config.time(level + 1) + (1.0 - config.sigma) * config.time(level)
}

pub fn step_explicit(problem: &ParabolicProblem, config: &SchemeConfig, state: &StepState) -> Result<StepState> {
    let k = &problem.coefficient;
    let phi = problem.forcing.sample(k.grid(), config.time(state.level))?;
    let r = residual(k, phi, &state.current)?;
    let mut next = state.current.clone();
    next.add_scaled(config.tau, &r)?;
    Ok(advance(state, next, false, config))
}

pub fn step_atm(problem: &ParabolicProblem, config: &SchemeConfig, state: &StepState) -> Result<StepState> {
    let mut ws = SweepWorkspace::new(*problem.coefficient.grid(), config.sweep_order);
    step_atm_with(&mut ws, problem, config, state)
}

pub fn step_atm_with(
    ws: &mut SweepWorkspace,
    problem: &ParabolicProblem,
    config: &SchemeConfig,
    state: &StepState,
) -> Result<StepState> {
    let k = &problem.coefficient;
    let phi = problem.forcing.sample(k.grid(), weighted_time(config, state.level))?;
    let r = residual(k, phi, &state.current)?;
    let d = ws.solve_factorized(k, config.sigma * config.tau, &r)?;
    let mut next = state.current.clone();
    next.add_scaled(config.tau, &d)?;
    Ok(advance(state, next, config.kind.is_three_level(), config))
}

pub fn step_mlatm(problem: &ParabolicProblem, config: &SchemeConfig, state: &StepState) -> Result<StepState> {
    let mut ws = SweepWorkspace::new(*problem.coefficient.grid(), config.sweep_order);
    step_mlatm_with(&mut ws, problem, config, state)
}

/// Solves `B (y^{n+1} - y^n)/tau = phi - A y^n + sigma^2 tau A1 A2 (y^n - y^{n-1})`,
/// the three-level scheme rearranged around the factorized operator.
pub fn step_mlatm_with(
    ws: &mut SweepWorkspace,
    problem: &ParabolicProblem,
    config: &SchemeConfig,
    state: &StepState,
) -> Result<StepState> {
    let prev = state.previous.as_ref().ok_or(Error::MissingHistory)?;
    let k = &problem.coefficient;
    let (sigma, tau) = (config.sigma, config.tau);
    let phi = problem.forcing.sample(k.grid(), weighted_time(config, state.level))?;
    let mut r = residual(k, phi, &state.current)?;
    let lag = apply_a1a2(k, &state.current.sub(prev)?)?;
    r.add_scaled(sigma * sigma * tau, &lag)?;
    let d = ws.solve_factorized(k, sigma * tau, &r)?;
    let mut next = state.current.clone();
    next.add_scaled(tau, &d)?;
    Ok(advance(state, next, true, config))
}

/// Levels 0 and 1 of the three-level parabolic scheme.
pub fn startup_mlatm(problem: &ParabolicProblem, config: &SchemeConfig) -> Result<StepState> {
    let mut ws = SweepWorkspace::new(*problem.coefficient.grid(), config.sweep_order);
    startup_mlatm_with(&mut ws, problem, config)
}

fn startup_mlatm_with(ws: &mut SweepWorkspace, problem: &ParabolicProblem, config: &SchemeConfig) -> Result<StepState> {
    let y0 = problem.initial.sample(problem.coefficient.grid())?;
    match config.startup {
        MultilevelStartup::Atm => {
            let mut cfg = *config;
            cfg.kind = SchemeKind::Mlatm;
            step_atm_with(ws, problem, &cfg, &StepState::initial(y0))
        }
    }
}

pub fn step_hyperbolic(problem: &HyperbolicProblem, config: &SchemeConfig, state: &StepState) -> Result<StepState> {
    let mut ws = SweepWorkspace::new(*problem.coefficient.grid(), config.sweep_order);
    step_hyperbolic_with(&mut ws, problem, config, state)
}

pub fn step_hyperbolic_with(
    ws: &mut SweepWorkspace,
    problem: &HyperbolicProblem,
    config: &SchemeConfig,
    state: &StepState,
) -> Result<StepState> {
    let prev = state.previous.as_ref().ok_or(Error::MissingHistory)?;
    let k = &problem.coefficient;
    let tau = config.tau;
    let phi = problem.forcing.sample(k.grid(), config.time(state.level))?;
    let mut r = residual(k, phi, &state.current)?;
    r.scale(tau * tau);
    let d = ws.solve_factorized(k, config.sigma * tau * tau, &r)?;
    let values =
        state.current.values().iter().zip(prev.values()).zip(d.values()).map(|((y, yp), d)| 2.0 * y - yp + d).collect();
    let next = GridFunction::from_values(*k.grid(), values)?;
    Ok(advance(state, next, true, config))
}

/// `y^0 = u0`, `y^1 = y^0 + tau v0 + (tau^2 / 2)(f(0) - A y^0)`.
pub fn startup_hyperbolic(problem: &HyperbolicProblem, config: &SchemeConfig) -> Result<StepState> {
    let k = &problem.coefficient;
    let grid = k.grid();
    let tau = config.tau;
    let y0 = problem.initial.sample(grid)?;
    let v0 = problem.velocity.sample(grid)?;
    let accel = residual(k, problem.forcing.sample(grid, 0.0)?, &y0)?;
    let mut y1 = y0.clone();
    y1.add_scaled(tau, &v0)?;
    y1.add_scaled(0.5 * tau * tau, &accel)?;
    Ok(StepState { current: y1, previous: Some(y0), level: 1, time: config.time(1) })
}

/// Called after every accepted level, starting with level 0.
pub trait Observer {
    fn observe(&mut self, state: &StepState);
}

impl<F: FnMut(&StepState)> Observer for F {
    fn observe(&mut self, state: &StepState) {
        self(state)
    }
}

/// Records every level of a run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub levels: Vec<GridFunction>,
    pub times: Vec<f64>,
}

impl Observer for Trajectory {
    fn observe(&mut self, state: &StepState) {
        self.levels.push(state.current.clone());
        self.times.push(state.time);
    }
}

/// Blow-up threshold: `||y^n|| > BLOW_UP_FACTOR (1 + ||y^0||)`.
pub const BLOW_UP_FACTOR: f64 = 1e12;

/// Integrates `config.steps` levels, notifying observers after each one.
///
/// Level 0 (and level 1 for the three-level schemes) are reported like any
/// other level. Non-finite values or growth past [`BLOW_UP_FACTOR`] abort
/// with [`Error::BlowUp`].
pub fn run(problem: &Problem, config: &SchemeConfig, observers: &mut [&mut dyn Observer]) -> Result<StepState> {
    config.check(config.final_time())?;
    let k = problem.coefficient();
    let mut ws = SweepWorkspace::new(*k.grid(), config.sweep_order);

    let initial = match problem {
        Problem::Parabolic(p) => {
            if config.kind.is_hyperbolic() {
                return Err(Error::InvalidConfig(format!("{} needs a hyperbolic problem", config.kind)));
            }
            p.initial.sample(k.grid())?
        }
        Problem::Hyperbolic(p) => {
            if !config.kind.is_hyperbolic() {
                return Err(Error::InvalidConfig(format!("{} needs a parabolic problem", config.kind)));
            }
            p.initial.sample(k.grid())?
        }
    };
    let limit = BLOW_UP_FACTOR * (1.0 + norm(&initial));
    let accept = |state: &StepState, observers: &mut [&mut dyn Observer]| -> Result<()> {
        if !state.current.is_finite() || norm(&state.current) > limit {
            return Err(Error::BlowUp { level: state.level, time: state.time });
        }
        for o in observers.iter_mut() {
            o.observe(state);
        }
        Ok(())
    };

    let mut state = StepState::initial(initial);
    accept(&state, observers)?;
    if config.steps == 0 {
        return Ok(state);
    }
    if config.kind.is_three_level() {
        state = match problem {
            Problem::Parabolic(p) => startup_mlatm_with(&mut ws, p, config)?,
            Problem::Hyperbolic(p) => startup_hyperbolic(p, config)?,
        };
        accept(&state, observers)?;
    }
    while state.level < config.steps {
        state = match (problem, config.kind) {
            (Problem::Parabolic(p), SchemeKind::Explicit) => step_explicit(p, config, &state)?,
            (Problem::Parabolic(p), SchemeKind::Atm) => step_atm_with(&mut ws, p, config, &state)?,
            (Problem::Parabolic(p), SchemeKind::Mlatm) => step_mlatm_with(&mut ws, p, config, &state)?,
            (Problem::Hyperbolic(p), SchemeKind::HyperbolicAtm) => step_hyperbolic_with(&mut ws, p, config, &state)?,
            _ => unreachable!("problem/scheme pairing checked above"),
        };
        accept(&state, observers)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::spectral_bounds;
    use std::f64::consts::PI;

    fn mode_problem(n: usize) -> (ParabolicProblem, f64) {
        let g = Grid::unit_square(n).unwrap();
        let k = Coefficient::constant(g, 1.0).unwrap();
        let lam = spectral_bounds(&k).delta;
        let p = ParabolicProblem::new(
            k,
            SpaceData::function(|x1, x2| (PI * x1).sin() * (PI * x2).sin()),
            Forcing::Zero,
            1.0,
        )
        .unwrap();
        (p, lam)
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::unit_square(5).unwrap();
        let k = Coefficient::constant(g, 1.0).unwrap();
        let p = ParabolicProblem::new(k, SpaceData::Zero, Forcing::Zero, 1.0).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Atm, 0.5, 0.1, 10);
        let s0 = StepState::initial(GridFunction::zeros(g));
        assert_eq!(step_explicit(&p, &cfg, &s0).unwrap().current, s0.current);
        assert_eq!(step_atm(&p, &cfg, &s0).unwrap().current, s0.current);
        let s1 = startup_mlatm(&p, &cfg).unwrap();
        assert_eq!(s1.current, s0.current);
        assert_eq!(step_mlatm(&p, &cfg, &s1).unwrap().current, s0.current);
    }

    #[test]
    fn explicit_eigen_step() {
        let (p, lam) = mode_problem(8);
        let tau = 1e-3;
        let cfg = SchemeConfig::new(SchemeKind::Explicit, 0.0, tau, 1);
        let y0 = p.initial.sample(p.coefficient.grid()).unwrap();
        let y1 = step_explicit(&p, &cfg, &StepState::initial(y0.clone())).unwrap();
        for (a, b) in y1.current.values().iter().zip(y0.values()) {
            assert!((a - (1.0 - tau * lam) * b).abs() < 1e-14);
        }
        assert_eq!(y1.level, 1);
        assert!(y1.previous.is_none());
    }

    #[test]
    fn atm_sigma_zero_is_explicit() {
        let (mut p, _) = mode_problem(7);
        p.forcing = Forcing::function(|x1, x2, t| x1 * (1.0 - x2) * (3.0 * t).cos());
        let cfg = SchemeConfig::new(SchemeKind::Atm, 0.0, 0.004, 1);
        let s = StepState::initial(p.initial.sample(p.coefficient.grid()).unwrap());
        assert_eq!(step_atm(&p, &cfg, &s).unwrap(), step_explicit(&p, &cfg, &s).unwrap());
    }

    #[test]
    fn mlatm_with_stationary_history_matches_atm() {
        let (mut p, _) = mode_problem(6);
        p.forcing = Forcing::function(|x1, x2, t| (x1 + x2) * (1.0 + t));
        let cfg = SchemeConfig::new(SchemeKind::Mlatm, 0.7, 0.05, 4);
        let y = p.initial.sample(p.coefficient.grid()).unwrap();
        let s = StepState { current: y.clone(), previous: Some(y), level: 1, time: 0.05 };
        let a = step_atm(&p, &cfg, &s).unwrap();
        let m = step_mlatm(&p, &cfg, &s).unwrap();
        assert_eq!(a.current, m.current);
    }

    #[test]
    fn three_level_steps_require_history() {
        let (p, _) = mode_problem(4);
        let cfg = SchemeConfig::new(SchemeKind::Mlatm, 0.5, 0.1, 10);
        let s = StepState::initial(GridFunction::zeros(*p.coefficient.grid()));
        assert_eq!(step_mlatm(&p, &cfg, &s), Err(Error::MissingHistory));
        let h = HyperbolicProblem::new(p.coefficient.clone(), SpaceData::Zero, SpaceData::Zero, Forcing::Zero, 1.0)
            .unwrap();
        assert_eq!(step_hyperbolic(&h, &cfg, &s), Err(Error::MissingHistory));
    }

    #[test]
    fn hyperbolic_sigma_zero_is_leapfrog() {
        let (p, lam) = mode_problem(8);
        let h = HyperbolicProblem::new(p.coefficient, p.initial, SpaceData::Zero, Forcing::Zero, 1.0).unwrap();
        let tau = 0.01;
        let cfg = SchemeConfig::new(SchemeKind::HyperbolicAtm, 0.0, tau, 100);
        let s1 = startup_hyperbolic(&h, &cfg).unwrap();
        let y0 = s1.previous.clone().unwrap();
        for (a, b) in s1.current.values().iter().zip(y0.values()) {
            assert!((a - (1.0 - 0.5 * tau * tau * lam) * b).abs() < 1e-14);
        }
        let s2 = step_hyperbolic(&h, &cfg, &s1).unwrap();
        for ((y2, y1), y0) in s2.current.values().iter().zip(s1.current.values()).zip(y0.values()) {
            let expect = 2.0 * y1 - y0 - tau * tau * lam * y1;
            assert!((y2 - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn run_zero_steps_returns_initial() {
        let (p, _) = mode_problem(4);
        let y0 = p.initial.sample(p.coefficient.grid()).unwrap();
        let mut traj = Trajectory::default();
        let cfg = SchemeConfig::new(SchemeKind::Mlatm, 0.5, 0.1, 0);
        let s = run(&p.into(), &cfg, &mut [&mut traj]).unwrap();
        assert_eq!(s, StepState::initial(y0));
        assert_eq!(traj.levels.len(), 1);
    }

    #[test]
    fn run_reports_every_level() {
        let (p, _) = mode_problem(5);
        for kind in [SchemeKind::Explicit, SchemeKind::Atm, SchemeKind::Mlatm] {
            let mut traj = Trajectory::default();
            let mut count = 0usize;
            let mut counter = |_: &StepState| count += 1;
            let cfg = SchemeConfig::new(kind, 0.5, 1e-3, 7);
            let s = run(&p.clone().into(), &cfg, &mut [&mut traj, &mut counter]).unwrap();
            assert_eq!(s.level, 7);
            assert_eq!(traj.levels.len(), 8);
            assert_eq!(count, 8);
            assert!((traj.times[7] - 7e-3).abs() < 1e-15);
        }
    }

    #[test]
    fn run_rejects_mismatched_problem() {
        let (p, _) = mode_problem(4);
        let cfg = SchemeConfig::new(SchemeKind::HyperbolicAtm, 0.5, 0.1, 3);
        assert!(matches!(run(&p.into(), &cfg, &mut []), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn validate_checks_horizon_and_warns() {
        let cfg = SchemeConfig::new(SchemeKind::Atm, 0.4, 0.1, 10);
        assert_eq!(cfg.validate(1.0).unwrap().len(), 1);
        assert!(cfg.validate(1.1).is_err());
        let cfg = SchemeConfig::new(SchemeKind::HyperbolicAtm, 0.3, 0.1, 10);
        assert!(cfg.validate(1.0).unwrap().is_empty());
        assert!(SchemeConfig::new(SchemeKind::Atm, 0.5, -0.1, 10).validate(-1.0).is_err());
    }

    #[test]
    fn scheme_kind_parse() {
        assert_eq!("mlatm".parse::<SchemeKind>().unwrap(), SchemeKind::Mlatm);
        assert_eq!("hyperbolic-atm".parse::<SchemeKind>().unwrap(), SchemeKind::HyperbolicAtm);
        assert!("cn".parse::<SchemeKind>().is_err());
    }
}
