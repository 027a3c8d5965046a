//! Run configuration: a TOML document with `[problem]`, `[scheme]`,
//! `[study]` and `[output]` sections plus a top-level `seed`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::expr::Expression;
use crate::grid::{Grid, GridFunction};
use crate::operators::{power_iteration, Coefficient, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_SEED};
use crate::schemes::{Forcing, HyperbolicProblem, ParabolicProblem, Problem, SchemeConfig, SchemeKind, SpaceData};
use crate::sweeps::SweepOrder;
use crate::verify::{mode_function, EigenmodeProblem, ModeForcing, ProbeSettings, ORDER_BAND};

/// Tolerance of the power iteration behind `tau_ratio` and `top-mode` data.
pub const POWER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub problem: ProblemSection,
    pub scheme: Option<SchemeSection>,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    DEFAULT_POWER_SEED
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "unit_lengths")]
    pub lengths: [f64; 2],
    pub cells: [usize; 2],
    pub horizon: Option<f64>,
    pub coefficient: CoefficientSpec,
    #[serde(default)]
    pub initial: FieldSpec,
    pub velocity: Option<FieldSpec>,
    #[serde(default)]
    pub forcing: ForcingSpec,
}

fn unit_lengths() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant { value: f64 },
    Checkerboard { lower: f64, upper: f64, tiles: usize },
    Expression { expr: String, lower: Option<f64>, upper: Option<f64> },
}

/// Initial data and initial velocity.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    Zero,
    /// `amplitude * sin(m1 pi x1 / l1) sin(m2 pi x2 / l2)`
    Mode {
        mode: [usize; 2],
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Uniform on `[-amplitude, amplitude]` at every node, from the seed.
    Random {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// The power-iteration approximation of the top eigenvector of `A`,
    /// normalised and scaled by `amplitude`.
    TopMode {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Expression {
        expr: String,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// `g(t) e(x)` for the mode `e`, with `g = a exp(b t)` or `g = a cos(omega t)`.
    Mode {
        mode: [usize; 2],
        profile: Profile,
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        omega: f64,
    },
    Expression {
        expr: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Exp,
    Cos,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: String,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    /// `tau = tau_ratio * 2 / ||A||`.
    pub tau_ratio: Option<f64>,
    pub steps: Option<usize>,
    #[serde(default)]
    pub wavefront: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StudySection {
    #[default]
    None,
    Convergence {
        taus: Option<Vec<f64>>,
        tau: Option<f64>,
        halvings: Option<usize>,
        target_order: Option<f64>,
        #[serde(default = "order_band")]
        band: f64,
    },
    Stability {
        stable_ratio: Option<f64>,
        stable_steps: Option<usize>,
        unstable_ratio: Option<f64>,
        unstable_steps: Option<usize>,
        growth_factor: Option<f64>,
        bracket_tolerance: Option<f64>,
        bisections: Option<usize>,
    },
    Energy {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_energy_tolerance")]
        tolerance: f64,
        #[serde(default = "default_identity_tolerance")]
        identity_tolerance: f64,
    },
    Operators {
        #[serde(default = "default_instances")]
        instances: usize,
        #[serde(default = "default_operator_tolerance")]
        tolerance: f64,
    },
}

fn order_band() -> f64 {
    ORDER_BAND
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_energy_tolerance() -> f64 {
    1e-10
}
fn default_identity_tolerance() -> f64 {
    1e-11
}
fn default_instances() -> usize {
    100
}
fn default_operator_tolerance() -> f64 {
    1e-13
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verbosity {
    Quiet,
    #[default]
    Summary,
    Verbose,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub verbosity: Verbosity,
    /// Adds the scheme's energy functional to `run` output.
    #[serde(default)]
    pub energy: bool,
}

/// A rejected configuration; each entry names the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl ConfigError {
    fn one(msg: impl Into<String>) -> Self {
        ConfigError(vec![msg.into()])
    }
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::one(format!("{}: {e}", path.display())))?;
    parse(&text)
        .map_err(|ConfigError(es)| ConfigError(es.into_iter().map(|e| format!("{}: {e}", path.display())).collect()))
}

/// Parses a document; syntax errors carry their line and column.
pub fn parse(text: &str) -> Result<Config, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let location = e
            .span()
            .map(|s| {
                let (line, col) = line_col(text, s.start);
                format!("line {line}, column {col}: ")
            })
            .unwrap_or_default();
        ConfigError::one(format!("{location}{}", e.message()))
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

/// Everything needed to integrate: the problem and a validated scheme.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub scheme: SchemeConfig,
    pub warnings: Vec<String>,
}

/// Collects problems with a configuration instead of stopping at the first.
#[derive(Default)]
struct Issues(Vec<String>);

impl Issues {
    fn push(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.0.push(format!("{key}: {msg}"));
    }

    fn finish<T>(self, value: impl FnOnce() -> T) -> Result<T, ConfigError> {
        if self.0.is_empty() {
            Ok(value())
        } else {
            Err(ConfigError(self.0))
        }
    }
}

impl Config {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let p = &self.problem;
        Grid::new(p.lengths[0], p.lengths[1], p.cells[0], p.cells[1])
            .map_err(|e| ConfigError::one(format!("problem.cells / problem.lengths: {e}")))
    }

    pub fn coefficient(&self) -> Result<Coefficient, ConfigError> {
        let grid = self.grid()?;
        let key = "problem.coefficient";
        let built = match &self.problem.coefficient {
            CoefficientSpec::Constant { value } => Coefficient::constant(grid, *value),
            CoefficientSpec::Checkerboard { lower, upper, tiles } => {
                Coefficient::checkerboard(grid, *lower, *upper, *tiles)
            }
            CoefficientSpec::Expression { expr, lower, upper } => {
                let e =
                    Expression::parse(expr, &["x1", "x2"]).map_err(|m| ConfigError::one(format!("{key}.expr: {m}")))?;
                let f = move |x1, x2| e.eval(x1, x2, 0.0);
                match (lower, upper) {
                    (Some(lo), Some(hi)) => Coefficient::from_fn_with_bounds(grid, f, *lo, *hi),
                    (None, None) => Coefficient::from_fn(grid, f),
                    _ => return Err(ConfigError::one(format!("{key}: give both `lower` and `upper` or neither"))),
                }
            }
        };
        built.map_err(|e| ConfigError::one(format!("{key}: {e}")))
    }

    fn scheme_section(&self) -> Result<&SchemeSection, ConfigError> {
        self.scheme.as_ref().ok_or_else(|| ConfigError::one("scheme: section is missing"))
    }

    pub fn kind(&self) -> Result<SchemeKind, ConfigError> {
        let s = self.scheme_section()?;
        s.kind.parse().map_err(|e| ConfigError::one(format!("scheme.kind: {e}")))
    }

    pub fn sweep_order(&self) -> SweepOrder {
        match &self.scheme {
            Some(s) if s.wavefront => SweepOrder::Wavefront,
            _ => SweepOrder::Lexicographic,
        }
    }

    /// Builds the problem and scheme for `run` and energy verification.
    pub fn setup(&self) -> Result<Setup, ConfigError> {
        let kind = self.kind()?;
        let s = self.scheme_section()?;
        let mut issues = Issues::default();
        // keep going without a coefficient so independent issues are listed too
        let k = self.coefficient().map_err(|e| issues.0.extend(e.0)).ok();

        let sigma = match (kind, s.sigma) {
            (_, Some(v)) if !(v >= 0.0 && v.is_finite()) => {
                issues.push("scheme.sigma", format!("must be a nonnegative number, got {v}"));
                0.0
            }
            (_, Some(v)) => v,
            (SchemeKind::Explicit, None) => 0.0,
            (_, None) => {
                issues.push("scheme.sigma", format!("required for {kind}"));
                0.0
            }
        };
        let tau = match (s.tau, s.tau_ratio) {
            (Some(_), Some(_)) => {
                issues.push("scheme.tau / scheme.tau_ratio", "give exactly one");
                None
            }
            (None, None) => {
                issues.push("scheme.tau", "missing (or give scheme.tau_ratio)");
                None
            }
            (Some(t), None) if !(t > 0.0 && t.is_finite()) => {
                issues.push("scheme.tau", format!("must be positive, got {t}"));
                None
            }
            (Some(t), None) => Some(t),
            (None, Some(r)) if !(r > 0.0 && r.is_finite()) => {
                issues.push("scheme.tau_ratio", format!("must be positive, got {r}"));
                None
            }
            (None, Some(r)) => {
                match k.as_ref().map(|k| power_iteration(k, POWER_TOL, DEFAULT_POWER_MAX_ITER, self.seed)) {
                    Some(Ok(est)) => Some(r * 2.0 / est.value),
                    Some(Err(e)) => {
                        issues.push("scheme.tau_ratio", e);
                        None
                    }
                    None => None,
                }
            }
        };
        let horizon = self.problem.horizon;
        if let Some(h) = horizon {
            if !(h > 0.0 && h.is_finite()) {
                issues.push("problem.horizon", format!("must be positive, got {h}"));
            }
        }
        let steps = match (s.steps, horizon, tau) {
            (Some(n), _, _) => Some(n),
            (None, Some(h), Some(t)) => Some((h / t).round() as usize),
            (None, None, _) => {
                issues.push("scheme.steps", "missing (or give problem.horizon)");
                None
            }
            (None, Some(_), None) => None,
        };
        if !kind.is_hyperbolic() && self.problem.velocity.is_some() {
            issues.push("problem.velocity", format!("only used by {}", SchemeKind::HyperbolicAtm));
        }

        let (initial, velocity, forcing) = match &k {
            Some(k) => (
                self.field(k, &self.problem.initial, "problem.initial", self.seed, &mut issues),
                match &self.problem.velocity {
                    Some(v) => self.field(k, v, "problem.velocity", self.seed.wrapping_add(1), &mut issues),
                    None => Some(SpaceData::Zero),
                },
                self.forcing(k, &mut issues),
            ),
            None => (None, None, None),
        };

        let (Some(tau), Some(steps)) = (tau, steps) else {
            return Err(ConfigError(issues.0));
        };
        let scheme = SchemeConfig::new(kind, sigma, tau, steps).with_sweep_order(self.sweep_order());
        let horizon = horizon.unwrap_or(scheme.final_time());
        let warnings = match scheme.validate(horizon) {
            Ok(w) => w,
            Err(e) => {
                issues.push("scheme.steps / scheme.tau / problem.horizon", e);
                Vec::new()
            }
        };
        let (Some(k), Some(initial), Some(velocity), Some(forcing)) = (k, initial, velocity, forcing) else {
            return Err(ConfigError(issues.0));
        };
        issues.finish(|| ())?;
        let problem: Problem = if kind.is_hyperbolic() {
            HyperbolicProblem { coefficient: k, initial, velocity, forcing, horizon }.into()
        } else {
            ParabolicProblem { coefficient: k, initial, forcing, horizon }.into()
        };
        Ok(Setup { problem, scheme, warnings })
    }

    fn field(&self, k: &Coefficient, spec: &FieldSpec, key: &str, seed: u64, issues: &mut Issues) -> Option<SpaceData> {
        let grid = *k.grid();
        match spec {
            FieldSpec::Zero => Some(SpaceData::Zero),
            FieldSpec::Mode { mode, amplitude } => match check_mode(&grid, *mode) {
                Ok(()) => {
                    let mut e = mode_function(k, (mode[0], mode[1]));
                    e.scale(*amplitude);
                    Some(SpaceData::Values(e))
                }
                Err(m) => {
                    issues.push(&format!("{key}.mode"), m);
                    None
                }
            },
            FieldSpec::Random { amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = *amplitude;
                Some(SpaceData::Values(GridFunction::from_indices(grid, |_, _| a * rng.gen_range(-1.0..=1.0))))
            }
            FieldSpec::TopMode { amplitude } => {
                match power_iteration(k, POWER_TOL, DEFAULT_POWER_MAX_ITER, self.seed) {
                    Ok(est) => {
                        let mut v = est.vector;
                        v.scale(*amplitude);
                        Some(SpaceData::Values(v))
                    }
                    Err(e) => {
                        issues.push(key, e);
                        None
                    }
                }
            }
            FieldSpec::Expression { expr } => match Expression::parse(expr, &["x1", "x2"]) {
                Ok(e) => Some(SpaceData::function(move |x1, x2| e.eval(x1, x2, 0.0))),
                Err(m) => {
                    issues.push(&format!("{key}.expr"), m);
                    None
                }
            },
        }
    }

    fn forcing(&self, k: &Coefficient, issues: &mut Issues) -> Option<Forcing> {
        let key = "problem.forcing";
        match &self.problem.forcing {
            ForcingSpec::Zero => Some(Forcing::Zero),
            ForcingSpec::Mode { mode, .. } => {
                if let Err(m) = check_mode(k.grid(), *mode) {
                    issues.push(&format!("{key}.mode"), m);
                    return None;
                }
                let profile = mode_profile(&self.problem.forcing);
                Some(Forcing::Separable {
                    space: mode_function(k, (mode[0], mode[1])),
                    profile: Arc::new(move |t| profile.eval(t)),
                })
            }
            ForcingSpec::Expression { expr } => match Expression::parse(expr, &["x1", "x2", "t"]) {
                Ok(e) => Some(Forcing::function(move |x1, x2, t| e.eval(x1, x2, t))),
                Err(m) => {
                    issues.push(&format!("{key}.expr"), m);
                    None
                }
            },
        }
    }

    /// Single-mode data for the time-order study.
    pub fn eigenmode_problem(&self) -> Result<EigenmodeProblem, ConfigError> {
        let k = self.coefficient()?;
        let mut issues = Issues::default();
        if k.constant_value().is_none() {
            issues.push("problem.coefficient", "the time-order study needs type = \"constant\"");
        }
        let mut modes = Vec::new();
        let mut amplitude = |spec: &FieldSpec, key: &str, issues: &mut Issues| match spec {
            FieldSpec::Zero => 0.0,
            FieldSpec::Mode { mode, amplitude } => {
                modes.push((key.to_string(), *mode));
                *amplitude
            }
            _ => {
                issues.push(&format!("{key}.type"), "the time-order study needs \"mode\" or \"zero\"");
                0.0
            }
        };
        let c0 = amplitude(&self.problem.initial, "problem.initial", &mut issues);
        let v0 = match &self.problem.velocity {
            Some(v) => amplitude(v, "problem.velocity", &mut issues),
            None => 0.0,
        };
        let forcing = match &self.problem.forcing {
            ForcingSpec::Zero => ModeForcing::None,
            f @ ForcingSpec::Mode { mode, .. } => {
                modes.push(("problem.forcing".to_string(), *mode));
                mode_profile(f)
            }
            ForcingSpec::Expression { .. } => {
                issues.push("problem.forcing.type", "the time-order study needs \"mode\" or \"zero\"");
                ModeForcing::None
            }
        };
        let mode = match modes.first() {
            Some((_, m)) => *m,
            None => {
                issues.push("problem.initial", "no mode given; the study would be trivially exact");
                [1, 1]
            }
        };
        for (key, m) in &modes {
            if *m != mode {
                issues.push(&format!("{key}.mode"), format!("{m:?} differs from {mode:?}"));
            }
        }
        issues.finish(|| ())?;
        EigenmodeProblem::new(k, (mode[0], mode[1]), c0)
            .map(|p| p.with_velocity(v0).with_forcing(forcing))
            .map_err(|e| ConfigError::one(format!("problem: {e}")))
    }

    pub fn probe_settings(&self) -> ProbeSettings {
        let mut s = ProbeSettings { seed: self.seed, ..ProbeSettings::default() };
        if let StudySection::Stability {
            stable_ratio,
            stable_steps,
            unstable_ratio,
            unstable_steps,
            growth_factor,
            bracket_tolerance,
            bisections,
        } = &self.study
        {
            s.stable_ratio = stable_ratio.unwrap_or(s.stable_ratio);
            s.stable_steps = stable_steps.unwrap_or(s.stable_steps);
            s.unstable_ratio = unstable_ratio.unwrap_or(s.unstable_ratio);
            s.unstable_steps = unstable_steps.unwrap_or(s.unstable_steps);
            s.growth_factor = growth_factor.unwrap_or(s.growth_factor);
            s.bracket_tolerance = bracket_tolerance.unwrap_or(s.bracket_tolerance);
            s.bisections = bisections.unwrap_or(s.bisections);
        }
        s
    }

    /// Parabolic problem for the stability probe (the scheme section is
    /// not needed).
    pub fn probe_problem(&self) -> Result<ParabolicProblem, ConfigError> {
        let k = self.coefficient()?;
        let mut issues = Issues::default();
        let initial = self.field(&k, &self.problem.initial, "problem.initial", self.seed, &mut issues);
        if !matches!(self.problem.forcing, ForcingSpec::Zero) {
            issues.push("problem.forcing", "the stability probe runs without forcing");
        }
        let horizon = self.problem.horizon.unwrap_or(1.0);
        issues.finish(|| ())?;
        let initial = initial.expect("no issues recorded");
        ParabolicProblem::new(k, initial, Forcing::Zero, horizon).map_err(|e| ConfigError::one(format!("problem: {e}")))
    }
}

fn mode_profile(spec: &ForcingSpec) -> ModeForcing {
    match *spec {
        ForcingSpec::Mode { profile: Profile::Exp, a, b, .. } => ModeForcing::Exp { a, b },
        ForcingSpec::Mode { profile: Profile::Cos, a, omega, .. } => ModeForcing::Cos { a, omega },
        _ => ModeForcing::None,
    }
}

fn check_mode(grid: &Grid, mode: [usize; 2]) -> Result<(), String> {
    if (1..grid.n1()).contains(&mode[0]) && (1..grid.n2()).contains(&mode[1]) {
        Ok(())
    } else {
        Err(format!("{mode:?} outside 1..{} x 1..{}", grid.n1(), grid.n2()))
    }
}

/// Time steps of a convergence study: an explicit list, or `tau` followed by
/// `halvings` successive halvings.
pub fn study_taus(study: &StudySection) -> Result<Vec<f64>, ConfigError> {
    let StudySection::Convergence { taus, tau, halvings, .. } = study else {
        return Err(ConfigError::one("study.type: expected \"convergence\""));
    };
    let list = match (taus, tau, halvings) {
        (Some(list), None, None) => list.clone(),
        (None, Some(t), Some(n)) => (0..=*n).map(|i| t / 2f64.powi(i as i32)).collect(),
        _ => {
            return Err(ConfigError::one("study.taus / study.tau + study.halvings: give a list or a start and a count"))
        }
    };
    if list.len() < 2 {
        return Err(ConfigError::one("study.taus: need at least two steps"));
    }
    if let Some(bad) = list.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(ConfigError::one(format!("study.taus: {bad} is not a positive step")));
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 3

[problem]
cells = [8, 8]
horizon = 0.1

[problem.coefficient]
type = "constant"
value = 1.0

[problem.initial]
type = "mode"
mode = [1, 1]

[scheme]
kind = "atm"
sigma = 0.5
tau = 0.01
"#;

    #[test]
    fn parses_and_builds() {
        let c = parse(BASIC).unwrap();
        assert_eq!(c.seed, 3);
        let s = c.setup().unwrap();
        assert_eq!(s.scheme.steps, 10);
        assert_eq!(s.scheme.kind, SchemeKind::Atm);
        assert!(s.warnings.is_empty());
        assert!(matches!(s.problem, Problem::Parabolic(_)));
    }

    #[test]
    fn syntax_errors_have_line_numbers() {
        let err = parse("[problem]\ncells = [8, 8 x]\n").unwrap_err();
        assert!(err.0[0].starts_with("line 2"), "{err}");
        let err = parse(&BASIC.replace("sigma = 0.5", "sigma = 0.5\nsigmaa = 1")).unwrap_err();
        assert!(err.0[0].contains("sigmaa"), "{err}");
    }

    #[test]
    fn validation_lists_keys() {
        let text = BASIC.replace("tau = 0.01", "tau = -1.0").replace("mode = [1, 1]", "mode = [9, 1]");
        let err = parse(&text).unwrap().setup().unwrap_err();
        let joined = err.0.join("\n");
        assert!(joined.contains("scheme.tau"), "{joined}");
        assert!(joined.contains("problem.initial.mode"), "{joined}");
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let text = BASIC.replace("tau = 0.01", "tau = 0.01\nsteps = 7");
        let err = parse(&text).unwrap().setup().unwrap_err();
        assert!(err.0[0].contains("horizon"), "{err}");
    }

    #[test]
    fn tau_ratio_resolves_against_norm() {
        let text = BASIC.replace("tau = 0.01", "tau_ratio = 0.5\nsteps = 4").replace("horizon = 0.1\n", "");
        let s = parse(&text).unwrap().setup().unwrap();
        let norm = crate::operators::spectral_bounds(&s.problem.coefficient().clone()).big_delta;
        assert!((s.scheme.tau - 1.0 / norm).abs() < 1e-9 / norm);
    }

    #[test]
    fn low_sigma_warns() {
        let s = parse(&BASIC.replace("sigma = 0.5", "sigma = 0.25")).unwrap().setup().unwrap();
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn taus_from_halvings() {
        let study: StudySection =
            toml::from_str::<Config>(&format!("{BASIC}\n[study]\ntype = \"convergence\"\ntau = 0.1\nhalvings = 2\n"))
                .unwrap()
                .study;
        assert_eq!(study_taus(&study).unwrap(), vec![0.1, 0.05, 0.025]);
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }
}
