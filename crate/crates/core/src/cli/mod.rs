//! The `atm-kit` command line: `run`, `convergence` and `verify`, each driven
//! by a TOML configuration file.
//!
//! Exit status: 0 on success, 1 when a checked property is violated or a run
//! blows up, 2 for usage and configuration errors.

pub mod config;
pub mod expr;

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::grid::{energy_norm, norm};
use crate::operators::{
    apply_a, apply_r_hyperbolic, apply_r_multilevel, power_iteration, spectral_bounds, DEFAULT_POWER_MAX_ITER,
};
use crate::schemes::{run, Problem, SchemeKind, StepState};
use crate::verify::{
    energy_theorem1, energy_theorem2, energy_theorem3, energy_theorem4, operator_checks, stability_probe, target_order,
    time_order_study, trajectory, EnergyReport,
};
use config::{study_taus, Config, ConfigError, StudySection, Verbosity, POWER_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// First line of every CSV file the tool writes.
pub const CSV_MAGIC: &str = "# atm-kit csv v1";

#[derive(Debug, Parser)]
#[command(name = "atm-kit", version, about = "Alternating-triangle schemes for 2D diffusion and wave problems")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the CSV table here (overrides `output.csv`).
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Seed for random data and power iteration (overrides `seed`).
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a problem and tabulate norms per level.
    Run { config: PathBuf },
    /// Measure the time order against the single-mode exact solution.
    Convergence { config: PathBuf },
    /// Check an energy estimate, the explicit stability threshold or the
    /// operator identities, as selected by `[study]`.
    Verify { config: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Violation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_USAGE,
            Failure::Violation(_) | Failure::Runtime(_) => EXIT_VIOLATION,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::UnsupportedProblem(_)
            | Error::InvalidGrid(_)
            | Error::InvalidCoefficient(_) => Failure::Config(e.to_string()),
            Error::BlowUp { .. } => Failure::Violation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let path = match &cli.command {
        Command::Run { config } | Command::Convergence { config } | Command::Verify { config } => config,
    };
    let mut cfg = match config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(p) = cli.output {
        cfg.output.csv = Some(p);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    init_logging(cfg.output.verbosity);

    let mut out = Report { verbosity: cfg.output.verbosity, lines: Vec::new() };
    let result = match cli.command {
        Command::Run { .. } => cmd_run(&cfg, &mut out),
        Command::Convergence { .. } => cmd_convergence(&cfg, &mut out),
        Command::Verify { .. } => cmd_verify(&cfg, &mut out),
    };
    out.flush();
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Violation(m) => eprintln!("violation: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            f.code()
        }
    }
}

fn init_logging(v: Verbosity) {
    let level = match v {
        Verbosity::Quiet => log::LevelFilter::Error,
        Verbosity::Summary => log::LevelFilter::Warn,
        Verbosity::Verbose => log::LevelFilter::Info,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| {
            use std::io::Write;
            writeln!(buf, "{}: {}", record.level().as_str().to_lowercase(), record.args())
        })
        .parse_default_env()
        .try_init();
}

/// Summary lines for standard output.
struct Report {
    verbosity: Verbosity,
    lines: Vec<String>,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn flush(&mut self) {
        if self.verbosity != Verbosity::Quiet {
            for l in self.lines.drain(..) {
                println!("{l}");
            }
        }
    }
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(command: &str, meta: &[(&str, String)], columns: &[&str]) -> Self {
        let mut text = format!("{CSV_MAGIC}\n# command={command}");
        for (k, v) in meta {
            let _ = write!(text, " {k}={v}");
        }
        let _ = writeln!(text);
        let _ = writeln!(text, "{}", columns.join(","));
        Self { text }
    }

    fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    fn save(&self, cfg: &Config, out: &mut Report) -> Result<(), Failure> {
        if let Some(path) = &cfg.output.csv {
            write_file(path, &self.text)?;
            out.line(format!("wrote {}", path.display()));
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn problem_meta(cfg: &Config) -> Vec<(&'static str, String)> {
    let p = &cfg.problem;
    vec![
        ("cells", format!("{}x{}", p.cells[0], p.cells[1])),
        ("lengths", format!("{}x{}", f(p.lengths[0]), f(p.lengths[1]))),
        ("seed", cfg.seed.to_string()),
    ]
}

/// Energy functional of the scheme at one level: `||y||_A^2` for the
/// two-level schemes, `||v||_A^2 + ||w||_R^2` once two levels exist for the
/// three-level ones.
fn level_energy(
    problem: &Problem,
    kind: SchemeKind,
    sigma: f64,
    tau: f64,
    s: &StepState,
) -> crate::Result<Option<f64>> {
    let k = problem.coefficient();
    let a = |y: &crate::GridFunction| apply_a(k, y);
    if !kind.is_three_level() {
        return Ok(Some(energy_norm(&s.current, a)?.powi(2)));
    }
    if s.previous.is_none() {
        return Ok(None);
    }
    let v = s.average()?;
    let w = s.difference(tau)?;
    let rw = match kind {
        SchemeKind::Mlatm => energy_norm(&w, |y| apply_r_multilevel(k, sigma, tau, y))?,
        _ => energy_norm(&w, |y| apply_r_hyperbolic(k, sigma, tau, y))?,
    };
    Ok(Some(energy_norm(&v, a)?.powi(2) + rw * rw))
}

fn cmd_run(cfg: &Config, out: &mut Report) -> Result<(), Failure> {
    let setup = cfg.setup()?;
    let s = setup.scheme;
    let problem = &setup.problem;
    let k = problem.coefficient();
    let mut meta =
        vec![("scheme", s.kind.to_string()), ("sigma", f(s.sigma)), ("tau", f(s.tau)), ("steps", s.steps.to_string())];
    meta.extend(problem_meta(cfg));
    let mut columns = vec!["n", "t", "norm", "norm_a"];
    if cfg.output.energy {
        columns.push("energy");
    }
    let mut csv = Csv::new("run", &meta, &columns);
    let mut first_error = None;
    let mut last = (0.0, 0.0);
    let mut observe = |state: &StepState| {
        let row = (|| -> crate::Result<Vec<String>> {
            let na = energy_norm(&state.current, |y| apply_a(k, y))?;
            last = (norm(&state.current), na);
            let mut row = vec![state.level.to_string(), f(state.time), f(last.0), f(na)];
            if cfg.output.energy {
                row.push(opt(level_energy(problem, s.kind, s.sigma, s.tau, state)?));
            }
            Ok(row)
        })();
        match row {
            Ok(r) => csv.row(&r),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    };
    let result = run(problem, &s, &mut [&mut observe]);
    if let Some(e) = first_error {
        return Err(e.into());
    }
    csv.save(cfg, out)?;
    match result {
        Ok(state) => {
            out.line(format!(
                "run: {} sigma={} tau={} steps={} t={} norm={} norm_a={}",
                s.kind,
                s.sigma,
                f(s.tau),
                s.steps,
                f(state.time),
                f(last.0),
                f(last.1)
            ));
            Ok(())
        }
        Err(Error::BlowUp { level, time }) => {
            out.line(format!("run: {} blew up at level {level} (t = {})", s.kind, f(time)));
            Err(Failure::Violation(format!("blow-up at level {level}")))
        }
        Err(e) => Err(e.into()),
    }
}

fn kind_and_sigma(cfg: &Config) -> Result<(SchemeKind, f64), Failure> {
    let kind = cfg.kind()?;
    let sigma = match (kind, cfg.scheme.as_ref().and_then(|s| s.sigma)) {
        (_, Some(v)) => v,
        (SchemeKind::Explicit, None) => 0.0,
        (_, None) => return Err(Failure::Config(format!("scheme.sigma: required for {kind}"))),
    };
    Ok((kind, sigma))
}

fn cmd_convergence(cfg: &Config, out: &mut Report) -> Result<(), Failure> {
    let StudySection::Convergence { target_order: target, band, .. } = &cfg.study else {
        return Err(Failure::Config("study.type: the convergence command needs \"convergence\"".into()));
    };
    let taus = study_taus(&cfg.study)?;
    let (kind, sigma) = kind_and_sigma(cfg)?;
    let horizon = cfg
        .problem
        .horizon
        .ok_or_else(|| Failure::Config("problem.horizon: required for a convergence study".into()))?;
    let ep = cfg.eigenmode_problem()?;
    let target = target.or_else(|| target_order(kind, sigma)).expect("every scheme has a target order");
    let table = time_order_study(kind, sigma, &ep, horizon, &taus, cfg.sweep_order())?;
    let fitted = table.fitted_order();

    let mut meta = vec![
        ("scheme", kind.to_string()),
        ("sigma", f(sigma)),
        ("horizon", f(horizon)),
        ("target_order", f(target)),
        ("fitted_order", opt(fitted)),
    ];
    meta.extend(problem_meta(cfg));
    let mut csv = Csv::new("convergence", &meta, &["h", "tau", "error_a", "error_l2", "order", "blow_up"]);
    for r in &table.rows {
        csv.row(&[
            f(r.h),
            f(r.tau),
            opt(r.error_a),
            opt(r.error_l2),
            opt(r.order),
            r.blow_up.map(|l| l.to_string()).unwrap_or_default(),
        ]);
    }
    csv.save(cfg, out)?;

    let blown: Vec<_> = table.rows.iter().filter(|r| r.blow_up.is_some()).map(|r| r.tau).collect();
    let pass = blown.is_empty() && fitted.is_some_and(|p| (p - target).abs() <= *band);
    out.line(format!(
        "{} convergence: {kind} sigma={sigma} fitted order {} (target {target} +/- {band})",
        if pass { "PASS" } else { "FAIL" },
        fitted.map_or("n/a".into(), |p| format!("{p:.4}")),
    ));
    if !blown.is_empty() {
        out.line(format!("blow-up at tau = {blown:?}"));
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Violation("fitted order outside the band".into()))
    }
}

fn cmd_verify(cfg: &Config, out: &mut Report) -> Result<(), Failure> {
    match &cfg.study {
        StudySection::None => verify_energy(cfg, out, 0.1, 1e-10, 1e-11),
        StudySection::Energy { epsilon, tolerance, identity_tolerance } => {
            verify_energy(cfg, out, *epsilon, *tolerance, *identity_tolerance)
        }
        StudySection::Stability { .. } => verify_stability(cfg, out),
        StudySection::Operators { instances, tolerance } => verify_operators(cfg, out, *instances, *tolerance),
        StudySection::Convergence { .. } => {
            Err(Failure::Config("study.type: use the `convergence` command for convergence studies".into()))
        }
    }
}

fn verify_energy(cfg: &Config, out: &mut Report, epsilon: f64, tol: f64, identity_tol: f64) -> Result<(), Failure> {
    let setup = cfg.setup()?;
    let s = setup.scheme;
    if s.kind == SchemeKind::Explicit {
        let est = power_iteration(setup.problem.coefficient(), POWER_TOL, DEFAULT_POWER_MAX_ITER, cfg.seed)?;
        let limit = (1.0 - epsilon) * 2.0 / est.value;
        if s.tau > limit {
            log::warn!("tau = {} exceeds (1 - epsilon) 2/||A|| = {limit}", s.tau);
        }
    }
    let levels = match trajectory(&setup.problem, &s) {
        Ok(t) => t.levels,
        Err(e @ Error::BlowUp { .. }) => {
            out.line(format!("FAIL energy: {e}"));
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let (label, report): (&str, EnergyReport) = match &setup.problem {
        Problem::Parabolic(p) => match s.kind {
            SchemeKind::Explicit => ("explicit", energy_theorem1(&levels, p, &s, epsilon)?),
            SchemeKind::Atm => ("atm", energy_theorem2(&levels, p, &s)?),
            _ => ("mlatm", energy_theorem3(&levels, p, &s)?),
        },
        Problem::Hyperbolic(p) => ("hyperbolic-atm", energy_theorem4(&levels, p, &s)?),
    };

    let mut meta =
        vec![("scheme", s.kind.to_string()), ("sigma", f(s.sigma)), ("tau", f(s.tau)), ("steps", s.steps.to_string())];
    meta.extend(problem_meta(cfg));
    let mut csv =
        Csv::new("verify", &meta, &["n", "t", "energy", "bound", "violation", "relative_violation", "identity_defect"]);
    if let Some(r) = &report.startup {
        csv.row(&[r.n.to_string(), f(r.t), f(r.energy), String::new(), String::new(), String::new(), String::new()]);
    }
    for r in &report.records {
        csv.row(&[
            r.n.to_string(),
            f(r.t),
            f(r.energy),
            f(r.bound),
            f(r.violation),
            f(r.relative_violation),
            opt(r.identity_defect),
        ]);
    }
    csv.save(cfg, out)?;

    let bound_ok = report.passes(tol);
    let identity_ok = report.max_identity_defect.is_none_or(|d| d <= identity_tol);
    out.line(format!(
        "{} energy ({label}): max relative violation {:.3e} (tolerance {tol:e})",
        if bound_ok { "PASS" } else { "FAIL" },
        report.max_relative_violation
    ));
    if let Some(d) = report.max_identity_defect {
        out.line(format!(
            "{} energy identity: max relative defect {d:.3e} (tolerance {identity_tol:e})",
            if identity_ok { "PASS" } else { "FAIL" }
        ));
    }
    if bound_ok && identity_ok {
        Ok(())
    } else {
        Err(Failure::Violation("energy estimate violated".into()))
    }
}

fn verify_stability(cfg: &Config, out: &mut Report) -> Result<(), Failure> {
    let problem = cfg.probe_problem()?;
    let settings = cfg.probe_settings();
    let r = stability_probe(&problem, &settings)?;
    let mut meta = vec![
        ("norm_a", f(r.norm_a)),
        ("tau0", f(r.tau0)),
        ("bracket_low", f(r.bracket.0)),
        ("bracket_high", f(r.bracket.1)),
    ];
    meta.extend(problem_meta(cfg));
    let mut csv = Csv::new("verify", &meta, &["n", "stable_norm_a", "unstable_norm_a"]);
    for n in 0..r.stable_norms.len().max(r.unstable_norms.len()) {
        csv.row(&[n.to_string(), opt(r.stable_norms.get(n).copied()), opt(r.unstable_norms.get(n).copied())]);
    }
    csv.save(cfg, out)?;

    let grows = r.unstable_blow_up.is_some() || r.unstable_growth >= settings.growth_factor;
    let brackets = r.brackets_tau0(settings.bracket_tolerance);
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    out.line(format!("||A|| = {}, tau0 = {}", f(r.norm_a), f(r.tau0)));
    out.line(format!(
        "{} stable: ||y||_A nonincreasing over {} steps at {} tau0",
        verdict(r.stable_nonincreasing),
        settings.stable_steps,
        settings.stable_ratio
    ));
    out.line(format!(
        "{} unstable: growth {:.3e} at {} tau0{}",
        verdict(grows),
        r.unstable_growth,
        settings.unstable_ratio,
        r.unstable_blow_up.map_or(String::new(), |l| format!(", blow-up at level {l}"))
    ));
    out.line(format!(
        "{} threshold: bracket [{:.4}, {:.4}] tau0 (tolerance {})",
        verdict(brackets),
        r.bracket.0,
        r.bracket.1,
        settings.bracket_tolerance
    ));
    if r.stable_nonincreasing && grows && brackets {
        Ok(())
    } else {
        Err(Failure::Violation("stability threshold not confirmed".into()))
    }
}

fn verify_operators(cfg: &Config, out: &mut Report, instances: usize, tol: f64) -> Result<(), Failure> {
    let k = cfg.coefficient()?;
    let (sigma, tau) = match &cfg.scheme {
        Some(s) => (s.sigma.unwrap_or(1.0), s.tau.unwrap_or(2.0 / spectral_bounds(&k).upper)),
        None => (1.0, 2.0 / spectral_bounds(&k).upper),
    };
    let checks = operator_checks(&k, sigma, tau, instances, cfg.seed)?;
    let mut meta = vec![("sigma", f(sigma)), ("tau", f(tau))];
    meta.extend(problem_meta(cfg));
    let mut csv = Csv::new("verify", &meta, &["check", "instances", "max_relative_error", "tolerance", "pass"]);
    let mut all = true;
    for c in &checks {
        let pass = c.max_relative_error <= tol;
        all &= pass;
        csv.row(&[c.name.to_string(), c.instances.to_string(), f(c.max_relative_error), f(tol), pass.to_string()]);
        out.line(format!(
            "{} {}: max relative error {:.3e} over {} instances",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            c.max_relative_error,
            c.instances
        ));
    }
    csv.save(cfg, out)?;
    if all {
        Ok(())
    } else {
        Err(Failure::Violation("operator identity violated".into()))
    }
}
