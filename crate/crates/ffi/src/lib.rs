//! C interface to `atm-kit`.
//!
//! Grids and coefficients live behind the opaque [`AtmCoefficient`] handle,
//! time integration behind [`AtmIntegrator`]. Grid functions cross the
//! boundary as `double` arrays of the `(n1 - 1) * (n2 - 1)` interior values,
//! x1 varying fastest. Every entry point returns an [`AtmStatus`]; on failure
//! [`atm_last_error_message`] describes what went wrong. Panics are caught at
//! the boundary and reported as `ATM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use atm_kit::operators::{
    apply_a, apply_a1, apply_a2, apply_b, apply_c, apply_d1, apply_d2, apply_g_hyperbolic, apply_r_hyperbolic,
    apply_r_multilevel, estimate_norm_a,
};
use atm_kit::schemes::{
    startup_hyperbolic, startup_mlatm, step_atm_with, step_explicit, step_hyperbolic_with, step_mlatm_with, Forcing,
    HyperbolicProblem, ParabolicProblem, SchemeConfig, SchemeKind, SpaceData, StepState, BLOW_UP_FACTOR,
};
use atm_kit::sweeps::solve_factorized;
use atm_kit::{norm, Coefficient, Error, Grid, GridFunction, SweepOrder, SweepWorkspace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    NotConverged = 4,
    NotPositive = 5,
    BlowUp = 6,
    Panic = 7,
}

/// Operators available through [`atm_apply`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtmOperator {
    A = 0,
    D1 = 1,
    D2 = 2,
    /// Upper triangular half of `A`.
    A1 = 3,
    /// Lower triangular half of `A`, the adjoint of `A1`.
    A2 = 4,
    /// `(E + sigma tau A1)(E + sigma tau A2)`
    B = 5,
    /// `(E + sigma tau^2 A1)(E + sigma tau^2 A2)`
    GHyperbolic = 6,
    /// Energy operator of the wave scheme.
    RHyperbolic = 7,
    /// `E + sigma tau A`
    C = 8,
    /// Energy operator of the three-level parabolic scheme.
    RMultilevel = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtmSchemeKind {
    Explicit = 0,
    Atm = 1,
    Mlatm = 2,
    HyperbolicAtm = 3,
}

impl From<AtmSchemeKind> for SchemeKind {
    fn from(k: AtmSchemeKind) -> Self {
        match k {
            AtmSchemeKind::Explicit => SchemeKind::Explicit,
            AtmSchemeKind::Atm => SchemeKind::Atm,
            AtmSchemeKind::Mlatm => SchemeKind::Mlatm,
            AtmSchemeKind::HyperbolicAtm => SchemeKind::HyperbolicAtm,
        }
    }
}

/// Opaque grid plus face-sampled coefficient.
pub struct AtmCoefficient {
    inner: Coefficient,
}

/// Opaque time integrator holding the current (and previous) level.
pub struct AtmIntegrator {
    problem: IntegratorProblem,
    config: SchemeConfig,
    state: StepState,
    workspace: SweepWorkspace,
    limit: f64,
}

enum IntegratorProblem {
    Parabolic(ParabolicProblem),
    Hyperbolic(HyperbolicProblem),
}

/// `k(x1, x2)` supplied by the caller.
pub type AtmCoefficientFn = Option<unsafe extern "C" fn(x1: f64, x2: f64, user_data: *mut c_void) -> f64>;

/// `f(x1, x2, t)` supplied by the caller.
pub type AtmForcingFn = Option<unsafe extern "C" fn(x1: f64, x2: f64, t: f64, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(AtmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::LengthMismatch { .. } | Error::GridMismatch => AtmStatus::LengthMismatch,
            Error::NotConverged { .. } => AtmStatus::NotConverged,
            Error::OperatorNotPositive { .. } => AtmStatus::NotPositive,
            Error::BlowUp { .. } => AtmStatus::BlowUp,
            _ => AtmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AtmStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f` behind the panic boundary and records any failure.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AtmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            AtmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            AtmStatus::Panic
        }
    }
}

unsafe fn coefficient<'a>(k: *const AtmCoefficient) -> Result<&'a Coefficient, Failure> {
    k.as_ref().map(|k| &k.inner).ok_or_else(|| null("coefficient"))
}

unsafe fn read(grid: Grid, values: *const f64, len: usize, what: &str) -> Result<GridFunction, Failure> {
    if values.is_null() {
        return Err(null(what));
    }
    let slice = std::slice::from_raw_parts(values, len);
    Ok(GridFunction::from_values(grid, slice.to_vec())?)
}

unsafe fn write(y: &GridFunction, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output array"));
    }
    if len != y.values().len() {
        return Err(Error::LengthMismatch { expected: y.values().len(), actual: len }.into());
    }
    ptr::copy_nonoverlapping(y.values().as_ptr(), out, len);
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Short description of a status code. The string is static.
#[no_mangle]
pub extern "C" fn atm_status_message(status: AtmStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        AtmStatus::Ok => b"ok\0",
        AtmStatus::NullPointer => b"null pointer argument\0",
        AtmStatus::InvalidArgument => b"invalid argument\0",
        AtmStatus::LengthMismatch => b"array length does not match the grid\0",
        AtmStatus::NotConverged => b"iteration did not converge\0",
        AtmStatus::NotPositive => b"operator is not positive\0",
        AtmStatus::BlowUp => b"solution blew up\0",
        AtmStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string after a
/// successful one. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn atm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Constant coefficient `k` on an `l1 x l2` rectangle with `n1 x n2` cells.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn atm_coefficient_constant(
    l1: f64,
    l2: f64,
    n1: usize,
    n2: usize,
    k: f64,
    out: *mut *mut AtmCoefficient,
) -> AtmStatus {
    guard(|| {
        let inner = Coefficient::constant(Grid::new(l1, l2, n1, n2)?, k)?;
        store(out, AtmCoefficient { inner })
    })
}

/// Piecewise-constant `lower`/`upper` checkerboard with `tiles x tiles` tiles.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn atm_coefficient_checkerboard(
    l1: f64,
    l2: f64,
    n1: usize,
    n2: usize,
    lower: f64,
    upper: f64,
    tiles: usize,
    out: *mut *mut AtmCoefficient,
) -> AtmStatus {
    guard(|| {
        let inner = Coefficient::checkerboard(Grid::new(l1, l2, n1, n2)?, lower, upper, tiles)?;
        store(out, AtmCoefficient { inner })
    })
}

/// Coefficient sampled from a callback at the cell faces. The callback is
/// only invoked during this call.
///
/// # Safety
/// `k` must be safe to call with `user_data`; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atm_coefficient_from_fn(
    l1: f64,
    l2: f64,
    n1: usize,
    n2: usize,
    k: AtmCoefficientFn,
    user_data: *mut c_void,
    out: *mut *mut AtmCoefficient,
) -> AtmStatus {
    guard(|| {
        let k = k.ok_or_else(|| null("coefficient callback"))?;
        let inner = Coefficient::from_fn(Grid::new(l1, l2, n1, n2)?, |x1, x2| k(x1, x2, user_data))?;
        store(out, AtmCoefficient { inner })
    })
}

/// # Safety
/// `k` must be NULL or a handle from one of the constructors, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn atm_coefficient_free(k: *mut AtmCoefficient) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Number of interior values of grid functions on the coefficient's grid,
/// or 0 for a NULL handle.
///
/// # Safety
/// `k` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn atm_coefficient_len(k: *const AtmCoefficient) -> usize {
    k.as_ref().map_or(0, |k| k.inner.grid().interior_len())
}

/// `out = M y` for the operator `op`. `sigma` and `tau` are ignored by the
/// operators that do not take them.
///
/// # Safety
/// `y` and `out` must point to `len` readable / writable doubles; they may
/// not overlap.
#[no_mangle]
pub unsafe extern "C" fn atm_apply(
    k: *const AtmCoefficient,
    op: AtmOperator,
    sigma: f64,
    tau: f64,
    y: *const f64,
    out: *mut f64,
    len: usize,
) -> AtmStatus {
    guard(|| {
        let k = coefficient(k)?;
        let y = read(*k.grid(), y, len, "input array")?;
        let r = match op {
            AtmOperator::A => apply_a(k, &y),
            AtmOperator::D1 => apply_d1(k, &y),
            AtmOperator::D2 => apply_d2(k, &y),
            AtmOperator::A1 => apply_a1(k, &y),
            AtmOperator::A2 => apply_a2(k, &y),
            AtmOperator::B => apply_b(k, sigma, tau, &y),
            AtmOperator::GHyperbolic => apply_g_hyperbolic(k, sigma, tau, &y),
            AtmOperator::RHyperbolic => apply_r_hyperbolic(k, sigma, tau, &y),
            AtmOperator::C => apply_c(k, sigma, tau, &y),
            AtmOperator::RMultilevel => apply_r_multilevel(k, sigma, tau, &y),
        }?;
        write(&r, out, len)
    })
}

/// Solves `(E + c A1)(E + c A2) x = b` by two triangular sweeps, `c >= 0`.
///
/// # Safety
/// `b` and `x` must point to `len` readable / writable doubles.
#[no_mangle]
pub unsafe extern "C" fn atm_solve_factorized(
    k: *const AtmCoefficient,
    c: f64,
    b: *const f64,
    x: *mut f64,
    len: usize,
) -> AtmStatus {
    guard(|| {
        let k = coefficient(k)?;
        let b = read(*k.grid(), b, len, "right-hand side")?;
        write(&solve_factorized(k, c, &b)?, x, len)
    })
}

/// Power-iteration estimate of `||A||` to relative tolerance `tol`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn atm_estimate_norm_a(k: *const AtmCoefficient, tol: f64, out: *mut f64) -> AtmStatus {
    guard(|| {
        let k = coefficient(k)?;
        if out.is_null() {
            return Err(null("output"));
        }
        if tol.is_nan() || tol <= 0.0 {
            return Err(Failure(AtmStatus::InvalidArgument, format!("tol must be positive, got {tol}")));
        }
        *out = estimate_norm_a(k, tol)?;
        Ok(())
    })
}

/// Caller-owned forcing callback and its context.
#[derive(Clone, Copy)]
struct ForcingCallback {
    f: unsafe extern "C" fn(f64, f64, f64, *mut c_void) -> f64,
    user_data: *mut c_void,
}

// SAFETY: the integrator only calls the callback from the thread driving
// `atm_integrator_step`; the caller vouches for `user_data` across calls.
unsafe impl Send for ForcingCallback {}
unsafe impl Sync for ForcingCallback {}

impl ForcingCallback {
    fn eval(&self, x1: f64, x2: f64, t: f64) -> f64 {
        // SAFETY: see the contract of `atm_integrator_new`.
        unsafe { (self.f)(x1, x2, t, self.user_data) }
    }
}

/// Creates an integrator for `kind` with weight `sigma` and step `tau`,
/// starting from `y0` (and `v0 = du/dt(0)` for the wave scheme; NULL means
/// zero). `forcing` may be NULL for `f = 0`. The coefficient is copied.
///
/// # Safety
/// `y0` (and `v0` if not NULL) must point to `len` doubles. `forcing`, if
/// given, is called with `user_data` during later `atm_integrator_step`
/// calls, so both must stay valid until the integrator is freed.
#[no_mangle]
pub unsafe extern "C" fn atm_integrator_new(
    k: *const AtmCoefficient,
    kind: AtmSchemeKind,
    sigma: f64,
    tau: f64,
    y0: *const f64,
    v0: *const f64,
    len: usize,
    forcing: AtmForcingFn,
    user_data: *mut c_void,
    out: *mut *mut AtmIntegrator,
) -> AtmStatus {
    guard(|| {
        let k = coefficient(k)?.clone();
        let grid = *k.grid();
        let y0 = read(grid, y0, len, "initial values")?;
        let kind = SchemeKind::from(kind);
        let config = SchemeConfig::new(kind, sigma, tau, 0);
        config.validate(0.0)?;
        let forcing = match forcing {
            Some(f) => {
                let cb = ForcingCallback { f, user_data };
                Forcing::function(move |x1, x2, t| cb.eval(x1, x2, t))
            }
            None => Forcing::Zero,
        };
        if !kind.is_hyperbolic() && !v0.is_null() {
            return Err(Failure(AtmStatus::InvalidArgument, format!("{kind} takes no initial velocity")));
        }
        let initial = SpaceData::Values(y0.clone());
        // the step functions never look at the horizon
        let problem = if kind.is_hyperbolic() {
            let velocity =
                if v0.is_null() { SpaceData::Zero } else { SpaceData::Values(read(grid, v0, len, "velocity")?) };
            IntegratorProblem::Hyperbolic(HyperbolicProblem::new(k, initial, velocity, forcing, tau)?)
        } else {
            IntegratorProblem::Parabolic(ParabolicProblem::new(k, initial, forcing, tau)?)
        };
        let limit = BLOW_UP_FACTOR * (1.0 + norm(&y0));
        let integrator = AtmIntegrator {
            problem,
            config,
            state: StepState::initial(y0),
            workspace: SweepWorkspace::new(grid, SweepOrder::Lexicographic),
            limit,
        };
        store(out, integrator)
    })
}

impl AtmIntegrator {
    fn step(&mut self) -> atm_kit::Result<StepState> {
        let (cfg, s, ws) = (&self.config, &self.state, &mut self.workspace);
        match (&self.problem, cfg.kind) {
            (IntegratorProblem::Parabolic(p), SchemeKind::Explicit) => step_explicit(p, cfg, s),
            (IntegratorProblem::Parabolic(p), SchemeKind::Atm) => step_atm_with(ws, p, cfg, s),
            (IntegratorProblem::Parabolic(p), SchemeKind::Mlatm) if s.level == 0 => startup_mlatm(p, cfg),
            (IntegratorProblem::Parabolic(p), SchemeKind::Mlatm) => step_mlatm_with(ws, p, cfg, s),
            (IntegratorProblem::Hyperbolic(p), _) if s.level == 0 => startup_hyperbolic(p, cfg),
            (IntegratorProblem::Hyperbolic(p), _) => step_hyperbolic_with(ws, p, cfg, s),
            (IntegratorProblem::Parabolic(_), SchemeKind::HyperbolicAtm) => {
                unreachable!("hyperbolic kinds get a hyperbolic problem")
            }
        }
    }
}

/// Advances `steps` levels. Stops with `ATM_STATUS_BLOW_UP` at the first
/// non-finite or exploding level, which is not accepted.
///
/// # Safety
/// `it` must be a live integrator handle.
#[no_mangle]
pub unsafe extern "C" fn atm_integrator_step(it: *mut AtmIntegrator, steps: usize) -> AtmStatus {
    guard(|| {
        let it = it.as_mut().ok_or_else(|| null("integrator"))?;
        for _ in 0..steps {
            let next = it.step()?;
            if !next.current.is_finite() || norm(&next.current) > it.limit {
                return Err(Error::BlowUp { level: next.level, time: next.time }.into());
            }
            it.state = next;
        }
        Ok(())
    })
}

/// Current level `n`, or 0 for a NULL handle.
///
/// # Safety
/// `it` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn atm_integrator_level(it: *const AtmIntegrator) -> usize {
    it.as_ref().map_or(0, |it| it.state.level)
}

/// Current time `n tau`, or NaN for a NULL handle.
///
/// # Safety
/// `it` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn atm_integrator_time(it: *const AtmIntegrator) -> f64 {
    it.as_ref().map_or(f64::NAN, |it| it.state.time)
}

/// Copies the current level into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn atm_integrator_values(it: *const AtmIntegrator, out: *mut f64, len: usize) -> AtmStatus {
    guard(|| {
        let it = it.as_ref().ok_or_else(|| null("integrator"))?;
        write(&it.state.current, out, len)
    })
}

/// # Safety
/// `it` must be NULL or a handle from [`atm_integrator_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn atm_integrator_free(it: *mut AtmIntegrator) {
    if !it.is_null() {
        drop(Box::from_raw(it));
    }
}
