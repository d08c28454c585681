//! C ABI over `osgood-core`.
//!
//! Every fallible call returns an [`OsgoodStatus`]; on failure the message is
//! kept per thread and read back with [`osgood_last_error`]. Objects are
//! opaque handles created by `*_new`-style calls and released with the
//! matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use osgood_core::euler::EulerSolver;
use osgood_core::lab::kernel::{kernel_at, KernelConfig};
use osgood_core::multiplier::{check_osgood_condition, default_log_upper_limits, Multiplier, OsgoodVerdict, TableInterp};
use osgood_core::osgood::{GrowthFunction, OsgoodEnvelope as Envelope};
use osgood_core::scenario::{execute, Scenario};
use osgood_core::spectral::{Grid, SpectralField};
use osgood_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    TableRange = 3,
    EnvelopeBlowUp = 4,
    Numerical = 5,
    BlowUp = 6,
    Geometry = 7,
    Config = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodInterp {
    Linear = 0,
    LogLinear = 1,
    LogLog = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodVerdictCode {
    Diverges = 0,
    Converges = 1,
    Inconclusive = 2,
}

/// Growth function behind an envelope.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodGamma {
    /// `r`; ignores the multiplier.
    Linear = 0,
    /// `r m(r)(1 + Log r)`.
    Theta = 1,
    /// `m(e^r)(1 + r)`.
    Tilde = 2,
}

/// Radial kernel value and derivatives at one radius.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OsgoodKernelRow {
    pub rho: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub majorant: f64,
}

pub struct OsgoodMultiplier(Multiplier);
pub struct OsgoodEnvelope(Envelope);
pub struct OsgoodEulerSolver(EulerSolver);
pub struct OsgoodScenario(Scenario);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OsgoodStatus {
    match e {
        Error::InvalidArgument(_) | Error::GridMismatch(_) | Error::GridTooSmall(_) | Error::NonMonotoneTable { .. } => OsgoodStatus::InvalidArgument,
        Error::TableRange { .. } => OsgoodStatus::TableRange,
        Error::EnvelopeBlowUp { .. } | Error::CannotDominate { .. } => OsgoodStatus::EnvelopeBlowUp,
        Error::Quadrature(_) | Error::AccelerationFailed { .. } => OsgoodStatus::Numerical,
        Error::BlowUp { .. } | Error::RegularityLost { .. } => OsgoodStatus::BlowUp,
        Error::Geometry(_) => OsgoodStatus::Geometry,
        Error::Config(_) => OsgoodStatus::Config,
        Error::Format(_) | Error::Io(_) | Error::Json(_) => OsgoodStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), (OsgoodStatus, String)>>(f: F) -> OsgoodStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OsgoodStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            OsgoodStatus::Panic
        }
    }
}

type Fallible<T> = Result<T, (OsgoodStatus, String)>;

fn core<T>(r: osgood_core::Result<T>) -> Fallible<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (OsgoodStatus, String) {
    (OsgoodStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Fallible<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Fallible<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Fallible<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (OsgoodStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Fallible<()> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn osgood_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn osgood_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// multipliers -----------------------------------------------------------

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_constant(value: f64, out: *mut *mut OsgoodMultiplier) -> OsgoodStatus {
    guard(|| emit(out, OsgoodMultiplier(core(Multiplier::constant(value))?)))
}

/// # Safety
/// `exponents` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_iterated_log(exponents: *const f64, len: usize, out: *mut *mut OsgoodMultiplier) -> OsgoodStatus {
    guard(|| {
        let e = slice(exponents, len, "exponents")?;
        emit(out, OsgoodMultiplier(core(Multiplier::iterated_log(e))?))
    })
}

/// # Safety
/// `r` and `m` must each point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_table(
    r: *const f64,
    m: *const f64,
    len: usize,
    interp: OsgoodInterp,
    out: *mut *mut OsgoodMultiplier,
) -> OsgoodStatus {
    guard(|| {
        let (r, m) = (slice(r, len, "r")?, slice(m, len, "m")?);
        let interp = match interp {
            OsgoodInterp::Linear => TableInterp::Linear,
            OsgoodInterp::LogLinear => TableInterp::LogLinear,
            OsgoodInterp::LogLog => TableInterp::LogLog,
        };
        emit(out, OsgoodMultiplier(core(Multiplier::table(r.to_vec(), m.to_vec(), interp))?))
    })
}

/// # Safety
/// `h` must be a live multiplier handle.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_set_clamp_floor(h: *mut OsgoodMultiplier, floor: f64) -> OsgoodStatus {
    guard(|| {
        let h = as_mut(h, "multiplier")?;
        h.0 = core(h.0.clone().with_clamp_floor(floor))?;
        Ok(())
    })
}

/// # Safety
/// `h` must be a live multiplier handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_eval(h: *const OsgoodMultiplier, r: f64, out: *mut f64) -> OsgoodStatus {
    guard(|| {
        let v = core(as_ref(h, "multiplier")?.0.eval(r))?;
        *as_mut(out, "out")? = v;
        Ok(())
    })
}

/// Osgood verdict for `∫ dt/(t Log t m(t))` over the default limits.
///
/// # Safety
/// `h` must be a live multiplier handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_osgood_verdict(h: *const OsgoodMultiplier, out: *mut OsgoodVerdictCode) -> OsgoodStatus {
    guard(|| {
        let ev = core(check_osgood_condition(&as_ref(h, "multiplier")?.0, &default_log_upper_limits()))?;
        *as_mut(out, "out")? = match ev.verdict {
            OsgoodVerdict::Diverges => OsgoodVerdictCode::Diverges,
            OsgoodVerdict::Converges => OsgoodVerdictCode::Converges,
            OsgoodVerdict::Inconclusive => OsgoodVerdictCode::Inconclusive,
        };
        Ok(())
    })
}

/// Radial kernel of `m(|ξ|)/|ξ|²` at `rho` in `[1e-3, 1]`, default quadrature.
///
/// # Safety
/// `h` must be a live multiplier handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_radial_kernel(h: *const OsgoodMultiplier, rho: f64, out: *mut OsgoodKernelRow) -> OsgoodStatus {
    guard(|| {
        let m = &as_ref(h, "multiplier")?.0;
        if !(1e-3..=1.0).contains(&rho) {
            return Err((OsgoodStatus::InvalidArgument, format!("rho = {rho} outside [1e-3, 1]")));
        }
        let r = core(kernel_at(m, rho, &KernelConfig::default()))?;
        *as_mut(out, "out")? = OsgoodKernelRow { rho: r.rho, f: r.f, f1: r.f1, f2: r.f2, majorant: r.majorant };
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osgood_multiplier_free(h: *mut OsgoodMultiplier) {
    release(h)
}

// envelopes -------------------------------------------------------------

/// Tabulates `H` from `r = lower` out to `ln r = rho_max`. `m` may be NULL for
/// the linear growth function.
///
/// # Safety
/// `m` must be NULL or a live multiplier handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_envelope_new(
    gamma: OsgoodGamma,
    m: *const OsgoodMultiplier,
    lower: f64,
    rho_max: f64,
    out: *mut *mut OsgoodEnvelope,
) -> OsgoodStatus {
    guard(|| {
        let g = match gamma {
            OsgoodGamma::Linear => GrowthFunction::Linear,
            OsgoodGamma::Theta => GrowthFunction::Theta(as_ref(m, "multiplier")?.0.clone()),
            OsgoodGamma::Tilde => GrowthFunction::Tilde(as_ref(m, "multiplier")?.0.clone()),
        };
        emit(out, OsgoodEnvelope(core(Envelope::new(g, lower, rho_max))?))
    })
}

/// `ln` of `H⁻¹(H(f0) + c t f0)` at each of the `len` times, or of
/// `H⁻¹(H(f0) + c(t² + t))` when `two_term` is nonzero.
///
/// # Safety
/// `t` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn osgood_envelope_ln(
    h: *const OsgoodEnvelope,
    f0: f64,
    c: f64,
    two_term: i32,
    t: *const f64,
    len: usize,
    out: *mut f64,
) -> OsgoodStatus {
    guard(|| {
        let env = &as_ref(h, "envelope")?.0;
        let t = slice(t, len, "t")?;
        if len > 0 && out.is_null() {
            return Err(null("out"));
        }
        let v = core(if two_term != 0 { env.two_term_ln(f0, c, t) } else { env.envelope_ln(f0, c, t) })?;
        if len > 0 {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&v);
        }
        Ok(())
    })
}

/// # Safety
/// `h` must be a live envelope handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_envelope_h(h: *const OsgoodEnvelope, r: f64, out: *mut f64) -> OsgoodStatus {
    guard(|| {
        let v = core(as_ref(h, "envelope")?.0.h(r))?;
        *as_mut(out, "out")? = v;
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osgood_envelope_free(h: *mut OsgoodEnvelope) {
    release(h)
}

// Euler solver ----------------------------------------------------------

/// Solver on an `n × n` periodic grid of side `length`, started from the
/// row-major vorticity `omega[i2 * n + i1]`.
///
/// # Safety
/// `m` must be a live multiplier handle, `omega` must hold `n * n` doubles
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_euler_new(
    n: usize,
    length: f64,
    m: *const OsgoodMultiplier,
    omega: *const f64,
    out: *mut *mut OsgoodEulerSolver,
) -> OsgoodStatus {
    guard(|| {
        let m = &as_ref(m, "multiplier")?.0;
        let grid = core(Grid::new(n, length))?;
        let values = slice(omega, n.checked_mul(n).ok_or_else(|| (OsgoodStatus::InvalidArgument, "grid too large".to_string()))?, "omega")?;
        let field = core(SpectralField::from_values(grid, values.to_vec()))?;
        emit(out, OsgoodEulerSolver(core(EulerSolver::new(&field, m))?))
    })
}

/// One classical RK4 step of size `dt`. On failure the solver is unchanged.
///
/// # Safety
/// `h` must be a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn osgood_euler_step(h: *mut OsgoodEulerSolver, dt: f64) -> OsgoodStatus {
    guard(|| {
        let s = as_mut(h, "solver")?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err((OsgoodStatus::InvalidArgument, format!("dt must be positive, got {dt}")));
        }
        let mut next = s.0.clone();
        core(next.step_rk4(dt))?;
        s.0 = next;
        Ok(())
    })
}

/// # Safety
/// `h` must be a live solver handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_euler_time(h: *const OsgoodEulerSolver, out: *mut f64) -> OsgoodStatus {
    guard(|| {
        let t = as_ref(h, "solver")?.0.time();
        *as_mut(out, "out")? = t;
        Ok(())
    })
}

/// Copies the current vorticity into `out`, which must hold `len = n * n`
/// doubles.
///
/// # Safety
/// `h` must be a live solver handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn osgood_euler_vorticity(h: *const OsgoodEulerSolver, out: *mut f64, len: usize) -> OsgoodStatus {
    guard(|| {
        let omega = as_ref(h, "solver")?.0.omega();
        let v = omega.values();
        if len != v.len() {
            return Err((OsgoodStatus::InvalidArgument, format!("buffer holds {len} values, field has {}", v.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osgood_euler_free(h: *mut OsgoodEulerSolver) {
    release(h)
}

// scenarios -------------------------------------------------------------

/// Parses and validates scenario TOML without running it.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_scenario_parse(text: *const c_char, out: *mut *mut OsgoodScenario) -> OsgoodStatus {
    guard(|| emit(out, OsgoodScenario(core(Scenario::parse(string(text, "text")?, None))?)))
}

/// Runs the scenario into `out_dir` on `threads` workers (0 for all cores).
/// `exit_code` receives 0, 3 (blow-up) or 4 (failed expectation).
///
/// # Safety
/// `h` must be a live scenario handle, `out_dir` a NUL-terminated path and
/// `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn osgood_scenario_run(h: *const OsgoodScenario, out_dir: *const c_char, threads: usize, exit_code: *mut i32) -> OsgoodStatus {
    guard(|| {
        let sc = &as_ref(h, "scenario")?.0;
        let dir = string(out_dir, "out_dir")?;
        let code = as_mut(exit_code, "exit_code")?;
        let outcome = core(execute(sc, Path::new(dir), threads))?;
        *code = outcome.status.exit_code();
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osgood_scenario_free(h: *mut OsgoodScenario) {
    release(h)
}
