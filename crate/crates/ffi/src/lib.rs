//! C ABI for quasifkpp.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every entry point returns a [`QfStatus`]; on failure the message is kept
//! per thread and can be read with [`qf_last_error_message`]. Panics never
//! cross the boundary.
//!
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quasifkpp::asymptotics::{exact_constant_field, AsymptoticSolver};
use quasifkpp::ees::{solve_scenario_until, EesOrder, EesTrajectory};
use quasifkpp::grid::GridField;
use quasifkpp::pde::{solve_fkpp, PdeSolverConfig};
use quasifkpp::{Error, Scenario};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Malformed or invalid scenario.
    Config = 2,
    /// The solver failed (blow-up, step underflow, quadrature).
    Solver = 3,
    /// An argument was out of range.
    InvalidArgument = 4,
    /// Internal panic; the library state is still usable.
    Panic = 5,
}

/// Moments of both packets at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QfMoments {
    pub x: [f64; 2],
    pub sigma: [f64; 2],
    pub alpha2: [f64; 2],
}

pub struct QfScenario {
    inner: Scenario,
}

pub struct QfTrajectory {
    inner: EesTrajectory,
}

pub struct QfField {
    inner: GridField,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into().into_bytes());
}

fn status_of(e: &Error) -> QfStatus {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Io(_) => QfStatus::Config,
        Error::InvalidArgument(_) | Error::GridMismatch(_) | Error::OutOfSpan { .. } => {
            QfStatus::InvalidArgument
        }
        _ => QfStatus::Solver,
    }
}

struct Fail(QfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QfStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(QfStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(p))));
    }
}

/// Copies the last error message of the calling thread into `buf` as a
/// NUL-terminated string, truncated to `len` bytes including the terminator.
/// Returns the full message length without the terminator; pass a null
/// `buf` to query it.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses and validates a scenario from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_scenario_from_json(json: *const c_char, out: *mut *mut QfScenario) -> QfStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        emit(
            out,
            QfScenario {
                inner: Scenario::from_json(text)?,
            },
        )
    })
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_scenario_from_file(path: *const c_char, out: *mut *mut QfScenario) -> QfStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        emit(
            out,
            QfScenario {
                inner: Scenario::load(path)?,
            },
        )
    })
}

/// Grid bounds and number of points of the scenario.
///
/// # Safety
/// `scenario` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_scenario_grid(
    scenario: *const QfScenario,
    x_min: *mut f64,
    x_max: *mut f64,
    n_points: *mut usize,
) -> QfStatus {
    guard(|| {
        let sc = deref(scenario, "scenario")?;
        if x_min.is_null() || x_max.is_null() || n_points.is_null() {
            return Err(null("output"));
        }
        let grid = sc.inner.grid();
        *x_min = grid.x_min();
        *x_max = grid.x_max();
        *n_points = grid.len();
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qf_scenario_free(scenario: *mut QfScenario) {
    free(scenario)
}

/// Integrates the moment system up to `t_end`; `order` is 0 or 2.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_solve_ees(
    scenario: *const QfScenario,
    order: u32,
    t_end: f64,
    out: *mut *mut QfTrajectory,
) -> QfStatus {
    guard(|| {
        let sc = deref(scenario, "scenario")?;
        let order = match order {
            0 => EesOrder::Zero,
            2 => EesOrder::Two,
            o => {
                return Err(Fail(
                    QfStatus::InvalidArgument,
                    format!("order must be 0 or 2, got {o}"),
                ))
            }
        };
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Fail(
                QfStatus::InvalidArgument,
                format!("t_end must be finite and >= 0, got {t_end}"),
            ));
        }
        emit(
            out,
            QfTrajectory {
                inner: solve_scenario_until(&sc.inner, order, t_end)?,
            },
        )
    })
}

/// Final time of the trajectory, or NaN for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_t_end(traj: *const QfTrajectory) -> f64 {
    traj.as_ref().map_or(f64::NAN, |t| t.inner.t_end())
}

/// Moments at time `t` from the dense output.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_state(
    traj: *const QfTrajectory,
    t: f64,
    out: *mut QfMoments,
) -> QfStatus {
    guard(|| {
        let traj = deref(traj, "trajectory")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = traj.inner.state(t)?;
        *out = QfMoments {
            x: s.x,
            sigma: s.sigma,
            alpha2: s.alpha2,
        };
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qf_trajectory_free(traj: *mut QfTrajectory) {
    free(traj)
}

/// Composite asymptotic solution of order `k` (0..=2) at time `t`.
///
/// # Safety
/// Handles must be live and come from the same scenario; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_asymptotic(
    scenario: *const QfScenario,
    traj: *const QfTrajectory,
    t: f64,
    k: u32,
    out: *mut *mut QfField,
) -> QfStatus {
    guard(|| {
        let sc = &deref(scenario, "scenario")?.inner;
        let traj = &deref(traj, "trajectory")?.inner;
        if k > 2 {
            return Err(Fail(
                QfStatus::InvalidArgument,
                format!("k must be 0, 1 or 2, got {k}"),
            ));
        }
        if traj.order() != EesOrder::Two {
            return Err(Fail(
                QfStatus::InvalidArgument,
                "asymptotics need a second-order trajectory".into(),
            ));
        }
        let coeffs = sc.coefficients();
        let solver = AsymptoticSolver::new(sc, traj, coeffs.as_ref());
        let snap = solver.solve(&[t], k as usize)?.remove(0);
        emit(
            out,
            QfField {
                inner: snap.composite(k as usize, &sc.params)?,
            },
        )
    })
}

/// Reference solution of the full equation at time `t`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_solve_pde(
    scenario: *const QfScenario,
    t: f64,
    out: *mut *mut QfField,
) -> QfStatus {
    guard(|| {
        let sc = &deref(scenario, "scenario")?.inner;
        let sol = solve_fkpp(sc, &PdeSolverConfig::from_scenario(sc), &[t])?;
        emit(
            out,
            QfField {
                inner: sol.fields.into_iter().next().expect("one sample"),
            },
        )
    })
}

/// Closed-form solution for constant coefficients at time `t`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_exact(scenario: *const QfScenario, t: f64, out: *mut *mut QfField) -> QfStatus {
    guard(|| {
        let sc = &deref(scenario, "scenario")?.inner;
        emit(
            out,
            QfField {
                inner: exact_constant_field(sc, &sc.grid(), t)?,
            },
        )
    })
}

/// Number of grid values, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qf_field_len(field: *const QfField) -> usize {
    field.as_ref().map_or(0, |f| f.inner.values.len())
}

/// Time of the field, or NaN for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qf_field_time(field: *const QfField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.inner.t)
}

/// Copies the grid values into `buf`, which must hold `qf_field_len` doubles.
///
/// # Safety
/// `field` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qf_field_copy(field: *const QfField, buf: *mut f64, len: usize) -> QfStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < f.values.len() {
            return Err(Fail(
                QfStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", f.values.len()),
            ));
        }
        ptr::copy_nonoverlapping(f.values.as_ptr(), buf, f.values.len());
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qf_field_free(field: *mut QfField) {
    free(field)
}
