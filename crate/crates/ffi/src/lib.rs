//! C ABI for `oseen-sv`.
//!
//! A run is created with [`oseen_run_new`], queried through the accessor functions and
//! released with [`oseen_run_free`]. Every fallible function returns an [`OseenStatus`]; on
//! failure a description is available from [`oseen_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use oseen_sv::assembly::{AssemblyOptions, StabConfig};
use oseen_sv::driver::{dof_counts, solve_case, LevelRun, RunOptions};
use oseen_sv::problem::ProblemCase;
use oseen_sv::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OseenStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    OutsideDomain = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OseenStab {
    None = 0,
    Classical = 1,
    Curl = 2,
}

/// Error norms of a solved run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OseenErrors {
    pub h: f64,
    pub l2_u: f64,
    pub l2_p: f64,
    pub energy: f64,
    pub div_sup: f64,
}

/// Opaque handle to a solved problem.
pub struct OseenRun {
    run: LevelRun,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OseenStatus {
    match e {
        Error::Location(..) => OseenStatus::OutsideDomain,
        e if e.is_configuration() => OseenStatus::InvalidArgument,
        _ => OseenStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (OseenStatus, String)>) -> OseenStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OseenStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OseenStatus::Panic
        }
    }
}

fn fail(e: Error) -> (OseenStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (OseenStatus, String) {
    (OseenStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or an empty string. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn oseen_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn oseen_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Velocity, pressure and total DOF counts on a refinement level.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn oseen_dof_counts(level: usize, k: usize, dofs_u: *mut usize, dofs_p: *mut usize, dofs_total: *mut usize) -> OseenStatus {
    guard(|| {
        if dofs_u.is_null() || dofs_p.is_null() || dofs_total.is_null() {
            return Err(null("output pointer"));
        }
        let (u, p, t) = dof_counts(level, k).map_err(fail)?;
        *dofs_u = u;
        *dofs_p = p;
        *dofs_total = t;
        Ok(())
    })
}

/// Assembles and solves one case (`"lattice"`, `"layer"` or `"patch"`) on one level. On
/// success `*out` owns a new handle.
///
/// # Safety
/// `case_name` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn oseen_run_new(
    case_name: *const c_char,
    mu: f64,
    sigma: f64,
    level: usize,
    k: usize,
    stab: OseenStab,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    out: *mut *mut OseenRun,
) -> OseenStatus {
    guard(|| {
        if case_name.is_null() {
            return Err(null("case name"));
        }
        if out.is_null() {
            return Err(null("output handle"));
        }
        *out = ptr::null_mut();
        let name = CStr::from_ptr(case_name).to_str().map_err(|_| (OseenStatus::InvalidArgument, "case name is not UTF-8".to_string()))?;
        let case = ProblemCase::by_name(name, mu, sigma).map_err(fail)?;
        let stab = match stab {
            OseenStab::None => StabConfig::none(),
            OseenStab::Classical => StabConfig { delta: [delta1, delta2, delta3], ..StabConfig::classical(delta1) },
            OseenStab::Curl => StabConfig::curl(delta1, delta2, delta3),
        };
        stab.validate().map_err(fail)?;
        let opts = RunOptions { k, stab, assembly: AssemblyOptions { parallel: true, ..Default::default() }, error_degree: None };
        let run = solve_case(&case, level, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(OseenRun { run }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `run` must come from [`oseen_run_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn oseen_run_free(run: *mut OseenRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle; output pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn oseen_run_dofs(run: *const OseenRun, dofs_u: *mut usize, dofs_p: *mut usize) -> OseenStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        if dofs_u.is_null() || dofs_p.is_null() {
            return Err(null("output pointer"));
        }
        *dofs_u = run.run.report.dofs_u;
        *dofs_p = run.run.report.dofs_p;
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle and `errors` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn oseen_run_errors(run: *const OseenRun, errors: *mut OseenErrors) -> OseenStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let errors = errors.as_mut().ok_or_else(|| null("errors"))?;
        let r = &run.run.report;
        *errors = OseenErrors { h: r.h, l2_u: r.err_l2_u, l2_p: r.err_l2_p, energy: r.err_energy, div_sup: r.div_sup };
        Ok(())
    })
}

/// Discrete velocity at a physical point; writes two values to `value`.
///
/// # Safety
/// `run` must be a live handle and `value` valid for two writes.
#[no_mangle]
pub unsafe extern "C" fn oseen_run_eval_velocity(run: *const OseenRun, x: f64, y: f64, value: *mut f64) -> OseenStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        let v = run.run.solution.velocity.value_at([x, y]).map_err(fail)?;
        *value = v[0];
        *value.add(1) = v[1];
        Ok(())
    })
}

/// Discrete pressure at a physical point.
///
/// # Safety
/// `run` must be a live handle and `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn oseen_run_eval_pressure(run: *const OseenRun, x: f64, y: f64, value: *mut f64) -> OseenStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let value = value.as_mut().ok_or_else(|| null("value"))?;
        *value = run.run.solution.pressure.value_at([x, y]).map_err(fail)?;
        Ok(())
    })
}
