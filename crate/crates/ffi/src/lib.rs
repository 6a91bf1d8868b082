//! C interface to the shift-periodic solver.
//!
//! Problems live behind an opaque handle. Every fallible call returns a
//! status code; the message of the last failure on the calling thread is
//! available from `sp_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shift_periodic::cli::problem_file::{load_problem, load_problem_str};
use shift_periodic::solver::{
    check_conditions, solve_picard, verify_solution, ConditionOptions, NeutralProblem, PicardOptions,
};
use shift_periodic::Error;

/// Status codes. Values 2 to 7 match the exit codes of the command-line tool.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    Parse = 2,
    Invariant = 3,
    Critical = 4,
    NotContractive = 5,
    Numerical = 6,
    MaxIterations = 7,
    NullArgument = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

impl From<&Error> for SpStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => SpStatus::Parse,
            3 => SpStatus::Invariant,
            4 => SpStatus::Critical,
            5 => SpStatus::NotContractive,
            6 => SpStatus::Numerical,
            7 => SpStatus::MaxIterations,
            _ => SpStatus::Internal,
        }
    }
}

/// A loaded problem.
pub struct SpProblem {
    problem: NeutralProblem,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpConditionReport {
    pub r: f64,
    pub norm_a: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub window_length: f64,
    pub n_bound: f64,
    pub contraction_constant: f64,
    /// Least admissible ball radius; infinite when none exists.
    pub jmin: f64,
    pub noncritical: bool,
    pub nontrivial: bool,
    pub krasnoselskii_ok: bool,
    pub contraction_ok: bool,
    pub lipschitz_estimated: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpSolveInfo {
    pub iterations: usize,
    pub max_ratio: f64,
    pub contraction_constant: f64,
    pub ratios_within_bound: bool,
    pub integral_residual: f64,
    pub differential_residual: f64,
    pub periodicity_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SpStatus, msg: impl Into<String>) -> SpStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), SpStatus>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SpStatus::Internal, "internal panic"),
    }
}

fn lib_err(e: Error) -> SpStatus {
    let s = SpStatus::from(&e);
    fail(s, e.to_string())
}

unsafe fn text_arg<'a>(p: *const c_char) -> Result<&'a str, SpStatus> {
    if p.is_null() {
        return Err(fail(SpStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SpStatus::Parse, "argument is not valid UTF-8"))
}

unsafe fn problem_arg<'a>(p: *const SpProblem) -> Result<&'a SpProblem, SpStatus> {
    p.as_ref().ok_or_else(|| fail(SpStatus::NullArgument, "null problem handle"))
}

unsafe fn store(out: *mut *mut SpProblem, problem: NeutralProblem) -> Result<(), SpStatus> {
    *out = Box::into_raw(Box::new(SpProblem { problem }));
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a problem file, or a bundled problem by name.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_load_path(path: *const c_char, out: *mut *mut SpProblem) -> SpStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(SpStatus::NullArgument, "null output pointer"));
        }
        *out = ptr::null_mut();
        let path = text_arg(path)?;
        let lp = match path {
            "paper_example" | "coupled" => shift_periodic::cli::problem_file::resolve_problem(path),
            _ => load_problem(path),
        }
        .map_err(lib_err)?;
        store(out, lp.problem)
    })
}

/// Loads a problem from TOML text.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_load_toml(text: *const c_char, out: *mut *mut SpProblem) -> SpStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(SpStatus::NullArgument, "null output pointer"));
        }
        *out = ptr::null_mut();
        let lp = load_problem_str(text_arg(text)?).map_err(lib_err)?;
        store(out, lp.problem)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `p` must come from one of the load functions and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_free(p: *mut SpProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_dimension(p: *const SpProblem) -> usize {
    p.as_ref().map_or(0, |h| h.problem.dim())
}

/// Number of points in the first window, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_window_len(p: *const SpProblem) -> usize {
    p.as_ref().map_or(0, |h| h.problem.window().len())
}

/// Writes the monodromy matrix row-major into `out` (`len ≥ n·n`).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_monodromy(p: *const SpProblem, out: *mut f64, len: usize) -> SpStatus {
    guard(|| {
        let h = problem_arg(p)?;
        let m = h.problem.monodromy();
        let n = m.nrows();
        if out.is_null() {
            return Err(fail(SpStatus::NullArgument, "null output buffer"));
        }
        if len < n * n {
            return Err(fail(SpStatus::BufferTooSmall, format!("need {} doubles", n * n)));
        }
        let dst = std::slice::from_raw_parts_mut(out, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// Fills the condition report with default options.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_check(p: *const SpProblem, out: *mut SpConditionReport) -> SpStatus {
    guard(|| {
        let h = problem_arg(p)?;
        if out.is_null() {
            return Err(fail(SpStatus::NullArgument, "null report pointer"));
        }
        let r = check_conditions(&h.problem, None, &ConditionOptions::default()).map_err(lib_err)?;
        *out = SpConditionReport {
            r: r.r,
            norm_a: r.norm_a,
            e1: r.e1,
            e2: r.e2,
            e3: r.e3,
            alpha: r.alpha,
            beta: r.beta,
            window_length: r.window_length,
            n_bound: r.n_bound,
            contraction_constant: r.contraction_constant,
            jmin: r.jmin.unwrap_or(f64::INFINITY),
            noncritical: r.noncritical,
            nontrivial: r.nontrivial,
            krasnoselskii_ok: r.krasnoselskii_ok,
            contraction_ok: r.contraction_ok,
            lipschitz_estimated: r.lipschitz_estimated,
        };
        Ok(())
    })
}

/// Runs the Picard iteration from zero and writes the window values
/// row-major (one row per window point) into `out` (`len ≥ points·n`).
/// Nonpositive `tol` or zero `max_iter` select the defaults.
///
/// # Safety
/// `out` must point to `len` writable doubles; `info` may be null.
#[no_mangle]
pub unsafe extern "C" fn sp_problem_solve(
    p: *const SpProblem,
    tol: f64,
    max_iter: usize,
    out: *mut f64,
    len: usize,
    info: *mut SpSolveInfo,
) -> SpStatus {
    guard(|| {
        let h = problem_arg(p)?;
        let prob = &h.problem;
        let need = prob.window().len() * prob.dim();
        if out.is_null() {
            return Err(fail(SpStatus::NullArgument, "null output buffer"));
        }
        if len < need {
            return Err(fail(SpStatus::BufferTooSmall, format!("need {need} doubles")));
        }
        let d = PicardOptions::default();
        let opts = PicardOptions {
            tol: if tol > 0.0 { tol } else { d.tol },
            max_iter: if max_iter > 0 { max_iter } else { d.max_iter },
            force: false,
        };
        let rep = check_conditions(prob, None, &ConditionOptions::default()).map_err(lib_err)?;
        let sol = solve_picard(prob, &prob.zero_state(), &rep, &opts).map_err(lib_err)?;
        let res = verify_solution(prob, &sol.solution).map_err(lib_err)?;
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (k, v) in sol.solution.values().iter().enumerate() {
            dst[k * prob.dim()..(k + 1) * prob.dim()].copy_from_slice(v.as_slice());
        }
        if let Some(info) = info.as_mut() {
            let dg = &sol.diagnostics;
            *info = SpSolveInfo {
                iterations: dg.iterations,
                max_ratio: dg.max_ratio,
                contraction_constant: dg.contraction_constant,
                ratios_within_bound: dg.ratios_within_bound,
                integral_residual: res.integral,
                differential_residual: res.differential,
                periodicity_residual: res.periodicity,
            };
        }
        Ok(())
    })
}
