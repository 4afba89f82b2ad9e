//! C interface to the `wspgl1` solvers.
//!
//! Every fallible function returns a [`Wspgl1Status`]; on failure a message
//! describing the error is kept per thread and can be read with
//! [`wspgl1_last_error`]. Objects cross the boundary as opaque handles that
//! the caller releases with the matching `_free` function. Vectors are passed
//! as pointer plus length and are never retained past the call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wspgl1::baselines::{solve_irwl1, IrwConfig};
use wspgl1::drivers::{
    solve_oracle_weighted, solve_spgl1, solve_wspgl1, DriverConfig, RecoveryResult,
};
use wspgl1::linop::{Measurement, MeasurementOperator, SparseSignal};
use wspgl1::norms::{project_weighted_l1_ball, weighted_l1, weighted_linf_dual, WeightVector};
use wspgl1::spg_lasso::SpgConfig;
use wspgl1::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wspgl1Status {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    InvalidArgument = 3,
    NonFinite = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wspgl1Algorithm {
    Spgl1 = 0,
    Wspgl1 = 1,
    /// Needs the true support.
    Oracle = 2,
    /// Four reweighting passes with `δ = 0.1`.
    Irwl1 = 3,
}

/// Driver settings. Zero in `support_size` selects the default
/// `round(n / (2 ln(N/n)))`; zero in `iteration_budget` removes the cap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wspgl1DriverConfig {
    pub omega: f64,
    pub support_size: usize,
    pub max_newton_iters: usize,
    pub root_tol: f64,
    pub iteration_budget: usize,
    pub spg_max_iterations: usize,
    pub optimality_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wspgl1TracePoint {
    pub tau: f64,
    pub residual_norm: f64,
    pub lambda: f64,
    pub weighted: bool,
}

/// Opaque measurement operator.
pub struct Wspgl1Operator(MeasurementOperator);

/// Opaque recovery result.
pub struct Wspgl1Result(RecoveryResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> Wspgl1Status {
    match e {
        Error::Dimension(_) => Wspgl1Status::Dimension,
        Error::NonFinite(_) => Wspgl1Status::NonFinite,
        Error::Io(_) => Wspgl1Status::Io,
        Error::InvalidArgument(_) | Error::InvalidPlan(_) | Error::Empty(_) => {
            Wspgl1Status::InvalidArgument
        }
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Wspgl1Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Wspgl1Status::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            Wspgl1Status::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            Wspgl1Status::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn check_out_len(what: &str, got: usize, want: usize) -> Result<(), Failure> {
    if got != want {
        return Err(
            Error::Dimension(format!("{what}: buffer length {got}, expected {want}")).into(),
        );
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wspgl1_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn wspgl1_driver_config_default() -> Wspgl1DriverConfig {
    let d = DriverConfig::default();
    Wspgl1DriverConfig {
        omega: d.omega,
        support_size: 0,
        max_newton_iters: d.max_newton_iters,
        root_tol: d.root_tol,
        iteration_budget: d.iteration_budget.unwrap_or(0),
        spg_max_iterations: d.spg.max_iterations,
        optimality_tol: d.spg.optimality_tol,
    }
}

impl From<&Wspgl1DriverConfig> for DriverConfig {
    fn from(c: &Wspgl1DriverConfig) -> Self {
        DriverConfig {
            omega: c.omega,
            support_size: (c.support_size > 0).then_some(c.support_size),
            max_newton_iters: c.max_newton_iters,
            root_tol: c.root_tol,
            iteration_budget: (c.iteration_budget > 0).then_some(c.iteration_budget),
            spg: SpgConfig {
                max_iterations: c.spg_max_iterations,
                optimality_tol: c.optimality_tol,
                ..SpgConfig::default()
            },
        }
    }
}

/// Dense Gaussian operator with i.i.d. `N(0, 1/rows)` entries drawn from
/// `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_gaussian(
    rows: usize,
    cols: usize,
    seed: u64,
    out: *mut *mut Wspgl1Operator,
) -> Wspgl1Status {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let op = MeasurementOperator::gaussian(rows, cols, seed)?;
        *out = Box::into_raw(Box::new(Wspgl1Operator(op)));
        Ok(())
    })
}

/// Operator from a row-major `rows × cols` matrix, which is copied.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles and `out` to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_from_row_major(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut Wspgl1Operator,
) -> Wspgl1Status {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Dimension("rows * cols overflows".into()))?;
        let data = slice(data, len, "data")?.to_vec();
        let op = MeasurementOperator::from_row_major(rows, cols, data)?;
        *out = Box::into_raw(Box::new(Wspgl1Operator(op)));
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_free(op: *mut Wspgl1Operator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_rows(op: *const Wspgl1Operator) -> usize {
    op.as_ref().map_or(0, |o| o.0.rows())
}

/// Number of columns, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_cols(op: *const Wspgl1Operator) -> usize {
    op.as_ref().map_or(0, |o| o.0.cols())
}

/// Forward plus adjoint products applied so far.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_products(op: *const Wspgl1Operator) -> u64 {
    op.as_ref().map_or(0, |o| o.0.products())
}

/// `y = A x`.
///
/// # Safety
/// `op` must be a live handle; `x` and `y` must point to `x_len` and `y_len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_apply(
    op: *const Wspgl1Operator,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> Wspgl1Status {
    guard(|| {
        let op = handle(op, "op")?;
        let x = slice(x, x_len, "x")?;
        let y = slice_mut(y, y_len, "y")?;
        op.0.apply_into(x, y)?;
        Ok(())
    })
}

/// `x = Aᵀ y`.
///
/// # Safety
/// `op` must be a live handle; `y` and `x` must point to `y_len` and `x_len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_operator_apply_adjoint(
    op: *const Wspgl1Operator,
    y: *const f64,
    y_len: usize,
    x: *mut f64,
    x_len: usize,
) -> Wspgl1Status {
    guard(|| {
        let op = handle(op, "op")?;
        let y = slice(y, y_len, "y")?;
        let x = slice_mut(x, x_len, "x")?;
        op.0.apply_adjoint_into(y, x)?;
        Ok(())
    })
}

/// Fills `out` with a random `k`-sparse signal of length `len` with
/// standard normal nonzeros, drawn from `seed`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_sparse_signal(
    len: usize,
    k: usize,
    seed: u64,
    out: *mut f64,
) -> Wspgl1Status {
    guard(|| {
        let out = slice_mut(out, len, "out")?;
        let s = SparseSignal::random(len, k, seed)?;
        out.copy_from_slice(&s.values);
        Ok(())
    })
}

/// Recovers a sparse `x` with `‖Ax − y‖₂ ≈ epsilon`.
///
/// `support` is read only for [`Wspgl1Algorithm::Oracle`]. A null `cfg`
/// uses [`wspgl1_driver_config_default`].
///
/// # Safety
/// `op` must be a live handle, `y` must point to `y_len` doubles, `support`
/// to `support_len` indices, `cfg` must be null or valid, and `out` must be
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_solve(
    op: *const Wspgl1Operator,
    algorithm: Wspgl1Algorithm,
    y: *const f64,
    y_len: usize,
    epsilon: f64,
    support: *const usize,
    support_len: usize,
    cfg: *const Wspgl1DriverConfig,
    out: *mut *mut Wspgl1Result,
) -> Wspgl1Status {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let op = &handle(op, "op")?.0;
        let meas = Measurement::new(slice(y, y_len, "y")?.to_vec(), epsilon)?;
        let cfg = cfg
            .as_ref()
            .map_or_else(DriverConfig::default, DriverConfig::from);
        let result = match algorithm {
            Wspgl1Algorithm::Spgl1 => solve_spgl1(op, &meas, &cfg)?,
            Wspgl1Algorithm::Wspgl1 => solve_wspgl1(op, &meas, &cfg)?,
            Wspgl1Algorithm::Oracle => {
                let support = slice(support, support_len, "support")?;
                solve_oracle_weighted(op, &meas, support, &cfg)?
            }
            Wspgl1Algorithm::Irwl1 => {
                let irw = IrwConfig {
                    driver: cfg,
                    ..IrwConfig::default()
                };
                solve_irwl1(op, &meas, &irw)?
            }
        };
        *out = Box::into_raw(Box::new(Wspgl1Result(result)));
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a handle from [`wspgl1_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_free(res: *mut Wspgl1Result) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Length of the recovered signal, or 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_len(res: *const Wspgl1Result) -> usize {
    res.as_ref().map_or(0, |r| r.0.x_hat.len())
}

/// Copies the recovered signal into `out`, which must hold exactly
/// [`wspgl1_result_len`] values.
///
/// # Safety
/// `res` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_x(
    res: *const Wspgl1Result,
    out: *mut f64,
    len: usize,
) -> Wspgl1Status {
    guard(|| {
        let r = &handle(res, "res")?.0;
        check_out_len("x", len, r.x_hat.len())?;
        slice_mut(out, len, "out")?.copy_from_slice(&r.x_hat);
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_converged(res: *const Wspgl1Result) -> bool {
    res.as_ref().is_some_and(|r| r.0.converged)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_newton_iters(res: *const Wspgl1Result) -> usize {
    res.as_ref().map_or(0, |r| r.0.newton_iters)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_products(res: *const Wspgl1Result) -> u64 {
    res.as_ref().map_or(0, |r| r.0.total_products)
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_support_len(res: *const Wspgl1Result) -> usize {
    res.as_ref().map_or(0, |r| r.0.final_support.len())
}

/// Copies the final support estimate (sorted, 0-based) into `out`.
///
/// # Safety
/// `res` must be a live handle and `out` must point to `len` indices.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_support(
    res: *const Wspgl1Result,
    out: *mut usize,
    len: usize,
) -> Wspgl1Status {
    guard(|| {
        let r = &handle(res, "res")?.0;
        let idx = r.final_support.indices();
        check_out_len("support", len, idx.len())?;
        slice_mut(out, len, "out")?.copy_from_slice(idx);
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_trace_len(res: *const Wspgl1Result) -> usize {
    res.as_ref().map_or(0, |r| r.0.trace.points.len())
}

/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_result_trace_point(
    res: *const Wspgl1Result,
    index: usize,
    out: *mut Wspgl1TracePoint,
) -> Wspgl1Status {
    guard(|| {
        let r = &handle(res, "res")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let p = r.trace.points.get(index).ok_or_else(|| {
            Error::Dimension(format!(
                "trace index {index} out of range for {} points",
                r.trace.points.len()
            ))
        })?;
        *out = Wspgl1TracePoint {
            tau: p.tau,
            residual_norm: p.residual_norm,
            lambda: p.lambda,
            weighted: p.weighted,
        };
        Ok(())
    })
}

unsafe fn weights(w: *const f64, len: usize) -> Result<WeightVector, Failure> {
    if w.is_null() {
        Ok(WeightVector::ones(len))
    } else {
        Ok(WeightVector::new(slice(w, len, "w")?.to_vec())?)
    }
}

/// Euclidean projection of `v` onto `{u : Σ wᵢ|uᵢ| ≤ tau}`. Weights must
/// lie in (0, 1]; a null `w` means unit weights. `out` may alias `v`.
///
/// # Safety
/// `v`, `out` and (if non-null) `w` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_project_weighted_l1(
    v: *const f64,
    w: *const f64,
    len: usize,
    tau: f64,
    out: *mut f64,
) -> Wspgl1Status {
    guard(|| {
        let projected = project_weighted_l1_ball(slice(v, len, "v")?, &weights(w, len)?, tau)?;
        slice_mut(out, len, "out")?.copy_from_slice(&projected);
        Ok(())
    })
}

/// `Σ wᵢ|uᵢ|`; a null `w` means unit weights.
///
/// # Safety
/// `u` and (if non-null) `w` must point to `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_weighted_l1(
    u: *const f64,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> Wspgl1Status {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = weighted_l1(slice(u, len, "u")?, &weights(w, len)?)?;
        Ok(())
    })
}

/// `maxᵢ |vᵢ| / wᵢ`, the dual of the weighted ℓ1 norm.
///
/// # Safety
/// `v` and (if non-null) `w` must point to `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wspgl1_weighted_linf_dual(
    v: *const f64,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> Wspgl1Status {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = weighted_linf_dual(slice(v, len, "v")?, &weights(w, len)?)?;
        Ok(())
    })
}
