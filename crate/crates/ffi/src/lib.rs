//! C ABI over `pdfade`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a [`PdfStatus`]
//! and, on failure, records a message readable with [`pdf_last_error`] on the
//! same thread. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pdfade::{
    db_to_linear, fading_stats, optimize, q_binomial, q_gaussian, ApproxMethod, Error, GridPoint, McSettings,
    OptimizationResult, QuadratureSettings, SearchOptions, SystemParams,
};

pub const PDF_METHOD_APPROX1: u32 = 1;
pub const PDF_METHOD_APPROX2: u32 = 2;
pub const PDF_METHOD_APPROX3: u32 = 3;
pub const PDF_METHOD_APPROX4: u32 = 4;
pub const PDF_METHOD_MONTE_CARLO: u32 = 5;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Constraint = 4,
    Numeric = 5,
    Panic = 6,
}

/// One evaluated rate split.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfPoint {
    pub rc: f64,
    pub re: f64,
    pub n: u64,
    pub p_e: f64,
    pub phi_argument: f64,
    pub log10_q: f64,
}

/// System parameters and quadrature settings.
pub struct PdfSystem {
    params: SystemParams,
    quad: QuadratureSettings,
}

/// The evaluated grid of one optimization, in increasing `rc`.
pub struct PdfOptimization {
    result: OptimizationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: PdfStatus, message: &str) -> PdfStatus {
    set_last_error(message);
    status
}

fn from_error(e: &Error) -> PdfStatus {
    let status = match e {
        Error::Domain(_) => PdfStatus::Domain,
        Error::Constraint(_) => PdfStatus::Constraint,
        Error::Numeric(_) => PdfStatus::Numeric,
        _ => PdfStatus::InvalidArgument,
    };
    fail(status, &e.to_string())
}

/// Runs `body` with panics contained and errors mapped to status codes.
fn guard(body: impl FnOnce() -> Result<(), PdfStatus>) -> PdfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PdfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PdfStatus::Panic, "internal panic"),
    }
}

fn method_from(code: u32) -> Result<ApproxMethod, PdfStatus> {
    Ok(match code {
        PDF_METHOD_APPROX1 => ApproxMethod::Approx1,
        PDF_METHOD_APPROX2 => ApproxMethod::Approx2,
        PDF_METHOD_APPROX3 => ApproxMethod::Approx3,
        PDF_METHOD_APPROX4 => ApproxMethod::Approx4,
        PDF_METHOD_MONTE_CARLO => ApproxMethod::MonteCarlo,
        other => return Err(fail(PdfStatus::InvalidArgument, &format!("unknown method code {other}"))),
    })
}

fn point_from(g: &GridPoint) -> PdfPoint {
    PdfPoint {
        rc: g.split.rc,
        re: g.split.re,
        n: g.split.n,
        p_e: g.p_e.p_e,
        phi_argument: g.phi_argument,
        log10_q: g.q.log10_q,
    }
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pdf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdf_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Validates and stores a system. Power is given in dB.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn pdf_system_new(
    m: u64,
    m_hat: u64,
    k: f64,
    l_f: f64,
    t: f64,
    power_db: f64,
    epsilon: f64,
    out: *mut *mut PdfSystem,
) -> PdfStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PdfStatus::NullPointer, "out is null"));
        }
        let params = SystemParams::new(m, m_hat, k, l_f, t, db_to_linear(power_db), epsilon).map_err(|e| from_error(&e))?;
        let handle = Box::new(PdfSystem {
            params,
            quad: QuadratureSettings::default(),
        });
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Releases a system handle. Null is ignored.
///
/// # Safety
/// `system` must be null or a handle from [`pdf_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdf_system_free(system: *mut PdfSystem) {
    if !system.is_null() {
        // SAFETY: ownership returns to Rust exactly once per the contract.
        drop(unsafe { Box::from_raw(system) });
    }
}

/// Packet-erasure probability at channel rate `rc`. `trials` and `seed` are
/// used only by the Monte Carlo method.
///
/// # Safety
/// `system` must be a live handle and `out_p_e` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdf_outage_probability(
    system: *const PdfSystem,
    method: u32,
    rc: f64,
    trials: u64,
    seed: u64,
    out_p_e: *mut f64,
) -> PdfStatus {
    guard(|| {
        if system.is_null() || out_p_e.is_null() {
            return Err(fail(PdfStatus::NullPointer, "system or out_p_e is null"));
        }
        // SAFETY: non-null live handle per the contract.
        let sys = unsafe { &*system };
        let method = method_from(method)?;
        let stats = fading_stats(sys.params.power, &sys.quad).map_err(|e| from_error(&e))?;
        let mc = McSettings { trials, seed };
        let est = pdfade::outage::estimate(method, &sys.params, rc, &stats, &mc, 0).map_err(|e| from_error(&e))?;
        // SAFETY: non-null and writable per the contract.
        unsafe { *out_p_e = est.p_e };
        Ok(())
    })
}

/// `log10 q` for `n` packets of which `m_hat` must survive, each lost with
/// probability `p_e`: exact binomial when `exact`, otherwise the Gaussian form.
///
/// # Safety
/// `out_log10_q` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdf_message_error_log10(
    n: u64,
    m_hat: u64,
    p_e: f64,
    exact: bool,
    out_log10_q: *mut f64,
) -> PdfStatus {
    guard(|| {
        if out_log10_q.is_null() {
            return Err(fail(PdfStatus::NullPointer, "out_log10_q is null"));
        }
        let r = if exact { q_binomial(n, m_hat, p_e) } else { q_gaussian(n, m_hat, p_e) };
        let r = r.map_err(|e| from_error(&e))?;
        // SAFETY: non-null and writable per the contract.
        unsafe { *out_log10_q = r.log10_q };
        Ok(())
    })
}

/// Exhaustive search for the split minimizing the message-error
/// probability. The Monte Carlo method additionally needs
/// `allow_mc_search` and at least 100000 `trials`.
///
/// # Safety
/// `system` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdf_optimize(
    system: *const PdfSystem,
    method: u32,
    trials: u64,
    seed: u64,
    allow_mc_search: bool,
    out: *mut *mut PdfOptimization,
) -> PdfStatus {
    guard(|| {
        if system.is_null() || out.is_null() {
            return Err(fail(PdfStatus::NullPointer, "system or out is null"));
        }
        // SAFETY: non-null live handle per the contract.
        let sys = unsafe { &*system };
        let opts = SearchOptions {
            quad: sys.quad,
            mc: McSettings { trials, seed },
            allow_mc_search,
        };
        let result = optimize(&sys.params, method_from(method)?, &opts).map_err(|e| from_error(&e))?;
        // SAFETY: non-null and writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(PdfOptimization { result })) };
        Ok(())
    })
}

/// Number of grid points in a result; 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdf_optimization_len(result: *const PdfOptimization) -> usize {
    if result.is_null() {
        return 0;
    }
    // SAFETY: live handle per the contract.
    unsafe { (*result).result.grid.len() }
}

/// The optimal split.
///
/// # Safety
/// `result` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdf_optimization_best(result: *const PdfOptimization, out: *mut PdfPoint) -> PdfStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return Err(fail(PdfStatus::NullPointer, "result or out is null"));
        }
        // SAFETY: live handle and writable output per the contract.
        unsafe { *out = point_from(&(*result).result.best) };
        Ok(())
    })
}

/// Grid point `index`, in increasing `rc`.
///
/// # Safety
/// `result` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pdf_optimization_point(
    result: *const PdfOptimization,
    index: usize,
    out: *mut PdfPoint,
) -> PdfStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return Err(fail(PdfStatus::NullPointer, "result or out is null"));
        }
        // SAFETY: live handle per the contract.
        let grid = unsafe { &(*result).result.grid };
        let g = grid.get(index).ok_or_else(|| {
            fail(PdfStatus::InvalidArgument, &format!("index {index} out of range ({} points)", grid.len()))
        })?;
        // SAFETY: writable output per the contract.
        unsafe { *out = point_from(g) };
        Ok(())
    })
}

/// Releases an optimization result. Null is ignored.
///
/// # Safety
/// `result` must be null or a handle from [`pdf_optimize`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdf_optimization_free(result: *mut PdfOptimization) {
    if !result.is_null() {
        // SAFETY: ownership returns to Rust exactly once per the contract.
        drop(unsafe { Box::from_raw(result) });
    }
}
