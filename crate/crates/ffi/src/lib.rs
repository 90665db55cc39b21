//! C ABI over `coordlab`.
//!
//! Problems and codes cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function. Every fallible call returns
//! a [`CoordStatus`]; on failure the message is available from
//! [`coordlab_last_error`] on the same thread until the next failing call.
//! Optional scalars use NaN for "absent".

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use coordlab::code::{
    apply_code, block_repeat, build_codebook_code, expected_tv_exact, expected_tv_monte_carlo, CoordinationCode,
};
use coordlab::prob::{compose, CondPmf, JointPmf, Pmf, Symbol};
use coordlab::region::{delta_star, solve_two_node, SolverConfig};
use coordlab::CoordError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Guard = 3,
    Io = 4,
    Panic = 5,
}

/// Source pmf together with a target conditional.
pub struct CoordProblem {
    p0: Pmf,
    target: CondPmf,
    joint: JointPmf,
}

pub struct CoordCode {
    code: CoordinationCode,
}

/// One two-node frontier point.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CoordRegionPoint {
    pub delta: f64,
    pub rate: f64,
    /// Primal value minus the certified lower bound, in bits.
    pub certificate: f64,
    pub converged: bool,
    pub iterations: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CoordSimSummary {
    pub samples: u64,
    pub mean_tv: f64,
    pub standard_error: f64,
    pub median_tv: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &CoordError) -> CoordStatus {
    match e {
        CoordError::GuardExceeded { .. } | CoordError::TableCap { .. } | CoordError::IndexOverflow(_) => {
            CoordStatus::Guard
        }
        CoordError::Io(_) | CoordError::Csv(_) => CoordStatus::Io,
        _ => CoordStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Coord(CoordError),
}

impl From<CoordError> for Failure {
    fn from(e: CoordError) -> Self {
        Failure::Coord(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoordStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoordStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            CoordStatus::NullPointer
        }
        Ok(Err(Failure::Coord(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CoordStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn floats<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn optional(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

fn invalid(msg: &str) -> Failure {
    Failure::Coord(CoordError::InvalidArgument(msg.into()))
}

/// Message of the last failure on this thread, or null. The string stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coordlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn coordlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a problem from `source` (`x_size` entries) and a row-major
/// `target` of `x_size` rows with `y_size * z_size` entries each, `z`
/// fastest. Pass `z_size = 0` for a two-node problem.
///
/// # Safety
/// `source` and `target` must point to the stated number of doubles and
/// `out_problem` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_problem_new(
    source: *const f64,
    x_size: usize,
    target: *const f64,
    y_size: usize,
    z_size: usize,
    out_problem: *mut *mut CoordProblem,
) -> CoordStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        let shape = if z_size == 0 { vec![y_size] } else { vec![y_size, z_size] };
        let width = y_size.checked_mul(z_size.max(1)).ok_or_else(|| invalid("alphabet sizes overflow"))?;
        let len = width.checked_mul(x_size).ok_or_else(|| invalid("alphabet sizes overflow"))?;
        let p0 = Pmf::new(floats(source, x_size, "source")?.to_vec())?;
        let target = CondPmf::new(x_size, shape, floats(target, len, "target")?.to_vec())?;
        let joint = compose(&p0, &target)?;
        *slot = Box::into_raw(Box::new(CoordProblem { p0, target, joint }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`coordlab_problem_new`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn coordlab_problem_free(problem: *mut CoordProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle and `out_delta` writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_delta_star(problem: *const CoordProblem, out_delta: *mut f64) -> CoordStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        *out(out_delta, "out_delta")? = delta_star(&p.p0, &p.target)?;
        Ok(())
    })
}

/// Minimum rate of a two-node problem at fidelity `delta`, with default
/// tolerances except the duality gap (`gap_tol`, or the default when NaN).
/// When `argmin` is non-null it receives the minimizing conditional,
/// row-major, and must hold `argmin_len` doubles, equal to the target's
/// size.
///
/// # Safety
/// `problem` must be a live handle, `out_point` writable and `argmin`
/// either null or valid for `argmin_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coordlab_solve_two_node(
    problem: *const CoordProblem,
    delta: f64,
    gap_tol: f64,
    out_point: *mut CoordRegionPoint,
    argmin: *mut f64,
    argmin_len: usize,
) -> CoordStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let slot = out(out_point, "out_point")?;
        let mut config = SolverConfig::default();
        if let Some(tol) = optional(gap_tol) {
            config.duality_gap_tol = tol;
        }
        let point = solve_two_node(&p.p0, &p.target, delta, &config)?;
        if !argmin.is_null() {
            let rows = point.argmin.rows();
            if argmin_len != rows.len() {
                return Err(Failure::Coord(CoordError::LengthMismatch { expected: rows.len(), found: argmin_len }));
            }
            slice::from_raw_parts_mut(argmin, argmin_len).copy_from_slice(rows);
        }
        *slot = CoordRegionPoint {
            delta,
            rate: point.r1,
            certificate: point.certificate,
            converged: point.converged,
            iterations: point.iterations as u64,
        };
        Ok(())
    })
}

/// Random-codebook code for the problem's target at blocklength `n`.
/// `r2` is NaN for a two-node problem.
///
/// # Safety
/// `problem` must be a live handle and `out_code` writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_build(
    problem: *const CoordProblem,
    n: usize,
    r1: f64,
    r2: f64,
    seed: u64,
    out_code: *mut *mut CoordCode,
) -> CoordStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let slot = out(out_code, "out_code")?;
        let code = build_codebook_code(&p.p0, &p.target, n, r1, optional(r2), seed)?;
        *slot = Box::into_raw(Box::new(CoordCode { code }));
        Ok(())
    })
}

/// Code running `k` independent copies of `code` back to back.
///
/// # Safety
/// `code` must be a live handle and `out_code` writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_block_repeat(
    code: *const CoordCode,
    k: usize,
    out_code: *mut *mut CoordCode,
) -> CoordStatus {
    guard(|| {
        let c = deref(code, "code")?;
        let slot = out(out_code, "out_code")?;
        *slot = Box::into_raw(Box::new(CoordCode { code: block_repeat(&c.code, k)? }));
        Ok(())
    })
}

/// # Safety
/// `code` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_free(code: *mut CoordCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Total blocklength and per-block message counts; `out_m2` receives 0 for a
/// two-node code.
///
/// # Safety
/// `code` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_info(
    code: *const CoordCode,
    out_blocklength: *mut usize,
    out_m1: *mut usize,
    out_m2: *mut usize,
) -> CoordStatus {
    guard(|| {
        let c = &deref(code, "code")?.code;
        let (m1, m2) = c.message_counts();
        *out(out_blocklength, "out_blocklength")? = c.blocklength();
        *out(out_m1, "out_m1")? = m1;
        *out(out_m2, "out_m2")? = m2.unwrap_or(0);
        Ok(())
    })
}

/// Runs the code on one source sequence of exactly its blocklength. `z`
/// may be null for a two-node code.
///
/// # Safety
/// `x`, `y` and non-null `z` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_apply(
    code: *const CoordCode,
    x: *const u8,
    len: usize,
    y: *mut u8,
    z: *mut u8,
) -> CoordStatus {
    guard(|| {
        let c = &deref(code, "code")?.code;
        if x.is_null() || y.is_null() {
            return Err(Failure::Null(if x.is_null() { "x" } else { "y" }));
        }
        let xs: &[Symbol] = slice::from_raw_parts(x, len);
        let actions = apply_code(c, xs)?;
        slice::from_raw_parts_mut(y, len).copy_from_slice(&actions.y);
        if let (Some(zs), false) = (actions.z, z.is_null()) {
            slice::from_raw_parts_mut(z, len).copy_from_slice(&zs);
        }
        Ok(())
    })
}

/// Exact expected TV distance between the code's joint type and the
/// problem's target, by enumeration of source sequences.
///
/// # Safety
/// Both handles must be live and `out_tv` writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_expected_tv(
    code: *const CoordCode,
    problem: *const CoordProblem,
    out_tv: *mut f64,
) -> CoordStatus {
    guard(|| {
        let c = deref(code, "code")?;
        let p = deref(problem, "problem")?;
        *out(out_tv, "out_tv")? = expected_tv_exact(&c.code, &p.p0, &p.joint)?;
        Ok(())
    })
}

/// Monte-Carlo estimate of the expected TV distance; deterministic in
/// `seed`.
///
/// # Safety
/// Both handles must be live and `out_summary` writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_simulate(
    code: *const CoordCode,
    problem: *const CoordProblem,
    samples: usize,
    seed: u64,
    out_summary: *mut CoordSimSummary,
) -> CoordStatus {
    guard(|| {
        let c = deref(code, "code")?;
        let p = deref(problem, "problem")?;
        let slot = out(out_summary, "out_summary")?;
        let sim = expected_tv_monte_carlo(&c.code, &p.p0, &p.joint, samples, seed)?;
        *slot = CoordSimSummary {
            samples: sim.sample_count as u64,
            mean_tv: sim.mean_tv,
            standard_error: sim.standard_error,
            median_tv: sim.median(),
        };
        Ok(())
    })
}

/// The code as a JSON document, written into `buf` with a trailing NUL.
/// `out_len` receives the length needed including the NUL; call with
/// `buf_len = 0` to size the buffer.
///
/// # Safety
/// `code` must be a live handle, `out_len` writable and `buf` valid for
/// `buf_len` bytes when non-null.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_to_json(
    code: *const CoordCode,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> CoordStatus {
    guard(|| {
        let c = deref(code, "code")?;
        let text = serde_json::to_string(&c.code).map_err(CoordError::from)?;
        *out(out_len, "out_len")? = text.len() + 1;
        if buf_len == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if buf_len < text.len() + 1 {
            return Err(invalid("buffer too small"));
        }
        let dst = slice::from_raw_parts_mut(buf.cast::<u8>(), buf_len);
        dst[..text.len()].copy_from_slice(text.as_bytes());
        dst[text.len()] = 0;
        Ok(())
    })
}

/// Reads a code written by [`coordlab_code_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_code` writable.
#[no_mangle]
pub unsafe extern "C" fn coordlab_code_from_json(json: *const c_char, out_code: *mut *mut CoordCode) -> CoordStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let slot = out(out_code, "out_code")?;
        let text = CStr::from_ptr(json).to_str().map_err(|e| invalid(&e.to_string()))?;
        let code: CoordinationCode = serde_json::from_str(text).map_err(CoordError::from)?;
        *slot = Box::into_raw(Box::new(CoordCode { code }));
        Ok(())
    })
}
