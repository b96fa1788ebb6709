//! C ABI over `levyldp`.
//!
//! Paths are opaque `LevyPath` handles released with `levy_path_free`. Every fallible call returns
//! a `LevyStatus`; on failure `levy_last_error` describes the error on the calling thread.
//! Strings returned by the library are released with `levy_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use levyldp::cadlag::{j1_distance, uniform_distance, CadlagPath, JumpEvent, DEFAULT_DELTA};
use levyldp::experiments::{ConfigMap, ExperimentConfig};
use levyldp::levy::ScaledPathSampler;
use levyldp::rate::{rate_i, rate_i_tilde};
use levyldp::solution::{apply_f, apply_f_inverse, DriftSpec, SolverConfig};
use levyldp::Error;

/// Opaque càdlàg path.
pub struct LevyPath(CadlagPath);

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Convergence = 4,
    Config = 5,
    Json = 6,
    Io = 7,
    Other = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LevyStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) | Error::TruncationTooSmall { .. } => LevyStatus::Domain,
            Error::Convergence { .. } | Error::IntegratorInconsistency { .. } | Error::SolverFailures { .. } => {
                LevyStatus::Convergence
            }
            Error::Config(_) | Error::MissingKey(_) => LevyStatus::Config,
            Error::Json(_) => LevyStatus::Json,
            Error::Io(_) => LevyStatus::Io,
            Error::ArgminEmpty { .. } => LevyStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LevyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LevyStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LevyStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LevyStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn path_ref<'a>(p: *const LevyPath, what: &str) -> Result<&'a CadlagPath, Failure> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null(what))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(LevyStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit_path(out: *mut *mut LevyPath, p: CadlagPath) -> Result<(), Failure> {
    write(out, Box::into_raw(Box::new(LevyPath(p))), "out")
}

/// A NaN parameter means "no parameter".
unsafe fn drift(name: *const c_char, param: f64) -> Result<DriftSpec, Failure> {
    let name = text(name, "drift")?;
    Ok(DriftSpec::from_registry(name, (!param.is_nan()).then_some(param))?)
}

/// Message for the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn levy_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn levy_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a path handle.
///
/// # Safety
/// `p` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn levy_path_free(p: *mut LevyPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Parses a path from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_path_from_json(json: *const c_char, out: *mut *mut LevyPath) -> LevyStatus {
    guard(|| emit_path(out, CadlagPath::from_json(text(json, "json")?)?))
}

/// Serialises a path to JSON. Release the result with `levy_string_free`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_path_to_json(p: *const LevyPath, out: *mut *mut c_char) -> LevyStatus {
    guard(|| {
        let json = path_ref(p, "path")?.to_json()?;
        let c = CString::new(json).map_err(|e| Failure(LevyStatus::Other, e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// Pure step path vanishing at 0 with `n` jumps on the default grid.
///
/// # Safety
/// `times` and `sizes` must hold `n` values (or be null when `n` is 0) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_path_step(
    times: *const f64,
    sizes: *const f64,
    n: usize,
    out: *mut *mut LevyPath,
) -> LevyStatus {
    guard(|| {
        if n > 0 && (times.is_null() || sizes.is_null()) {
            return Err(null("times or sizes"));
        }
        let jumps = (0..n).map(|i| JumpEvent::new(*times.add(i), *sizes.add(i))).collect();
        emit_path(out, CadlagPath::step(0.0, jumps, DEFAULT_DELTA)?)
    })
}

/// `x(t)`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_path_eval(p: *const LevyPath, t: f64, out: *mut f64) -> LevyStatus {
    guard(|| write(out, path_ref(p, "path")?.eval(t)?, "out"))
}

/// Number of registered jumps, or 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn levy_path_jump_count(p: *const LevyPath) -> usize {
    p.as_ref().map_or(0, |p| p.0.jumps().len())
}

/// Copies jump `i` into `time` and `size`.
///
/// # Safety
/// `p` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn levy_path_jump(p: *const LevyPath, i: usize, time: *mut f64, size: *mut f64) -> LevyStatus {
    guard(|| {
        let j = path_ref(p, "path")?
            .jumps()
            .get(i)
            .ok_or_else(|| Failure(LevyStatus::Domain, format!("jump index {i} out of range")))?;
        write(time, j.time, "time")?;
        write(size, j.size, "size")
    })
}

/// Uniform distance `‖x − y‖∞`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_uniform_distance(a: *const LevyPath, b: *const LevyPath, out: *mut f64) -> LevyStatus {
    guard(|| write(out, uniform_distance(path_ref(a, "a")?, path_ref(b, "b")?), "out"))
}

/// J1 distance bracket. `lower == upper` when the value is exact.
///
/// # Safety
/// Both handles must be live and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn levy_j1_distance(
    a: *const LevyPath,
    b: *const LevyPath,
    tol: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> LevyStatus {
    guard(|| {
        let br = j1_distance(path_ref(a, "a")?, path_ref(b, "b")?, tol)?;
        write(lower, br.lower, "lower")?;
        write(upper, br.upper, "upper")
    })
}

/// Solution map `F` for a registry drift (or its inverse when `inverse` is non-zero).
///
/// # Safety
/// `drift_name` must be a NUL-terminated string, `g` a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_apply_f(
    drift_name: *const c_char,
    drift_param: f64,
    g: *const LevyPath,
    inverse: c_int,
    out: *mut *mut LevyPath,
) -> LevyStatus {
    guard(|| {
        let b = drift(drift_name, drift_param)?;
        let g = path_ref(g, "g")?;
        let solver = SolverConfig::default();
        let f = if inverse != 0 { apply_f_inverse(&b, g, &solver)? } else { apply_f(&b, g, &solver)? };
        emit_path(out, f)
    })
}

/// Rate `I(ξ)` with the default step tolerance.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_rate_i(p: *const LevyPath, alpha: f64, beta: f64, out: *mut f64) -> LevyStatus {
    guard(|| {
        let v = rate_i(path_ref(p, "path")?, alpha, beta, levyldp::rate::DEFAULT_TOL_STEP, 0.0)?;
        write(out, v, "out")
    })
}

/// Rate `Ĩ(ξ) = I(F⁻¹(ξ))` for a registry drift.
///
/// # Safety
/// `drift_name` must be a NUL-terminated string, `p` a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_rate_i_tilde(
    p: *const LevyPath,
    drift_name: *const c_char,
    drift_param: f64,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> LevyStatus {
    guard(|| {
        let b = drift(drift_name, drift_param)?;
        let v = rate_i_tilde(
            path_ref(p, "path")?,
            &b,
            alpha,
            beta,
            levyldp::rate::DEFAULT_TOL_STEP,
            &SolverConfig::default(),
        )?;
        write(out, v, "out")
    })
}

/// Sample `index` of the scaled noise `εL^ε` described by an experiment config text.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn levy_sample_path(
    config_text: *const c_char,
    eps: f64,
    index: u64,
    out: *mut *mut LevyPath,
) -> LevyStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_map(&ConfigMap::parse(text(config_text, "config")?)?)?;
        let sampler = ScaledPathSampler::new(&cfg.model, &cfg.sim_for(eps))?;
        emit_path(out, sampler.sample(index))
    })
}
