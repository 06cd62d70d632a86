//! C ABI over envkit.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns an
//! [`EnvkitStatus`]; on failure a message is kept per thread and can be read
//! with [`envkit_last_error`]. Strings returned through out-pointers are
//! heap-allocated and must be released with [`envkit_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use envkit::cli::{self, CliError, RandomSpec, Scenario};
use envkit::hilbert::BipartiteState;
use envkit::json::decode_matrix;
use envkit::random::rng_from_seed;
use envkit::schmidt::{canonical_schmidt, subsystem_picture, SubsystemPicture};
use envkit::twins::{is_twin_pair, sample_twin, twin_of, TwinPair};
use envkit::Tolerances;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvkitStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not UTF-8.
    InvalidUtf8 = 2,
    /// Malformed JSON or a document of the wrong shape.
    InvalidJson = 3,
    /// Bad dimensions, non-normalized input, infeasible parameters.
    InvalidInput = 4,
    /// The computation ran but its result could not be certified.
    CertificationFailed = 5,
    /// A caller buffer was too small; the required length is still reported.
    BufferTooSmall = 6,
    /// Internal panic caught at the boundary.
    Panic = 7,
}

/// Bipartite pure state.
pub struct EnvkitState(BipartiteState);

/// Schmidt picture of a state: reduced operators, correlation operator and
/// spectral blocks.
pub struct EnvkitPicture(SubsystemPicture);

/// Pair of local unitaries `(U1, U2)`.
pub struct EnvkitTwin(TwinPair);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(EnvkitStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match &e {
            CliError::Json(_) => EnvkitStatus::InvalidJson,
            _ if e.exit_code() == cli::EXIT_CERTIFICATION => EnvkitStatus::CertificationFailed,
            _ => EnvkitStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<envkit::Error> for Failure {
    fn from(e: envkit::Error) -> Self {
        CliError::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        CliError::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Outcome) -> EnvkitStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EnvkitStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {message}"));
            EnvkitStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(EnvkitStatus::NullPointer, "null pointer argument".into())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(EnvkitStatus::InvalidUtf8, e.to_string()))
}

unsafe fn tolerances(overrides: *const c_char) -> Result<Tolerances, Failure> {
    let mut t = Tolerances::default();
    if !overrides.is_null() {
        t.apply_assignments(text(overrides)?)?;
    }
    Ok(t)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_json<T: serde::Serialize>(out: *mut *mut c_char, value: &T) -> Outcome {
    if out.is_null() {
        return Err(null());
    }
    let json = serde_json::to_string(value)?;
    *out = CString::new(json).expect("JSON has no interior NUL").into_raw();
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next envkit call on the same thread.
#[no_mangle]
pub extern "C" fn envkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn envkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn envkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a state from its JSON form
/// (`{"d1":..,"d2":..,"amplitudes":[[re,im],..]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_state_from_json(json: *const c_char, out: *mut *mut EnvkitState) -> EnvkitStatus {
    guard(|| {
        let psi: BipartiteState = serde_json::from_str(text(json)?)?;
        put(out, EnvkitState(psi))
    })
}

/// Draws a random state. `rank` of zero means full rank; `denominator` of
/// zero leaves the spectrum continuous, otherwise every Schmidt weight is a
/// multiple of `1/denominator`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_state_random(
    d1: usize,
    d2: usize,
    rank: usize,
    denominator: u64,
    seed: u64,
    out: *mut *mut EnvkitState,
) -> EnvkitStatus {
    guard(|| {
        let spec = RandomSpec {
            rank: (rank > 0).then_some(rank),
            denominator: (denominator > 0).then_some(denominator),
            ..RandomSpec::new(d1, d2)
        };
        put(out, EnvkitState(cli::random_state(&spec, seed)?))
    })
}

/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_state_to_json(state: *const EnvkitState, out: *mut *mut c_char) -> EnvkitStatus {
    guard(|| put_json(out, &borrow(state)?.0))
}

/// # Safety
/// `state` must be a live handle; `d1` and `d2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_state_dims(state: *const EnvkitState, d1: *mut usize, d2: *mut usize) -> EnvkitStatus {
    guard(|| {
        if d1.is_null() || d2.is_null() {
            return Err(null());
        }
        (*d1, *d2) = borrow(state)?.0.dims();
        Ok(())
    })
}

/// Canonical Schmidt coefficients in descending order. `len` always receives
/// the count; `buffer` is filled only when `capacity` covers it.
///
/// # Safety
/// `state` must be a live handle, `buffer` must hold `capacity` doubles
/// (it may be null when `capacity` is zero), and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_schmidt_coefficients(
    state: *const EnvkitState,
    tol: *const c_char,
    buffer: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> EnvkitStatus {
    guard(|| {
        if len.is_null() || (buffer.is_null() && capacity > 0) {
            return Err(null());
        }
        let s = canonical_schmidt(&borrow(state)?.0, &tolerances(tol)?)?;
        *len = s.coefficients.len();
        if s.coefficients.len() > capacity {
            return Err(Failure(EnvkitStatus::BufferTooSmall, format!("need room for {} values", s.coefficients.len())));
        }
        if !s.coefficients.is_empty() {
            ptr::copy_nonoverlapping(s.coefficients.as_ptr(), buffer, s.coefficients.len());
        }
        Ok(())
    })
}

/// # Safety
/// `state` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn envkit_state_free(state: *mut EnvkitState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Builds the subsystem picture of a state. `tol` is an optional
/// `name=value,...` list of tolerance overrides and may be null.
///
/// # Safety
/// `state` must be a live handle; `tol` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_picture_new(
    state: *const EnvkitState,
    tol: *const c_char,
    out: *mut *mut EnvkitPicture,
) -> EnvkitStatus {
    guard(|| {
        let picture = subsystem_picture(&borrow(state)?.0, &tolerances(tol)?)?;
        put(out, EnvkitPicture(picture))
    })
}

/// Coefficients, block structure and residuals of the picture as JSON.
///
/// # Safety
/// `picture` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_picture_to_json(picture: *const EnvkitPicture, out: *mut *mut c_char) -> EnvkitStatus {
    guard(|| put_json(out, &borrow(picture)?.0))
}

/// # Safety
/// `picture` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn envkit_picture_free(picture: *mut EnvkitPicture) {
    if !picture.is_null() {
        drop(Box::from_raw(picture));
    }
}

/// Draws a random twin pair of the picture's state.
///
/// # Safety
/// `picture` must be a live handle; `tol` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_twin_sample(
    picture: *const EnvkitPicture,
    seed: u64,
    tol: *const c_char,
    out: *mut *mut EnvkitTwin,
) -> EnvkitStatus {
    guard(|| {
        let mut rng = rng_from_seed(seed);
        let pair = sample_twin(&borrow(picture)?.0, &mut rng, &tolerances(tol)?)?;
        put(out, EnvkitTwin(pair))
    })
}

/// Completes a JSON-encoded `U1` (`[[[re,im],..],..]`, row-major) to a twin
/// pair. Fails with [`EnvkitStatus::CertificationFailed`] when `U1` does not
/// commute with the reduced density operator.
///
/// # Safety
/// `picture` must be a live handle; `u1_json` NUL-terminated; `tol` null or
/// NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_twin_of(
    picture: *const EnvkitPicture,
    u1_json: *const c_char,
    tol: *const c_char,
    out: *mut *mut EnvkitTwin,
) -> EnvkitStatus {
    guard(|| {
        let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text(u1_json)?)?;
        let u1 = decode_matrix(&rows).map_err(envkit::Error::ShapeMismatch)?;
        let pair = twin_of(&u1, &borrow(picture)?.0, &tolerances(tol)?)?;
        put(out, EnvkitTwin(pair))
    })
}

/// Parses a pair from `{"U1": .., "U2": ..}`.
///
/// # Safety
/// `json` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_twin_from_json(json: *const c_char, out: *mut *mut EnvkitTwin) -> EnvkitStatus {
    guard(|| {
        let pair: TwinPair = serde_json::from_str(text(json)?)?;
        put(out, EnvkitTwin(pair))
    })
}

/// # Safety
/// `twin` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_twin_to_json(twin: *const EnvkitTwin, out: *mut *mut c_char) -> EnvkitStatus {
    guard(|| put_json(out, &borrow(twin)?.0))
}

/// Checks the pair against a state. `is_twin` receives 1 or 0 and `residual`
/// the norm of `(U1 (x) 1)psi - (1 (x) U2)psi`; with `allow_phase` nonzero a
/// global phase between the two sides is fitted first.
///
/// # Safety
/// `twin` and `state` must be live handles; `tol` null or NUL-terminated;
/// `is_twin` and `residual` writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_twin_verify(
    twin: *const EnvkitTwin,
    state: *const EnvkitState,
    allow_phase: i32,
    tol: *const c_char,
    is_twin: *mut i32,
    residual: *mut f64,
) -> EnvkitStatus {
    guard(|| {
        if is_twin.is_null() || residual.is_null() {
            return Err(null());
        }
        let pair = &borrow(twin)?.0;
        let check = is_twin_pair(&pair.u1, &pair.u2, &borrow(state)?.0, allow_phase != 0, &tolerances(tol)?)?;
        *is_twin = check.is_twin as i32;
        *residual = check.residual;
        Ok(())
    })
}

/// # Safety
/// `twin` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn envkit_twin_free(twin: *mut EnvkitTwin) {
    if !twin.is_null() {
        drop(Box::from_raw(twin));
    }
}

/// Runs a JSON scenario and returns its report as JSON. `exit_code` receives
/// the code the command-line tool would exit with. A report whose checks
/// failed still returns [`EnvkitStatus::Ok`] with a nonzero exit code.
///
/// # Safety
/// `scenario_json` NUL-terminated; `tol` null or NUL-terminated; `report`
/// and `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn envkit_run_scenario(
    scenario_json: *const c_char,
    tol: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut i32,
) -> EnvkitStatus {
    guard(|| {
        if exit_code.is_null() {
            return Err(null());
        }
        let scenario: Scenario = serde_json::from_str(text(scenario_json)?)?;
        let result = cli::run(&scenario, &tolerances(tol)?);
        *exit_code = match &result {
            Ok(r) => r.exit_code(),
            Err(e) => e.exit_code(),
        };
        put_json(report, &result?)
    })
}
