//! C interface to `chorc`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every function returns a
//! [`ChorcStatus`]; on failure [`chorc_last_error`] describes the problem.
//! Strings returned through `char **` out-parameters are owned by the
//! caller and released with [`chorc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chorc::ast::{Choreography, Network, State};
use chorc::conc::run_conc;
use chorc::epp::project;
use chorc::net::{run_net, NetConfig};
use chorc::seq::{run_seq, SeqConfig};
use chorc::syntax::{parse_chor, parse_network, parse_state, print_chor, print_network, print_state};
use chorc::wf::check_chor;
use thiserror::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChorcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    /// The choreography violates well-formedness.
    IllFormed = 4,
    ProjectionError = 5,
    InvalidArgument = 6,
    /// A bug inside the library; the call had no effect.
    Panic = 7,
}

/// Selects the choreography semantics for [`chorc_run`].
pub const CHORC_SEM_SEQ: u32 = 0;
pub const CHORC_SEM_CONC: u32 = 1;

pub struct ChorcChoreography(Choreography);

pub struct ChorcNetwork(Network);

pub struct ChorcState(State);

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer passed as `{0}`")]
    Null(&'static str),
    #[error("`{0}` is not valid UTF-8")]
    Utf8(&'static str),
    #[error("parse error at {0}")]
    Parse(#[from] chorc::syntax::ParseError),
    #[error("{0}")]
    IllFormed(String),
    #[error("{0}")]
    Projection(#[from] chorc::epp::ProjectionError),
    #[error("{0}")]
    Argument(String),
}

impl FfiError {
    fn status(&self) -> ChorcStatus {
        match self {
            FfiError::Null(_) => ChorcStatus::NullPointer,
            FfiError::Utf8(_) => ChorcStatus::InvalidUtf8,
            FfiError::Parse(_) => ChorcStatus::ParseError,
            FfiError::IllFormed(_) => ChorcStatus::IllFormed,
            FfiError::Projection(_) => ChorcStatus::ProjectionError,
            FfiError::Argument(_) => ChorcStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', "\\0")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording its error and containing panics.
fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> ChorcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChorcStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal error: {msg}"));
            ChorcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T, name: &'static str) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null(name));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String, name: &'static str) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null(name));
    }
    *out = CString::new(s).expect("printed text has no NUL").into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn chorc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chorc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a choreography in surface syntax.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_choreography_parse(
    src: *const c_char,
    out: *mut *mut ChorcChoreography,
) -> ChorcStatus {
    guard(|| {
        let c = parse_chor(text(src, "src")?)?;
        put(out, ChorcChoreography(c), "out")
    })
}

/// # Safety
/// `c` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chorc_choreography_free(c: *mut ChorcChoreography) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Canonical surface syntax of `c`.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_choreography_print(
    c: *const ChorcChoreography,
    out: *mut *mut c_char,
) -> ChorcStatus {
    guard(|| put_string(out, print_chor(&handle(c, "c")?.0), "out"))
}

/// Well-formedness diagnostics of `c` as a JSON array (empty when clean).
/// Returns `IllFormed` when the array is nonempty; `out` is set either way.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_choreography_check(
    c: *const ChorcChoreography,
    out: *mut *mut c_char,
) -> ChorcStatus {
    guard(|| {
        let vs = check_chor(&handle(c, "c")?.0);
        put_string(out, serde_json::to_string(&vs).expect("diagnostics serialize"), "out")?;
        match vs.first() {
            None => Ok(()),
            Some(v) => Err(FfiError::IllFormed(format!("{} violations, first: {v}", vs.len()))),
        }
    })
}

/// Endpoint projection of a well-formed choreography.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_choreography_project(
    c: *const ChorcChoreography,
    out: *mut *mut ChorcNetwork,
) -> ChorcStatus {
    guard(|| {
        let c = &handle(c, "c")?.0;
        well_formed(c)?;
        put(out, ChorcNetwork(project(c)?), "out")
    })
}

fn well_formed(c: &Choreography) -> Result<(), FfiError> {
    match check_chor(c).first() {
        None => Ok(()),
        Some(v) => Err(FfiError::IllFormed(v.to_string())),
    }
}

/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_network_parse(src: *const c_char, out: *mut *mut ChorcNetwork) -> ChorcStatus {
    guard(|| {
        let n = parse_network(text(src, "src")?)?;
        put(out, ChorcNetwork(n), "out")
    })
}

/// # Safety
/// `n` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chorc_network_free(n: *mut ChorcNetwork) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// # Safety
/// `n` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_network_print(n: *const ChorcNetwork, out: *mut *mut c_char) -> ChorcStatus {
    guard(|| put_string(out, print_network(&handle(n, "n")?.0), "out"))
}

/// Parses a memory state (`p.x = 1` per line).
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_state_parse(src: *const c_char, out: *mut *mut ChorcState) -> ChorcStatus {
    guard(|| {
        let s = parse_state(text(src, "src")?)?;
        put(out, ChorcState(s), "out")
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chorc_state_free(s: *mut ChorcState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_state_print(s: *const ChorcState, out: *mut *mut c_char) -> ChorcStatus {
    guard(|| put_string(out, print_state(&handle(s, "s")?.0), "out"))
}

unsafe fn initial(state: *const ChorcState) -> State {
    state.as_ref().map_or_else(State::new, |s| s.0.clone())
}

unsafe fn finish(
    trace: chorc::trace::Trace,
    end: State,
    out_trace: *mut *mut c_char,
    out_state: *mut *mut ChorcState,
) -> Result<(), FfiError> {
    put_string(out_trace, trace.to_json(), "out_trace")?;
    if !out_state.is_null() {
        put(out_state, ChorcState(end), "out_state")?;
    }
    Ok(())
}

/// Executes a choreography. `sem` is [`CHORC_SEM_SEQ`] or
/// [`CHORC_SEM_CONC`]; `seed` only affects the concurrent scheduler. The
/// trace is written to `out_trace` as JSON; the final state to `out_state`
/// unless it is NULL. A NULL `state` starts from empty memory.
///
/// # Safety
/// `c` must be a live handle, `state` NULL or a live handle, `out_trace`
/// writable, `out_state` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn chorc_run(
    c: *const ChorcChoreography,
    state: *const ChorcState,
    sem: u32,
    seed: u64,
    fuel: usize,
    out_trace: *mut *mut c_char,
    out_state: *mut *mut ChorcState,
) -> ChorcStatus {
    guard(|| {
        let c = &handle(c, "c")?.0;
        well_formed(c)?;
        let cfg = SeqConfig::new(c.clone(), initial(state));
        let (trace, end) = match sem {
            CHORC_SEM_SEQ => run_seq(&cfg, fuel),
            CHORC_SEM_CONC => run_conc(&cfg, seed, fuel),
            other => return Err(FfiError::Argument(format!("unknown semantics {other}"))),
        };
        finish(trace, end.state, out_trace, out_state)
    })
}

/// Executes a network with the seeded scheduler; outputs as for
/// [`chorc_run`].
///
/// # Safety
/// As for [`chorc_run`], with `n` a live network handle.
#[no_mangle]
pub unsafe extern "C" fn chorc_simulate(
    n: *const ChorcNetwork,
    state: *const ChorcState,
    seed: u64,
    fuel: usize,
    out_trace: *mut *mut c_char,
    out_state: *mut *mut ChorcState,
) -> ChorcStatus {
    guard(|| {
        let n = &handle(n, "n")?.0;
        let (trace, end) = run_net(&NetConfig::new(n.clone(), initial(state)), seed, fuel);
        finish(trace, end.state, out_trace, out_state)
    })
}
