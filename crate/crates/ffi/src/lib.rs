//! C interface to the curvature-operator laboratory.
//!
//! The surface is deliberately small: an opaque experiment handle built
//! from a preset name or configuration JSON, three report functions that
//! return owned JSON strings, and integer status codes.  Every entry point
//! catches panics, rejects null pointers, and records a human-readable
//! message retrievable with [`anco_last_error_message`].
//!
//! Ownership rules: strings returned through `char **` out-parameters are
//! owned by the caller and must be released with [`anco_string_free`];
//! handles must be released with [`anco_experiment_free`].  The pointer
//! returned by [`anco_last_error_message`] borrows thread-local storage and
//! is valid until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ancolab::operator::GAMMA_CURVATURE_SIGN;
use ancolab::oracle::VERIFY_T_GRID;
use ancolab::report::{self, ExperimentConfig};
use ancolab::Error;

/// Result of every fallible call.  `Ok` is zero; the error values mirror
/// the command line exit codes where one exists.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AncoStatus {
    Ok = 0,
    /// A verification pass completed and failed, or a numerical guard
    /// tripped.
    VerificationFailed = 2,
    /// Malformed input: unknown preset, bad configuration JSON, invalid
    /// parameters.
    InvalidInput = 3,
    /// A required pointer argument was null.
    NullArgument = 4,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 5,
    /// An internal invariant broke; the library caught a panic.
    Panicked = 6,
}

/// Opaque experiment description; create with [`anco_experiment_preset`] or
/// [`anco_experiment_from_json`], release with [`anco_experiment_free`].
pub struct AncoExperiment {
    config: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

fn status_of(err: &Error) -> AncoStatus {
    set_error(&err.to_string());
    match err.exit_code() {
        2 => AncoStatus::VerificationFailed,
        _ => AncoStatus::InvalidInput,
    }
}

/// Runs `f` with a panic guard; panics become [`AncoStatus::Panicked`].
fn guarded<F: FnOnce() -> AncoStatus>(f: F) -> AncoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            AncoStatus::Panicked
        }
    }
}

/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, AncoStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(AncoStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        AncoStatus::InvalidUtf8
    })
}

fn give_string(out: *mut *mut c_char, contents: String) -> AncoStatus {
    let sanitized = contents.replace('\0', " ");
    match CString::new(sanitized) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            AncoStatus::Ok
        }
        Err(_) => {
            set_error("report contained an interior NUL byte");
            AncoStatus::Panicked
        }
    }
}

fn give_experiment(out: *mut *mut AncoExperiment, config: ExperimentConfig) -> AncoStatus {
    let handle = Box::new(AncoExperiment { config });
    unsafe { *out = Box::into_raw(handle) };
    AncoStatus::Ok
}

/// Builds an experiment from a built-in preset name
/// (`flat`, `su2-demo`, `hopf`, or `pkl:<k>:<l>`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer; on
/// success `*out` owns the handle.
#[no_mangle]
pub unsafe extern "C" fn anco_experiment_preset(
    name: *const c_char,
    out: *mut *mut AncoExperiment,
) -> AncoStatus {
    guarded(|| {
        clear_error();
        if out.is_null() {
            set_error("null output pointer");
            return AncoStatus::NullArgument;
        }
        let name = match read_str(name) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match ExperimentConfig::for_preset(name) {
            Ok(config) => give_experiment(out, config),
            Err(e) => status_of(&e),
        }
    })
}

/// Builds an experiment from configuration JSON (the same schema the
/// command line accepts with `--config`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer; on
/// success `*out` owns the handle.
#[no_mangle]
pub unsafe extern "C" fn anco_experiment_from_json(
    json: *const c_char,
    out: *mut *mut AncoExperiment,
) -> AncoStatus {
    guarded(|| {
        clear_error();
        if out.is_null() {
            set_error("null output pointer");
            return AncoStatus::NullArgument;
        }
        let json = match read_str(json) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match serde_json::from_str::<ExperimentConfig>(json) {
            Ok(config) => give_experiment(out, config),
            Err(e) => {
                set_error(&format!("bad configuration: {e}"));
                AncoStatus::InvalidInput
            }
        }
    })
}

/// Releases an experiment handle.  Null is ignored.
///
/// # Safety
/// `exp` must be null or a handle produced by this library that has not
/// been freed before.
#[no_mangle]
pub unsafe extern "C" fn anco_experiment_free(exp: *mut AncoExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

unsafe fn borrow_experiment<'a>(
    exp: *const AncoExperiment,
) -> Result<&'a AncoExperiment, AncoStatus> {
    if exp.is_null() {
        set_error("null experiment handle");
        return Err(AncoStatus::NullArgument);
    }
    Ok(&*exp)
}

/// Sweeps the truncated curvature operator over the experiment's shrinking
/// grid and writes the full run report as JSON to `*out_json`.
///
/// # Safety
/// `exp` must be a live handle and `out_json` a valid pointer; on success
/// the caller owns `*out_json` and must pass it to [`anco_string_free`].
#[no_mangle]
pub unsafe extern "C" fn anco_analyze(
    exp: *const AncoExperiment,
    out_json: *mut *mut c_char,
) -> AncoStatus {
    guarded(|| {
        clear_error();
        if out_json.is_null() {
            set_error("null output pointer");
            return AncoStatus::NullArgument;
        }
        let exp = match borrow_experiment(exp) {
            Ok(e) => e,
            Err(status) => return status,
        };
        let run = match report::build_run(&exp.config) {
            Ok(r) => r,
            Err(e) => return status_of(&e),
        };
        match report::to_json(&run) {
            Ok(json) => give_string(out_json, json),
            Err(e) => status_of(&e),
        }
    })
}

/// Checks the block engine against the finite-difference oracle at `points`
/// seeded base points and writes the verification report as JSON to
/// `*out_json`.  Returns `Ok` when the report passes and
/// `VerificationFailed` when it completes with a failing check (the report
/// is still written in that case).
///
/// # Safety
/// `exp` must be a live handle and `out_json` a valid pointer; on success
/// or verification failure the caller owns `*out_json` and must pass it to
/// [`anco_string_free`].
#[no_mangle]
pub unsafe extern "C" fn anco_verify(
    exp: *const AncoExperiment,
    points: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> AncoStatus {
    guarded(|| {
        clear_error();
        if out_json.is_null() {
            set_error("null output pointer");
            return AncoStatus::NullArgument;
        }
        let exp = match borrow_experiment(exp) {
            Ok(e) => e,
            Err(status) => return status,
        };
        let verification = match report::build_verification(
            &exp.config,
            points,
            seed,
            &VERIFY_T_GRID,
            GAMMA_CURVATURE_SIGN,
        ) {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        };
        let json = match report::to_json(&verification) {
            Ok(j) => j,
            Err(e) => return status_of(&e),
        };
        let status = give_string(out_json, json);
        if status != AncoStatus::Ok {
            return status;
        }
        if verification.pass {
            AncoStatus::Ok
        } else {
            set_error("oracle and engine disagree");
            AncoStatus::VerificationFailed
        }
    })
}

/// Computes integer cohomology, fundamental group, and duality diagnostics
/// for the circle bundle the experiment describes, writing the report as
/// JSON to `*out_json`.
///
/// # Safety
/// `exp` must be a live handle and `out_json` a valid pointer; on success
/// the caller owns `*out_json` and must pass it to [`anco_string_free`].
#[no_mangle]
pub unsafe extern "C" fn anco_topology(
    exp: *const AncoExperiment,
    out_json: *mut *mut c_char,
) -> AncoStatus {
    guarded(|| {
        clear_error();
        if out_json.is_null() {
            set_error("null output pointer");
            return AncoStatus::NullArgument;
        }
        let exp = match borrow_experiment(exp) {
            Ok(e) => e,
            Err(status) => return status,
        };
        let topo = match report::build_topology(&exp.config) {
            Ok(t) => t,
            Err(e) => return status_of(&e),
        };
        let json = match report::to_json(&topo) {
            Ok(j) => j,
            Err(e) => return status_of(&e),
        };
        let status = give_string(out_json, json);
        if status != AncoStatus::Ok {
            return status;
        }
        if topo.pass() {
            AncoStatus::Ok
        } else {
            set_error("cohomology failed its duality or Betti-bound diagnostics");
            AncoStatus::VerificationFailed
        }
    })
}

/// Releases a string returned by this library.  Null is ignored.
///
/// # Safety
/// `s` must be null or a string produced by this library that has not been
/// freed before.
#[no_mangle]
pub unsafe extern "C" fn anco_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message describing the most recent failure on this thread, or null when
/// the last call succeeded.  The pointer stays valid until the next failing
/// call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn anco_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Library version as a static NUL-terminated string; do not free it.
#[no_mangle]
pub extern "C" fn anco_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
