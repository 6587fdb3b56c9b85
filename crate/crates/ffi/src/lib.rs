//! C interface to the `selforg` runner.
//!
//! A run is created from a JSON configuration and kept behind an opaque
//! handle. Every call returns a [`SelforgStatus`]; the message of the most
//! recent failure on the calling thread is available from
//! [`selforg_last_error`]. Strings returned by the library are owned by the
//! handle or, where noted, released with [`selforg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use selforg::runner::{parse_config, run_task, Dataset, RunOptions, RunStatus, TruncationFlag};
use selforg::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelforgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    ConvergenceFailure = 4,
    TruncationFail = 5,
    IoError = 6,
    NotFound = 7,
    Panic = 8,
}

/// Opaque result of one run.
pub struct SelforgRun {
    dataset: Dataset,
    files: Vec<(String, CString)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: SelforgStatus, msg: impl Into<String>) -> SelforgStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> SelforgStatus) -> SelforgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SelforgStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SelforgStatus> {
    if s.is_null() {
        return Err(fail(SelforgStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(SelforgStatus::InvalidUtf8, "argument is not UTF-8"))
}

fn status_of(e: &Error) -> SelforgStatus {
    match e {
        Error::Io(_) => SelforgStatus::IoError,
        _ => SelforgStatus::ConfigError,
    }
}

/// Parses `config_json`, runs its task and stores the dataset in `*out`.
///
/// A run whose solver gave up still yields a handle; its state is reported
/// by [`selforg_run_status`].
///
/// # Safety
/// `config_json` is a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn selforg_run_config(
    config_json: *const c_char,
    reproducible: c_int,
    out: *mut *mut SelforgRun,
) -> SelforgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SelforgStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match parse_config(text) {
            Ok(c) => c,
            Err(e) => return fail(SelforgStatus::ConfigError, e.to_string()),
        };
        let opts = RunOptions { reproducible: reproducible != 0, ..RunOptions::default() };
        let dataset = match run_task(&cfg, &opts) {
            Ok(d) => d,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        let files =
            dataset.files.iter().map(|(n, c)| (n.clone(), CString::new(c.replace('\0', " ")).expect("NUL removed"))).collect();
        *out = Box::into_raw(Box::new(SelforgRun { dataset, files }));
        SelforgStatus::Ok
    })
}

/// `Ok`, `ConvergenceFailure` or `TruncationFail` for a finished run.
///
/// # Safety
/// `run` is null or a handle from [`selforg_run_config`].
#[no_mangle]
pub unsafe extern "C" fn selforg_run_status(run: *const SelforgRun) -> SelforgStatus {
    guarded(|| {
        let Some(run) = run.as_ref() else {
            return fail(SelforgStatus::NullPointer, "null run handle");
        };
        match &run.dataset.status {
            RunStatus::Failed(msg) => fail(SelforgStatus::ConvergenceFailure, msg.clone()),
            RunStatus::Ok if run.dataset.truncation.flag == TruncationFlag::Fail => {
                fail(SelforgStatus::TruncationFail, "truncation diagnostics above the failure level")
            }
            RunStatus::Ok => SelforgStatus::Ok,
        }
    })
}

/// Largest populations of the top photon level and of the top particle
/// modes seen during the run.
///
/// # Safety
/// `run` is a valid handle; the outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn selforg_run_truncation(
    run: *const SelforgRun,
    top_photon: *mut f64,
    top_mode: *mut f64,
) -> SelforgStatus {
    guarded(|| {
        let (Some(run), false, false) = (run.as_ref(), top_photon.is_null(), top_mode.is_null()) else {
            return fail(SelforgStatus::NullPointer, "null argument");
        };
        *top_photon = run.dataset.truncation.top_photon_population;
        *top_mode = run.dataset.truncation.top_mode_population;
        SelforgStatus::Ok
    })
}

/// Contents of the payload `name` (e.g. `"steady.csv"`), owned by the handle.
///
/// # Safety
/// `run` is a valid handle, `name` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn selforg_run_file(run: *const SelforgRun, name: *const c_char, out: *mut *const c_char) -> SelforgStatus {
    guarded(|| {
        let (Some(run), false) = (run.as_ref(), out.is_null()) else {
            return fail(SelforgStatus::NullPointer, "null argument");
        };
        let name = match read_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        match run.files.iter().find(|(n, _)| n == name) {
            Some((_, c)) => {
                *out = c.as_ptr();
                SelforgStatus::Ok
            }
            None => fail(SelforgStatus::NotFound, format!("no payload named `{}`", name)),
        }
    })
}

/// Metadata JSON; release with [`selforg_string_free`].
///
/// # Safety
/// `run` is a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn selforg_run_metadata(run: *const SelforgRun, out: *mut *mut c_char) -> SelforgStatus {
    guarded(|| {
        let (Some(run), false) = (run.as_ref(), out.is_null()) else {
            return fail(SelforgStatus::NullPointer, "null argument");
        };
        let text = run.dataset.metadata().to_string();
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        SelforgStatus::Ok
    })
}

/// Writes `metadata.json` and all payloads below `dir`.
///
/// # Safety
/// `run` is a valid handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn selforg_run_write(run: *const SelforgRun, dir: *const c_char) -> SelforgStatus {
    guarded(|| {
        let Some(run) = run.as_ref() else {
            return fail(SelforgStatus::NullPointer, "null run handle");
        };
        let dir = match read_str(dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match run.dataset.write(Path::new(dir)) {
            Ok(()) => SelforgStatus::Ok,
            Err(e) => fail(SelforgStatus::IoError, e.to_string()),
        }
    })
}

/// # Safety
/// `run` is null or a handle from [`selforg_run_config`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn selforg_run_free(run: *mut SelforgRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `s` is null or a string returned by this library for the caller to free.
#[no_mangle]
pub unsafe extern "C" fn selforg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn selforg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn selforg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
