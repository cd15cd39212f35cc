//! C ABI over the skewgraph library.
//!
//! Systems are opaque handles created from TOML and released with
//! [`sg_system_free`]. Every fallible call returns an [`SgStatus`]; on
//! failure [`sg_last_error`] describes the problem until the next call on
//! the same thread. Strings handed out by the library are released with
//! [`sg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use skewgraph::attractor::code;
use skewgraph::cli::{config, run};
use skewgraph::splitting::decay_estimate;
use skewgraph::symbolic::SymbolWindow;
use skewgraph::zoo::ZooSystem;

/// Status codes. `SG_STATUS_VALIDATION` and `SG_STATUS_BUDGET` match the
/// command-line exit codes 2 and 3.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullArgument = 1,
    Validation = 2,
    Budget = 3,
    Io = 4,
    Panic = 5,
}

/// A skew product system. Opaque.
pub struct SgSystem {
    inner: ZooSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &skewgraph::Error) -> SgStatus {
    match run::exit_code(err) {
        3 => SgStatus::Budget,
        _ => SgStatus::Validation,
    }
}

fn guarded(f: impl FnOnce() -> Result<(), (SgStatus, String)>) -> SgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (SgStatus, String)> {
    if p.is_null() {
        return Err((SgStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SgStatus::Validation, format!("{name} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], (SgStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err((SgStatus::NullArgument, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn null(name: &str) -> (SgStatus, String) {
    (SgStatus::NullArgument, format!("{name} is null"))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library; valid until the next call.
#[no_mangle]
pub extern "C" fn sg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a system from a TOML document with a `[system]` table and an
/// optional `[base]` table, in the command-line config format.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_system_from_toml(
    toml: *const c_char,
    out: *mut *mut SgSystem,
) -> SgStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let src = text(toml, "toml")?;
        let inner = config::load_system(src).map_err(|f| (SgStatus::Validation, f.join("; ")))?;
        *out = Box::into_raw(Box::new(SgSystem { inner }));
        Ok(())
    })
}

/// Builds a preset with its default parameters.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_system_from_preset(
    name: *const c_char,
    out: *mut *mut SgSystem,
) -> SgStatus {
    let preset = match text(name, "name") {
        Ok(n) => n,
        Err((status, msg)) => {
            set_error(msg);
            return status;
        }
    };
    let doc = match CString::new(format!("[system]\npreset = {:?}\n", preset)) {
        Ok(d) => d,
        Err(_) => return SgStatus::Validation,
    };
    sg_system_from_toml(doc.as_ptr(), out)
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sg_system_free(sys: *mut SgSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of symbols, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_system_alphabet_size(sys: *const SgSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.system.alphabet_size())
}

/// Fiber dimension, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_system_dim(sys: *const SgSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.system.dim())
}

/// Codes the sequence whose past is `past` (θ_{-1} first) followed by the
/// periodic `past_tail`, with the future repeating `past_tail`. Writes
/// `sg_system_dim` coordinates to `point` and the depth used to `depth`.
/// Returns `SG_STATUS_BUDGET` when the enclosure is still wider than `tol`
/// at `max_depth`.
///
/// # Safety
/// Array arguments must hold the stated number of elements; `point` must
/// have room for `sg_system_dim(sys)` doubles. `depth` may be null.
#[no_mangle]
pub unsafe extern "C" fn sg_code(
    sys: *const SgSystem,
    past: *const u8,
    past_len: usize,
    past_tail: *const u8,
    past_tail_len: usize,
    max_depth: usize,
    tol: f64,
    point: *mut f64,
    depth: *mut usize,
) -> SgStatus {
    guarded(|| {
        let s = &sys.as_ref().ok_or_else(|| null("sys"))?.inner.system;
        if point.is_null() {
            return Err(null("point"));
        }
        let past = slice(past, past_len, "past")?;
        let tail = slice(past_tail, past_tail_len, "past_tail")?;
        let theta = SymbolWindow::from_past(s.alphabet_size(), past, tail, &[], tail)
            .map_err(|e| (SgStatus::Validation, e.to_string()))?;
        let c = code(&theta, s, max_depth, tol);
        if !depth.is_null() {
            *depth = c.depth_used;
        }
        let p = c.point_f64().ok_or_else(|| {
            let e = skewgraph::Error::NotConverged {
                depth: c.depth_used,
                diameter: c.final_diameter,
            };
            (status_of(&e), e.to_string())
        })?;
        ptr::copy_nonoverlapping(p.as_ptr(), point, p.len());
        Ok(())
    })
}

/// Mean backward-image diameter at each depth over `n_samples` stationary
/// pasts, plus the fitted per-step factor `λ` of `mean ≈ C λ^n`.
///
/// # Safety
/// `depths` and `means` must hold `n_depths` elements; `lambda` may be null.
#[no_mangle]
pub unsafe extern "C" fn sg_decay(
    sys: *const SgSystem,
    depths: *const usize,
    n_depths: usize,
    n_samples: usize,
    seed: u64,
    means: *mut f64,
    lambda: *mut f64,
) -> SgStatus {
    guarded(|| {
        let s = &sys.as_ref().ok_or_else(|| null("sys"))?.inner.system;
        let d = slice(depths, n_depths, "depths")?;
        if means.is_null() && n_depths > 0 {
            return Err(null("means"));
        }
        let est =
            decay_estimate(s, d, n_samples, seed).map_err(|e| (status_of(&e), e.to_string()))?;
        ptr::copy_nonoverlapping(est.mean_diams.as_ptr(), means, est.mean_diams.len());
        if !lambda.is_null() {
            *lambda = est.fitted_lambda;
        }
        Ok(())
    })
}

/// Runs a full experiment config. `out_dir` may be null to skip writing
/// files; `results_json` may be null, otherwise it receives the
/// `results.json` document, to be released with [`sg_string_free`].
/// `SG_STATUS_BUDGET` still produces outputs.
///
/// # Safety
/// String arguments must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sg_run_config(
    toml: *const c_char,
    out_dir: *const c_char,
    results_json: *mut *mut c_char,
) -> SgStatus {
    guarded(|| {
        if !results_json.is_null() {
            *results_json = ptr::null_mut();
        }
        let src = text(toml, "toml")?;
        let resolved = config::load(src, None).map_err(|f| (SgStatus::Validation, f.join("; ")))?;
        let outcome = run::execute(&resolved).map_err(|e| (status_of(&e), e.to_string()))?;
        if !out_dir.is_null() {
            let dir = text(out_dir, "out_dir")?;
            run::write_outputs(&resolved, &outcome, Path::new(dir))
                .map_err(|e| (SgStatus::Io, e.to_string()))?;
        }
        if !results_json.is_null() {
            let doc = serde_json::to_string(&run::results_json(&resolved, &outcome))
                .expect("serialisable");
            *results_json = CString::new(doc).expect("JSON has no NUL").into_raw();
        }
        match outcome.budget_failure {
            Some(reason) => Err((SgStatus::Budget, reason)),
            None => Ok(()),
        }
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
