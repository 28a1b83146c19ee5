//! C ABI over the `copyprop` library.
//!
//! Programs are opaque `CpProgram` handles created by `cp_program_parse` and
//! released with `cp_program_free`. Every fallible call returns a `CpStatus`;
//! on failure `cp_last_error` gives a message for the calling thread. Strings
//! returned through out-parameters are owned by the caller and must be
//! released with `cp_string_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use copyprop::acs::run_acs;
use copyprop::baseline::compare_methods;
use copyprop::cli::analysis_report;
use copyprop::ir::{parse_program, print_program, to_dot, ProgramCfg};
use copyprop::oracle::{differential_check_variant, random_inputs, Variant, Verdict};
use copyprop::propagate::{propagate, transform_to_fixpoint};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    /// A check ran and found a counterexample or violation.
    CheckFailed = 4,
    Panic = 5,
}

/// Opaque program handle.
pub struct CpProgram {
    cfg: ProgramCfg,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> CpStatus) -> CpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CpStatus::Panic
        }
    }
}

unsafe fn program<'a>(p: *const CpProgram) -> Result<&'a ProgramCfg, CpStatus> {
    if p.is_null() {
        set_error("null program handle");
        return Err(CpStatus::NullArgument);
    }
    Ok(&(*p).cfg)
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> CpStatus {
    if out.is_null() {
        set_error("null output pointer");
        return CpStatus::NullArgument;
    }
    *out = CString::new(s).unwrap_or_default().into_raw();
    CpStatus::Ok
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses and validates a program in the text format.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_program_parse(text: *const c_char, out: *mut *mut CpProgram) -> CpStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null argument");
            return CpStatus::NullArgument;
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            set_error("program text is not UTF-8");
            return CpStatus::InvalidUtf8;
        };
        match parse_program(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(CpProgram { cfg }));
                CpStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                CpStatus::ParseError
            }
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_program_free(p: *mut CpProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of blocks, or 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_program_block_count(p: *const CpProgram) -> usize {
    if p.is_null() {
        0
    } else {
        (*p).cfg.blocks.len()
    }
}

/// Canonical text form.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_program_print(p: *const CpProgram, out: *mut *mut c_char) -> CpStatus {
    guard(|| {
        let cfg = try_status!(program(p));
        write_string(out, print_program(cfg))
    })
}

/// Per-block IN sets (and OUT sets when `include_out`), one line each.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_analyze(p: *const CpProgram, include_out: bool, out: *mut *mut c_char) -> CpStatus {
    guard(|| {
        let cfg = try_status!(program(p));
        write_string(out, analysis_report(&run_acs(cfg), include_out))
    })
}

/// Propagates copies and constants. `max_rounds` 0 runs the single pass;
/// otherwise analysis and rewriting repeat up to that many rounds. The new
/// program is returned as a fresh handle; `out_replacements` may be NULL.
///
/// # Safety
/// `p` must be a live handle, `out_program` a valid pointer, and
/// `out_replacements` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn cp_transform(
    p: *const CpProgram,
    max_rounds: u32,
    out_program: *mut *mut CpProgram,
    out_replacements: *mut usize,
) -> CpStatus {
    guard(|| {
        let cfg = try_status!(program(p));
        if out_program.is_null() {
            set_error("null output pointer");
            return CpStatus::NullArgument;
        }
        let (next, report) = if max_rounds == 0 {
            propagate(cfg)
        } else {
            transform_to_fixpoint(cfg, max_rounds as usize)
        };
        if !out_replacements.is_null() {
            *out_replacements = report.len();
        }
        *out_program = Box::into_raw(Box::new(CpProgram { cfg: next }));
        CpStatus::Ok
    })
}

/// Replacement counts of the classic and unified single passes. Returns
/// `CP_STATUS_CHECK_FAILED` if a classic rewrite is not dominated.
///
/// # Safety
/// `p` must be a live handle; the count pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cp_compare(
    p: *const CpProgram,
    out_classic: *mut usize,
    out_unified: *mut usize,
) -> CpStatus {
    guard(|| {
        let cfg = try_status!(program(p));
        if out_classic.is_null() || out_unified.is_null() {
            set_error("null output pointer");
            return CpStatus::NullArgument;
        }
        let cmp = compare_methods(cfg);
        *out_classic = cmp.classic.len();
        *out_unified = cmp.unified.len();
        if cmp.violations.is_empty() {
            CpStatus::Ok
        } else {
            set_error(cmp.violations.join("; "));
            CpStatus::CheckFailed
        }
    })
}

/// Graphviz text, optionally annotated with IN sets and/or of the
/// transformed program.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_to_dot(
    p: *const CpProgram,
    annotate: bool,
    transformed: bool,
    out: *mut *mut c_char,
) -> CpStatus {
    guard(|| {
        let cfg = try_status!(program(p));
        let shown = if transformed { propagate(cfg).0 } else { cfg.clone() };
        let notes = annotate.then(|| {
            let r = run_acs(&shown);
            r.reachable
                .iter()
                .map(|l| (l.clone(), format!("IN = {}", r.in_set(l))))
                .collect()
        });
        write_string(out, to_dot(&shown, notes.as_ref()))
    })
}

/// Differential check of both transform variants on `inputs` random
/// environments derived from `seed`. Returns `CP_STATUS_CHECK_FAILED` with
/// the counterexample in `cp_last_error` on failure.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_check(p: *const CpProgram, inputs: u32, seed: u64, fuel: u64) -> CpStatus {
    guard(|| {
        let cfg = try_status!(program(p));
        let envs = random_inputs(cfg, inputs as usize, seed);
        for variant in [Variant::SinglePass, Variant::Fixpoint(10)] {
            if let Verdict::Fail(cx) = differential_check_variant(cfg, &envs, fuel as usize, variant) {
                set_error(cx.to_text());
                return CpStatus::CheckFailed;
            }
        }
        CpStatus::Ok
    })
}
