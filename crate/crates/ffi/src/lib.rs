//! C ABI for `creditfair`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Strings returned through out-parameters
//! are NUL-terminated UTF-8 and must be released with [`cf_string_free`].
//! Every fallible call returns a [`CfStatus`]; on failure the message is
//! available from [`cf_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use creditfair::credit_audit::{audit_explicit, refute_credit_existence};
use creditfair::io::TraceDocument;
use creditfair::mechanisms::{run, Mechanism};
use creditfair::model::Instance;
use creditfair::pswc::{solve, PswcProblem};
use creditfair::workloads::builtin_instance;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or an unknown name.
    Parse = 3,
    /// Input parsed but violates a model constraint.
    Invalid = 4,
    /// A mechanism or audit could not run on the input.
    Failed = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// An allocation instance: endowments and per-round reports.
pub struct CfInstance(Instance);

/// A mechanism run together with its instance.
pub struct CfTrace(TraceDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CfStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CfStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|e| Failure(CfStatus::Failed, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string(v).map_err(|e| Failure(CfStatus::Failed, e.to_string()))
}

/// Parses an instance from JSON (`{"endowments": [...], "demands": [[...]]}`).
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_instance_from_json(json: *const c_char, out: *mut *mut CfInstance) -> CfStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let inst: Instance = serde_json::from_str(text).map_err(|e| {
            let status = if e.is_data() {
                CfStatus::Invalid
            } else {
                CfStatus::Parse
            };
            Failure(status, e.to_string())
        })?;
        put(out, CfInstance(inst))
    })
}

/// Loads a built-in instance by name, e.g. `"motivating_example"`.
///
/// # Safety
/// `name` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_instance_builtin(name: *const c_char, out: *mut *mut CfInstance) -> CfStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let inst = builtin_instance(name).map_err(|e| Failure(CfStatus::Parse, e.to_string()))?;
        put(out, CfInstance(inst))
    })
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_instance_agents(inst: *const CfInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.agents())
}

/// Number of rounds, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_instance_rounds(inst: *const CfInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.rounds())
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_instance_free(inst: *mut CfInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Runs a mechanism (`"lendrecoup"`, `"smmf"`, `"dmmf"`, `"karma:1/2"`,
/// `"static"`) on the instance.
///
/// # Safety
/// `inst` must be a live handle, `mechanism` a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_run(inst: *const CfInstance, mechanism: *const c_char, out: *mut *mut CfTrace) -> CfStatus {
    guard(|| {
        let inst = &deref(inst, "instance")?.0;
        let mech: Mechanism = read_str(mechanism, "mechanism")?
            .parse()
            .map_err(|e: creditfair::mechanisms::MechanismError| Failure(CfStatus::Parse, e.to_string()))?;
        let output = run(&mech, inst).map_err(|e| Failure(CfStatus::Failed, e.to_string()))?;
        put(out, CfTrace(TraceDocument::new(mech, inst.clone(), output)))
    })
}

/// Loads a trace document written by the CLI or [`cf_trace_to_json`].
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_trace_from_json(json: *const c_char, out: *mut *mut CfTrace) -> CfStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let doc = TraceDocument::from_json(text, "input").map_err(|e| Failure(CfStatus::Parse, e.to_string()))?;
        put(out, CfTrace(doc))
    })
}

/// Serializes the trace document; free the result with [`cf_string_free`].
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_trace_to_json(trace: *const CfTrace, out: *mut *mut c_char) -> CfStatus {
    guard(|| {
        let doc = &deref(trace, "trace")?.0;
        put_string(out, doc.to_json())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_trace_free(trace: *mut CfTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Checks the trace's own credit ledger against CF1 to CF5. `report_json`
/// may be null; otherwise it receives the full report.
///
/// # Safety
/// `trace` must be a live handle; `passed` must be writable; `report_json`
/// must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cf_audit_explicit(
    trace: *const CfTrace,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let doc = &deref(trace, "trace")?.0;
        if passed.is_null() {
            return Err(null("passed"));
        }
        let report = audit_explicit(&doc.instance, &doc.trace).map_err(|e| Failure(CfStatus::Failed, e.to_string()))?;
        *passed = report.passed();
        if !report_json.is_null() {
            put_string(report_json, to_json(&report)?)?;
        }
        Ok(())
    })
}

/// Decides whether any credit ledger could make the trace credit fair.
/// `refuted` is set when none can; `verdict_json` may be null.
///
/// # Safety
/// `trace` must be a live handle; `refuted` must be writable; `verdict_json`
/// must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cf_refute(
    trace: *const CfTrace,
    refuted: *mut bool,
    verdict_json: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let doc = &deref(trace, "trace")?.0;
        if refuted.is_null() {
            return Err(null("refuted"));
        }
        let verdict =
            refute_credit_existence(&doc.instance, &doc.trace).map_err(|e| Failure(CfStatus::Failed, e.to_string()))?;
        *refuted = verdict.is_refuted();
        if !verdict_json.is_null() {
            put_string(verdict_json, to_json(&verdict)?)?;
        }
        Ok(())
    })
}

/// Solves a weighted water-filling problem given as JSON
/// (`{"capacity", "weights", "minima", "limits"}`, limits `null` when
/// unbounded) and returns `{"allocation", "level"}`.
///
/// # Safety
/// `problem_json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_pswc_solve_json(problem_json: *const c_char, out: *mut *mut c_char) -> CfStatus {
    guard(|| {
        let text = read_str(problem_json, "problem_json")?;
        let problem: PswcProblem = serde_json::from_str(text).map_err(|e| Failure(CfStatus::Parse, e.to_string()))?;
        let solution = solve(&problem).map_err(|e| Failure(CfStatus::Invalid, e.to_string()))?;
        put_string(out, to_json(&solution)?)
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
