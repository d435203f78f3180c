//! C ABI over `xtt-core`.
//!
//! Models live behind an opaque [`XttModel`] handle. Every fallible call
//! returns an [`XttStatus`]; on failure the message is available from
//! [`xtt_last_error_message`] on the same thread. Strings handed out through
//! `char **` parameters are owned by the caller and released with
//! [`xtt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xtt_core::diagnostic::{has_errors, render};
use xtt_core::{
    analysis::check_reachability, export_bpmn_rulelevel, export_bpmn_tablemap, export_drools, parse_model, run_forward,
    run_goal_driven, serialize_model, validate_model, Analyzer, Valuation,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XttStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The model document could not be parsed.
    ParseError = 3,
    /// The model or an input valuation failed validation.
    InvalidModel = 4,
    /// Inference finished with error diagnostics (deadlock, xor-stuck, ...).
    RuntimeError = 5,
    /// The model cannot be exported to the requested format.
    ExportError = 6,
    /// Analysis refused the model, e.g. the state space exceeds the bound.
    AnalysisError = 7,
    /// The goal attribute or table name is unknown.
    NotFound = 8,
    /// An internal error; the library state is still usable.
    Panic = 9,
}

/// Opaque handle to a parsed model.
pub struct XttModel {
    model: xtt_core::XttModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(XttStatus, String);

fn fail<T>(status: XttStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

/// Runs `body`, records its error message and converts panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> XttStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => XttStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error");
            XttStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(XttStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(XttStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn model_arg<'a>(p: *const XttModel) -> Result<&'a xtt_core::XttModel, Failure> {
    p.as_ref()
        .map(|h| &h.model)
        .ok_or(Failure(XttStatus::NullArgument, "model is null".into()))
}

fn check_out<T>(p: *mut *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        fail(XttStatus::NullArgument, format!("{name} is null"))
    } else {
        Ok(())
    }
}

fn into_c(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

unsafe fn put(out: *mut *mut c_char, text: String) {
    if !out.is_null() {
        *out = into_c(text);
    }
}

/// Parses a JSON model document. On success `*out` receives a handle to be
/// released with [`xtt_model_free`].
///
/// # Safety
/// `document` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtt_model_parse(document: *const c_char, out: *mut *mut XttModel) -> XttStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(document, "document")?;
        let model = parse_model(text).or_else(|e| fail(XttStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(XttModel { model }));
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`xtt_model_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xtt_model_free(model: *mut XttModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Validates the model. `*diagnostics` (optional) receives one line per
/// finding. Returns `XTT_STATUS_INVALID_MODEL` when any finding is an error.
///
/// # Safety
/// `model` must be a live handle; `diagnostics` may be null.
#[no_mangle]
pub unsafe extern "C" fn xtt_model_validate(model: *const XttModel, diagnostics: *mut *mut c_char) -> XttStatus {
    guard(|| {
        let m = model_arg(model)?;
        let found = validate_model(m);
        put(diagnostics, render(&found));
        if has_errors(&found) {
            return fail(XttStatus::InvalidModel, render(&found));
        }
        Ok(())
    })
}

/// Writes the canonical JSON form of the model into `*out`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtt_model_serialize(model: *const XttModel, out: *mut *mut c_char) -> XttStatus {
    guard(|| {
        check_out(out, "out")?;
        let m = model_arg(model)?;
        let text = serialize_model(m).or_else(|e| fail(XttStatus::InvalidModel, render(&e.0)))?;
        put(out, text);
        Ok(())
    })
}

/// Runs inference. `bindings` holds `attr=value` entries separated by
/// newlines (may be null or empty). With a non-null `goal` the run is
/// goal-driven. `*valuation` receives the final valuation as sorted
/// `attr=value` lines and `*trace` (optional) the numbered trace.
///
/// A run that ends with error diagnostics still fills both outputs and
/// returns `XTT_STATUS_RUNTIME_ERROR`.
///
/// # Safety
/// `model` must be a live handle; string arguments NUL-terminated or null
/// where allowed; `valuation` writable; `trace` may be null.
#[no_mangle]
pub unsafe extern "C" fn xtt_run_forward(
    model: *const XttModel,
    bindings: *const c_char,
    goal: *const c_char,
    valuation: *mut *mut c_char,
    trace: *mut *mut c_char,
) -> XttStatus {
    guard(|| {
        check_out(valuation, "valuation")?;
        let m = model_arg(model)?;
        let bindings = opt_str_arg(bindings, "bindings")?.unwrap_or("");
        let goal = opt_str_arg(goal, "goal")?;
        let lines: Vec<&str> = bindings.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let initial = Valuation::from_bindings(m, &lines).or_else(|d| fail(XttStatus::InvalidModel, render(&d)))?;
        let outcome = match goal {
            Some(goal) => run_goal_driven(m, goal, &initial),
            None => run_forward(m, &initial),
        }
        .or_else(|e| {
            let status = if e.code() == "unknown-goal" {
                XttStatus::NotFound
            } else {
                XttStatus::InvalidModel
            };
            fail(status, render(&e.diagnostics()))
        })?;
        put(valuation, outcome.valuation.render());
        put(trace, outcome.trace.render());
        if !outcome.is_ok() {
            return fail(XttStatus::RuntimeError, render(&outcome.diagnostics));
        }
        Ok(())
    })
}

/// Produces the ruleflow XML, decision-table CSV and `Workspace` source.
/// Outputs are left untouched unless the export succeeds.
///
/// # Safety
/// `model` must be a live handle; the three output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn xtt_export_drools(
    model: *const XttModel,
    ruleflow_xml: *mut *mut c_char,
    decision_table_csv: *mut *mut c_char,
    workspace_source: *mut *mut c_char,
) -> XttStatus {
    guard(|| {
        check_out(ruleflow_xml, "ruleflow_xml")?;
        check_out(decision_table_csv, "decision_table_csv")?;
        check_out(workspace_source, "workspace_source")?;
        let m = model_arg(model)?;
        let bundle = export_drools(m);
        let Some(files) = bundle.files else {
            return fail(XttStatus::ExportError, render(&bundle.diagnostics));
        };
        put(ruleflow_xml, files.ruleflow_xml);
        put(decision_table_csv, files.decision_table_csv);
        put(workspace_source, files.workspace_source);
        Ok(())
    })
}

/// Exports BPMN XML. With `table` null the whole flow is mapped one task per
/// table; otherwise the named table is drawn one branch per rule.
///
/// # Safety
/// `model` must be a live handle; `table` NUL-terminated or null; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn xtt_export_bpmn(
    model: *const XttModel,
    table: *const c_char,
    out: *mut *mut c_char,
) -> XttStatus {
    guard(|| {
        check_out(out, "out")?;
        let m = model_arg(model)?;
        let errors = validate_model(m);
        if has_errors(&errors) {
            return fail(XttStatus::InvalidModel, render(&errors));
        }
        let doc = match opt_str_arg(table, "table")? {
            None => export_bpmn_tablemap(m),
            Some(t) => export_bpmn_rulelevel(m, t).or_else(|e| fail(XttStatus::NotFound, e.to_string()))?,
        };
        let integrity = doc.check_integrity();
        if !integrity.is_empty() {
            return fail(XttStatus::ExportError, render(&integrity));
        }
        put(out, doc.to_xml());
        Ok(())
    })
}

/// Completeness, overlap and reachability report, one defect per line, using
/// `state_bound` as the per-table state limit (0 selects the default).
/// `*defects` (optional) receives the number of lines.
///
/// # Safety
/// `model` must be a live handle; `report` writable; `defects` may be null.
#[no_mangle]
pub unsafe extern "C" fn xtt_analyze(
    model: *const XttModel,
    state_bound: u64,
    report: *mut *mut c_char,
    defects: *mut usize,
) -> XttStatus {
    guard(|| {
        check_out(report, "report")?;
        let m = model_arg(model)?;
        let errors = validate_model(m);
        if has_errors(&errors) {
            return fail(XttStatus::InvalidModel, render(&errors));
        }
        let analyzer = if state_bound == 0 {
            Analyzer::default()
        } else {
            Analyzer::with_bound(state_bound)
        };
        let reports = analyzer
            .analyze_model(m)
            .or_else(|e| fail(XttStatus::AnalysisError, e.to_string()))?;
        let mut text: String = reports.iter().map(|r| r.render()).collect();
        for table in check_reachability(m) {
            text.push_str(&format!("{table} unreachable\n"));
        }
        if !defects.is_null() {
            *defects = text.lines().count();
        }
        put(report, text);
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn xtt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned through an output parameter. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xtt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
