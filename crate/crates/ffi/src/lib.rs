//! C ABI over the akv kernel and verifier.
//!
//! Scenarios and runs are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns an
//! [`AkvStatus`]; the message for the most recent failure on the calling
//! thread is available from [`akv_last_error`]. Strings returned by the
//! library are borrowed and stay valid until the owning handle is freed
//! or, for [`akv_last_error`], until the next failing call on the thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use akv::checker::model::{build_kripke_capped, state_cap_from_env};
use akv::checker::suite::check_model;
use akv::checker::{ModelConfig, ModelError, Outcome, TraceMonitor};
use akv::orchestration::{run_task, ResponseStatus, RunOutcome};
use akv::scenarios::{builtin, builtin_names, load_scenario, Scenario};
use akv::tlogic::select;
use akv::trace::{from_jsonl, to_jsonl, TraceEvent};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AkvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    Invalid = 4,
    CapExceeded = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AkvResponse {
    Success = 0,
    Error = 1,
    ClarificationNeeded = 2,
}

/// A loaded scenario.
pub struct AkvScenario {
    inner: Scenario,
}

/// A finished run with its trace.
pub struct AkvRun {
    outcome: RunOutcome,
    jsonl: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(AkvStatus, String);

fn fail(status: AkvStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> AkvStatus {
    let result = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
        let message = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(fail(AkvStatus::Panic, message))
    });
    match result {
        Ok(()) => AkvStatus::Ok,
        Err(Failure(status, message)) => {
            let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
            LAST_ERROR.with(|e| *e.borrow_mut() = c);
            status
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(AkvStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(AkvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(AkvStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn akv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or an empty string.
#[no_mangle]
pub extern "C" fn akv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a builtin scenario by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akv_scenario_builtin(
    name: *const c_char,
    out: *mut *mut AkvScenario,
) -> AkvStatus {
    guard(|| {
        non_null(out, "out")?;
        let name = text(name, "name")?;
        let inner = builtin(name).map_err(|e| {
            fail(
                AkvStatus::NotFound,
                format!("{e}; builtins are {}", builtin_names().join(", ")),
            )
        })?;
        *out = Box::into_raw(Box::new(AkvScenario { inner }));
        Ok(())
    })
}

/// Parses a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akv_scenario_load(
    json: *const c_char,
    out: *mut *mut AkvScenario,
) -> AkvStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = load_scenario(text(json, "json")?)
            .map_err(|e| fail(AkvStatus::Invalid, e.to_string()))?;
        *out = Box::into_raw(Box::new(AkvScenario { inner }));
        Ok(())
    })
}

/// Overrides the simulation seed.
///
/// # Safety
/// `scenario` must come from `akv_scenario_builtin` or `akv_scenario_load`.
#[no_mangle]
pub unsafe extern "C" fn akv_scenario_set_seed(scenario: *mut AkvScenario, seed: u64) -> AkvStatus {
    guard(|| {
        non_null(scenario, "scenario")?;
        (*scenario).inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or an unfreed handle.
#[no_mangle]
pub unsafe extern "C" fn akv_scenario_free(scenario: *mut AkvScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario's request to completion.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akv_run(scenario: *const AkvScenario, out: *mut *mut AkvRun) -> AkvStatus {
    guard(|| {
        non_null(scenario, "scenario")?;
        non_null(out, "out")?;
        let s = &(*scenario).inner;
        let outcome = run_task(&s.request, s);
        let jsonl = CString::new(to_jsonl(&outcome.trace))
            .map_err(|e| fail(AkvStatus::Invalid, e.to_string()))?;
        *out = Box::into_raw(Box::new(AkvRun { outcome, jsonl }));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akv_run_status(run: *const AkvRun, out: *mut AkvResponse) -> AkvStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        *out = match (*run).outcome.response.status {
            ResponseStatus::Success => AkvResponse::Success,
            ResponseStatus::Error => AkvResponse::Error,
            ResponseStatus::ClarificationNeeded => AkvResponse::ClarificationNeeded,
        };
        Ok(())
    })
}

/// The run's trace as JSON lines, owned by `run`. Null if `run` is null.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn akv_run_trace_jsonl(run: *const AkvRun) -> *const c_char {
    if run.is_null() {
        return std::ptr::null();
    }
    (*run).jsonl.as_ptr()
}

/// # Safety
/// `run` must be null or an unfreed handle.
#[no_mangle]
pub unsafe extern "C" fn akv_run_free(run: *mut AkvRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

fn count_violations(trace: &[TraceEvent], props: &str) -> Result<u32, Failure> {
    let entries = select(props).map_err(|e| fail(AkvStatus::NotFound, e.to_string()))?;
    let mut m = TraceMonitor::new(&entries);
    for e in trace {
        m.observe(e);
    }
    Ok(m.finish()
        .iter()
        .filter(|r| r.outcome == Outcome::Violated)
        .count() as u32)
}

/// Monitors the run's trace against a property selection such as `all`,
/// `HP9` or `TL1..TL14`, storing the number of violated instances.
///
/// # Safety
/// `run` must be a live handle, `props` NUL-terminated, `violated` valid.
#[no_mangle]
pub unsafe extern "C" fn akv_run_monitor(
    run: *const AkvRun,
    props: *const c_char,
    violated: *mut u32,
) -> AkvStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(violated, "violated")?;
        *violated = count_violations(&(*run).outcome.trace, text(props, "props")?)?;
        Ok(())
    })
}

/// Like `akv_run_monitor` for a JSON-lines trace document.
///
/// # Safety
/// `trace` and `props` must be NUL-terminated, `violated` valid.
#[no_mangle]
pub unsafe extern "C" fn akv_monitor_jsonl(
    trace: *const c_char,
    props: *const c_char,
    violated: *mut u32,
) -> AkvStatus {
    guard(|| {
        non_null(violated, "violated")?;
        let events = from_jsonl(text(trace, "trace")?)
            .map_err(|e| fail(AkvStatus::Invalid, e.to_string()))?;
        *violated = count_violations(&events, text(props, "props")?)?;
        Ok(())
    })
}

/// Model-checks a property selection on a preset (`single`, `chain2`) or
/// the model of a builtin scenario, storing the number of failing
/// instances. A `cap` of 0 uses the default state cap.
///
/// # Safety
/// `target` and `props` must be NUL-terminated, `failed` valid.
#[no_mangle]
pub unsafe extern "C" fn akv_check(
    target: *const c_char,
    props: *const c_char,
    fair: bool,
    cap: u64,
    failed: *mut u32,
) -> AkvStatus {
    guard(|| {
        non_null(failed, "failed")?;
        let target = text(target, "target")?;
        let entries =
            select(text(props, "props")?).map_err(|e| fail(AkvStatus::NotFound, e.to_string()))?;
        let config = if ModelConfig::PRESETS.contains(&target) {
            ModelConfig::preset(target)
        } else {
            let s = builtin(target).map_err(|e| fail(AkvStatus::NotFound, e.to_string()))?;
            ModelConfig::from_scenario(&s)
        }
        .map_err(|e| fail(AkvStatus::Invalid, e.to_string()))?;
        let cap = if cap == 0 {
            state_cap_from_env()
        } else {
            cap as usize
        };
        let model = build_kripke_capped(&config, cap).map_err(|e| match e {
            ModelError::StateCapExceeded { .. } => fail(AkvStatus::CapExceeded, e.to_string()),
            other => fail(AkvStatus::Invalid, other.to_string()),
        })?;
        let reports = check_model(&model, &entries, fair)
            .map_err(|e| fail(AkvStatus::Invalid, e.to_string()))?;
        *failed = reports
            .iter()
            .filter(|r| r.verdict.outcome == Outcome::Fails)
            .count() as u32;
        Ok(())
    })
}
