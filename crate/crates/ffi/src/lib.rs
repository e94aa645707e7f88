//! C ABI over the `retrodiction` library.
//!
//! Objects cross the boundary as opaque handles created by `rd_*_from_json`
//! or returned through out-parameters, and released with the matching
//! `rd_*_free`. Every fallible call returns an [`RdStatus`]; on failure the
//! message is available from [`rd_last_error_message`] on the same thread.
//! Strings returned as `char *` are owned by the caller and released with
//! [`rd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use retrodiction::channels::{adjoint_map, classify};
use retrodiction::cli::{verify_random, verify_scenario, CliError};
use retrodiction::inference::inference_symmetry_report;
use retrodiction::linalg::STRUCTURAL_TOL;
use retrodiction::report::ReportDocument;
use retrodiction::scenario::{parse_scenario_str, ValidatedScenario};
use retrodiction::{Direction, Error, ProbabilityTable};

/// Status codes. Values 2 to 5 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Validation = 3,
    UndefinedConditional = 4,
    VerificationFailed = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// A validated scenario.
pub struct RdScenario {
    inner: ValidatedScenario,
}

/// A conditional probability table.
pub struct RdTable {
    inner: ProbabilityTable,
}

/// Channel properties reported by [`rd_scenario_classify`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RdClassification {
    pub is_cp: bool,
    pub is_tp: bool,
    pub is_unital: bool,
    pub inference_symmetric: bool,
    pub active_reverse: bool,
    pub unital_defect: f64,
    pub choi_min_eigenvalue: f64,
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

fn library_status(e: &Error) -> RdStatus {
    match e {
        Error::UndefinedConditional(_) => RdStatus::UndefinedConditional,
        _ => RdStatus::Validation,
    }
}

fn cli_status(e: &CliError) -> RdStatus {
    match e.exit_code() {
        2 => RdStatus::Parse,
        4 => RdStatus::UndefinedConditional,
        _ => RdStatus::Validation,
    }
}

/// Run `f`, recording its error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (RdStatus, String)>) -> RdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RdStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RdStatus::Panic
        }
    }
}

fn null(what: &str) -> (RdStatus, String) {
    (RdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|e| (RdStatus::Parse, format!("{what} is not UTF-8: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    // SAFETY: checked non-null by the callers.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `rd_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parse and validate a scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_scenario_from_json(json: *const c_char, out: *mut *mut RdScenario) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = unsafe { read_str(json, "json") }?;
        let inner = parse_scenario_str(text).map_err(|e| {
            let status = if e.is_parse_error() { RdStatus::Parse } else { RdStatus::Validation };
            (status, format!("{}: {e}", e.code()))
        })?;
        unsafe { write_out(out, RdScenario { inner }) };
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from [`rd_scenario_from_json`].
#[no_mangle]
pub unsafe extern "C" fn rd_scenario_free(scenario: *mut RdScenario) {
    if !scenario.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

unsafe fn solve(
    scenario: *const RdScenario,
    direction: Direction,
    given: *const usize,
    given_len: usize,
    out: *mut *mut RdTable,
) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: a live handle per the caller contract.
        let s = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let indices: &[usize] = if given_len == 0 {
            &[]
        } else if given.is_null() {
            return Err(null("given"));
        } else {
            // SAFETY: `given` points to `given_len` readable values.
            unsafe { std::slice::from_raw_parts(given, given_len) }
        };
        let task = s.inner.task(direction).map_err(|e| (RdStatus::Validation, e.to_string()))?;
        let table = task.solve(indices).map_err(|e| (library_status(&e), e.to_string()))?;
        unsafe { write_out(out, RdTable { inner: table }) };
        Ok(())
    })
}

/// Prediction table given input outcome indices, one per input factor in
/// play.
///
/// # Safety
/// `scenario` must be a live handle, `given` must point to `given_len`
/// values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_scenario_predict(
    scenario: *const RdScenario,
    given: *const usize,
    given_len: usize,
    out: *mut *mut RdTable,
) -> RdStatus {
    unsafe { solve(scenario, Direction::Predict, given, given_len, out) }
}

/// Postdiction table given output outcome indices, one per output factor
/// in play.
///
/// # Safety
/// As for [`rd_scenario_predict`].
#[no_mangle]
pub unsafe extern "C" fn rd_scenario_postdict(
    scenario: *const RdScenario,
    given: *const usize,
    given_len: usize,
    out: *mut *mut RdTable,
) -> RdStatus {
    unsafe { solve(scenario, Direction::Postdict, given, given_len, out) }
}

/// Classify the scenario's transformation as a channel.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_scenario_classify(scenario: *const RdScenario, out: *mut RdClassification) -> RdStatus {
    guard(|| {
        let s = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let channel = s.inner.channel().map_err(|e| (RdStatus::Validation, e.to_string()))?;
        let c = classify(&channel);
        let symmetry =
            inference_symmetry_report(&channel, STRUCTURAL_TOL, 0).map_err(|e| (library_status(&e), e.to_string()))?;
        let result = RdClassification {
            is_cp: c.is_cp,
            is_tp: c.is_tp,
            is_unital: c.is_unital,
            inference_symmetric: symmetry.tables_symmetric,
            active_reverse: classify(&adjoint_map(&channel)).is_cptp(),
            unital_defect: c.unital_defect,
            choi_min_eigenvalue: c.choi_min_eigenvalue,
        };
        // SAFETY: checked non-null above.
        unsafe { *out = result };
        Ok(())
    })
}

fn finish_report(report: ReportDocument, out_json: *mut *mut c_char) -> Result<(), (RdStatus, String)> {
    let pass = report.pass;
    if !out_json.is_null() {
        // SAFETY: checked non-null.
        unsafe { *out_json = into_c_string(report.to_json()) };
    }
    if pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err((RdStatus::VerificationFailed, format!("failed checks: {}", failed.join(", "))))
    }
}

fn tolerance(t: f64) -> Option<f64> {
    (t >= 0.0).then_some(t)
}

/// Identity checks applicable to the scenario. A negative `tolerance_override`
/// keeps the defaults. When `out_json` is non-NULL it receives the report,
/// also on verification failure.
///
/// # Safety
/// `scenario` must be a live handle; `out_json` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rd_scenario_verify(
    scenario: *const RdScenario,
    seed: u64,
    tolerance_override: f64,
    out_json: *mut *mut c_char,
) -> RdStatus {
    guard(|| {
        let s = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let report =
            verify_scenario(&s.inner, seed, tolerance(tolerance_override)).map_err(|e| (cli_status(&e), e.to_string()))?;
        finish_report(report, out_json)
    })
}

/// Identity suite on seeded random instances over subsystem dimensions
/// `dims`.
///
/// # Safety
/// `dims` must point to `dims_len` values; `out_json` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rd_verify_random(
    dims: *const usize,
    dims_len: usize,
    seed: u64,
    tolerance_override: f64,
    out_json: *mut *mut c_char,
) -> RdStatus {
    guard(|| {
        if dims.is_null() || dims_len == 0 {
            return Err(null("dims"));
        }
        // SAFETY: `dims` points to `dims_len` readable values.
        let dims = unsafe { std::slice::from_raw_parts(dims, dims_len) };
        let report =
            verify_random(dims, seed, tolerance(tolerance_override)).map_err(|e| (cli_status(&e), e.to_string()))?;
        finish_report(report, out_json)
    })
}

/// # Safety
/// `table` must be NULL or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rd_table_free(table: *mut RdTable) {
    if !table.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Number of entries; 0 for NULL.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_table_len(table: *const RdTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.inner.len())
}

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_table_probability(table: *const RdTable, index: usize, out: *mut f64) -> RdStatus {
    guard(|| {
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if index >= t.inner.len() {
            return Err((RdStatus::OutOfRange, format!("index {index} ≥ {}", t.inner.len())));
        }
        unsafe { *out = t.inner.at(index) };
        Ok(())
    })
}

/// Outcome label at `index` as a new string, or NULL on error.
///
/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_table_label(table: *const RdTable, index: usize) -> *mut c_char {
    let mut label = ptr::null_mut();
    let status = guard(|| {
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        let name = t.inner.labels().nth(index).ok_or_else(|| (RdStatus::OutOfRange, format!("index {index} out of range")))?;
        label = into_c_string(name.to_string());
        Ok(())
    });
    if status == RdStatus::Ok {
        label
    } else {
        ptr::null_mut()
    }
}

/// Ratio `P_post / P_pre` for postdiction tables that have one. Writes NaN
/// when the table carries no factor.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_table_factor(table: *const RdTable, out: *mut f64) -> RdStatus {
    guard(|| {
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = t.inner.factor.unwrap_or(f64::NAN) };
        Ok(())
    })
}

/// The table as JSON, or NULL for a NULL handle.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_table_to_json(table: *const RdTable) -> *mut c_char {
    unsafe { table.as_ref() }.map_or(ptr::null_mut(), |t| {
        into_c_string(serde_json::to_string(&t.inner).expect("tables serialize"))
    })
}
