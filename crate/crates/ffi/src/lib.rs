//! C ABI for the checker.
//!
//! Objects are opaque handles owned by the caller and released with the
//! matching `*_free` function. Functions return an [`IscStatus`]; on failure
//! [`isc_last_error_message`] describes the error for the calling thread.
//! Strings returned through out-parameters are released with [`isc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ischeck::contract::{parse_contract, render_contract, validate_contract, ISContract};
use ischeck::report::{Report, Verdict};
use ischeck::run::{check_module, RunConfig, RunError};

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IscStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    ContractSyntax = 4,
    ContractInvalid = 5,
    Frontend = 6,
    Critics = 7,
    Panic = 8,
}

/// Final classification of a report; the values equal the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IscVerdict {
    Verified = 0,
    NotVerified = 1,
    Error = 2,
}

/// A parsed and validated interface contract.
pub struct IscContract(ISContract);

/// The outcome of checking one module.
pub struct IscReport(Report);

/// Options for [`isc_check_module`]. A null pointer means all defaults.
#[repr(C)]
pub struct IscOptions {
    /// Report typedef-rule findings as violations.
    pub strict_advisory: bool,
    /// Ignore `#include` directives that cannot be resolved.
    pub stub_missing_includes: bool,
    /// `include_dir_count` include search directories.
    pub include_dirs: *const *const c_char,
    pub include_dir_count: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: IscStatus, msg: impl Into<String>) -> IscStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> IscStatus) -> IscStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(IscStatus::Panic, "internal error"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, IscStatus> {
    if p.is_null() {
        return Err(fail(IscStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(IscStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn out_string(s: String, out: *mut *mut c_char) -> IscStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: the caller checked `out` for null.
            unsafe { *out = c.into_raw() };
            IscStatus::Ok
        }
        Err(_) => fail(IscStatus::InvalidUtf8, "output contains a NUL byte"),
    }
}

/// Parse and validate contract text. On success `*out` receives a handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isc_contract_parse(text: *const c_char, out: *mut *mut IscContract) -> IscStatus {
    guarded(|| {
        if out.is_null() {
            return fail(IscStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let c = match parse_contract(text) {
            Ok(c) => c,
            Err(e) => return fail(IscStatus::ContractSyntax, e.to_string()),
        };
        let issues = validate_contract(&c);
        if !issues.is_empty() {
            let msgs: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
            return fail(IscStatus::ContractInvalid, msgs.join("; "));
        }
        *out = Box::into_raw(Box::new(IscContract(c)));
        IscStatus::Ok
    })
}

/// Render a contract as `.is` text into `*out`.
///
/// # Safety
/// `contract` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isc_contract_render(contract: *const IscContract, out: *mut *mut c_char) -> IscStatus {
    guarded(|| {
        if contract.is_null() || out.is_null() {
            return fail(IscStatus::NullArgument, "contract or out is null");
        }
        out_string(render_contract(&(*contract).0), out)
    })
}

/// # Safety
/// `contract` must be null or a handle from [`isc_contract_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn isc_contract_free(contract: *mut IscContract) {
    if !contract.is_null() {
        drop(Box::from_raw(contract));
    }
}

/// Check a module (header and source paths) against an optional contract and
/// store the report in `*out`.
///
/// # Safety
/// Paths must be NUL-terminated strings; `contract` and `options` may be null;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isc_check_module(
    header_path: *const c_char,
    source_path: *const c_char,
    contract: *const IscContract,
    options: *const IscOptions,
    out: *mut *mut IscReport,
) -> IscStatus {
    guarded(|| {
        if out.is_null() {
            return fail(IscStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let (header, source) = match (str_arg(header_path, "header_path"), str_arg(source_path, "source_path")) {
            (Ok(h), Ok(s)) => (h, s),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let mut cfg = RunConfig::new(header, source, None);
        if let Some(o) = options.as_ref() {
            cfg.rules.strict_advisory = o.strict_advisory;
            cfg.stub_missing_includes = o.stub_missing_includes;
            if o.include_dir_count > 0 && o.include_dirs.is_null() {
                return fail(IscStatus::NullArgument, "include_dirs is null");
            }
            for i in 0..o.include_dir_count {
                match str_arg(*o.include_dirs.add(i), "include_dirs entry") {
                    Ok(d) => cfg.include_dirs.push(PathBuf::from(d)),
                    Err(e) => return e,
                }
            }
        }
        let contract = contract.as_ref().map(|c| &c.0);
        match check_module(&cfg, contract) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(IscReport(r)));
                IscStatus::Ok
            }
            Err(e) => {
                let status = match &e {
                    RunError::MissingFile { .. } | RunError::Io { .. } => IscStatus::Io,
                    RunError::ContractSyntax { .. } => IscStatus::ContractSyntax,
                    RunError::ContractInvalid { .. } => IscStatus::ContractInvalid,
                    RunError::Frontend(_) => IscStatus::Frontend,
                    RunError::Critics(_) => IscStatus::Critics,
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// Verdict of a report; [`IscVerdict::Error`] for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isc_report_verdict(report: *const IscReport) -> IscVerdict {
    match report.as_ref().map(|r| r.0.verdict) {
        Some(Verdict::Verified) => IscVerdict::Verified,
        Some(Verdict::NotVerified) => IscVerdict::NotVerified,
        Some(Verdict::Error) | None => IscVerdict::Error,
    }
}

/// Serialize a report as JSON into `*out`. With `canonical`, the timestamp and
/// durations are left out.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isc_report_to_json(report: *const IscReport, canonical: bool, out: *mut *mut c_char) -> IscStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(IscStatus::NullArgument, "report or out is null");
        }
        out_string((*report).0.to_json(canonical), out)
    })
}

/// Render a report as human-readable text into `*out`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isc_report_to_text(report: *const IscReport, canonical: bool, out: *mut *mut c_char) -> IscStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(IscStatus::NullArgument, "report or out is null");
        }
        out_string((*report).0.to_text(canonical), out)
    })
}

/// # Safety
/// `report` must be null or a handle from [`isc_check_module`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn isc_report_free(report: *mut IscReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn isc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn isc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn isc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
