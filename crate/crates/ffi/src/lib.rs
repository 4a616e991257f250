//! C interface to `ceph-core`.
//!
//! Every function returns a [`CephStatus`]. On failure a description is kept
//! per thread and can be read with [`ceph_last_error_message`]. Strings handed
//! out by the library are owned by the caller and must be released with
//! [`ceph_string_free`]; analyses with [`ceph_analysis_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ceph_core::geometry::{angle_at_vertex, Point2};
use ceph_core::ingest::{parse_landmarks_json, IngestError};
use ceph_core::report::{Language, ReportFormat, Resources};
use ceph_core::steiner::{MeasurementId, SagittalClass};
use ceph_core::{analyze, Analysis, AnalysisConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CephStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    MissingCalibration = 4,
    MissingLandmark = 5,
    Degenerate = 6,
    OutOfBounds = 7,
    NotComputed = 8,
    InvalidArgument = 9,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CephSagittalClass {
    Unavailable = 0,
    ClassI = 1,
    ClassII = 2,
    ClassIII = 3,
}

/// Opaque handle to a completed analysis.
pub struct CephAnalysis {
    inner: Analysis,
}

struct Failure(CephStatus, String);

impl Failure {
    fn new(status: CephStatus, message: impl Into<String>) -> Self {
        Failure(status, message.into())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let status = match e {
            IngestError::MissingCalibration => CephStatus::MissingCalibration,
            IngestError::MissingLandmark { .. } => CephStatus::MissingLandmark,
            IngestError::Degenerate { .. } => CephStatus::Degenerate,
            IngestError::OutOfBounds { .. } => CephStatus::OutOfBounds,
            _ => CephStatus::ParseError,
        };
        Failure(status, format!("{}: {e}", e.code()))
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CephStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f));
    let failure = match outcome {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            return CephStatus::Ok;
        }
        Ok(Err(failure)) => failure,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            Failure::new(CephStatus::Internal, format!("internal error: {msg}"))
        }
    };
    set_last_error(failure.1);
    failure.0
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::new(CephStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure::new(CephStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a>(h: *const CephAnalysis) -> Result<&'a Analysis, Failure> {
    h.as_ref()
        .map(|a| &a.inner)
        .ok_or_else(|| Failure::new(CephStatus::NullPointer, "analysis handle is null"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(CephStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(CephStatus::Internal, "output contains a nul byte"))
}

fn parse_arg<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(|e| Failure::new(CephStatus::InvalidArgument, e))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ceph_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ceph_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a JSON landmark document and analyzes it with the built-in norms.
///
/// # Safety
/// `json` must be null or a valid nul-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_from_json(json: *const c_char, out: *mut *mut CephAnalysis) -> CephStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::new(CephStatus::NullPointer, "output pointer is null"));
        }
        out.write(ptr::null_mut());
        let text = read_str(json, "json")?;
        let case = parse_landmarks_json(text.as_bytes())?;
        let inner = analyze(&case, &AnalysisConfig::default())?;
        out.write(Box::into_raw(Box::new(CephAnalysis { inner })));
        Ok(())
    })
}

/// # Safety
/// `analysis` must be null or a handle from [`ceph_analysis_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_free(analysis: *mut CephAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Value of one measurement by its identifier, e.g. `"ANB"`. Degrees or millimetres.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_measurement(
    analysis: *const CephAnalysis,
    id: *const c_char,
    out: *mut f64,
) -> CephStatus {
    guard(|| {
        let a = handle(analysis)?;
        let id: MeasurementId = parse_arg(read_str(id, "id")?)?;
        let value = a
            .value(id)
            .ok_or_else(|| Failure::new(CephStatus::NotComputed, format!("{} was not computed", id.as_str())))?;
        write_out(out, value)
    })
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_sagittal_class(
    analysis: *const CephAnalysis,
    out: *mut CephSagittalClass,
) -> CephStatus {
    guard(|| {
        let a = handle(analysis)?;
        let class = match a.classification.sagittal {
            None => CephSagittalClass::Unavailable,
            Some(SagittalClass::ClassI) => CephSagittalClass::ClassI,
            Some(SagittalClass::ClassII) => CephSagittalClass::ClassII,
            Some(SagittalClass::ClassIII) => CephSagittalClass::ClassIII,
        };
        write_out(out, class)
    })
}

/// Full analysis as pretty JSON.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_to_json(analysis: *const CephAnalysis, out: *mut *mut c_char) -> CephStatus {
    guard(|| {
        let a = handle(analysis)?;
        write_out(out, to_c_string(a.to_json())?)
    })
}

/// Diagnostic report. `lang` is `"en"` or `"zh"`; `format` is `"text"`,
/// `"markdown"` or `"structured"`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_report(
    analysis: *const CephAnalysis,
    lang: *const c_char,
    format: *const c_char,
    out: *mut *mut c_char,
) -> CephStatus {
    guard(|| {
        let a = handle(analysis)?;
        let lang: Language = parse_arg(read_str(lang, "lang")?)?;
        let format: ReportFormat = parse_arg(read_str(format, "format")?)?;
        let report = a
            .report(lang, &Resources::builtin())
            .map_err(|e| Failure::new(CephStatus::Internal, e.to_string()))?;
        write_out(out, to_c_string(report.render(format))?)
    })
}

/// Instruction-tuning prompt chosen deterministically from `seed`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ceph_analysis_prompt(
    analysis: *const CephAnalysis,
    lang: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> CephStatus {
    guard(|| {
        let a = handle(analysis)?;
        let lang: Language = parse_arg(read_str(lang, "lang")?)?;
        let sample = a
            .prompt(lang, &Resources::builtin(), seed, None)
            .map_err(|e| Failure::new(CephStatus::InvalidArgument, e.to_string()))?;
        write_out(out, to_c_string(sample.text)?)
    })
}

/// Angle in degrees at `(vx, vy)` between the rays to the two other points.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ceph_angle_at_vertex(
    vx: f64,
    vy: f64,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    out: *mut f64,
) -> CephStatus {
    guard(|| {
        let pt = |x, y| Point2::new(x, y).map_err(|e| Failure::new(CephStatus::InvalidArgument, e.to_string()));
        let angle = angle_at_vertex(pt(vx, vy)?, pt(x1, y1)?, pt(x2, y2)?)
            .map_err(|e| Failure::new(CephStatus::Degenerate, e.to_string()))?;
        write_out(out, angle)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ceph_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
