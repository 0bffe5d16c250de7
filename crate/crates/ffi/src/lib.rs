//! C ABI for the anthem analysis pipeline.
//!
//! The surface follows the usual opaque-handle pattern: constructors return
//! a status code and write a handle through an out pointer; handles are
//! freed with their matching `*_free` function; strings returned by this
//! library are heap-allocated and must be released with
//! [`na_string_free`]. On any failure the thread-local error message is
//! retrievable via [`na_last_error_message`].
//!
//! Every entry point catches panics at the boundary and reports them as
//! `NA_STATUS_INTERNAL_PANIC` instead of unwinding into foreign frames.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::{c_char, c_double, size_t};

use anthemetrics::features::{extract_feature_vector, FeatureVector};
use anthemetrics::report::{load_run_config, run_pipeline, ConfigOverrides, RunStatus};
use anthemetrics::score::build_performance;
use anthemetrics::smf::parse_smf;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaStatus {
    Ok = 0,
    /// A required pointer was null or an argument was out of domain.
    InvalidArgument = 1,
    /// The bytes are not a usable Standard MIDI File.
    ParseError = 2,
    /// The file parsed but holds no playable notes.
    EmptyPerformance = 3,
    /// Feature extraction failed (degenerate or out-of-range values).
    FeatureError = 4,
    /// Filesystem or configuration failure.
    IoError = 5,
    /// The pipeline ran but failed partway; see the error message.
    PipelineError = 6,
    /// The pipeline completed with some corpus files dropped.
    PartialSuccess = 7,
    /// A panic was caught at the FFI boundary.
    InternalPanic = 8,
}

/// The eight per-anthem features, in feature-store column order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaFeature {
    MelodicContourMean = 0,
    PitchMode = 1,
    BeatOnsetDensity = 2,
    TempoBpm = 3,
    VelocityMedian = 4,
    NoteDurationMean = 5,
    RestDurationMedian = 6,
    TimeSignatureChanges = 7,
}

/// Opaque handle to one anthem's extracted feature vector.
pub struct NaFeatureSet {
    inner: FeatureVector,
}

fn guard<F: FnOnce() -> NaStatus>(body: F) -> NaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic at FFI boundary".to_string());
            NaStatus::InternalPanic
        }
    }
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn na_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns a copy of the last error message on this thread, or null when no
/// error is recorded. Free the copy with [`na_string_free`].
#[no_mangle]
pub extern "C" fn na_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by an `anthemetrics` function
/// that documents [`na_string_free`] ownership, and not freed before.
#[no_mangle]
pub unsafe extern "C" fn na_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses SMF bytes and extracts the eight-feature vector for `country`.
///
/// On success writes a handle to `out` and returns `NA_STATUS_OK`; the
/// handle must be released with [`na_feature_set_free`].
///
/// # Safety
/// `bytes` must point to `len` readable bytes, `country` to a
/// NUL-terminated string, and `out` to writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn na_features_from_smf(
    bytes: *const u8,
    len: size_t,
    country: *const c_char,
    out: *mut *mut NaFeatureSet,
) -> NaStatus {
    guard(|| {
        if bytes.is_null() || country.is_null() || out.is_null() {
            set_last_error("null pointer argument".to_string());
            return NaStatus::InvalidArgument;
        }
        let data = unsafe { std::slice::from_raw_parts(bytes, len) };
        let country = match unsafe { CStr::from_ptr(country) }.to_str() {
            Ok(s) => s,
            Err(_) => {
                set_last_error("country is not valid UTF-8".to_string());
                return NaStatus::InvalidArgument;
            }
        };
        let smf = match parse_smf(data) {
            Ok(smf) => smf,
            Err(e) => {
                set_last_error(e.to_string());
                return NaStatus::ParseError;
            }
        };
        let (performance, _) = match build_performance(&smf) {
            Ok(p) => p,
            Err(e) => {
                set_last_error(e.to_string());
                return NaStatus::EmptyPerformance;
            }
        };
        match extract_feature_vector(&performance, country) {
            Ok(features) => {
                clear_last_error();
                unsafe {
                    *out = Box::into_raw(Box::new(NaFeatureSet { inner: features }));
                }
                NaStatus::Ok
            }
            Err(e) => {
                set_last_error(e.to_string());
                NaStatus::FeatureError
            }
        }
    })
}

/// Reads one numeric feature from the handle.
///
/// # Safety
/// `set` must be a live handle from [`na_features_from_smf`]; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn na_feature_set_value(
    set: *const NaFeatureSet,
    feature: NaFeature,
    out: *mut c_double,
) -> NaStatus {
    guard(|| {
        if set.is_null() || out.is_null() {
            set_last_error("null pointer argument".to_string());
            return NaStatus::InvalidArgument;
        }
        let values = unsafe { &(*set).inner }.values();
        unsafe {
            *out = values[feature as usize];
        }
        NaStatus::Ok
    })
}

/// The handle's canonical country name; free with [`na_string_free`].
///
/// # Safety
/// `set` must be a live handle from [`na_features_from_smf`].
#[no_mangle]
pub unsafe extern "C" fn na_feature_set_country(set: *const NaFeatureSet) -> *mut c_char {
    if set.is_null() {
        return std::ptr::null_mut();
    }
    let country = unsafe { &(*set).inner }.country.clone();
    CString::new(country)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// The full feature vector as a JSON object; free with [`na_string_free`].
///
/// # Safety
/// `set` must be a live handle from [`na_features_from_smf`].
#[no_mangle]
pub unsafe extern "C" fn na_feature_set_to_json(set: *const NaFeatureSet) -> *mut c_char {
    if set.is_null() {
        return std::ptr::null_mut();
    }
    let json = match serde_json::to_string(unsafe { &(*set).inner }) {
        Ok(json) => json,
        Err(_) => return std::ptr::null_mut(),
    };
    CString::new(json)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Releases a feature-set handle. Null is a no-op.
///
/// # Safety
/// `set` must be a handle from [`na_features_from_smf`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn na_feature_set_free(set: *mut NaFeatureSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Runs the full pipeline from a TOML config file path. Artifacts and the
/// run manifest are written to the configured output directory.
///
/// Returns `NA_STATUS_OK` on a clean run, `NA_STATUS_PARTIAL_SUCCESS` when
/// some corpus files were dropped, and an error status otherwise.
///
/// # Safety
/// `config_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn na_run_pipeline(config_path: *const c_char) -> NaStatus {
    guard(|| {
        if config_path.is_null() {
            set_last_error("null config path".to_string());
            return NaStatus::InvalidArgument;
        }
        let path = match unsafe { CStr::from_ptr(config_path) }.to_str() {
            Ok(s) => Path::new(s),
            Err(_) => {
                set_last_error("config path is not valid UTF-8".to_string());
                return NaStatus::InvalidArgument;
            }
        };
        let config = match load_run_config(Some(path), &ConfigOverrides::default()) {
            Ok(config) => config,
            Err(e) => {
                set_last_error(e.to_string());
                return NaStatus::IoError;
            }
        };
        match run_pipeline(&config) {
            Ok(manifest) => {
                clear_last_error();
                match manifest.status {
                    RunStatus::Success => NaStatus::Ok,
                    RunStatus::Partial => NaStatus::PartialSuccess,
                }
            }
            Err(e) => {
                set_last_error(e.to_string());
                NaStatus::PipelineError
            }
        }
    })
}
