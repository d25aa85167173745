//! C interface to the akgeo library: run the analysis pipeline on a family
//! point or a JSON manifold description, then read curvature, classification,
//! and plurigenus data through an opaque handle.
//!
//! Every function returns an `AkgeoStatus`; results go through out-pointers.
//! On any failure a thread-local message is set, readable via
//! `akgeo_last_error`. Handles are freed with `akgeo_analysis_free`, strings
//! from this library with `akgeo_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use akgeo::cli_report::{
    build_report, report_json, run_pipeline, spec_from_file, ManifoldSpecFile, PipelineOptions,
    PipelineOutput,
};
use akgeo::model_families::{kodaira_thurston, nakamura, KodairaDimension};
use akgeo::plurigenus_analysis::plurigenus_with_bound;

/// Result of every C-visible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AkgeoStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Malformed input: bad UTF-8, bad JSON, or parameters outside the
    /// admissible domain.
    InvalidArgument = 2,
    /// The geometry pipeline reported an error; see `akgeo_last_error`.
    ComputeFailed = 3,
    /// An output buffer is smaller than the required element count.
    BufferTooSmall = 4,
    /// The handle has no data of the requested kind (for example plurigenera
    /// of a manifold outside the deformation family).
    Unsupported = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Analysis results behind an opaque pointer.
pub struct AkgeoAnalysis {
    output: PipelineOutput,
}

fn guard(body: impl FnOnce() -> AkgeoStatus) -> AkgeoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            AkgeoStatus::Panic
        }
    }
}

fn finish_analysis(
    spec: Result<akgeo::model_families::AlmostHermitianSpec, akgeo::AkgeoError>,
    out: *mut *mut AkgeoAnalysis,
) -> AkgeoStatus {
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            set_error(&e.to_string());
            return AkgeoStatus::InvalidArgument;
        }
    };
    match run_pipeline(&spec, &PipelineOptions::default()) {
        Ok(output) => {
            let handle = Box::new(AkgeoAnalysis { output });
            unsafe { *out = Box::into_raw(handle) };
            AkgeoStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            AkgeoStatus::ComputeFailed
        }
    }
}

/// Analyzes the 4-dimensional nilmanifold family member with parameter `a`.
///
/// # Safety
/// `out` must be a valid pointer to an `AkgeoAnalysis*`; on success it
/// receives a handle that must be released with `akgeo_analysis_free`.
#[no_mangle]
pub unsafe extern "C" fn akgeo_analyze_kodaira_thurston(
    a: f64,
    out: *mut *mut AkgeoAnalysis,
) -> AkgeoStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    guard(|| finish_analysis(kodaira_thurston(a), out))
}

/// Analyzes the 6-dimensional deformed quotient at parameters `t[0..4]`.
///
/// # Safety
/// `t` must point to four doubles; `out` must be a valid pointer to an
/// `AkgeoAnalysis*` and receives a handle to free with
/// `akgeo_analysis_free`.
#[no_mangle]
pub unsafe extern "C" fn akgeo_analyze_nakamura(
    t: *const f64,
    out: *mut *mut AkgeoAnalysis,
) -> AkgeoStatus {
    if t.is_null() || out.is_null() {
        set_error("argument pointer is null");
        return AkgeoStatus::NullArgument;
    }
    let params = unsafe { [*t, *t.add(1), *t.add(2), *t.add(3)] };
    guard(|| finish_analysis(nakamura(params), out))
}

/// Analyzes a manifold given as a JSON description (same schema as the CLI
/// accepts from files).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer to
/// an `AkgeoAnalysis*` and receives a handle to free with
/// `akgeo_analysis_free`.
#[no_mangle]
pub unsafe extern "C" fn akgeo_analyze_json(
    json: *const c_char,
    out: *mut *mut AkgeoAnalysis,
) -> AkgeoStatus {
    if json.is_null() || out.is_null() {
        set_error("argument pointer is null");
        return AkgeoStatus::NullArgument;
    }
    let text = match unsafe { CStr::from_ptr(json) }.to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("description is not valid UTF-8");
            return AkgeoStatus::InvalidArgument;
        }
    };
    guard(move || {
        let file: ManifoldSpecFile = match serde_json::from_str(&text) {
            Ok(f) => f,
            Err(e) => {
                set_error(&format!("invalid JSON: {e}"));
                return AkgeoStatus::InvalidArgument;
            }
        };
        finish_analysis(spec_from_file(file), out)
    })
}

/// Releases a handle. Passing null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer obtained from an analyze call that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn akgeo_analysis_free(handle: *mut AkgeoAnalysis) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

unsafe fn borrow<'a>(handle: *const AkgeoAnalysis) -> Option<&'a AkgeoAnalysis> {
    unsafe { handle.as_ref() }
}

/// Real dimension of the analyzed quotient.
///
/// # Safety
/// `handle` must be a live analysis handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akgeo_dimension(
    handle: *const AkgeoAnalysis,
    out: *mut usize,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    unsafe { *out = analysis.output.spec.algebra.dim() };
    AkgeoStatus::Ok
}

/// Classification flags, written as 0/1 into any non-null out-pointers.
///
/// # Safety
/// `handle` must be a live analysis handle; each out-pointer is either null
/// (skipped) or valid.
#[no_mangle]
pub unsafe extern "C" fn akgeo_classification(
    handle: *const AkgeoAnalysis,
    integrable: *mut i32,
    almost_kahler: *mut i32,
    quasi_kahler: *mut i32,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    let flags = &analysis.output.flags;
    unsafe {
        if !integrable.is_null() {
            *integrable = i32::from(flags.integrable);
        }
        if !almost_kahler.is_null() {
            *almost_kahler = i32::from(flags.almost_kahler);
        }
        if !quasi_kahler.is_null() {
            *quasi_kahler = i32::from(flags.quasi_kahler);
        }
    }
    AkgeoStatus::Ok
}

/// Scalar curvature of the canonical connection in the real trace
/// convention.
///
/// # Safety
/// `handle` must be a live analysis handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akgeo_scalar_real(
    handle: *const AkgeoAnalysis,
    out: *mut f64,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    unsafe { *out = analysis.output.real_curvature.scal_real };
    AkgeoStatus::Ok
}

/// Scalar curvature contracted in the unitary frame.
///
/// # Safety
/// `handle` must be a live analysis handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akgeo_scalar_complex(
    handle: *const AkgeoAnalysis,
    out: *mut f64,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    unsafe { *out = analysis.output.complex_curvature.scal_complex };
    AkgeoStatus::Ok
}

/// Copies the real Ricci matrix row-major into `buffer` (`len` doubles,
/// needs `dim * dim`).
///
/// # Safety
/// `handle` must be a live analysis handle and `buffer` must point to at
/// least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn akgeo_ricci_real(
    handle: *const AkgeoAnalysis,
    buffer: *mut f64,
    len: usize,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if buffer.is_null() {
        set_error("buffer is null");
        return AkgeoStatus::NullArgument;
    }
    let ricci = &analysis.output.real_curvature.ricci_real;
    let dim = ricci.nrows();
    if len < dim * dim {
        set_error(&format!("buffer holds {len} doubles, need {}", dim * dim));
        return AkgeoStatus::BufferTooSmall;
    }
    for r in 0..dim {
        for c in 0..dim {
            unsafe { *buffer.add(r * dim + c) = ricci[(r, c)] };
        }
    }
    AkgeoStatus::Ok
}

/// Copies the complex Ricci matrix row-major into `re`/`im` (`len` doubles
/// each, needs `n * n` where `n = dim / 2`).
///
/// # Safety
/// `handle` must be a live analysis handle; `re` and `im` must each point to
/// at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn akgeo_ricci_complex(
    handle: *const AkgeoAnalysis,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if re.is_null() || im.is_null() {
        set_error("buffer is null");
        return AkgeoStatus::NullArgument;
    }
    let ricci = &analysis.output.complex_curvature.ricci_complex;
    let n = ricci.nrows();
    if len < n * n {
        set_error(&format!("buffer holds {len} doubles, need {}", n * n));
        return AkgeoStatus::BufferTooSmall;
    }
    for r in 0..n {
        for c in 0..n {
            unsafe {
                *re.add(r * n + c) = ricci[(r, c)].re;
                *im.add(r * n + c) = ricci[(r, c)].im;
            }
        }
    }
    AkgeoStatus::Ok
}

/// The m-th plurigenus (0 or 1). Only deformation-family manifolds carry
/// plurigenus data; anything else returns `Unsupported`.
///
/// # Safety
/// `handle` must be a live analysis handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akgeo_plurigenus(
    handle: *const AkgeoAnalysis,
    m: u32,
    out: *mut u8,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    let Some(def) = analysis.output.spec.deformation() else {
        set_error("plurigenera are only defined for the deformation family");
        return AkgeoStatus::Unsupported;
    };
    guard(|| {
        let result = analysis
            .output
            .plurigenus
            .as_ref()
            .and_then(|r| r.per_m.get(&m).copied())
            .map_or_else(
                || plurigenus_with_bound(def, m, akgeo::plurigenus_analysis::DEFAULT_MODE_BOUND),
                Ok,
            );
        match result {
            Ok(p) => {
                unsafe { *out = p };
                AkgeoStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                AkgeoStatus::ComputeFailed
            }
        }
    })
}

/// Kodaira dimension: 0 stays 0, minus infinity is encoded as `INT32_MIN`.
/// Only defined for the deformation family.
///
/// # Safety
/// `handle` must be a live analysis handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn akgeo_kodaira_dimension(
    handle: *const AkgeoAnalysis,
    out: *mut i32,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    let Some(result) = analysis.output.plurigenus.as_ref() else {
        set_error("Kodaira dimension is only computed for the deformation family");
        return AkgeoStatus::Unsupported;
    };
    unsafe {
        *out = match result.kappa {
            KodairaDimension::Zero => 0,
            KodairaDimension::MinusInfinity => i32::MIN,
        };
    }
    AkgeoStatus::Ok
}

/// Full JSON report, allocated by this library; release it with
/// `akgeo_string_free`.
///
/// # Safety
/// `handle` must be a live analysis handle and `out` a valid pointer to a
/// `char*`.
#[no_mangle]
pub unsafe extern "C" fn akgeo_report_json(
    handle: *const AkgeoAnalysis,
    out: *mut *mut c_char,
) -> AkgeoStatus {
    let Some(analysis) = (unsafe { borrow(handle) }) else {
        set_error("handle is null");
        return AkgeoStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AkgeoStatus::NullArgument;
    }
    guard(|| {
        let json = report_json(&build_report(&analysis.output, None));
        match CString::new(json) {
            Ok(s) => {
                unsafe { *out = s.into_raw() };
                AkgeoStatus::Ok
            }
            Err(_) => {
                set_error("report contained an interior NUL byte");
                AkgeoStatus::ComputeFailed
            }
        }
    })
}

/// Frees a string returned by this library. Passing null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer returned by `akgeo_report_json` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn akgeo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn akgeo_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn analyze_kt(a: f64) -> *mut AkgeoAnalysis {
        let mut handle: *mut AkgeoAnalysis = ptr::null_mut();
        let status = unsafe { akgeo_analyze_kodaira_thurston(a, &mut handle) };
        assert_eq!(status, AkgeoStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn kodaira_thurston_round_trip() {
        let handle = analyze_kt(2.0);
        let mut dim = 0usize;
        assert_eq!(
            unsafe { akgeo_dimension(handle, &mut dim) },
            AkgeoStatus::Ok
        );
        assert_eq!(dim, 4);

        let mut scal = 0.0f64;
        assert_eq!(
            unsafe { akgeo_scalar_real(handle, &mut scal) },
            AkgeoStatus::Ok
        );
        assert!((scal + 0.5).abs() < 1e-12);

        let mut ricci = [0.0f64; 16];
        assert_eq!(
            unsafe { akgeo_ricci_real(handle, ricci.as_mut_ptr(), ricci.len()) },
            AkgeoStatus::Ok
        );
        assert!((ricci[10] + 1.5).abs() < 1e-12);
        assert!((ricci[15] - 1.0).abs() < 1e-12);

        let mut short = [0.0f64; 4];
        assert_eq!(
            unsafe { akgeo_ricci_real(handle, short.as_mut_ptr(), short.len()) },
            AkgeoStatus::BufferTooSmall
        );

        let (mut integrable, mut ak, mut qk) = (-1i32, -1i32, -1i32);
        assert_eq!(
            unsafe { akgeo_classification(handle, &mut integrable, &mut ak, &mut qk) },
            AkgeoStatus::Ok
        );
        assert_eq!((integrable, ak, qk), (0, 1, 1));

        // Not a deformation-family point: no plurigenus data.
        let mut p = 0u8;
        assert_eq!(
            unsafe { akgeo_plurigenus(handle, 1, &mut p) },
            AkgeoStatus::Unsupported
        );

        unsafe { akgeo_analysis_free(handle) };
    }

    #[test]
    fn nakamura_kodaira_dimension_both_sides() {
        let on_wall = [0.0f64, 0.0, 0.0, 0.0];
        let mut handle: *mut AkgeoAnalysis = ptr::null_mut();
        assert_eq!(
            unsafe { akgeo_analyze_nakamura(on_wall.as_ptr(), &mut handle) },
            AkgeoStatus::Ok
        );
        let mut kappa = 7i32;
        assert_eq!(
            unsafe { akgeo_kodaira_dimension(handle, &mut kappa) },
            AkgeoStatus::Ok
        );
        assert_eq!(kappa, 0);
        let mut p = 9u8;
        assert_eq!(
            unsafe { akgeo_plurigenus(handle, 12, &mut p) },
            AkgeoStatus::Ok
        );
        assert_eq!(p, 1);
        unsafe { akgeo_analysis_free(handle) };

        let off_wall = [0.1f64, -0.2, 0.25, 0.15];
        assert_eq!(
            unsafe { akgeo_analyze_nakamura(off_wall.as_ptr(), &mut handle) },
            AkgeoStatus::Ok
        );
        assert_eq!(
            unsafe { akgeo_kodaira_dimension(handle, &mut kappa) },
            AkgeoStatus::Ok
        );
        assert_eq!(kappa, i32::MIN);
        let mut scal = 1.0f64;
        assert_eq!(
            unsafe { akgeo_scalar_complex(handle, &mut scal) },
            AkgeoStatus::Ok
        );
        assert!(scal.abs() < 1e-12);
        unsafe { akgeo_analysis_free(handle) };
    }

    #[test]
    fn json_description_and_report() {
        let json = CString::new(r#"{"family": "kodaira_thurston", "a": 1.0}"#).unwrap();
        let mut handle: *mut AkgeoAnalysis = ptr::null_mut();
        assert_eq!(
            unsafe { akgeo_analyze_json(json.as_ptr(), &mut handle) },
            AkgeoStatus::Ok
        );
        let mut report: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { akgeo_report_json(handle, &mut report) },
            AkgeoStatus::Ok
        );
        let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap();
        assert!(text.contains("\"scal_real\": -0.125"));
        unsafe { akgeo_string_free(report) };
        unsafe { akgeo_analysis_free(handle) };
    }

    #[test]
    fn errors_set_messages_and_statuses() {
        let mut handle: *mut AkgeoAnalysis = ptr::null_mut();
        assert_eq!(
            unsafe { akgeo_analyze_kodaira_thurston(2.0, ptr::null_mut()) },
            AkgeoStatus::NullArgument
        );
        assert_eq!(
            unsafe { akgeo_analyze_kodaira_thurston(-1.0, &mut handle) },
            AkgeoStatus::InvalidArgument
        );
        let bad = CString::new("{ nope").unwrap();
        assert_eq!(
            unsafe { akgeo_analyze_json(bad.as_ptr(), &mut handle) },
            AkgeoStatus::InvalidArgument
        );
        let message = unsafe { CStr::from_ptr(akgeo_last_error()) }
            .to_str()
            .unwrap();
        assert!(message.contains("JSON"));

        let out_of_domain = [0.9f64, 0.9, 0.0, 0.0];
        assert_eq!(
            unsafe { akgeo_analyze_nakamura(out_of_domain.as_ptr(), &mut handle) },
            AkgeoStatus::InvalidArgument
        );
    }
}
