//! C ABI over `ecgforge`.
//!
//! Conventions:
//! - every fallible function returns an [`EcgStatus`]; results go through out
//!   pointers, which are left untouched on failure;
//! - the message of the most recent failure on the calling thread is
//!   available through [`ecg_last_error`];
//! - leads are passed as indices `0..12` in the order
//!   I, II, III, aVR, aVL, aVF, V1..V6;
//! - handles returned by `*_new` / `*_load` / `*_denoise` are owned by the
//!   caller and must be released with the matching `*_free`;
//! - panics never cross the boundary; they surface as [`EcgStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ecgforge::gan::ModelSet;
use ecgforge::metrics::{self, LengthPolicy, PointMetric};
use ecgforge::preprocess::{self, DenoiseConfig, HeartbeatSegment, RPeakConfig, Wavelet};
use ecgforge::{Error, LeadId, PatientId};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Caller-provided buffer too small; the required size was still written.
    BufferTooSmall = 3,
    Io = 4,
    Format = 5,
    MissingModel = 6,
    /// A correlation was undefined (zero variance).
    Undefined = 7,
    Internal = 99,
}

/// Point metric for [`ecg_frechet_distance`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgPointMetric {
    Amplitude = 0,
    TimeAmplitude = 1,
}

/// Opaque single-lead signal.
pub struct EcgSignalHandle(ecgforge::EcgSignal);

/// Opaque set of trained generators loaded from a `train` output directory.
pub struct EcgGeneratorHandle(ModelSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> EcgStatus {
    match e {
        Error::Io { .. } | Error::MissingFile(_) => EcgStatus::Io,
        Error::Format { .. } | Error::Checksum(_) | Error::VersionSkew { .. } => EcgStatus::Format,
        Error::MissingModel(_) => EcgStatus::MissingModel,
        _ => EcgStatus::InvalidArgument,
    }
}

struct Fail(EcgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail(status: EcgStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EcgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            EcgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            EcgStatus::Internal
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(EcgStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(EcgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(fail(EcgStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EcgStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(Path::new(s))
}

fn lead(index: u32) -> Result<LeadId, Fail> {
    LeadId::ALL
        .get(index as usize)
        .copied()
        .ok_or_else(|| fail(EcgStatus::InvalidArgument, format!("lead index {index} out of range 0..12")))
}

/// Copies `src` into a caller buffer of capacity `cap`, always reporting the
/// full length through `len_out`.
unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, cap: usize, len_out: *mut usize) -> Result<(), Fail> {
    *out(len_out, "len_out")? = src.len();
    if src.len() > cap {
        return Err(fail(
            EcgStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(fail(EcgStatus::NullPointer, "buffer is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ecg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or an empty string. Valid
/// until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ecg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of lead `index` ("I" .. "V6"), or null when out of range.
#[no_mangle]
pub extern "C" fn ecg_lead_name(index: u32) -> *const c_char {
    const NAMES: [&str; 12] = [
        "I\0", "II\0", "III\0", "aVR\0", "aVL\0", "aVF\0", "V1\0", "V2\0", "V3\0", "V4\0", "V5\0", "V6\0",
    ];
    NAMES.get(index as usize).map_or(ptr::null(), |n| n.as_ptr().cast())
}

/// Discrete Fréchet distance between two sequences.
///
/// # Safety
/// `s` and `q` must point to `ns` and `nq` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_frechet_distance(
    s: *const f64,
    ns: usize,
    q: *const f64,
    nq: usize,
    metric: EcgPointMetric,
    result: *mut f64,
) -> EcgStatus {
    guard(|| {
        let m = match metric {
            EcgPointMetric::Amplitude => PointMetric::Amplitude,
            EcgPointMetric::TimeAmplitude => PointMetric::TimeAmplitude,
        };
        let d = metrics::frechet_distance(slice(s, ns, "s")?, slice(q, nq, "q")?, m)?;
        *out(result, "result")? = d;
        Ok(())
    })
}

/// Inner product of `q` and `s`. Unequal lengths are an error unless
/// `zero_pad` is true, in which case the shorter input is zero-padded.
///
/// # Safety
/// `q` and `s` must point to `nq` and `ns` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_cross_correlation(
    q: *const f64,
    nq: usize,
    s: *const f64,
    ns: usize,
    zero_pad: bool,
    result: *mut f64,
) -> EcgStatus {
    guard(|| {
        let policy = if zero_pad { LengthPolicy::ZeroPad } else { LengthPolicy::Exact };
        let r = metrics::cross_correlation(slice(q, nq, "q")?, slice(s, ns, "s")?, policy)?;
        *out(result, "result")? = r;
        Ok(())
    })
}

/// Auto-correlation of `q` at a non-negative `shift`.
///
/// # Safety
/// `q` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_auto_correlation(q: *const f64, n: usize, shift: usize, result: *mut f64) -> EcgStatus {
    guard(|| {
        let r = metrics::auto_correlation(slice(q, n, "q")?, shift)?;
        *out(result, "result")? = r;
        Ok(())
    })
}

/// Pearson correlation of two equal-length sequences. Returns
/// [`EcgStatus::Undefined`] when either has zero variance.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_pearson(a: *const f64, b: *const f64, n: usize, result: *mut f64) -> EcgStatus {
    guard(|| match metrics::pearson(slice(a, n, "a")?, slice(b, n, "b")?)? {
        Some(r) => {
            *out(result, "result")? = r;
            Ok(())
        }
        None => Err(fail(EcgStatus::Undefined, "zero-variance input")),
    })
}

/// Min-max normalises `n` samples in place onto `[0, 1]`.
///
/// # Safety
/// `x` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_normalize(x: *mut f64, n: usize) -> EcgStatus {
    guard(|| {
        let data = slice(x, n, "x")?;
        let scaled = preprocess::normalize(data);
        if n > 0 {
            ptr::copy_nonoverlapping(scaled.as_ptr(), x, n);
        }
        Ok(())
    })
}

/// Creates a signal from `n` samples.
///
/// # Safety
/// `samples` must point to `n` readable doubles; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_new(
    lead_index: u32,
    sampling_rate_hz: f64,
    samples: *const f64,
    n: usize,
    handle: *mut *mut EcgSignalHandle,
) -> EcgStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let data = slice(samples, n, "samples")?.to_vec();
        let sig = ecgforge::EcgSignal::new(lead(lead_index)?, data, sampling_rate_hz, PatientId::from("ffi"))?;
        *slot = Box::into_raw(Box::new(EcgSignalHandle(sig)));
        Ok(())
    })
}

/// Reads a binary signal file.
///
/// # Safety
/// `file` must be a NUL-terminated UTF-8 path; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_read(file: *const c_char, handle: *mut *mut EcgSignalHandle) -> EcgStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let sig = ecgforge::signal::read_signal(path(file)?, PatientId::from("ffi"))?;
        *slot = Box::into_raw(Box::new(EcgSignalHandle(sig)));
        Ok(())
    })
}

/// Releases a signal. Null is ignored.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_free(handle: *mut EcgSignalHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_len(handle: *const EcgSignalHandle) -> usize {
    handle.as_ref().map_or(0, |h| h.0.len())
}

/// Copies the samples into `buf`.
///
/// # Safety
/// `handle` must be valid; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_samples(
    handle: *const EcgSignalHandle,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> EcgStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| fail(EcgStatus::NullPointer, "handle is null"))?;
        fill(&h.0.samples, buf, cap, len_out)
    })
}

/// Wavelet-denoises a signal into a new handle. `wavelet_order` is 2, 4 or 8
/// (0 selects the default); `levels` 0 selects the default.
///
/// # Safety
/// `handle` must be valid; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_denoise(
    handle: *const EcgSignalHandle,
    wavelet_order: u32,
    levels: u32,
    result: *mut *mut EcgSignalHandle,
) -> EcgStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| fail(EcgStatus::NullPointer, "handle is null"))?;
        let slot = out(result, "result")?;
        let mut cfg = DenoiseConfig::default();
        if wavelet_order != 0 {
            cfg.wavelet = Wavelet::from_order(wavelet_order as usize)?;
        }
        if levels != 0 {
            cfg.n_filters = levels as usize;
        }
        let sig = preprocess::denoise(&h.0, &cfg)?;
        *slot = Box::into_raw(Box::new(EcgSignalHandle(sig)));
        Ok(())
    })
}

/// Detects R peaks with default settings and writes their sample indices.
///
/// # Safety
/// `handle` must be valid; `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ecg_signal_r_peaks(
    handle: *const EcgSignalHandle,
    buf: *mut usize,
    cap: usize,
    len_out: *mut usize,
) -> EcgStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| fail(EcgStatus::NullPointer, "handle is null"))?;
        let peaks = preprocess::detect_r_peaks(&h.0, &RPeakConfig::default());
        fill(&peaks, buf, cap, len_out)
    })
}

/// Loads the epoch-selected generators from a `train` output directory.
///
/// # Safety
/// `dir` must be a NUL-terminated UTF-8 path; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecg_generator_load(dir: *const c_char, handle: *mut *mut EcgGeneratorHandle) -> EcgStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let set = ModelSet::load(path(dir)?)?;
        *slot = Box::into_raw(Box::new(EcgGeneratorHandle(set)));
        Ok(())
    })
}

/// Releases a generator set. Null is ignored.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ecg_generator_free(handle: *mut EcgGeneratorHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Beat length the generators were trained on, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn ecg_generator_beat_len(handle: *const EcgGeneratorHandle) -> usize {
    handle.as_ref().map_or(0, |h| h.0.info.target_len)
}

/// Generates the `target_lead` beat from one normalised source beat of at
/// most `ecg_generator_beat_len` samples in `[0, 1]`. The output always has
/// `ecg_generator_beat_len` samples.
///
/// # Safety
/// `handle` must be valid; `beat` must hold `n` doubles; `buf` must hold
/// `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ecg_generator_generate(
    handle: *mut EcgGeneratorHandle,
    source_lead: u32,
    target_lead: u32,
    beat: *const f64,
    n: usize,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> EcgStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| fail(EcgStatus::NullPointer, "handle is null"))?;
        let src = lead(source_lead)?;
        let tgt = lead(target_lead)?;
        let input = slice(beat, n, "beat")?;
        if input.is_empty() {
            return Err(fail(EcgStatus::InvalidArgument, "empty beat"));
        }
        let seg = HeartbeatSegment::new(PatientId::from("ffi"), src, 0, input, h.0.info.target_len, 0)?;
        let generated = if src == tgt {
            seg.samples().to_vec()
        } else {
            h.0.generator_for(tgt)?.generate(&[seg.samples()], &[src])?.remove(0)
        };
        fill(&generated, buf, cap, len_out)
    })
}
