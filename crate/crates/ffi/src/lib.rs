//! C ABI over `seqpp`.
//!
//! Models and point sequences are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns a
//! [`SeqppStatus`]; the message for the last failure on the calling thread
//! is available from [`seqpp_last_error`].
//!
//! Points cross the boundary as parallel arrays `xs`, `ys` and `radii`.
//! `radii` may be NULL for unmarked points; a NaN radius also means "no mark".

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use seqpp::config::{build_model, ModelConfig, RunConfig};
use seqpp::model::{seq_conditional_intensity, Model};
use seqpp::samplers::{bd_simulate, mh_run, BdConfig, MhConfig};
use seqpp::{Error, Mark, MarkedPoint, PointSequence};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Argument = 3,
    Numeric = 4,
    Contract = 5,
    Domain = 6,
    Capacity = 7,
    Lookup = 8,
    Unsupported = 9,
    Degenerate = 10,
    Config = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for SeqppStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Argument(_) => SeqppStatus::Argument,
            Error::Numeric { .. } => SeqppStatus::Numeric,
            Error::ModelContract(_) => SeqppStatus::Contract,
            Error::Domain(_) => SeqppStatus::Domain,
            Error::Capacity { .. } => SeqppStatus::Capacity,
            Error::Lookup(_) => SeqppStatus::Lookup,
            Error::Unsupported(_) => SeqppStatus::Unsupported,
            Error::Degenerate(_) => SeqppStatus::Degenerate,
            Error::Config(_) | Error::Json(_) => SeqppStatus::Config,
            Error::Io(_) => SeqppStatus::Io,
        }
    }
}

/// Opaque model handle.
pub struct SeqppModel {
    inner: Arc<dyn Model>,
}

/// Opaque point sequence handle.
pub struct SeqppSequence {
    inner: PointSequence,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SeqppStatus, msg: impl Into<String>) -> SeqppStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), SeqppStatus>) -> SeqppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeqppStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SeqppStatus::Panic, "panic inside seqpp"),
    }
}

fn lift<T>(r: seqpp::Result<T>) -> Result<T, SeqppStatus> {
    r.map_err(|e| fail(SeqppStatus::from(&e), e.to_string()))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SeqppStatus> {
    if s.is_null() {
        return Err(fail(SeqppStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(SeqppStatus::InvalidUtf8, e.to_string()))
}

unsafe fn model_ref<'a>(m: *const SeqppModel) -> Result<&'a SeqppModel, SeqppStatus> {
    m.as_ref().ok_or_else(|| fail(SeqppStatus::NullPointer, "null model"))
}

fn mark_of(r: f64) -> Mark {
    if r.is_nan() {
        Mark::None
    } else {
        Mark::Radius(r)
    }
}

unsafe fn read_points(
    xs: *const f64,
    ys: *const f64,
    radii: *const f64,
    n: usize,
) -> Result<PointSequence, SeqppStatus> {
    if n == 0 {
        return Ok(PointSequence::empty());
    }
    if xs.is_null() || ys.is_null() {
        return Err(fail(SeqppStatus::NullPointer, "null coordinate array"));
    }
    let xs = std::slice::from_raw_parts(xs, n);
    let ys = std::slice::from_raw_parts(ys, n);
    let radii = (!radii.is_null()).then(|| std::slice::from_raw_parts(radii, n));
    Ok((0..n)
        .map(|i| MarkedPoint::new(xs[i], ys[i], radii.map_or(Mark::None, |r| mark_of(r[i]))))
        .collect())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), SeqppStatus> {
    if out.is_null() {
        return Err(fail(SeqppStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn seqpp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn seqpp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from the JSON of a `"model"` object, e.g.
/// `{"kind": "softcore", ...}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seqpp_model_from_json(json: *const c_char, out: *mut *mut SeqppModel) -> SeqppStatus {
    guard(|| {
        let text = read_str(json)?;
        let cfg: ModelConfig = serde_json::from_str(text).map_err(|e| fail(SeqppStatus::Config, e.to_string()))?;
        let inner = lift(build_model(&cfg, None))?;
        write_out(out, Box::into_raw(Box::new(SeqppModel { inner })))
    })
}

/// # Safety
/// `model` must come from [`seqpp_model_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn seqpp_model_free(model: *mut SeqppModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes `log f(y)`; zero density is `-inf`.
///
/// # Safety
/// Arrays must hold `n` readable doubles (`radii` may be NULL).
#[no_mangle]
pub unsafe extern "C" fn seqpp_log_density(
    model: *const SeqppModel,
    xs: *const f64,
    ys: *const f64,
    radii: *const f64,
    n: usize,
    out: *mut f64,
) -> SeqppStatus {
    guard(|| {
        let m = model_ref(model)?;
        let seq = read_points(xs, ys, radii, n)?;
        let v = lift(m.inner.log_density(&seq))?;
        write_out(out, v)
    })
}

/// Writes the sequential conditional intensity of inserting `(ux, uy, ur)`
/// at 1-based `position` in `y`.
///
/// # Safety
/// Arrays must hold `n` readable doubles (`radii` may be NULL).
#[no_mangle]
pub unsafe extern "C" fn seqpp_conditional_intensity(
    model: *const SeqppModel,
    xs: *const f64,
    ys: *const f64,
    radii: *const f64,
    n: usize,
    position: usize,
    ux: f64,
    uy: f64,
    ur: f64,
    out: *mut f64,
) -> SeqppStatus {
    guard(|| {
        let m = model_ref(model)?;
        let seq = read_points(xs, ys, radii, n)?;
        let u = MarkedPoint::new(ux, uy, mark_of(ur));
        let v = lift(seq_conditional_intensity(m.inner.as_ref(), &seq, position, &u))?;
        write_out(out, v)
    })
}

/// Declared local stability bound, or NaN when the model declares none.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqpp_model_stability_bound(model: *const SeqppModel, out: *mut f64) -> SeqppStatus {
    guard(|| {
        let m = model_ref(model)?;
        write_out(out, m.inner.local_stability_bound().unwrap_or(f64::NAN))
    })
}

/// Runs `steps` Metropolis-Hastings steps from the empty sequence and
/// returns the final state.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seqpp_mh_run(
    model: *const SeqppModel,
    steps: u64,
    seed: u64,
    out: *mut *mut SeqppSequence,
) -> SeqppStatus {
    guard(|| {
        let m = model_ref(model)?;
        let mut cfg = MhConfig::new(steps, seed);
        cfg.record_every = 0;
        let trace = lift(mh_run(m.inner.as_ref(), &cfg))?;
        write_out(
            out,
            Box::into_raw(Box::new(SeqppSequence {
                inner: trace.final_state,
            })),
        )
    })
}

/// Runs the birth-death process to `t_max` from the empty sequence. A
/// non-positive or NaN `beta` uses the model's declared bound.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seqpp_bd_run(
    model: *const SeqppModel,
    beta: f64,
    t_max: f64,
    seed: u64,
    out: *mut *mut SeqppSequence,
) -> SeqppStatus {
    guard(|| {
        let m = model_ref(model)?;
        let beta = if beta > 0.0 {
            beta
        } else {
            m.inner
                .local_stability_bound()
                .ok_or_else(|| fail(SeqppStatus::Argument, "model declares no stability bound; pass beta"))?
        };
        let mut cfg = BdConfig::new(beta, t_max, seed);
        cfg.record_events = false;
        let trace = lift(bd_simulate(m.inner.as_ref(), &cfg))?;
        write_out(
            out,
            Box::into_raw(Box::new(SeqppSequence {
                inner: trace.final_state,
            })),
        )
    })
}

/// Number of points in `seq`; 0 for NULL.
///
/// # Safety
/// `seq` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqpp_sequence_len(seq: *const SeqppSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.inner.len())
}

/// Reads the point at 0-based `index`. Unmarked points report a NaN radius.
///
/// # Safety
/// `seq` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn seqpp_sequence_get(
    seq: *const SeqppSequence,
    index: usize,
    x: *mut f64,
    y: *mut f64,
    radius: *mut f64,
) -> SeqppStatus {
    guard(|| {
        let s = seq
            .as_ref()
            .ok_or_else(|| fail(SeqppStatus::NullPointer, "null sequence"))?;
        let p = s
            .inner
            .get(index + 1)
            .ok_or_else(|| fail(SeqppStatus::Argument, format!("index {index} out of range")))?;
        write_out(x, p.x)?;
        write_out(y, p.y)?;
        write_out(radius, p.mark.radius().unwrap_or(f64::NAN))
    })
}

/// # Safety
/// `seq` must come from a run function and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn seqpp_sequence_free(seq: *mut SeqppSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Runs the exact oracle checks for a full run configuration (JSON) and
/// returns the report as a JSON string, to be released with
/// [`seqpp_string_free`]. `passed` receives 1 when every check passed.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn seqpp_validate(
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    passed: *mut i32,
) -> SeqppStatus {
    guard(|| {
        let cfg = lift(RunConfig::from_json(read_str(config_json)?))?;
        let report = lift(seqpp::run::validate(&cfg))?;
        let text = serde_json::to_string(&report).map_err(|e| fail(SeqppStatus::Config, e.to_string()))?;
        let c = CString::new(text).map_err(|e| fail(SeqppStatus::InvalidUtf8, e.to_string()))?;
        write_out(passed, i32::from(report.passed))?;
        write_out(report_json, c.into_raw())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn seqpp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
