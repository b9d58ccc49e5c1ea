//! C ABI for the rugscan engine.
//!
//! Every fallible call returns a [`RugscanStatus`]; on failure a message is
//! available from [`rugscan_last_error`] on the same thread. Strings handed
//! out by the library must be released with [`rugscan_string_free`].
//! Records and verdicts cross the boundary as JSON in the fixture schema.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rugscan::config::{FileConfig, Overrides, RunConfig};
use rugscan::eval::{compute_metrics, Confusion, LabeledDataset, Metrics};
use rugscan::ingest::{read_record, Cache, IngestError, Ingestor, RetryPolicy};
use rugscan::report::{prediction_json, read_jsonl};
use rugscan::{classify, DetectorParams};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RugscanStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    /// No data source configured, or the source failed.
    SourceError = 5,
    DetectError = 6,
    Panic = 7,
}

/// Detector thresholds. Obtain defaults from [`rugscan_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RugscanParams {
    pub tau_active: f64,
    pub tau_down: f64,
    pub detection_window_hours: f64,
    pub post_remove_window_hours: f64,
}

impl From<RugscanParams> for DetectorParams {
    fn from(p: RugscanParams) -> Self {
        DetectorParams {
            tau_active: p.tau_active,
            tau_down: p.tau_down,
            detection_window_hours: p.detection_window_hours,
            post_remove_window_hours: p.post_remove_window_hours,
        }
    }
}

impl From<DetectorParams> for RugscanParams {
    fn from(p: DetectorParams) -> Self {
        RugscanParams {
            tau_active: p.tau_active,
            tau_down: p.tau_down,
            detection_window_hours: p.detection_window_hours,
            post_remove_window_hours: p.post_remove_window_hours,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RugscanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub applicability: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub undecided: usize,
}

impl From<Metrics> for RugscanMetrics {
    fn from(m: Metrics) -> Self {
        RugscanMetrics {
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            applicability: m.applicability,
            tp: m.confusion.tp,
            fp: m.confusion.fp,
            tn: m.confusion.tn,
            fn_: m.confusion.fn_,
            undecided: m.confusion.undecided,
        }
    }
}

/// Opaque engine: detector parameters plus an optional data source.
/// Calls that only read the engine may run concurrently from several
/// threads; `rugscan_engine_set_source` and `rugscan_engine_free` may not.
pub struct RugscanEngine {
    params: DetectorParams,
    ingestor: Option<Ingestor>,
}

struct Failure(RugscanStatus, String);

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> RugscanStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RugscanStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RugscanStatus::Panic
        }
    }
}

fn fail<T>(status: RugscanStatus, msg: impl std::fmt::Display) -> FfiResult<T> {
    Err(Failure(status, msg.to_string()))
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn arg_str<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(RugscanStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(RugscanStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn opt_str<'a>(p: *const c_char, name: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        arg_str(p, name).map(Some)
    }
}

/// # Safety
/// `out` is null or valid for writes.
unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return fail(RugscanStatus::NullArgument, "output pointer is null");
    }
    let c = CString::new(s).or_else(|_| fail(RugscanStatus::InvalidArgument, "output contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

fn ingest_status(e: &IngestError) -> RugscanStatus {
    match e {
        IngestError::InvalidMint(_) | IngestError::InvalidSource(_) => RugscanStatus::InvalidArgument,
        IngestError::ParseError { .. } => RugscanStatus::ParseError,
        _ => RugscanStatus::SourceError,
    }
}

/// Default detector thresholds.
#[no_mangle]
pub extern "C" fn rugscan_params_default() -> RugscanParams {
    DetectorParams::default().into()
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn rugscan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn rugscan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates an engine. `params` may be null for defaults.
///
/// # Safety
/// `params` is null or points to a valid struct; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rugscan_engine_new(params: *const RugscanParams, out: *mut *mut RugscanEngine) -> RugscanStatus {
    guard(|| {
        if out.is_null() {
            return fail(RugscanStatus::NullArgument, "out is null");
        }
        let params: DetectorParams = if params.is_null() {
            DetectorParams::default()
        } else {
            (*params).into()
        };
        params
            .validate()
            .or_else(|e| fail(RugscanStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(RugscanEngine { params, ingestor: None }));
        Ok(())
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` is null or came from `rugscan_engine_new` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn rugscan_engine_free(engine: *mut RugscanEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Attaches a data source: `rpc`, `explorer` or `fixture:<dir>`.
/// `rpc_url` and `cache_dir` may be null.
///
/// # Safety
/// `engine` is a live engine; strings are null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rugscan_engine_set_source(
    engine: *mut RugscanEngine,
    source: *const c_char,
    rpc_url: *const c_char,
    cache_dir: *const c_char,
) -> RugscanStatus {
    guard(|| {
        let engine = engine
            .as_mut()
            .ok_or(Failure(RugscanStatus::NullArgument, "engine is null".into()))?;
        let overrides = Overrides {
            source: Some(arg_str(source, "source")?.to_string()),
            rpc_url: opt_str(rpc_url, "rpc_url")?.map(str::to_string),
            cache_dir: opt_str(cache_dir, "cache_dir")?.map(Into::into),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&overrides, &FileConfig::default())
            .or_else(|e| fail(RugscanStatus::InvalidArgument, e))?;
        let ing = Ingestor::from_source(
            &cfg.source,
            cfg.cache_dir.map(Cache::new),
            cfg.cache_policy,
            RetryPolicy::default(),
        )
        .or_else(|e| fail(ingest_status(&e), e))?;
        engine.ingestor = Some(ing);
        Ok(())
    })
}

/// Classifies a token record given as JSON and writes the verdict JSON to
/// `*verdict_out`.
///
/// # Safety
/// `engine` is a live engine, `record_json` NUL-terminated, `verdict_out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rugscan_classify_json(
    engine: *const RugscanEngine,
    record_json: *const c_char,
    verdict_out: *mut *mut c_char,
) -> RugscanStatus {
    guard(|| {
        let engine = engine
            .as_ref()
            .ok_or(Failure(RugscanStatus::NullArgument, "engine is null".into()))?;
        let text = arg_str(record_json, "record_json")?;
        let record = read_record(text, None).or_else(|e| fail(RugscanStatus::ParseError, e))?;
        let verdict = classify(&record, &engine.params).or_else(|e| fail(RugscanStatus::DetectError, e))?;
        write_string(verdict_out, prediction_json(&verdict.into()).to_string())
    })
}

/// Fetches `mint` from the engine's source and writes the verdict JSON to
/// `*verdict_out`.
///
/// # Safety
/// As for `rugscan_classify_json`.
#[no_mangle]
pub unsafe extern "C" fn rugscan_scan(
    engine: *const RugscanEngine,
    mint: *const c_char,
    verdict_out: *mut *mut c_char,
) -> RugscanStatus {
    guard(|| {
        let engine = engine
            .as_ref()
            .ok_or(Failure(RugscanStatus::NullArgument, "engine is null".into()))?;
        let mint = arg_str(mint, "mint")?;
        let ing = engine
            .ingestor
            .as_ref()
            .ok_or(Failure(RugscanStatus::SourceError, "no data source set".into()))?;
        let record = ing.fetch_token_bundle(mint).or_else(|e| fail(ingest_status(&e), e))?;
        let verdict = classify(&record, &engine.params).or_else(|e| fail(RugscanStatus::DetectError, e))?;
        write_string(verdict_out, prediction_json(&verdict.into()).to_string())
    })
}

/// Metrics from raw confusion counts.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rugscan_metrics_from_counts(
    tp: usize,
    fp: usize,
    tn: usize,
    fn_: usize,
    out: *mut RugscanMetrics,
) -> RugscanStatus {
    guard(|| {
        let out = out
            .as_mut()
            .ok_or(Failure(RugscanStatus::NullArgument, "out is null".into()))?;
        *out = Metrics::from_confusion(Confusion {
            tp,
            fp,
            tn,
            fn_,
            undecided: 0,
        })
        .into();
        Ok(())
    })
}

/// Scores a JSON-lines report against a `mint,label[,kind]` CSV.
///
/// # Safety
/// Strings are NUL-terminated; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rugscan_evaluate(
    report_jsonl: *const c_char,
    labels_csv: *const c_char,
    out: *mut RugscanMetrics,
) -> RugscanStatus {
    guard(|| {
        let report = arg_str(report_jsonl, "report_jsonl")?;
        let labels = arg_str(labels_csv, "labels_csv")?;
        let out = out
            .as_mut()
            .ok_or(Failure(RugscanStatus::NullArgument, "out is null".into()))?;
        let preds = read_jsonl(report).or_else(|e| fail(RugscanStatus::ParseError, e))?;
        let labels = LabeledDataset::parse_csv(labels).or_else(|e| fail(RugscanStatus::ParseError, e))?;
        let m = compute_metrics(&preds, &labels).or_else(|e| fail(RugscanStatus::InvalidArgument, e))?;
        *out = m.into();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and is not used again.
#[no_mangle]
pub unsafe extern "C" fn rugscan_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
