use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use rugscan::ingest::write_record;
use rugscan::synth;
use rugscan_ffi::*;

fn suite_dir() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/suite")
        .display()
        .to_string()
}

fn last_error() -> String {
    let p = rugscan_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    rugscan_string_free(s);
    out
}

fn engine(params: Option<RugscanParams>) -> *mut RugscanEngine {
    let mut e = ptr::null_mut();
    let p = params.as_ref().map_or(ptr::null(), |p| p as *const _);
    assert_eq!(unsafe { rugscan_engine_new(p, &mut e) }, RugscanStatus::Ok);
    e
}

#[test]
fn classify_record_json() {
    let e = engine(None);
    let suite = synth::fixture_suite(synth::DEFAULT_SEED);
    for s in &suite {
        let json = CString::new(write_record(&s.record)).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { rugscan_classify_json(e, json.as_ptr(), &mut out) }, RugscanStatus::Ok);
        assert!(rugscan_last_error().is_null());
        let v: serde_json::Value = serde_json::from_str(&unsafe { take(out) }).unwrap();
        assert_eq!(v["mint"], s.record.mint.as_str());
        let flagged = v["outcome"] == "rug_pull";
        assert_eq!(flagged, matches!(s.label, rugscan::eval::Label::RugPull(_)));
    }
    unsafe { rugscan_engine_free(e) };
}

#[test]
fn errors_set_status_and_message() {
    let e = engine(None);
    let mut out = ptr::null_mut();
    let bad = CString::new("{\"mint\": 1}").unwrap();
    assert_eq!(unsafe { rugscan_classify_json(e, bad.as_ptr(), &mut out) }, RugscanStatus::ParseError);
    assert!(!last_error().is_empty());
    assert!(out.is_null());
    assert_eq!(unsafe { rugscan_classify_json(e, ptr::null(), &mut out) }, RugscanStatus::NullArgument);
    assert_eq!(unsafe { rugscan_classify_json(ptr::null(), bad.as_ptr(), &mut out) }, RugscanStatus::NullArgument);

    let mint = CString::new("So11111111111111111111111111111111111111112").unwrap();
    assert_eq!(unsafe { rugscan_scan(e, mint.as_ptr(), &mut out) }, RugscanStatus::SourceError);
    assert!(last_error().contains("no data source"));

    let invalid = RugscanParams {
        tau_down: 2.0,
        ..rugscan_params_default()
    };
    let mut e2 = ptr::null_mut();
    let status = unsafe { rugscan_engine_new(&invalid, &mut e2) };
    assert_eq!(status, RugscanStatus::InvalidArgument);
    assert!(e2.is_null());

    let bytes = [0xffu8, 0xfe, 0];
    let status = unsafe { rugscan_classify_json(e, bytes.as_ptr().cast(), &mut out) };
    assert_eq!(status, RugscanStatus::InvalidUtf8);
    unsafe {
        rugscan_engine_free(e);
        rugscan_engine_free(ptr::null_mut());
        rugscan_string_free(ptr::null_mut());
    }
}

#[test]
fn scan_through_fixture_source() {
    let e = engine(Some(rugscan_params_default()));
    let src = CString::new(format!("fixture:{}", suite_dir())).unwrap();
    assert_eq!(
        unsafe { rugscan_engine_set_source(e, src.as_ptr(), ptr::null(), ptr::null()) },
        RugscanStatus::Ok
    );
    let labels = std::fs::read_to_string(Path::new(&suite_dir()).join("labels.csv")).unwrap();
    let mut report = String::new();
    for line in labels.lines().skip(1) {
        let mint = CString::new(line.split(',').next().unwrap()).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { rugscan_scan(e, mint.as_ptr(), &mut out) }, RugscanStatus::Ok);
        report.push_str(&unsafe { take(out) });
        report.push('\n');
    }
    let (r, l) = (CString::new(report).unwrap(), CString::new(labels).unwrap());
    let mut m = RugscanMetrics::default();
    assert_eq!(unsafe { rugscan_evaluate(r.as_ptr(), l.as_ptr(), &mut m) }, RugscanStatus::Ok);
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    assert_eq!((m.tp, m.tn), (13, 8));

    let bad_src = CString::new("fixture:/does/not/exist").unwrap();
    let status = unsafe { rugscan_engine_set_source(e, bad_src.as_ptr(), ptr::null(), ptr::null()) };
    assert_eq!(status, RugscanStatus::InvalidArgument);
    unsafe { rugscan_engine_free(e) };
}

#[test]
fn metrics_from_counts() {
    let mut m = RugscanMetrics::default();
    assert_eq!(unsafe { rugscan_metrics_from_counts(109, 0, 0, 8, &mut m) }, RugscanStatus::Ok);
    assert_eq!(m.precision, 1.0);
    assert!((m.recall - 0.9316).abs() < 1e-4);
    assert!((m.f1 - 0.9646).abs() < 1e-4);
    assert_eq!(
        unsafe { rugscan_metrics_from_counts(1, 0, 0, 0, ptr::null_mut()) },
        RugscanStatus::NullArgument
    );
    let v = unsafe { CStr::from_ptr(rugscan_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
