use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use seqpp_ffi::*;

const SOFTCORE: &str = r#"{"kind": "softcore", "beta": 2.0, "gamma": 0.5,
    "marks": {"kind": "discrete", "levels": [[0.6, 1.0]]},
    "window": {"x0": 0, "y0": 0, "x1": 2, "y1": 1}}"#;

fn model(json: &str) -> *mut SeqppModel {
    let c = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    let status = unsafe { seqpp_model_from_json(c.as_ptr(), &mut m) };
    assert_eq!(status, SeqppStatus::Ok);
    m
}

fn last_error() -> String {
    let p = seqpp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn density_and_intensity() {
    let m = model(SOFTCORE);
    let xs = [0.5, 0.9];
    let ys = [0.25, 0.25];
    let rs = [0.6, 0.6];
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            seqpp_log_density(m, ptr::null(), ptr::null(), ptr::null(), 0, &mut out),
            SeqppStatus::Ok
        );
        assert_eq!(out, 0.0);
        // Second point lies in the first one's territory: f = beta^2 gamma.
        assert_eq!(
            seqpp_log_density(m, xs.as_ptr(), ys.as_ptr(), rs.as_ptr(), 2, &mut out),
            SeqppStatus::Ok
        );
        assert!((out - (4.0f64 * 0.5).ln()).abs() < 1e-12);
        let mut lam = 0.0;
        let st = seqpp_conditional_intensity(m, xs.as_ptr(), ys.as_ptr(), rs.as_ptr(), 1, 2, 1.5, 0.75, 0.6, &mut lam);
        assert_eq!(st, SeqppStatus::Ok);
        assert!(lam > 0.0);
        let mut beta = 0.0;
        assert_eq!(seqpp_model_stability_bound(m, &mut beta), SeqppStatus::Ok);
        assert_eq!(beta, 2.0);
        seqpp_model_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new(r#"{"kind": "strauss"}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { seqpp_model_from_json(bad.as_ptr(), &mut m) },
        SeqppStatus::Config
    );
    assert!(m.is_null());
    assert!(last_error().contains("strauss"));

    assert_eq!(
        unsafe { seqpp_model_from_json(ptr::null(), &mut m) },
        SeqppStatus::NullPointer
    );

    let m = model(SOFTCORE);
    let mut out = 0.0;
    let xs = [0.5];
    let ys = [0.5];
    let st =
        unsafe { seqpp_conditional_intensity(m, xs.as_ptr(), ys.as_ptr(), ptr::null(), 1, 5, 0.1, 0.1, 0.6, &mut out) };
    assert_eq!(st, SeqppStatus::Argument);
    unsafe { seqpp_model_free(m) };
}

#[test]
fn samplers_return_sequences() {
    let m = model(SOFTCORE);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(seqpp_mh_run(m, 2000, 7, &mut a), SeqppStatus::Ok);
        assert_eq!(seqpp_mh_run(m, 2000, 7, &mut b), SeqppStatus::Ok);
        let n = seqpp_sequence_len(a);
        assert_eq!(n, seqpp_sequence_len(b));
        for i in 0..n {
            let (mut x, mut y, mut r) = (0.0, 0.0, 0.0);
            let (mut x2, mut y2, mut r2) = (0.0, 0.0, 0.0);
            assert_eq!(seqpp_sequence_get(a, i, &mut x, &mut y, &mut r), SeqppStatus::Ok);
            seqpp_sequence_get(b, i, &mut x2, &mut y2, &mut r2);
            assert_eq!((x, y, r), (x2, y2, r2));
            assert_eq!(r, 0.6);
        }
        let (mut x, mut y, mut r) = (0.0, 0.0, 0.0);
        assert_eq!(seqpp_sequence_get(a, n, &mut x, &mut y, &mut r), SeqppStatus::Argument);
        seqpp_sequence_free(a);
        seqpp_sequence_free(b);

        let mut c = ptr::null_mut();
        assert_eq!(seqpp_bd_run(m, f64::NAN, 20.0, 3, &mut c), SeqppStatus::Ok);
        seqpp_sequence_free(c);
        seqpp_model_free(m);
    }
}

#[test]
fn validate_reports_json() {
    let cfg = format!(
        r#"{{"model": {SOFTCORE}, "oracle": {{"nx": 2, "ny": 2, "n_max": 3, "mh_steps": 300000, "bd_t_max": 5000}}, "seed": 4}}"#
    );
    let c = CString::new(cfg).unwrap();
    let mut report = ptr::null_mut();
    let mut passed = -1;
    unsafe {
        assert_eq!(seqpp_validate(c.as_ptr(), &mut report, &mut passed), SeqppStatus::Ok);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        seqpp_string_free(report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["hereditary"], true);
        assert_eq!(passed, i32::from(v["passed"].as_bool().unwrap()));
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(seqpp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/seqpp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "seqpp_model_from_json",
        "seqpp_mh_run",
        "seqpp_validate",
        "SEQPP_STATUS_CAPACITY",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"seqpp.h\"\nint main(void) {\n  SeqppModel *m = 0;\n  \
         SeqppStatus s = seqpp_model_from_json(\"{}\", &m);\n  seqpp_model_free(m);\n  return (int)s;\n}\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
}
