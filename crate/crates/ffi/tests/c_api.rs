//! Drives the C entry points the way a foreign caller would: through raw
//! pointers and status codes.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use ancolab_ffi::{
    anco_analyze, anco_experiment_free, anco_experiment_from_json, anco_experiment_preset,
    anco_last_error_message, anco_string_free, anco_topology, anco_verify, anco_version,
    AncoExperiment, AncoStatus,
};

fn make(name: &str) -> *mut AncoExperiment {
    let name = CString::new(name).unwrap();
    let mut exp: *mut AncoExperiment = ptr::null_mut();
    let status = unsafe { anco_experiment_preset(name.as_ptr(), &mut exp) };
    assert_eq!(status, AncoStatus::Ok);
    assert!(!exp.is_null());
    exp
}

fn take_string(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let owned = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { anco_string_free(s) };
    owned
}

fn last_error() -> String {
    let ptr = anco_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string()
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(anco_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn analyze_roundtrip_through_the_c_surface() {
    let exp = make("pkl:1:2");
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { anco_analyze(exp, &mut json) };
    assert_eq!(status, AncoStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["config"]["base"], "product:cp:1:4*cp:2:4");
    assert_eq!(report["sweep"]["criterion"]["holds"], true);
    assert_eq!(report["calibrated_sign"], -1.0);
    unsafe { anco_experiment_free(exp) };
}

#[test]
fn config_json_builds_an_experiment() {
    let config = CString::new(
        r#"{
            "base": "flat:2",
            "algebra": "abelian:1",
            "potential": "zero",
            "t_grid": "geom:1:0.5:3",
            "samples": 2
        }"#,
    )
    .unwrap();
    let mut exp: *mut AncoExperiment = ptr::null_mut();
    let status = unsafe { anco_experiment_from_json(config.as_ptr(), &mut exp) };
    assert_eq!(status, AncoStatus::Ok);
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { anco_analyze(exp, &mut json) };
    assert_eq!(status, AncoStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["sweep"]["rows"].as_array().map(Vec::len), Some(3));
    unsafe { anco_experiment_free(exp) };

    let garbage = CString::new("{\"base\": 7}").unwrap();
    let mut exp: *mut AncoExperiment = ptr::null_mut();
    let status = unsafe { anco_experiment_from_json(garbage.as_ptr(), &mut exp) };
    assert_eq!(status, AncoStatus::InvalidInput);
    assert!(exp.is_null());
    assert!(last_error().contains("bad configuration"));
}

#[test]
fn verify_passes_on_hopf_and_reports_the_sign() {
    let exp = make("hopf");
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { anco_verify(exp, 1, 0, &mut json) };
    assert_eq!(status, AncoStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["calibrated_sign"], -1.0);
    unsafe { anco_experiment_free(exp) };
}

#[test]
fn topology_reports_the_torsion_group() {
    let exp = make("pkl:1:2");
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { anco_topology(exp, &mut json) };
    assert_eq!(status, AncoStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["cohomology"]["groups"][4]["display"], "Z/4");
    unsafe { anco_experiment_free(exp) };

    let exp = make("su2-demo");
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { anco_topology(exp, &mut json) };
    assert_eq!(status, AncoStatus::InvalidInput);
    assert!(json.is_null());
    assert!(last_error().contains("circle fiber"));
    unsafe { anco_experiment_free(exp) };
}

#[test]
fn null_and_invalid_arguments_are_rejected() {
    let mut exp: *mut AncoExperiment = ptr::null_mut();
    let status = unsafe { anco_experiment_preset(ptr::null(), &mut exp) };
    assert_eq!(status, AncoStatus::NullArgument);

    let name = CString::new("flat").unwrap();
    let status = unsafe { anco_experiment_preset(name.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, AncoStatus::NullArgument);

    let bad = CString::new([0xffu8, 0xfe].as_slice()).unwrap();
    let status = unsafe { anco_experiment_preset(bad.as_ptr(), &mut exp) };
    assert_eq!(status, AncoStatus::InvalidUtf8);

    let unknown = CString::new("nosuch").unwrap();
    let status = unsafe { anco_experiment_preset(unknown.as_ptr(), &mut exp) };
    assert_eq!(status, AncoStatus::InvalidInput);
    assert!(last_error().contains("preset"));

    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { anco_analyze(ptr::null(), &mut json) };
    assert_eq!(status, AncoStatus::NullArgument);
    assert!(json.is_null());

    unsafe {
        anco_string_free(ptr::null_mut());
        anco_experiment_free(ptr::null_mut());
    }
}
