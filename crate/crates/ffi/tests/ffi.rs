use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use creditfair_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    cf_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = cf_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn run_audit_and_round_trip() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(
            cf_instance_builtin(c("motivating_example").as_ptr(), &mut inst),
            CfStatus::Ok
        );
        assert_eq!((cf_instance_agents(inst), cf_instance_rounds(inst)), (3, 3));

        let mut trace = ptr::null_mut();
        assert_eq!(cf_run(inst, c("lendrecoup").as_ptr(), &mut trace), CfStatus::Ok);
        let mut passed = false;
        let mut report = ptr::null_mut();
        assert_eq!(cf_audit_explicit(trace, &mut passed, &mut report), CfStatus::Ok);
        assert!(passed);
        assert!(take(report).contains("\"overall\""));

        let mut json = ptr::null_mut();
        assert_eq!(cf_trace_to_json(trace, &mut json), CfStatus::Ok);
        let json = take(json);
        assert!(json.contains("creditfair.trace.v1"));
        let mut back = ptr::null_mut();
        assert_eq!(cf_trace_from_json(c(&json).as_ptr(), &mut back), CfStatus::Ok);
        let mut refuted = true;
        assert_eq!(cf_refute(back, &mut refuted, ptr::null_mut()), CfStatus::Ok);
        assert!(!refuted);

        cf_trace_free(back);
        cf_trace_free(trace);
        cf_instance_free(inst);
    }
}

#[test]
fn instance_json_and_errors() {
    unsafe {
        let mut inst = ptr::null_mut();
        let good = c(r#"{"endowments": ["1", "1"], "demands": [["0", "2"], ["2", "0"]]}"#);
        assert_eq!(cf_instance_from_json(good.as_ptr(), &mut inst), CfStatus::Ok);
        let mut trace = ptr::null_mut();
        assert_eq!(cf_run(inst, c("karma:1/3").as_ptr(), &mut trace), CfStatus::Ok);
        cf_trace_free(trace);

        let mut other = ptr::null_mut();
        assert_eq!(
            cf_instance_from_json(c("{not json").as_ptr(), &mut other),
            CfStatus::Parse
        );
        assert!(other.is_null());
        let negative = c(r#"{"endowments": ["-1"], "demands": [["0"]]}"#);
        assert_eq!(cf_instance_from_json(negative.as_ptr(), &mut other), CfStatus::Invalid);
        assert!(!last_error().is_empty());

        assert_eq!(cf_run(inst, ptr::null(), &mut trace), CfStatus::NullPointer);
        assert_eq!(
            cf_run(ptr::null(), c("smmf").as_ptr(), &mut trace),
            CfStatus::NullPointer
        );
        assert_eq!(cf_instance_builtin(c("nope").as_ptr(), &mut other), CfStatus::Parse);
        let bytes = [0xffu8, 0];
        assert_eq!(
            cf_instance_builtin(bytes.as_ptr().cast(), &mut other),
            CfStatus::InvalidUtf8
        );

        assert_eq!(
            cf_instance_builtin(c("misreport_gain").as_ptr(), &mut other),
            CfStatus::Ok
        );
        assert!(cf_last_error_message().is_null());
        cf_instance_free(other);
        cf_instance_free(inst);
        cf_instance_free(ptr::null_mut());
        cf_string_free(ptr::null_mut());
    }
}

#[test]
fn pswc_solver_over_json() {
    unsafe {
        let mut out = ptr::null_mut();
        let problem = c(
            r#"{"capacity": "5", "weights": ["1", "1", "1"], "minima": ["0", "0", "0"], "limits": ["1", null, null]}"#,
        );
        assert_eq!(cf_pswc_solve_json(problem.as_ptr(), &mut out), CfStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["allocation"], serde_json::json!(["1", "2", "2"]));
        assert_eq!(v["level"], "2");

        let infeasible = c(r#"{"capacity": "9", "weights": ["1"], "minima": ["0"], "limits": ["1"]}"#);
        assert_eq!(cf_pswc_solve_json(infeasible.as_ptr(), &mut out), CfStatus::Invalid);
        assert!(last_error().contains("exceeds"));
    }
}

/// Builds the static library so the C program never links a stale archive.
fn static_library() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.ancestors().nth(3).unwrap().to_path_buf();
    let status = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "--manifest-path"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml"))
        .arg("--target-dir")
        .arg(&target_dir)
        .status()
        .expect("cargo runs");
    assert!(status.success(), "building the static library failed");
    target_dir.join("debug").join("libcreditfair_ffi.a")
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = static_library();
    assert!(lib.is_file(), "static library not built at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success(), "compiling the C smoke test failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
