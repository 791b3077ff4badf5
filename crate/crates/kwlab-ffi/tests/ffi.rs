use kwlab_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = kw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn engine_round_trip() {
    unsafe {
        let mut e: *mut KwEngine = ptr::null_mut();
        assert_eq!(kw_engine_new(cs("torus2").as_ptr(), 40.0, &mut e), KwStatus::Ok);
        assert!(!e.is_null());
        let mut count = 0u64;
        let mut sum = 0.0;
        let c = cs("3/5");
        assert_eq!(kw_sharp_ladder_count(e, c.as_ptr(), 0.25, 40.0, &mut count), KwStatus::Ok);
        assert_eq!(kw_sharp_ladder_sum(e, c.as_ptr(), 0.25, 40.0, &mut sum), KwStatus::Ok);
        assert!(count > 0);
        assert!((sum - count as f64 / (2.0 * std::f64::consts::PI)).abs() < 1e-12 * sum);

        let mut jump = 0.0;
        assert_eq!(kw_jump_at(e, c.as_ptr(), 0.25, 5.0, &mut jump), KwStatus::Ok);
        assert!(jump >= 0.0);

        let (mut v, mut b) = (0.0, 0.0);
        assert_eq!(kw_fuzzy_ladder_sum(e, c.as_ptr(), cs("bump:1").as_ptr(), 40.0, &mut v, &mut b), KwStatus::Ok);
        assert!(v > 0.0 && b >= 0.0);
        kw_engine_free(e);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut e: *mut KwEngine = ptr::null_mut();
        assert_eq!(kw_engine_new(cs("klein-bottle").as_ptr(), 10.0, &mut e), KwStatus::InvalidParameter);
        assert!(last_error().contains("klein-bottle"));
        assert!(e.is_null());
        assert_eq!(kw_engine_new(ptr::null(), 10.0, &mut e), KwStatus::NullPointer);

        assert_eq!(kw_engine_new(cs("sphere2").as_ptr(), 10.0, &mut e), KwStatus::Ok);
        let mut out = 0.0;
        assert_eq!(kw_sharp_ladder_sum(e, cs("1/2").as_ptr(), 0.25, 50.0, &mut out), KwStatus::OutOfRange);
        assert_eq!(kw_sharp_ladder_sum(e, cs("2").as_ptr(), 0.25, 5.0, &mut out), KwStatus::InvalidParameter);
        assert_eq!(kw_sharp_ladder_sum(e, cs("1/2").as_ptr(), 0.25, 5.0, ptr::null_mut()), KwStatus::NullPointer);
        let mut count = 0u64;
        assert_eq!(kw_sharp_ladder_count(e, cs("1/2").as_ptr(), 0.25, 5.0, &mut count), KwStatus::InvalidParameter);
        kw_engine_free(e);
        kw_engine_free(ptr::null_mut());

        let mut failed = 0u32;
        let bad = cs("experiment = \"nope\"");
        assert_eq!(kw_run_experiment(bad.as_ptr(), &mut failed), KwStatus::UnknownExperiment);
    }
}

#[test]
fn runs_an_experiment() {
    let dir = std::env::temp_dir().join(format!("kwlab-ffi-{}", std::process::id()));
    let cfg = format!("experiment = \"forbidden-decay\"\nout = {:?}\ndeterministic = true\n", dir.to_str().unwrap());
    let mut failed = 99u32;
    unsafe {
        assert_eq!(kw_run_experiment(cs(&cfg).as_ptr(), &mut failed), KwStatus::Ok);
    }
    assert_eq!(failed, 0);
    assert!(dir.join("manifest.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(kw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile a C caller against the generated header, and link and run it when
/// the static library is available.
#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = tmp.join("kwlab_smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "kwlab.h"
int main(void) {
    KwEngine *e = NULL;
    if (kw_engine_new("torus2", 40.0, &e) != KW_STATUS_OK) return 1;
    uint64_t count = 0;
    if (kw_sharp_ladder_count(e, "3/5", 0.25, 40.0, &count) != KW_STATUS_OK) return 2;
    kw_engine_free(e);
    if (kw_engine_new("nowhere", 1.0, &e) != KW_STATUS_INVALID_PARAMETER) return 3;
    if (kw_last_error() == NULL) return 4;
    printf("%llu\n", (unsigned long long)count);
    return 0;
}
"#,
    )
    .unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile");

    // target/<profile>/libkwlab_ffi.a next to the test's tmp dir
    let lib = tmp.parent().unwrap().join(if cfg!(debug_assertions) { "debug" } else { "release" }).join("libkwlab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; link step skipped", lib.display());
        return;
    }
    let exe = tmp.join("kwlab_smoke");
    let status = Command::new(&cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C caller exited with {:?}", out.status);
    let count: u64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    let rust = unsafe {
        let mut e: *mut KwEngine = ptr::null_mut();
        kw_engine_new(cs("torus2").as_ptr(), 40.0, &mut e);
        let mut c = 0u64;
        kw_sharp_ladder_count(e, cs("3/5").as_ptr(), 0.25, 40.0, &mut c);
        kw_engine_free(e);
        c
    };
    assert_eq!(count, rust);
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
