use std::ffi::{CStr, CString};
use std::ptr;

use skewgraph_ffi::*;

fn last_error() -> String {
    let p = sg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut SgSystem {
    let name = CString::new(name).unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(
        unsafe { sg_system_from_preset(name.as_ptr(), &mut sys) },
        SgStatus::Ok
    );
    assert!(!sys.is_null());
    sys
}

#[test]
fn binary_coding_matches_expansion() {
    let sys = preset("binary_ifs");
    unsafe {
        assert_eq!(sg_system_alphabet_size(sys), 2);
        assert_eq!(sg_system_dim(sys), 1);
        // past 2,1 then 1,1,...: digits 1,0,0,... give 1/2
        let (past, tail) = ([2u8, 1], [1u8]);
        let mut point = [f64::NAN];
        let mut depth = 0usize;
        let s = sg_code(
            sys,
            past.as_ptr(),
            2,
            tail.as_ptr(),
            1,
            200,
            1e-12,
            point.as_mut_ptr(),
            &mut depth,
        );
        assert_eq!(s, SgStatus::Ok);
        assert!((point[0] - 0.5).abs() <= 1e-12);
        assert!(depth >= 40);
        sg_system_free(sys);
    }
}

#[test]
fn budget_and_validation_statuses() {
    let sys = preset("identity");
    let tail = [1u8];
    let mut point = [0.0];
    let s = unsafe {
        sg_code(
            sys,
            ptr::null(),
            0,
            tail.as_ptr(),
            1,
            50,
            1e-9,
            point.as_mut_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(s, SgStatus::Budget);
    assert!(last_error().contains("did not converge"));

    let bad = [3u8];
    let s = unsafe {
        sg_code(
            sys,
            ptr::null(),
            0,
            bad.as_ptr(),
            1,
            50,
            1e-9,
            point.as_mut_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(s, SgStatus::Validation);
    let s = unsafe {
        sg_code(
            ptr::null(),
            ptr::null(),
            0,
            bad.as_ptr(),
            1,
            50,
            1e-9,
            point.as_mut_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(s, SgStatus::NullArgument);
    unsafe { sg_system_free(sys) };

    let doc = CString::new(
        "[system]\npreset = \"binary_ifs\"\n[base]\ntransition = [[0.5, 0.5], [0.5, 0.4]]\n",
    )
    .unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { sg_system_from_toml(doc.as_ptr(), &mut out) },
        SgStatus::Validation
    );
    assert!(out.is_null());
    assert!(last_error().contains("row 2"));
}

#[test]
fn decay_of_uniform_contraction() {
    let doc =
        CString::new("[system]\npreset = \"uniform_contraction\"\nc = \"1/2\"\nk = 2\n").unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(
        unsafe { sg_system_from_toml(doc.as_ptr(), &mut sys) },
        SgStatus::Ok
    );
    let depths = [1usize, 2, 3, 4];
    let mut means = [0.0; 4];
    let mut lambda = 0.0;
    let s = unsafe {
        sg_decay(
            sys,
            depths.as_ptr(),
            4,
            100,
            5,
            means.as_mut_ptr(),
            &mut lambda,
        )
    };
    assert_eq!(s, SgStatus::Ok);
    for (d, m) in depths.iter().zip(means) {
        assert_eq!(m, 0.5f64.powi(*d as i32));
    }
    assert!((lambda - 0.5).abs() < 1e-12);
    unsafe { sg_system_free(sys) };
}

#[test]
fn run_config_returns_results() {
    let doc = CString::new(
        "seed = 3\n[system]\npreset = \"binary_ifs\"\n[experiment]\nkind = \"code\"\ntheta = { past_tail = [2] }\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { sg_run_config(doc.as_ptr(), out_dir.as_ptr(), &mut json) },
        SgStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { sg_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["experiment"], "code");
    assert_eq!(v["provenance"]["seed"], 3);
    assert!(dir.path().join("results.json").exists());
    assert!(dir.path().join("data.csv").exists());

    let no_seed =
        CString::new("[system]\npreset = \"binary_ifs\"\n[experiment]\nkind = \"target\"\n")
            .unwrap();
    assert_eq!(
        unsafe { sg_run_config(no_seed.as_ptr(), ptr::null(), ptr::null_mut()) },
        SgStatus::Validation
    );
    assert_eq!(last_error(), "seed required");
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(sg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
