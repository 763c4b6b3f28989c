use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use beamnet_ffi::*;

fn last_error() -> String {
    let p = bn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn pilot_round_trip() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(bn_pilot_design(128, 4, 6, 2.0, 1, &mut p), BnStatus::Ok);
        assert!(bn_last_error().is_null());
        assert_eq!(bn_pilot_length(p), 128);

        let mut bins = [0usize; 4];
        let mut len = 0;
        assert_eq!(bn_pilot_active_bins(p, bins.as_mut_ptr(), 4, &mut len), BnStatus::Ok);
        assert_eq!((len, bins), (4, [6, 38, 70, 102]));

        let (mut re, mut im) = (vec![0.0; 128], vec![0.0; 128]);
        assert_eq!(bn_pilot_samples(p, re.as_mut_ptr(), im.as_mut_ptr(), 128, &mut len), BnStatus::Ok);
        let energy: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
        assert!((energy - 2.0).abs() < 1e-12);
        // Constant envelope.
        assert!(re.iter().zip(&im).all(|(a, b)| ((a * a + b * b) - 2.0 / 128.0).abs() < 1e-12));

        let mut small = [0.0; 8];
        assert_eq!(bn_pilot_samples(p, small.as_mut_ptr(), small.as_mut_ptr(), 8, &mut len), BnStatus::BufferTooSmall);
        assert_eq!(len, 128);
        assert!(last_error().contains("need 128"));
        bn_pilot_free(p);
        bn_pilot_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_report_errors() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(bn_pilot_design(100, 3, 0, 1.0, 1, &mut p), BnStatus::InvalidArgument);
        assert!(p.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(bn_pilot_design(64, 4, 0, 1.0, 1, ptr::null_mut()), BnStatus::NullPointer);
        assert_eq!(bn_pilot_length(ptr::null()), 0);
        let mut len = 0;
        assert_eq!(bn_pilot_active_bins(ptr::null(), ptr::null_mut(), 0, &mut len), BnStatus::NullPointer);

        let mut plan = ptr::null_mut();
        assert_eq!(bn_plan_create(1, &mut plan), BnStatus::InvalidArgument);
        assert_eq!(bn_plan_num_rounds(ptr::null()), 0);
    }
}

#[test]
fn plan_lists_disjoint_groups() {
    unsafe {
        let mut plan = ptr::null_mut();
        assert_eq!(bn_plan_create(8, &mut plan), BnStatus::Ok);
        assert_eq!(bn_plan_num_rounds(plan), 3);
        for r in 0..3 {
            let (mut tx, mut rx) = ([0usize; 8], [0usize; 8]);
            let (mut nt, mut nr) = (0, 0);
            assert_eq!(bn_plan_round(plan, r, tx.as_mut_ptr(), &mut nt, rx.as_mut_ptr(), &mut nr, 8), BnStatus::Ok);
            assert_eq!(nt + nr, 8);
            assert!(tx[..nt].iter().all(|t| !rx[..nr].contains(t)));
        }
        let (mut nt, mut nr) = (0, 0);
        let status = bn_plan_round(plan, 3, ptr::null_mut(), &mut nt, ptr::null_mut(), &mut nr, 0);
        assert_eq!(status, BnStatus::InvalidArgument);
        bn_plan_free(plan);
    }
}

#[test]
fn sweep_writes_tables_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    let cfg = CString::new(
        r#"
trials = 1
[radio]
num_antennas = 8
[alignment]
measurements = 6
active_bins = 4
[comm]
beamwidth_deg = 20.0
[[devices]]
position = [2.0, 4.0, 1.2]
[[devices]]
position = [8.0, 5.5, 1.3]
"#,
    )
    .unwrap();
    unsafe {
        assert_eq!(bn_run_sweep(cfg.as_ptr(), out.as_ptr()), BnStatus::Ok, "{}", {
            let e = bn_last_error();
            if e.is_null() { String::new() } else { CStr::from_ptr(e).to_string_lossy().into_owned() }
        });
        for f in ["records.csv", "mae_vs_q.csv", "cdf.csv", "sum_se_vs_pilots.csv", "manifest.toml"] {
            assert!(dir.path().join("run").join(f).exists(), "{f}");
        }
        let bad = CString::new("trials = 0").unwrap();
        assert_eq!(bn_run_sweep(bad.as_ptr(), out.as_ptr()), BnStatus::Config);
        assert!(last_error().contains("trials"));
        assert_eq!(bn_run_sweep(ptr::null(), out.as_ptr()), BnStatus::NullPointer);
    }
    let v = unsafe { CStr::from_ptr(bn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/beamnet.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["bn_pilot_design", "bn_plan_round", "bn_run_sweep", "bn_last_error", "BN_STATUS_BUFFER_TOO_SMALL"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output()
    else {
        eprintln!("no C compiler found; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
