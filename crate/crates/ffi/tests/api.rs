use std::ffi::{c_char, CString};
use std::ptr;

use netcodccn_ffi::*;

fn last_error() -> String {
    let n = unsafe { ncc_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; n + 1];
    unsafe { ncc_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n);
    String::from_utf8(buf).unwrap()
}

fn source(content: &[u8]) -> *mut NccGeneration {
    let prefix = CString::new("/video/clip").unwrap();
    let mut g = ptr::null_mut();
    let st = unsafe { ncc_generation_from_content(prefix.as_ptr(), content.as_ptr(), content.len(), 8, 4, 1, &mut g) };
    assert_eq!(st, NccStatus::Ok, "{}", last_error());
    g
}

fn sink() -> *mut NccGeneration {
    let prefix = CString::new("/video/clip").unwrap();
    let mut g = ptr::null_mut();
    let st = unsafe { ncc_generation_new(prefix.as_ptr(), 0, 4, 8, 2, &mut g) };
    assert_eq!(st, NccStatus::Ok, "{}", last_error());
    g
}

#[test]
fn encode_insert_decode_round_trip() {
    let content: Vec<u8> = (0..32).collect();
    let src = source(&content);
    let dst = sink();
    assert_eq!(unsafe { ncc_generation_rank(src) }, 4);
    assert!(unsafe { ncc_generation_is_decoded(src) });
    let mut wire = vec![0u8; 256];
    let mut tries = 0;
    while !unsafe { ncc_generation_is_decoded(dst) } {
        tries += 1;
        assert!(tries < 50);
        let mut n = 0;
        assert_eq!(unsafe { ncc_generation_encode(src, wire.as_mut_ptr(), wire.len(), &mut n) }, NccStatus::Ok);
        let mut innovative = false;
        assert_eq!(unsafe { ncc_generation_insert(dst, wire.as_ptr(), n, &mut innovative) }, NccStatus::Ok);
    }
    let mut out = vec![0u8; 32];
    assert_eq!(unsafe { ncc_generation_decode(dst, out.as_mut_ptr(), out.len()) }, NccStatus::Ok);
    assert_eq!(out, content);
    unsafe {
        ncc_generation_free(src);
        ncc_generation_free(dst);
    }
}

#[test]
fn error_codes() {
    let src = source(&[9u8; 32]);
    let dst = sink();
    let mut n = 0;
    let mut small = [0u8; 4];
    assert_eq!(
        unsafe { ncc_generation_encode(src, small.as_mut_ptr(), small.len(), &mut n) },
        NccStatus::BufferTooSmall
    );
    assert!(n > small.len());
    assert!(last_error().contains("need"));

    assert_eq!(
        unsafe { ncc_generation_encode(ptr::null_mut(), small.as_mut_ptr(), 4, &mut n) },
        NccStatus::NullPointer
    );
    assert_eq!(unsafe { ncc_generation_rank(ptr::null()) }, 0);

    let mut out = vec![0u8; 32];
    assert_eq!(unsafe { ncc_generation_decode(dst, out.as_mut_ptr(), out.len()) }, NccStatus::RankDeficient);
    // an empty generation has nothing to combine
    assert_ne!(unsafe { ncc_generation_encode(dst, out.as_mut_ptr(), out.len(), &mut n) }, NccStatus::Ok);

    let garbage = [1u8, 2, 3];
    let mut innovative = true;
    assert_eq!(
        unsafe { ncc_generation_insert(dst, garbage.as_ptr(), garbage.len(), &mut innovative) },
        NccStatus::BadSegment
    );

    let mut g = ptr::null_mut();
    let bad = CString::new("no-slash").unwrap();
    assert_eq!(unsafe { ncc_generation_new(bad.as_ptr(), 0, 4, 8, 0, &mut g) }, NccStatus::InvalidArgument);
    assert!(g.is_null());
    unsafe {
        ncc_generation_free(src);
        ncc_generation_free(dst);
        ncc_generation_free(ptr::null_mut());
    }
}

#[test]
fn butterfly_run_and_csv() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ncc_scenario_butterfly(5.0, 1.0, 7, &mut s) }, NccStatus::Ok);
    assert_eq!(unsafe { ncc_scenario_configure(s, NccVariant::NetCod, 4, -1.0) }, NccStatus::Ok);
    let csv = std::env::temp_dir().join(format!("ncc-ffi-{}.csv", std::process::id()));
    let path = CString::new(csv.to_str().unwrap()).unwrap();
    let mut sum = NccRunSummary { mean_d: 0.0, stddev_d: 0.0, completed: 0, timed_out: 0 };
    assert_eq!(unsafe { ncc_scenario_run(s, 2, path.as_ptr(), &mut sum) }, NccStatus::Ok, "{}", last_error());
    // two clients per seed
    assert_eq!(sum.completed, 4);
    assert_eq!(sum.timed_out, 0);
    assert!(sum.mean_d > 0.9 && sum.mean_d < 1.3, "{}", sum.mean_d);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().count() >= 3);
    std::fs::remove_file(&csv).ok();

    assert_eq!(unsafe { ncc_scenario_run(s, 0, ptr::null(), &mut sum) }, NccStatus::InvalidArgument);
    assert_eq!(unsafe { ncc_scenario_configure(s, NccVariant::CcnParallel, 0, 0.0) }, NccStatus::InvalidArgument);
    unsafe { ncc_scenario_free(s) };
}

#[test]
fn load_errors_and_shipped_topology() {
    let mut s = ptr::null_mut();
    let missing = CString::new("/nonexistent/file.topo").unwrap();
    assert_eq!(unsafe { ncc_scenario_load(missing.as_ptr(), 0, &mut s) }, NccStatus::Io);
    assert!(!last_error().is_empty());
    let shipped = CString::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/planetlab26.topo")).unwrap();
    assert_eq!(unsafe { ncc_scenario_load(shipped.as_ptr(), 0, &mut s) }, NccStatus::Ok, "{}", last_error());
    unsafe { ncc_scenario_free(s) };
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/netcodccn.h")).unwrap();
    for sym in ["ncc_generation_encode", "ncc_scenario_run", "NCC_STATUS_RANK_DEFICIENT", "NccRunSummary"] {
        assert!(h.contains(sym), "{sym}");
    }
}
