use std::ffi::{c_char, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pnc_sim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { pnc_last_error(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    String::from_utf8_lossy(&buf[..n.min(255)]).into_owned()
}

fn create(name: &str) -> (PncStatus, *mut PncSimulator) {
    let c = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { pnc_sim_create(c.as_ptr(), 1, &mut h) };
    (st, h)
}

#[test]
fn zero_noise_point_through_the_abi() {
    let (st, h) = create("table1-alem-537");
    assert_eq!(st, PncStatus::Ok);
    assert!(!h.is_null());
    let (mut ka, mut kb) = (0usize, 0usize);
    assert_eq!(
        unsafe { pnc_sim_source_bits(h, &mut ka, &mut kb) },
        PncStatus::Ok
    );
    assert_eq!((ka, kb), (281, 537));

    // large positive offsets on every slot leave the channel effectively clean
    let offsets = [200.0f64; 4];
    assert_eq!(
        unsafe { pnc_sim_set_slot_offsets(h, offsets.as_ptr()) },
        PncStatus::Ok
    );
    assert_eq!(unsafe { pnc_sim_set_seed(h, 9) }, PncStatus::Ok);
    let mut m = PncMetrics::default();
    assert_eq!(
        unsafe { pnc_sim_run_point(h, 5.0, 8, &mut m) },
        PncStatus::Ok
    );
    assert_eq!(m.frames, 8);
    assert_eq!(m.frame_errors, 0);
    assert_eq!(m.fer, 0.0);
    assert_eq!(m.t_total_us_mean, 768.0);
    assert_eq!(m.t3_us, 128.0);
    assert!((m.throughput_bps - 537.0 / 768e-6).abs() < 1e-6);
    unsafe { pnc_sim_destroy(h) };
}

#[test]
fn runs_are_reproducible() {
    let (_, h) = create("table1-slem-537");
    let mut a = PncMetrics::default();
    let mut b = PncMetrics::default();
    unsafe {
        pnc_sim_set_seed(h, 3);
        assert_eq!(pnc_sim_run_point(h, 6.0, 40, &mut a), PncStatus::Ok);
        assert_eq!(pnc_sim_run_point(h, 6.0, 40, &mut b), PncStatus::Ok);
        pnc_sim_destroy(h);
    }
    assert_eq!(a, b);
}

#[test]
fn errors_are_reported() {
    let (st, h) = create("no-such-preset");
    assert_eq!(st, PncStatus::UnknownPreset);
    assert!(h.is_null());
    assert!(last_error().contains("no-such-preset"));

    let st = unsafe { pnc_sim_create(ptr::null(), 0, &mut ptr::null_mut()) };
    assert_eq!(st, PncStatus::NullPointer);

    let (st, h) = create("table1-alem-537");
    assert_eq!(st, PncStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        assert_eq!(
            pnc_sim_set_precoding(h, -1.0, 0.0),
            PncStatus::InvalidArgument
        );
        assert_eq!(pnc_sim_set_precoding(h, 1.1, 0.05), PncStatus::Ok);
        let mut m = PncMetrics::default();
        assert_eq!(
            pnc_sim_run_point(h, 6.0, 0, &mut m),
            PncStatus::InvalidArgument
        );
        assert_eq!(
            pnc_sim_run_point(h, 6.0, 1, ptr::null_mut()),
            PncStatus::NullPointer
        );
        assert_eq!(pnc_sim_set_seed(ptr::null_mut(), 1), PncStatus::NullPointer);
        pnc_sim_destroy(h);
        pnc_sim_destroy(ptr::null_mut());
    }
}

#[test]
fn preset_listing() {
    let n = pnc_preset_count();
    assert!(n >= 10);
    let mut names = Vec::new();
    for i in 0..n {
        let mut buf = [0 as c_char; 64];
        let len = unsafe { pnc_preset_name(i, buf.as_mut_ptr(), buf.len()) };
        let bytes: Vec<u8> = buf[..len].iter().map(|&c| c as u8).collect();
        names.push(String::from_utf8(bytes).unwrap());
    }
    assert!(names.iter().any(|s| s == "dlem-385"));
    assert_eq!(unsafe { pnc_preset_name(n, ptr::null_mut(), 0) }, 0);
    // truncation keeps a terminator and reports the full length
    let mut small = [1 as c_char; 4];
    let full = unsafe { pnc_preset_name(0, small.as_mut_ptr(), small.len()) };
    assert_eq!(full, names[0].len());
    assert_eq!(small[3], 0);
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pnc_sim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "pnc_sim_create",
        "pnc_sim_destroy",
        "pnc_sim_run_point",
        "pnc_last_error",
        "typedef struct PncSimulator PncSimulator",
        "PNC_STATUS_UNKNOWN_PRESET = 3",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "pnc_sim.h"
int main(void) {
    PncSimulator *h = NULL;
    PncMetrics m;
    if (pnc_sim_create("table1-alem-537", 0, &h) != PNC_STATUS_OK) return 1;
    pnc_sim_run_point(h, 8.0, 10, &m);
    pnc_sim_destroy(h);
    return m.frames == 10 ? 0 : 1;
}
"#,
    )
    .unwrap();
    let status = match Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler found; skipping compile check");
            return;
        }
    };
    assert!(status.success());
}
