//! C ABI for the simulator.
//!
//! A `PncSimulator` handle owns one prepared preset. Every function returns
//! a [`PncStatus`]; on failure a message is kept per thread and can be read
//! with [`pnc_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pnc_sim::schemes::{all_presets, preset, Simulator};
use pnc_sim::sim::{run_point, threads_from_env, RunConfig};
use pnc_sim::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownPreset = 3,
    InvalidConfig = 4,
    Internal = 5,
    Panic = 6,
}

/// Aggregate of one SNR point.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PncMetrics {
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub throughput_bps: f64,
    pub t_total_us_mean: f64,
    pub t_slot0_us_mean: f64,
    pub t3_us: f64,
    pub k_ehat_mean: f64,
}

/// Opaque simulator handle.
pub struct PncSimulator {
    sim: Simulator,
    cfg: RunConfig,
    pool: rayon::ThreadPool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> PncStatus {
    match e {
        Error::UnknownPreset(_) => PncStatus::UnknownPreset,
        Error::InvalidConfig(_) | Error::InvalidRate(_) | Error::NotPowerOfTwo(_) => {
            PncStatus::InvalidConfig
        }
        _ => PncStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PncStatus, String)>) -> PncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PncStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PncStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PncStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PncStatus, String) {
    (PncStatus::NullPointer, format!("{what} is null"))
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, (PncStatus, String)> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()
        .map_err(|e| (PncStatus::Internal, format!("worker pool: {e}")))
}

/// Creates a simulator for a registered preset. `threads == 0` uses
/// `PNC_SIM_THREADS` or the machine's core count.
///
/// # Safety
/// `preset_name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_create(
    preset_name: *const c_char,
    threads: u32,
    out: *mut *mut PncSimulator,
) -> PncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if preset_name.is_null() {
            return Err(null("preset_name"));
        }
        let name = CStr::from_ptr(preset_name).to_str().map_err(|_| {
            (
                PncStatus::InvalidArgument,
                "preset name is not UTF-8".to_string(),
            )
        })?;
        let p = preset(name).map_err(lib_err)?;
        let threads = if threads > 0 {
            Some(threads as usize)
        } else {
            threads_from_env().map_err(lib_err)?
        };
        let cfg = RunConfig {
            preset: p.clone(),
            snr_db: Vec::new(),
            frames: RunConfig::DEFAULT_FRAMES,
            seed: RunConfig::DEFAULT_SEED,
            threads,
            slot_snr_offsets_db: [0.0; 4],
            zero_noise: false,
        };
        let sim = Simulator::new(p).map_err(lib_err)?;
        let pool = build_pool(threads)?;
        *out = Box::into_raw(Box::new(PncSimulator { sim, cfg, pool }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from [`pnc_sim_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_destroy(sim: *mut PncSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Sets the seed shared by subsequent runs.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_set_seed(sim: *mut PncSimulator, seed: u64) -> PncStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        s.cfg.seed = seed;
        Ok(())
    })
}

/// Sets user B's amplitude and phase mismatch.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_set_precoding(
    sim: *mut PncSimulator,
    o_pw: f64,
    o_ph: f64,
) -> PncStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        if !(o_pw > 0.0 && o_pw.is_finite()) || !o_ph.is_finite() {
            return Err((
                PncStatus::InvalidArgument,
                format!("bad precoding offsets {o_pw}, {o_ph}"),
            ));
        }
        s.cfg.preset.o_pw = o_pw;
        s.cfg.preset.o_ph = o_ph;
        Ok(())
    })
}

/// Per-slot SNR offsets in dB (PNC uplink, downlink, P2P uplink, P2P downlink).
///
/// # Safety
/// `sim` must be a live handle and `offsets` point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_set_slot_offsets(
    sim: *mut PncSimulator,
    offsets: *const f64,
) -> PncStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        if offsets.is_null() {
            return Err(null("offsets"));
        }
        let o = std::slice::from_raw_parts(offsets, 4);
        if o.iter().any(|v| !v.is_finite()) {
            return Err((PncStatus::InvalidArgument, "offsets must be finite".into()));
        }
        s.cfg.slot_snr_offsets_db.copy_from_slice(o);
        Ok(())
    })
}

/// Simulates `frames` frames at `snr_db`.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_run_point(
    sim: *const PncSimulator,
    snr_db: f64,
    frames: u64,
    out: *mut PncMetrics,
) -> PncStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if frames == 0 || !snr_db.is_finite() {
            return Err((
                PncStatus::InvalidArgument,
                "frames must be positive and SNR finite".into(),
            ));
        }
        let mut cfg = s.cfg.clone();
        cfg.frames = frames;
        let pt = s
            .pool
            .install(|| run_point(&s.sim, &cfg, snr_db))
            .map_err(lib_err)?;
        let m = pt.metrics;
        *out = PncMetrics {
            frames: m.frames as u64,
            frame_errors: m.frame_errors as u64,
            fer: m.fer,
            throughput_bps: m.throughput_bps,
            t_total_us_mean: m.t_total_us_mean,
            t_slot0_us_mean: m.t_slot0_us_mean,
            t3_us: pt.t3_us,
            k_ehat_mean: m.k_ehat_mean,
        };
        Ok(())
    })
}

/// Source bits of users A and B per frame.
///
/// # Safety
/// `sim` must be a live handle; `k_a` and `k_b` writable.
#[no_mangle]
pub unsafe extern "C" fn pnc_sim_source_bits(
    sim: *const PncSimulator,
    k_a: *mut usize,
    k_b: *mut usize,
) -> PncStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if k_a.is_null() || k_b.is_null() {
            return Err(null("output"));
        }
        *k_a = s.sim.k_a();
        *k_b = s.sim.k_b();
        Ok(())
    })
}

/// Number of registered presets.
#[no_mangle]
pub extern "C" fn pnc_preset_count() -> usize {
    all_presets().len()
}

fn copy_str(s: &str, buf: *mut c_char, len: usize) -> usize {
    let bytes = s.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        // SAFETY: caller guarantees `buf` holds `len` bytes
        unsafe {
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
    }
    bytes.len()
}

/// Copies the name of preset `index` into `buf` (NUL-terminated, truncated
/// to `len - 1` bytes). Returns the full name length, or 0 when `index`
/// is out of range.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pnc_preset_name(index: usize, buf: *mut c_char, len: usize) -> usize {
    match all_presets().get(index) {
        Some(p) => copy_str(&p.name, buf, len),
        None => 0,
    }
}

/// Copies this thread's last error message into `buf` like
/// [`pnc_preset_name`] and returns its full length (0 after a success).
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pnc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_str(&e.borrow(), buf, len))
}
