//! C interface to the netcodccn codec and simulator.
//!
//! Every fallible call returns an [`NccStatus`]. On failure a message is
//! kept per thread and can be copied out with [`ncc_last_error`]. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netcodccn::experiments::{build_butterfly, sweep, write_results, Axis, Scenario, Topology};
use netcodccn::forwarder::{Strategy, Variant};
use netcodccn::names::parse_name;
use netcodccn::rlnc::{split_content, CodedSegment, GenerationState, RlncError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    /// Malformed segment bytes or a segment from another generation.
    BadSegment = 4,
    /// Decoding was requested before full rank.
    RankDeficient = 5,
    Io = 6,
    Simulation = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NccVariant {
    NetCod = 0,
    CcnDefault = 1,
    CcnLoadSharing = 2,
    CcnParallel = 3,
}

impl From<NccVariant> for Variant {
    fn from(v: NccVariant) -> Self {
        match v {
            NccVariant::NetCod => Variant::NetCod,
            NccVariant::CcnDefault => Variant::Ccn(Strategy::Default),
            NccVariant::CcnLoadSharing => Variant::Ccn(Strategy::LoadSharing),
            NccVariant::CcnParallel => Variant::Ccn(Strategy::Parallel),
        }
    }
}

/// Codec state for one generation: a source when built from content, a
/// decoder or recoder when built empty.
pub struct NccGeneration {
    state: GenerationState,
    rng: ChaCha8Rng,
}

pub struct NccScenario {
    scenario: Scenario,
}

/// Aggregate over the trials of one scenario run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NccRunSummary {
    pub mean_d: f64,
    pub stddev_d: f64,
    /// Client downloads, counted per client and seed.
    pub completed: u64,
    pub timed_out: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: NccStatus, msg: impl Into<String>) -> NccStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> NccStatus>(f: F) -> NccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(NccStatus::Panic, "internal panic"),
    }
}

fn rlnc_status(e: RlncError) -> NccStatus {
    let status = match e {
        RlncError::RankDeficient { .. } => NccStatus::RankDeficient,
        RlncError::EmptyContent | RlncError::ZeroSize => NccStatus::InvalidArgument,
        _ => NccStatus::BadSegment,
    };
    fail(status, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, NccStatus> {
    if p.is_null() {
        return Err(fail(NccStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(NccStatus::InvalidArgument, "string is not UTF-8"))
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ncc_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Splits `len` bytes of `data` into segments of `segment_len` bytes (the
/// last zero-padded) and builds a source for generation 0 holding all of
/// them. `generation_size` bounds the number of segments.
///
/// # Safety
/// `prefix` must be a NUL-terminated string, `data` must point to `len`
/// readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_from_content(
    prefix: *const c_char,
    data: *const u8,
    len: usize,
    segment_len: usize,
    generation_size: usize,
    seed: u64,
    out: *mut *mut NccGeneration,
) -> NccStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(NccStatus::NullPointer, "null data or out pointer");
        }
        let prefix = match str_arg(prefix) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let Ok(name) = parse_name(prefix) else {
            return fail(NccStatus::InvalidArgument, format!("bad prefix '{prefix}'"));
        };
        let raw = slice::from_raw_parts(data, len);
        let content = match split_content(raw, name, segment_len, generation_size) {
            Ok(c) => c,
            Err(e) => return rlnc_status(e),
        };
        if content.generation_count() != 1 {
            return fail(NccStatus::InvalidArgument, "content does not fit in one generation");
        }
        match GenerationState::from_source(&content, 0) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(NccGeneration { state, rng: ChaCha8Rng::seed_from_u64(seed) }));
                NccStatus::Ok
            }
            Err(e) => rlnc_status(e),
        }
    })
}

/// An empty generation that accepts coded segments.
///
/// # Safety
/// `prefix` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_new(
    prefix: *const c_char,
    generation: u32,
    generation_size: usize,
    segment_len: usize,
    seed: u64,
    out: *mut *mut NccGeneration,
) -> NccStatus {
    guard(|| {
        if out.is_null() {
            return fail(NccStatus::NullPointer, "out is null");
        }
        let prefix = match str_arg(prefix) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let Ok(name) = parse_name(prefix) else {
            return fail(NccStatus::InvalidArgument, format!("bad prefix '{prefix}'"));
        };
        if generation_size == 0 || generation_size > u16::MAX as usize || segment_len == 0 {
            return fail(NccStatus::InvalidArgument, "generation size and segment length must be positive");
        }
        let state = GenerationState::new(name, generation, generation_size, segment_len);
        *out = Box::into_raw(Box::new(NccGeneration { state, rng: ChaCha8Rng::seed_from_u64(seed) }));
        NccStatus::Ok
    })
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_free(g: *mut NccGeneration) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Rank of the stored segments, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_rank(g: *const NccGeneration) -> usize {
    g.as_ref().map_or(0, |g| g.state.rank())
}

/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_is_decoded(g: *const NccGeneration) -> bool {
    g.as_ref().is_some_and(|g| g.state.is_decoded())
}

/// Writes a fresh random combination of the stored segments in wire form.
/// `written` receives the encoded length; when `cap` is too small nothing
/// is written, `written` holds the required size and `BufferTooSmall` is
/// returned.
///
/// # Safety
/// `g` must be a live handle, `buf` must point to `cap` writable bytes and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_encode(
    g: *mut NccGeneration,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> NccStatus {
    guard(|| {
        let (Some(g), false, false) = (g.as_mut(), buf.is_null(), written.is_null()) else {
            return fail(NccStatus::NullPointer, "null handle or buffer");
        };
        let seg = match g.state.random_combine(&mut g.rng) {
            Ok(s) => s,
            Err(e) => return rlnc_status(e),
        };
        let bytes = seg.to_bytes();
        *written = bytes.len();
        if bytes.len() > cap {
            return fail(NccStatus::BufferTooSmall, format!("need {} bytes", bytes.len()));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        NccStatus::Ok
    })
}

/// Offers one wire-form coded segment. `innovative` is set to whether it
/// raised the rank; non-innovative segments are discarded.
///
/// # Safety
/// `g` must be a live handle, `buf` must point to `len` readable bytes and
/// `innovative` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_insert(
    g: *mut NccGeneration,
    buf: *const u8,
    len: usize,
    innovative: *mut bool,
) -> NccStatus {
    guard(|| {
        let (Some(g), false, false) = (g.as_mut(), buf.is_null(), innovative.is_null()) else {
            return fail(NccStatus::NullPointer, "null handle or buffer");
        };
        let seg = match CodedSegment::from_bytes(slice::from_raw_parts(buf, len)) {
            Ok(s) => s,
            Err(e) => return rlnc_status(e),
        };
        match g.state.try_insert(seg) {
            Ok(inn) => {
                *innovative = inn;
                NccStatus::Ok
            }
            Err(e) => rlnc_status(e),
        }
    })
}

/// Writes the decoded originals, concatenated, into `buf`, which must hold
/// generation size times segment length bytes.
///
/// # Safety
/// `g` must be a live handle and `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ncc_generation_decode(g: *const NccGeneration, buf: *mut u8, cap: usize) -> NccStatus {
    guard(|| {
        let (Some(g), false) = (g.as_ref(), buf.is_null()) else {
            return fail(NccStatus::NullPointer, "null handle or buffer");
        };
        let need = g.state.size() * g.state.payload_len();
        if cap < need {
            return fail(NccStatus::BufferTooSmall, format!("need {need} bytes"));
        }
        let rows = match g.state.decode() {
            Ok(r) => r,
            Err(e) => return rlnc_status(e),
        };
        for (i, row) in rows.iter().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), buf.add(i * row.len()), row.len());
        }
        NccStatus::Ok
    })
}

/// The two-source, two-client butterfly with every link at `capacity_mbps`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_scenario_butterfly(
    capacity_mbps: f64,
    phi: f64,
    seed: u64,
    out: *mut *mut NccScenario,
) -> NccStatus {
    guard(|| {
        if out.is_null() {
            return fail(NccStatus::NullPointer, "out is null");
        }
        if !(capacity_mbps > 0.0) || !(0.0..=1.0).contains(&phi) {
            return fail(NccStatus::InvalidArgument, "capacity must be positive and phi in [0, 1]");
        }
        let bps = (capacity_mbps * 1e6).round() as u64;
        *out = Box::into_raw(Box::new(NccScenario { scenario: build_butterfly(bps, bps, phi, seed) }));
        NccStatus::Ok
    })
}

/// Loads a topology file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_scenario_load(path: *const c_char, seed: u64, out: *mut *mut NccScenario) -> NccStatus {
    guard(|| {
        if out.is_null() {
            return fail(NccStatus::NullPointer, "out is null");
        }
        let path = match str_arg(path) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Topology::load(Path::new(path)) {
            Ok(topo) => {
                let mut scenario = Scenario::from_topology(format!("file:{path}"), topo, Variant::NetCod);
                scenario.seed = seed;
                *out = Box::into_raw(Box::new(NccScenario { scenario }));
                NccStatus::Ok
            }
            Err(e) => fail(NccStatus::Io, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ncc_scenario_free(s: *mut NccScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Sets the protocol, pipeline size and Data loss rate. A negative
/// `loss_rate` keeps the per-link rates from the topology.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ncc_scenario_configure(
    s: *mut NccScenario,
    variant: NccVariant,
    pipeline: usize,
    loss_rate: f64,
) -> NccStatus {
    guard(|| {
        let Some(s) = s.as_mut() else {
            return fail(NccStatus::NullPointer, "scenario is null");
        };
        let mut sc = s.scenario.clone();
        sc.variant = variant.into();
        sc.pipeline = pipeline;
        sc.loss_rate = (loss_rate >= 0.0).then_some(loss_rate);
        if let Err(e) = sc.validate() {
            return fail(NccStatus::InvalidArgument, e.to_string());
        }
        s.scenario = sc;
        NccStatus::Ok
    })
}

/// Runs `seeds` trials and summarizes normalized delay over all clients.
/// When `csv_path` is not null the per-client rows are written there.
///
/// # Safety
/// `s` must be a live scenario handle, `csv_path` null or a NUL-terminated
/// string, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncc_scenario_run(
    s: *const NccScenario,
    seeds: usize,
    csv_path: *const c_char,
    out: *mut NccRunSummary,
) -> NccStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return fail(NccStatus::NullPointer, "null scenario or out");
        };
        if seeds == 0 {
            return fail(NccStatus::InvalidArgument, "seeds must be positive");
        }
        let pipeline = s.scenario.pipeline as f64;
        let table = match sweep(&s.scenario, Axis::Pipeline, &[pipeline], seeds) {
            Ok(t) => t,
            Err(e) => return fail(NccStatus::Simulation, e.to_string()),
        };
        if !csv_path.is_null() {
            let path = match str_arg(csv_path) {
                Ok(p) => p,
                Err(st) => return st,
            };
            if let Err(e) = write_results(&table, Path::new(path)) {
                return fail(NccStatus::Io, e.to_string());
            }
        }
        let sm = &table.summary()[0];
        *out = NccRunSummary {
            mean_d: sm.mean_d,
            stddev_d: sm.stddev_d,
            completed: sm.completed as u64,
            timed_out: sm.timed_out as u64,
        };
        NccStatus::Ok
    })
}
