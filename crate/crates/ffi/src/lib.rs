//! C interface to the beamnet simulator.
//!
//! Every fallible function returns a [`BnStatus`]; on failure the message is
//! kept per thread and can be read with [`bn_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use beamnet::harness::{aggregate, run_on_scenario, sweep_points, ExperimentConfig, Scenario};
use beamnet::netsched::{plan_rounds, RoundPlan};
use beamnet::pilots::{design_pilot, flat_spectrum_sequence, PilotSequence, PilotSpec};
use beamnet::seed::derived_rng;
use beamnet::{export, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside the domain of the operation, or a size mismatch.
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    /// Caller buffer is too small; the required length was written back.
    BufferTooSmall = 5,
    Internal = 6,
}

/// Designed pilot sequence.
pub struct BnPilot(PilotSequence);

/// Round schedule of a network alignment.
pub struct BnPlan(RoundPlan);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: BnStatus, msg: impl Into<String>) -> BnStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> BnStatus {
    match err {
        Error::Domain(_) | Error::Dimension(_) => BnStatus::InvalidArgument,
        Error::Config(_) => BnStatus::Config,
        Error::Io(_) | Error::Csv(_) => BnStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), BnStatus>) -> BnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(BnStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: beamnet::Result<T>) -> Result<T, BnStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, BnStatus> {
    if p.is_null() {
        return Err(fail(BnStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BnStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), BnStatus> {
    if p.is_null() {
        Err(fail(BnStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Copies `src` into a caller buffer of `cap` elements. `len` receives the
/// required length in every case.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), BnStatus> {
    non_null(len, "length output")?;
    *len = src.len();
    if cap < src.len() {
        return Err(fail(BnStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len())));
    }
    if !src.is_empty() {
        non_null(buf, "output buffer")?;
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn bn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static NUL-terminated library version.
#[no_mangle]
pub extern "C" fn bn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Designs the comb pilot with `ms` active bins and index `k` in a length-`m`
/// sequence of energy `energy`. The weight search is seeded by `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bn_pilot_design(
    m: usize,
    ms: usize,
    k: usize,
    energy: f64,
    seed: u64,
    out: *mut *mut BnPilot,
) -> BnStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = lift(PilotSpec::new(m, ms, k, energy))?;
        let w = lift(flat_spectrum_sequence(
            ms,
            beamnet::pilots::DEFAULT_FLATNESS_TOL_DB,
            beamnet::pilots::DEFAULT_FLATNESS_MAX_ITER,
            &mut derived_rng(seed, &[0xF1A7, ms as u64]),
        ))?;
        let p = lift(design_pilot(&spec, &w))?;
        *out = Box::into_raw(Box::new(BnPilot(p)));
        Ok(())
    })
}

/// Number of samples `M`, or 0 for a null handle.
///
/// # Safety
/// `pilot` must be null or a live handle from [`bn_pilot_design`].
#[no_mangle]
pub unsafe extern "C" fn bn_pilot_length(pilot: *const BnPilot) -> usize {
    pilot.as_ref().map_or(0, |p| p.0.samples.len())
}

/// Time-domain samples as separate real and imaginary arrays of `cap` entries.
///
/// # Safety
/// `pilot` must be a live handle; `re` and `im` must hold `cap` doubles and
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_pilot_samples(
    pilot: *const BnPilot,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    len: *mut usize,
) -> BnStatus {
    guard(|| {
        non_null(pilot, "pilot")?;
        let s = &(*pilot).0.samples;
        let (r, i): (Vec<f64>, Vec<f64>) = s.iter().map(|z| (z.re, z.im)).unzip();
        copy_out(&r, re, cap, len)?;
        copy_out(&i, im, cap, len)
    })
}

/// Active bin indices in increasing order.
///
/// # Safety
/// `pilot` must be a live handle; `bins` must hold `cap` entries and `len`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_pilot_active_bins(
    pilot: *const BnPilot,
    bins: *mut usize,
    cap: usize,
    len: *mut usize,
) -> BnStatus {
    guard(|| {
        non_null(pilot, "pilot")?;
        copy_out(&(*pilot).0.active_set, bins, cap, len)
    })
}

/// # Safety
/// `pilot` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn bn_pilot_free(pilot: *mut BnPilot) {
    if !pilot.is_null() {
        drop(Box::from_raw(pilot));
    }
}

/// Schedule covering every pair of `k` devices.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bn_plan_create(k: usize, out: *mut *mut BnPlan) -> BnStatus {
    guard(|| {
        non_null(out, "out")?;
        let plan = lift(plan_rounds(k))?;
        *out = Box::into_raw(Box::new(BnPlan(plan)));
        Ok(())
    })
}

/// Number of rounds, or 0 for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle from [`bn_plan_create`].
#[no_mangle]
pub unsafe extern "C" fn bn_plan_num_rounds(plan: *const BnPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.rounds.len())
}

/// Transmitters and receivers of one round. Each list goes to its own
/// buffer of `cap` entries; `n_tx` and `n_rx` receive the list lengths.
///
/// # Safety
/// `plan` must be a live handle; the buffers must hold `cap` entries and the
/// length pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_plan_round(
    plan: *const BnPlan,
    round: usize,
    tx: *mut usize,
    n_tx: *mut usize,
    rx: *mut usize,
    n_rx: *mut usize,
    cap: usize,
) -> BnStatus {
    guard(|| {
        non_null(plan, "plan")?;
        let rounds = &(*plan).0.rounds;
        let p = rounds
            .get(round)
            .ok_or_else(|| fail(BnStatus::InvalidArgument, format!("round {round} of {}", rounds.len())))?;
        copy_out(&p.transmitters, tx, cap, n_tx)?;
        copy_out(&p.receivers, rx, cap, n_rx)
    })
}

/// # Safety
/// `plan` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn bn_plan_free(plan: *mut BnPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Runs the Monte-Carlo sweep described by a TOML configuration and writes
/// the record and aggregate CSV tables into `out_dir`.
///
/// # Safety
/// Both arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn bn_run_sweep(config_toml: *const c_char, out_dir: *const c_char) -> BnStatus {
    guard(|| {
        let text = c_str(config_toml, "config")?;
        let dir = Path::new(c_str(out_dir, "output directory")?);
        let cfg = lift(ExperimentConfig::from_toml_str(text))?;
        let sc = lift(Scenario::build(&cfg))?;
        let res = lift(run_on_scenario(&sc, &sweep_points(&cfg)))?;
        let agg = lift(aggregate(&res))?;
        std::fs::create_dir_all(dir).map_err(|e| fail(BnStatus::Io, e.to_string()))?;
        lift(export::write_results(dir, &res, &agg))?;
        lift(export::write_manifest(dir, "sweep", &cfg))
    })
}
