//! C interface to `hubbard-qsim`.
//!
//! Every fallible call returns an [`HqsStatus`]; on failure the message is
//! kept per thread and can be read with [`hqs_last_error_message`]. Objects
//! are opaque handles created by `hqs_*_new` style calls and released with
//! the matching `hqs_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hubbard_qsim::adiabatic::{adiabatic_evolve, AdiabaticSchedule};
use hubbard_qsim::iqpe::{run_iqpe_runs, IqpeConfig};
use hubbard_qsim::model::{HubbardModel, HubbardParams, Lattice};
use hubbard_qsim::noise::{NoiseProfile, NoiseSetup};
use hubbard_qsim::observables::measure_observables;
use hubbard_qsim::oracle::ground;
use hubbard_qsim::prep::{default_occupation, tight_binding_orbitals};
use hubbard_qsim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HqsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    ResourceLimit = 4,
    Io = 5,
    BufferTooSmall = 6,
    InvalidUtf8 = 7,
    Panic = 8,
}

pub struct HqsModel {
    model: HubbardModel,
}

pub struct HqsNoise {
    setup: NoiseSetup,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HqsIqpeOptions {
    pub m_bits: u32,
    pub trotter_steps: u32,
    pub shots_per_bit: u64,
    pub runs: u32,
    /// Relative padding of the energy window.
    pub margin: f64,
    pub seed: u64,
    pub fast_powers: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HqsEnergyEstimate {
    pub energy: f64,
    pub phi: f64,
    pub t: f64,
    pub e_lo: f64,
    pub e_hi: f64,
    pub delta_e: f64,
}

struct Failure(HqsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => HqsStatus::InvalidArgument,
            Error::ResourceLimit(_) => HqsStatus::ResourceLimit,
            Error::Parse(_) => HqsStatus::Parse,
            Error::Io(_) => HqsStatus::Io,
        };
        Failure(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Outcome) -> HqsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HqsStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HqsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(HqsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HqsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Outcome {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn count(x: impl TryInto<usize>, what: &str) -> Result<usize, Failure> {
    x.try_into()
        .map_err(|_| Failure(HqsStatus::InvalidArgument, format!("{what} out of range")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hqs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the last error message on this thread, excluding the
/// terminating NUL; 0 if the last call succeeded.
#[no_mangle]
pub extern "C" fn hqs_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |m| m.as_bytes().len()))
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len - 1` bytes). Returns the number of bytes written, excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hqs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |m| m.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Builds a Hubbard model on a named lattice (`"hexagon6"`, `"triangle"`,
/// `"chain:N"`, `"ring:N"`).
///
/// # Safety
/// `lattice` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hqs_model_new(
    lattice: *const c_char,
    gamma0: f64,
    u0: f64,
    out: *mut *mut HqsModel,
) -> HqsStatus {
    guard(|| {
        let lat: Lattice = text(lattice, "lattice")?.parse()?;
        let model = HubbardModel::new(lat, HubbardParams::new(gamma0, u0)?);
        let handle = Box::into_raw(Box::new(HqsModel { model }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `model` must be null or a handle from [`hqs_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hqs_model_free(model: *mut HqsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of lattice sites, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hqs_model_n_sites(model: *const HqsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_sites())
}

/// Exact ground-state energy at fixed electron number.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hqs_ground_energy(model: *const HqsModel, n_occ: usize, out: *mut f64) -> HqsStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let r = ground(&m.model.lattice, &m.model.params, n_occ)?;
        write_out(out, r.ground_energy, "out")
    })
}

#[no_mangle]
pub extern "C" fn hqs_iqpe_options_default() -> HqsIqpeOptions {
    HqsIqpeOptions {
        m_bits: 5,
        trotter_steps: 15,
        shots_per_bit: 1,
        runs: 1,
        margin: 0.02,
        seed: 1,
        fast_powers: false,
    }
}

/// Runs `options.runs` independent IQPE estimates starting from the
/// tight-binding Slater determinant with `n_occ` electrons. `noise` may be
/// null for a noiseless run. `out` must hold at least `options.runs`
/// entries; `out_len` is its capacity.
///
/// # Safety
/// Pointers must be valid as described; `noise` may be null.
#[no_mangle]
pub unsafe extern "C" fn hqs_run_iqpe(
    model: *const HqsModel,
    n_occ: usize,
    options: *const HqsIqpeOptions,
    noise: *const HqsNoise,
    out: *mut HqsEnergyEstimate,
    out_len: usize,
) -> HqsStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let o = borrow(options, "options")?;
        let runs = count(o.runs, "runs")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < runs {
            return Err(Failure(
                HqsStatus::BufferTooSmall,
                format!("out holds {out_len} estimates, {runs} runs requested"),
            ));
        }
        let mut cfg = IqpeConfig::for_model(&m.model, count(o.m_bits, "m_bits")?, count(o.trotter_steps, "trotter_steps")?, o.margin)?;
        cfg.shots_per_bit = count(o.shots_per_bit, "shots_per_bit")?;
        cfg.seed = o.seed;
        cfg.fast_powers = o.fast_powers;
        let occ = default_occupation(&tight_binding_orbitals(&m.model.lattice, m.model.params.gamma0), n_occ)?;
        let setup = noise.as_ref().map(|n| &n.setup);
        let estimates = run_iqpe_runs(&m.model, &occ, &cfg, setup, runs)?;
        for (i, e) in estimates.iter().enumerate() {
            out.add(i).write(HqsEnergyEstimate {
                energy: e.energy,
                phi: e.phi,
                t: e.t,
                e_lo: e.energy_window.0,
                e_hi: e.energy_window.1,
                delta_e: e.delta_e,
            });
        }
        Ok(())
    })
}

/// Adiabatic evolution from the tight-binding Slater determinant along the
/// linear schedule of duration `total_time` with step `dt`. Writes the
/// per-site charge and spin densities (`len` must equal the site count) and
/// the final energy expectation.
///
/// # Safety
/// `charge` and `spin` must be valid for `len` doubles; `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn hqs_adiabatic_observables(
    model: *const HqsModel,
    n_occ: usize,
    total_time: f64,
    dt: f64,
    charge: *mut f64,
    spin: *mut f64,
    len: usize,
    energy: *mut f64,
) -> HqsStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        if charge.is_null() || spin.is_null() {
            return Err(null("density buffer"));
        }
        let n = m.model.n_sites();
        if len != n {
            return Err(Failure(HqsStatus::BufferTooSmall, format!("expected {n} sites, got buffers of {len}")));
        }
        let schedule = AdiabaticSchedule::from_dt(total_time, dt)?;
        let state = adiabatic_evolve(&m.model.lattice, &m.model.params, n_occ, &schedule, dt)?;
        let r = measure_observables(&state, &m.model)?;
        ptr::copy_nonoverlapping(r.charge_density.as_ptr(), charge, n);
        ptr::copy_nonoverlapping(r.spin_density.as_ptr(), spin, n);
        write_out(energy, r.energy, "energy")
    })
}

unsafe fn new_noise(profile: NoiseProfile, out: *mut *mut HqsNoise) -> Outcome {
    let handle = Box::into_raw(Box::new(HqsNoise { setup: NoiseSetup::new(profile) }));
    write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
}

/// Reference device noise profile.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hqs_noise_baseline(out: *mut *mut HqsNoise) -> HqsStatus {
    guard(|| new_noise(NoiseProfile::ibm_baseline(), out))
}

/// Noise profile read from a `key = value` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hqs_noise_load(path: *const c_char, out: *mut *mut HqsNoise) -> HqsStatus {
    guard(|| new_noise(NoiseProfile::load(Path::new(text(path, "path")?))?, out))
}

/// Multiplies one channel (`"p1q"`, `"p2q"`, `"t1"`, `"t2"`, `"t1t2"`,
/// `"t1q"`, `"t2q"`, `"tmeas"`, `"p01"`, `"p10"`, `"readout"`) by `factor`,
/// or every channel at once with `"strength"`. `clipped` (may be null)
/// reports whether a probability was capped at 1.
///
/// # Safety
/// `noise` must be a live handle; `field` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hqs_noise_scale(
    noise: *mut HqsNoise,
    field: *const c_char,
    factor: f64,
    clipped: *mut bool,
) -> HqsStatus {
    guard(|| {
        let n = noise.as_mut().ok_or_else(|| null("noise"))?;
        let field = text(field, "field")?;
        let p = &n.setup.profile;
        let (scaled, was_clipped) = if field == "strength" {
            let s = p.with_strength(factor)?;
            let c = [s.p1q, s.p2q, s.p01, s.p10].contains(&1.0);
            (s, c)
        } else {
            p.scale(field.parse()?, factor)?
        };
        n.setup.profile = scaled;
        if !clipped.is_null() {
            clipped.write(was_clipped);
        }
        Ok(())
    })
}

/// Selects the simulation backend: `"auto"`, `"trajectories"` or `"density"`.
///
/// # Safety
/// `noise` must be a live handle; `backend` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hqs_noise_set_backend(noise: *mut HqsNoise, backend: *const c_char) -> HqsStatus {
    guard(|| {
        let n = noise.as_mut().ok_or_else(|| null("noise"))?;
        n.setup.backend = text(backend, "backend")?.parse()?;
        Ok(())
    })
}

/// # Safety
/// `noise` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hqs_noise_free(noise: *mut HqsNoise) {
    if !noise.is_null() {
        drop(Box::from_raw(noise));
    }
}
