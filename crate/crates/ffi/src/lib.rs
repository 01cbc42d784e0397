//! C ABI over the Floquet solver, resonance search and splitting report.
//!
//! Every function returns an [`RlStatus`]. On failure the message of the
//! most recent error on the calling thread is available through
//! [`rl_last_error_message`]. Matrices are written row-major into
//! caller-owned arrays of nine doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rabi_lab::floquet::{solve_floquet, FloquetError, FloquetParams, FloquetSolution};
use rabi_lab::resonances::{find_resonance_with, ResonanceError, ResonanceKind};
use rabi_lab::semiclassics::{collapse_time, splitting, SemiclassicsError, WavePacket};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    /// Rejected input; nothing was computed.
    InvalidParameter = 2,
    /// The computation ran and failed (no bracket, ill-conditioned, ...).
    NumericalError = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

/// Resonance kinds accepted by [`rl_find_resonance`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlResonanceKind {
    Bs = 0,
    Tc = 1,
    Fc = 2,
    Rc = 3,
    En = 4,
    Vs = 5,
    Ws = 6,
}

/// Opaque solved Floquet problem.
pub struct RlFloquet {
    solution: FloquetSolution,
}

/// Splitting of a wave packet centered on `zeta` into two fragments.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RlSplitting {
    pub velocity_re: f64,
    pub velocity_im: f64,
    /// Polarization axis n of the fragments.
    pub direction: [f64; 3],
    /// `(1 + p.n)/2`.
    pub weight_plus: f64,
    /// `(1 - p.n)/2`.
    pub weight_minus: f64,
    /// `|v||zeta|/(epsilon mu)`, 1 in the rotating-wave limit.
    pub speed_ratio: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| {
        let mut bytes = message.into_bytes();
        bytes.retain(|b| *b != 0);
        *e.borrow_mut() = bytes;
    });
}

fn clear_error() {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
}

trait Classified: std::fmt::Display {
    fn name(&self) -> &'static str;
    fn is_validation(&self) -> bool;
}

macro_rules! classified {
    ($($t:ty),*) => {$(
        impl Classified for $t {
            fn name(&self) -> &'static str { <$t>::name(self) }
            fn is_validation(&self) -> bool { <$t>::is_validation(self) }
        }
    )*};
}

classified!(FloquetError, ResonanceError, SemiclassicsError);

fn report<E: Classified>(e: E) -> RlStatus {
    set_error(format!("{}: {}", e.name(), e));
    if e.is_validation() {
        RlStatus::InvalidParameter
    } else {
        RlStatus::NumericalError
    }
}

fn guard(f: impl FnOnce() -> RlStatus) -> RlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("Panic: {msg}"));
            RlStatus::Panic
        }
    }
}

fn null(what: &str) -> RlStatus {
    set_error(format!("NullPointer: {what} is null"));
    RlStatus::NullPointer
}

fn write_matrix(m: &Matrix3<f64>, out: *mut f64) {
    for r in 0..3 {
        for c in 0..3 {
            // SAFETY: the caller provides nine writable doubles.
            unsafe { *out.add(3 * r + c) = m[(r, c)] };
        }
    }
}

/// Solves the Floquet problem for detuning `delta`, drive `mu` and
/// truncation `n_max` (0 selects the library default). On success `*out`
/// owns a handle to release with [`rl_floquet_free`].
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_floquet_solve(delta: f64, mu: f64, n_max: u32, out: *mut *mut RlFloquet) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let mut params = FloquetParams::new(delta, mu);
        if n_max > 0 {
            params = params.with_n_max(n_max as usize);
        }
        match solve_floquet(&params) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(RlFloquet { solution }));
                RlStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// Releases a handle from [`rl_floquet_solve`]. Null is ignored.
///
/// # Safety
/// `handle` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn rl_floquet_free(handle: *mut RlFloquet) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live handle; `out` must be valid for one double.
#[no_mangle]
pub unsafe extern "C" fn rl_floquet_rabi_frequency(handle: *const RlFloquet, out: *mut f64) -> RlStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return null("handle or out");
        };
        *out = h.solution.rabi_frequency;
        RlStatus::Ok
    })
}

/// Rotation `O(t)` carrying the initial Bloch vector to the one at time t.
///
/// # Safety
/// `handle` must be a live handle; `out` must be valid for nine doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_floquet_o_matrix(handle: *const RlFloquet, t: f64, out: *mut f64) -> RlStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return null("handle or out");
        };
        if !t.is_finite() {
            set_error(format!("InvalidParameter: t must be finite, got {t}"));
            return RlStatus::InvalidParameter;
        }
        write_matrix(&h.solution.o_matrix(t), out);
        RlStatus::Ok
    })
}

/// Long-time part `Q(t)` of the rotation, periodic in t.
///
/// # Safety
/// `handle` must be a live handle; `out` must be valid for nine doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_floquet_q_matrix(handle: *const RlFloquet, t: f64, out: *mut f64) -> RlStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return null("handle or out");
        };
        if !t.is_finite() {
            set_error(format!("InvalidParameter: t must be finite, got {t}"));
            return RlStatus::InvalidParameter;
        }
        write_matrix(&h.solution.q_matrix(t), out);
        RlStatus::Ok
    })
}

/// Resonant detuning of `kind` (an [`RlResonanceKind`] value) at drive `mu`.
/// `value_at_res` may be null.
///
/// # Safety
/// `delta_res` must be valid for one double; `value_at_res` null or valid.
#[no_mangle]
pub unsafe extern "C" fn rl_find_resonance(
    kind: i32,
    mu: f64,
    n_max: u32,
    delta_res: *mut f64,
    value_at_res: *mut f64,
) -> RlStatus {
    guard(|| {
        if delta_res.is_null() {
            return null("delta_res");
        }
        let Some(kind) = usize::try_from(kind).ok().and_then(|k| ResonanceKind::ALL.get(k).copied()) else {
            set_error(format!("InvalidParameter: unknown resonance kind {kind}"));
            return RlStatus::InvalidParameter;
        };
        let mut base = FloquetParams::new(0.0, mu);
        if n_max > 0 {
            base = base.with_n_max(n_max as usize);
        }
        match find_resonance_with(kind, &base, None) {
            Ok(r) => {
                *delta_res = r.delta_res;
                if !value_at_res.is_null() {
                    *value_at_res = r.value_at_res;
                }
                RlStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

fn packet(zeta_re: f64, zeta_im: f64, epsilon: f64, p: *const f64) -> WavePacket {
    // SAFETY: callers check `p` and guarantee three readable doubles.
    let p = unsafe { Vector3::new(*p, *p.add(1), *p.add(2)) };
    WavePacket::coherent(Complex64::new(zeta_re, zeta_im), epsilon, p)
}

/// Drift velocity, axis and weights of the two fragments of a coherent
/// packet centered on `zeta` with initial Bloch vector `p[3]`.
///
/// # Safety
/// `handle` must be a live handle, `p` valid for three doubles and `out`
/// valid for one [`RlSplitting`].
#[no_mangle]
pub unsafe extern "C" fn rl_splitting(
    handle: *const RlFloquet,
    zeta_re: f64,
    zeta_im: f64,
    epsilon: f64,
    p: *const f64,
    out: *mut RlSplitting,
) -> RlStatus {
    guard(|| {
        let (Some(h), false, false) = (handle.as_ref(), p.is_null(), out.is_null()) else {
            return null("handle, p or out");
        };
        match splitting(&h.solution, &packet(zeta_re, zeta_im, epsilon, p)) {
            Ok(s) => {
                *out = RlSplitting {
                    velocity_re: s.velocity.re,
                    velocity_im: s.velocity.im,
                    direction: [s.direction[0], s.direction[1], s.direction[2]],
                    weight_plus: s.weights.0,
                    weight_minus: s.weights.1,
                    speed_ratio: s.speed_ratio,
                };
                RlStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// Collapse time of the Rabi oscillations for a coherent packet.
///
/// # Safety
/// `handle` must be a live handle, `p` valid for three doubles and `out`
/// valid for one double.
#[no_mangle]
pub unsafe extern "C" fn rl_collapse_time(
    handle: *const RlFloquet,
    zeta_re: f64,
    zeta_im: f64,
    epsilon: f64,
    p: *const f64,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        let (Some(h), false, false) = (handle.as_ref(), p.is_null(), out.is_null()) else {
            return null("handle, p or out");
        };
        match collapse_time(&h.solution, &packet(zeta_re, zeta_im, epsilon, p)) {
            Ok(t) => {
                *out = t;
                RlStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length excluding the terminator; 0 means no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}
