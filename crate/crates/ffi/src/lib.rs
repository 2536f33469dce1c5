// SPDX-License-Identifier: Apache-2.0

//! C ABI for `gmon-control`.
//!
//! Every entry point returns a [`GmonStatus`]; results are written through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`gmon_last_error_message`]. Objects are opaque handles released with
//! their matching `_free` function. Cases are passed as the field sign:
//! `+1` for equal fields, `-1` for opposite fields.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gmon_control::dynamics::{evolve, infidelity, Case, StateVector};
use gmon_control::error::{Error, ErrorKind};
use gmon_control::optimizer::{min_time_search, optimize_bang_bang, optimize_pwc};
use gmon_control::pontryagin::{solve_switching_time, switching_trace, Regime, SwitchingTrace};
use gmon_control::protocol::{Protocol, Segment};
use gmon_control::robustness::{monte_carlo, NominalProtocol};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmonStatus {
    Ok = 0,
    /// A parameter violated its precondition.
    InvalidArgument = 1,
    /// A required pointer was null.
    NullPointer = 2,
    /// A numerical routine failed (no root, no convergence, target unreachable).
    Numerical = 3,
    /// Reading or writing failed.
    Io = 4,
    /// The library panicked; this is a bug.
    Panic = 5,
}

/// Control regime of a switching-function sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmonRegime {
    Bang0 = 0,
    Bang1 = 1,
    Singular = 2,
}

/// Optimal one-switch schedule at a fixed total time.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GmonBangBang {
    pub tau: f64,
    pub error: f64,
    /// Time at which the field is switched on.
    pub t_b: f64,
    /// Time at which the coupling is switched off.
    pub t_j: f64,
}

/// Minimum-time search result.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GmonMinTime {
    pub tau_star: f64,
    pub tau_0: f64,
    pub bracket_width: f64,
}

/// Monte Carlo statistics of the error under timing jitter.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GmonRobustness {
    pub epsilon: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Opaque piecewise-constant protocol.
pub struct GmonProtocol(Protocol);

/// Opaque sampled switching function.
pub struct GmonSwitchingTrace(SwitchingTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GmonStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Validation => GmonStatus::InvalidArgument,
            ErrorKind::Numerical => GmonStatus::Numerical,
            ErrorKind::Io => GmonStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GmonStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GmonStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GmonStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GmonStatus::Panic
        }
    }
}

fn case(sign: c_int) -> Result<Case, Failure> {
    Case::from_sign(sign).ok_or_else(|| invalid(format!("case must be +1 or -1, got {sign}")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(GmonStatus::NullPointer, format!("{name} is null")))
}

unsafe fn input<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(GmonStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(GmonStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gmon_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gmon_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a protocol from `n` segments.
///
/// # Safety
/// `durations`, `b` and `j` must each point to `n` readable doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_new(
    case_sign: c_int,
    durations: *const f64,
    b: *const f64,
    j: *const f64,
    n: usize,
    out_protocol: *mut *mut GmonProtocol,
) -> GmonStatus {
    guard(|| {
        let out_protocol = out(out_protocol, "out_protocol")?;
        let case = case(case_sign)?;
        let (dt, b, j) = (slice(durations, n, "durations")?, slice(b, n, "b")?, slice(j, n, "j")?);
        let segments = (0..n)
            .map(|k| Segment {
                dt: dt[k],
                b: b[k],
                j: j[k],
            })
            .collect();
        *out_protocol = boxed(GmonProtocol(Protocol::new(case, segments)?));
        Ok(())
    })
}

/// Parses a protocol from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_protocol` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_from_json(
    json: *const c_char,
    out_protocol: *mut *mut GmonProtocol,
) -> GmonStatus {
    guard(|| {
        let out_protocol = out(out_protocol, "out_protocol")?;
        let text = CStr::from_ptr(input(json, "json")?)
            .to_str()
            .map_err(|e| invalid(format!("json is not UTF-8: {e}")))?;
        *out_protocol = boxed(GmonProtocol(Protocol::from_json(text)?));
        Ok(())
    })
}

/// Serializes a protocol to JSON. Release the string with [`gmon_string_free`].
///
/// # Safety
/// `protocol` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_to_json(
    protocol: *const GmonProtocol,
    out_json: *mut *mut c_char,
) -> GmonStatus {
    guard(|| {
        let out_json = out(out_json, "out_json")?;
        let text = input(protocol, "protocol")?.0.to_json()?;
        *out_json = CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Total duration and segment count.
///
/// # Safety
/// `protocol` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_shape(
    protocol: *const GmonProtocol,
    out_tau: *mut f64,
    out_len: *mut usize,
) -> GmonStatus {
    guard(|| {
        let p = &input(protocol, "protocol")?.0;
        *out(out_tau, "out_tau")? = p.tau();
        *out(out_len, "out_len")? = p.len();
        Ok(())
    })
}

/// Copies segment `index` as `(duration, b, j)`.
///
/// # Safety
/// `protocol` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_segment(
    protocol: *const GmonProtocol,
    index: usize,
    out_duration: *mut f64,
    out_b: *mut f64,
    out_j: *mut f64,
) -> GmonStatus {
    guard(|| {
        let p = &input(protocol, "protocol")?.0;
        let s = p
            .segments()
            .get(index)
            .ok_or_else(|| invalid(format!("segment index {index} out of range ({})", p.len())))?;
        *out(out_duration, "out_duration")? = s.dt;
        *out(out_b, "out_b")? = s.b;
        *out(out_j, "out_j")? = s.j;
        Ok(())
    })
}

/// Error `1 − |⟨singlet|ψ(τ)⟩|²` reached from the case's initial ground state.
///
/// # Safety
/// `protocol` must be a live handle; `out_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_error(protocol: *const GmonProtocol, out_error: *mut f64) -> GmonStatus {
    guard(|| {
        let p = &input(protocol, "protocol")?.0;
        let out_error = out(out_error, "out_error")?;
        *out_error = infidelity(&evolve(&StateVector::initial(p.case()), p)?);
        Ok(())
    })
}

/// Evolves a state through the protocol. States are four amplitudes in the
/// basis (↑↑, ↑↓, ↓↑, ↓↓), split into real and imaginary parts; the output
/// arrays may alias the inputs.
///
/// # Safety
/// `protocol` must be a live handle; each array must hold four doubles.
#[no_mangle]
pub unsafe extern "C" fn gmon_evolve(
    protocol: *const GmonProtocol,
    re_in: *const f64,
    im_in: *const f64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> GmonStatus {
    guard(|| {
        let p = &input(protocol, "protocol")?.0;
        let re: [f64; 4] = slice(re_in, 4, "re_in")?.try_into().expect("length 4");
        let im: [f64; 4] = slice(im_in, 4, "im_in")?.try_into().expect("length 4");
        if re_out.is_null() || im_out.is_null() {
            return Err(Failure(GmonStatus::NullPointer, "output array is null".into()));
        }
        let psi = evolve(&StateVector::from_parts(re, im), p)?;
        ptr::copy_nonoverlapping(psi.real_parts().as_ptr(), re_out, 4);
        ptr::copy_nonoverlapping(psi.imag_parts().as_ptr(), im_out, 4);
        Ok(())
    })
}

/// Releases a protocol. Null is ignored.
///
/// # Safety
/// `protocol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gmon_protocol_free(protocol: *mut GmonProtocol) {
    if !protocol.is_null() {
        drop(Box::from_raw(protocol));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gmon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Optimal one-switch schedule at total time `tau`. When `out_protocol` is
/// non-null it receives the schedule as a protocol handle.
///
/// # Safety
/// `out` must be writable; `out_protocol` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_optimize_bang_bang(
    tau: f64,
    case_sign: c_int,
    out_result: *mut GmonBangBang,
    out_protocol: *mut *mut GmonProtocol,
) -> GmonStatus {
    guard(|| {
        let out_result = out(out_result, "out_result")?;
        let r = optimize_bang_bang(tau, case(case_sign)?)?;
        let (t_b, t_j) = (r.t_b().unwrap_or(0.0), r.t_j().unwrap_or(tau));
        *out_result = GmonBangBang {
            tau: r.tau,
            error: r.best_error,
            t_b,
            t_j,
        };
        if let Some(slot) = out_protocol.as_mut() {
            *slot = boxed(GmonProtocol(r.best_protocol));
        }
        Ok(())
    })
}

/// Multistart optimization over `n_segments` piecewise-constant controls.
///
/// # Safety
/// `out_error` must be writable; `out_protocol` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_optimize_pwc(
    tau: f64,
    n_segments: usize,
    case_sign: c_int,
    restarts: usize,
    seed: u64,
    out_error: *mut f64,
    out_protocol: *mut *mut GmonProtocol,
) -> GmonStatus {
    guard(|| {
        let out_error = out(out_error, "out_error")?;
        let r = optimize_pwc(tau, n_segments, case(case_sign)?, restarts, seed)?;
        *out_error = r.best_error;
        if let Some(slot) = out_protocol.as_mut() {
            *slot = boxed(GmonProtocol(r.best_protocol));
        }
        Ok(())
    })
}

/// Shortest total time whose optimal error is below `threshold`.
///
/// # Safety
/// `out_result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_min_time_search(
    case_sign: c_int,
    threshold: f64,
    resolution: f64,
    out_result: *mut GmonMinTime,
) -> GmonStatus {
    guard(|| {
        let out_result = out(out_result, "out_result")?;
        let m = min_time_search(case(case_sign)?, threshold, resolution)?;
        *out_result = GmonMinTime {
            tau_star: m.tau_star,
            tau_0: m.tau_0,
            bracket_width: m.bracket_width,
        };
        Ok(())
    })
}

/// Field switch-on time satisfying the optimality condition at total time `tau`
/// (opposite fields).
///
/// # Safety
/// `out_t_b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_solve_switching_time(tau: f64, out_t_b: *mut f64) -> GmonStatus {
    guard(|| {
        let out_t_b = out(out_t_b, "out_t_b")?;
        *out_t_b = solve_switching_time(tau)?;
        Ok(())
    })
}

/// Samples the switching function of the one-switch schedule on `n_grid` points.
///
/// # Safety
/// `out_trace` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_switching_trace_new(
    tau: f64,
    t_b: f64,
    n_grid: usize,
    out_trace: *mut *mut GmonSwitchingTrace,
) -> GmonStatus {
    guard(|| {
        let out_trace = out(out_trace, "out_trace")?;
        *out_trace = boxed(GmonSwitchingTrace(switching_trace(tau, t_b, n_grid)?));
        Ok(())
    })
}

/// Number of samples in a trace.
///
/// # Safety
/// `trace` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_switching_trace_len(trace: *const GmonSwitchingTrace, out_len: *mut usize) -> GmonStatus {
    guard(|| {
        *out(out_len, "out_len")? = input(trace, "trace")?.0.times.len();
        Ok(())
    })
}

/// Sample `index` of a trace: time, switching value and regime.
///
/// # Safety
/// `trace` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_switching_trace_sample(
    trace: *const GmonSwitchingTrace,
    index: usize,
    out_t: *mut f64,
    out_s: *mut f64,
    out_regime: *mut GmonRegime,
) -> GmonStatus {
    guard(|| {
        let tr = &input(trace, "trace")?.0;
        if index >= tr.times.len() {
            return Err(invalid(format!(
                "sample index {index} out of range ({})",
                tr.times.len()
            )));
        }
        *out(out_t, "out_t")? = tr.times[index];
        *out(out_s, "out_s")? = tr.s[index];
        *out(out_regime, "out_regime")? = match tr.regimes[index] {
            Regime::Bang0 => GmonRegime::Bang0,
            Regime::Bang1 => GmonRegime::Bang1,
            Regime::Singular => GmonRegime::Singular,
        };
        Ok(())
    })
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gmon_switching_trace_free(trace: *mut GmonSwitchingTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Error statistics of the two-segment schedule (field-off for `first`,
/// then both on for `second`) when each of the three switching instants is
/// shifted by an independent uniform offset in `[−ε/2, ε/2]`. Deterministic
/// for a given seed.
///
/// # Safety
/// `out_stats` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmon_monte_carlo(
    first: f64,
    second: f64,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
    out_stats: *mut GmonRobustness,
) -> GmonStatus {
    guard(|| {
        let out_stats = out(out_stats, "out_stats")?;
        let nominal = NominalProtocol::from_durations(first, second)?;
        let s = monte_carlo(&nominal, epsilon, n_samples, seed)?;
        *out_stats = GmonRobustness {
            epsilon: s.epsilon,
            mean_error: s.mean_error,
            std_error: s.std_error,
            n_samples: s.n_samples as u64,
            seed: s.seed,
        };
        Ok(())
    })
}
