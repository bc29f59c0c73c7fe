//! C interface to the `dexchange` solver.
//!
//! Every fallible function returns a [`DxStatus`]; on failure a message is
//! available from [`dx_last_error`] until the next call on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Users are zero-based. Rate, weight and capacity arrays have one entry per
//! user; packet arrays have one entry per packet.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use dexchange::cli::{Exit, Failure};
use dexchange::gf::{Elem, FieldSpec};
use dexchange::model::{example1, CutSetOracle, ProblemInstance};
use dexchange::netcode::{construct_code, decode, verify_decodable, RngSpec, TransmissionSchedule};
use dexchange::ratealloc::{eval_h, min_cost, min_sum_rate, Backend, CapacityVector, CostFunction};

/// Result of a call. The non-zero values match the exit codes of the
/// `dexchange` command.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DxStatus {
    DxOk = 0,
    /// Bad argument, null pointer or malformed input.
    DxInvalid = 1,
    /// The budget or rate vector admits no solution.
    DxInfeasible = 2,
    /// No decodable code was found within the retry limit.
    DxConstruction = 3,
    /// The user cannot decode.
    DxDecode = 4,
    /// A Rust panic was caught at the boundary.
    DxInternal = 255,
}

/// Cost families accepted by [`dx_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DxCost {
    /// `Σ α_i R_i` with the given weights.
    DxLinear = 0,
    /// `Σ R_i log R_i`; weights are ignored.
    DxFair = 1,
}

/// Solver backend for the coordinate minimizations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DxBackend {
    DxSfm = 0,
    DxSubgradient = 1,
}

/// An instance together with its rank memo.
pub struct DxInstance {
    oracle: CutSetOracle,
}

/// A transmission schedule.
pub struct DxSchedule {
    schedule: TransmissionSchedule,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(exit: Exit) -> DxStatus {
    match exit {
        Exit::Ok => DxStatus::DxOk,
        Exit::Infeasible => DxStatus::DxInfeasible,
        Exit::Construction => DxStatus::DxConstruction,
        Exit::Decode => DxStatus::DxDecode,
        Exit::Usage | Exit::Property => DxStatus::DxInvalid,
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        exit: Exit::Usage,
        message: message.into(),
        result: None,
    }
}

/// Runs `f`, records its error and converts panics.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> DxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DxStatus::DxOk,
        Ok(Err(fail)) => {
            set_error(&fail.message);
            status_of(fail.exit)
        }
        Err(_) => {
            set_error("internal error");
            DxStatus::DxInternal
        }
    }
}

unsafe fn instance<'a>(p: *const DxInstance) -> Result<&'a DxInstance, Failure> {
    p.as_ref().ok_or_else(|| invalid("null instance"))
}

unsafe fn schedule<'a>(p: *const DxSchedule) -> Result<&'a DxSchedule, Failure> {
    p.as_ref().ok_or_else(|| invalid("null schedule"))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("null {what}")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(invalid(format!("null {what}")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid("null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("string is not UTF-8"))
}

unsafe fn caps_of(p: *const i64, m: usize) -> Result<CapacityVector, Failure> {
    if p.is_null() {
        return Ok(CapacityVector::unbounded());
    }
    Ok(CapacityVector::new(input(p, m, "caps")?.to_vec())?)
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("null output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_from_json(
    json: *const c_char,
    out: *mut *mut DxInstance,
) -> DxStatus {
    guard(|| {
        let inst = ProblemInstance::from_json(text(json)?)?;
        store(
            out,
            DxInstance {
                oracle: CutSetOracle::new(inst),
            },
        )
    })
}

/// The three-user, six-packet running example over GF(`q`).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_example1(q: u32, out: *mut *mut DxInstance) -> DxStatus {
    guard(|| {
        let field = FieldSpec::new(q)?;
        store(
            out,
            DxInstance {
                oracle: CutSetOracle::new(example1(field)),
            },
        )
    })
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_users(inst: *const DxInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.oracle.users())
}

/// Number of packets, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_packets(inst: *const DxInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.oracle.packets())
}

/// Rows held by `user`, or 0 if out of range.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_rows(inst: *const DxInstance, user: usize) -> usize {
    inst.as_ref()
        .filter(|i| user < i.oracle.users())
        .map_or(0, |i| i.oracle.instance().observation(user).rows())
}

/// What `user` observes of the packet vector `w`: writes
/// `dx_instance_rows(inst, user)` symbols to `x_out`.
///
/// # Safety
/// `w` must hold one symbol per packet and `x_out` room for the user's rows.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_observe(
    inst: *const DxInstance,
    user: usize,
    w: *const u32,
    x_out: *mut u32,
) -> DxStatus {
    guard(|| {
        let inst = instance(inst)?.oracle.instance();
        if user >= inst.users() {
            return Err(invalid(format!("user {user} out of range")));
        }
        let w: &[Elem] = input(w, inst.packets(), "packets")?;
        let x = inst.observe(user, w)?;
        output(x_out, x.len(), "observation")?.copy_from_slice(&x);
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dx_instance_free(inst: *mut DxInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Least sum-rate that lets every user recover the file.
///
/// # Safety
/// `caps` is null (unbounded) or one entry per user; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dx_min_sum_rate(
    inst: *const DxInstance,
    caps: *const i64,
    out: *mut i64,
) -> DxStatus {
    guard(|| {
        let o = &instance(inst)?.oracle;
        let caps = caps_of(caps, o.users())?;
        let beta = min_sum_rate(o, &caps, Backend::Sfm)?;
        *output(out, 1, "output")?.first_mut().expect("one") = beta;
        Ok(())
    })
}

/// Cheapest rate vector at sum-rate `beta`, or over all sum-rates when
/// `beta` is negative. Writes the rates, and optionally the chosen budget
/// and cost.
///
/// # Safety
/// `weights` must hold one entry per user for linear costs (it may be null
/// for the fair cost); `caps` is null or one entry per user; `rates_out`
/// must have room for one entry per user; `beta_out` and `value_out` may be
/// null.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn dx_solve(
    inst: *const DxInstance,
    cost: DxCost,
    weights: *const f64,
    beta: i64,
    caps: *const i64,
    backend: DxBackend,
    rates_out: *mut i64,
    beta_out: *mut i64,
    value_out: *mut f64,
) -> DxStatus {
    guard(|| {
        let o = &instance(inst)?.oracle;
        let m = o.users();
        let cost = match cost {
            DxCost::DxLinear => CostFunction::Linear(input(weights, m, "weights")?.to_vec()),
            DxCost::DxFair => CostFunction::Fair,
        };
        cost.validate(m)?;
        let caps = caps_of(caps, m)?;
        let backend = match backend {
            DxBackend::DxSfm => Backend::Sfm,
            DxBackend::DxSubgradient => Backend::Subgradient(None),
        };
        let (beta, value, rates) = if beta < 0 {
            let opt = min_cost(o, &cost, &caps, backend)?;
            (opt.beta, opt.value, opt.rates)
        } else {
            let (value, rates) = eval_h(o, beta, &cost, &caps, backend)?;
            (beta, value, rates)
        };
        output(rates_out, m, "rates")?.copy_from_slice(&rates);
        if let Some(b) = beta_out.as_mut() {
            *b = beta;
        }
        if let Some(v) = value_out.as_mut() {
            *v = value;
        }
        Ok(())
    })
}

/// Random code for `rates`, retried up to `max_retries` times until every
/// user can decode.
///
/// # Safety
/// `rates` must hold one entry per user; `out` must be valid;
/// `attempts_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn dx_construct_code(
    inst: *const DxInstance,
    rates: *const i64,
    seed: u64,
    stream: u64,
    max_retries: usize,
    out: *mut *mut DxSchedule,
    attempts_out: *mut usize,
) -> DxStatus {
    guard(|| {
        let o = &instance(inst)?.oracle;
        let rates = input(rates, o.users(), "rates")?;
        let rng = RngSpec::new(seed).with_stream(stream);
        let code = construct_code(o.instance(), rates, rng, max_retries)?;
        if let Some(a) = attempts_out.as_mut() {
            *a = code.attempts;
        }
        store(
            out,
            DxSchedule {
                schedule: code.schedule,
            },
        )
    })
}

/// Parses a schedule from JSON text and checks it against `inst`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dx_schedule_from_json(
    inst: *const DxInstance,
    json: *const c_char,
    out: *mut *mut DxSchedule,
) -> DxStatus {
    guard(|| {
        let inst = instance(inst)?.oracle.instance();
        let schedule = TransmissionSchedule::from_json(text(json)?)?;
        schedule.check_against(inst)?;
        store(out, DxSchedule { schedule })
    })
}

/// JSON text of the schedule, to be released with [`dx_string_free`]; null
/// for a null handle.
///
/// # Safety
/// `sched` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_schedule_to_json(sched: *const DxSchedule) -> *mut c_char {
    sched.as_ref().map_or(ptr::null_mut(), |s| {
        CString::new(s.schedule.to_json())
            .expect("JSON has no nul")
            .into_raw()
    })
}

/// Number of transmissions, or 0 for a null handle.
///
/// # Safety
/// `sched` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_schedule_len(sched: *const DxSchedule) -> usize {
    sched.as_ref().map_or(0, |s| s.schedule.len())
}

/// Symbols broadcast for the packet vector `w`, one per transmission.
///
/// # Safety
/// `w` must hold one symbol per packet and `v_out` room for
/// `dx_schedule_len(sched)` symbols.
#[no_mangle]
pub unsafe extern "C" fn dx_schedule_transmit(
    sched: *const DxSchedule,
    w: *const u32,
    v_out: *mut u32,
) -> DxStatus {
    guard(|| {
        let s = &schedule(sched)?.schedule;
        let w = input(w, s.packets(), "packets")?;
        let v = s.transmit(w)?;
        output(v_out, v.len(), "transmissions")?.copy_from_slice(&v);
        Ok(())
    })
}

/// # Safety
/// `sched` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dx_schedule_free(sched: *mut DxSchedule) {
    if !sched.is_null() {
        drop(Box::from_raw(sched));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Per-user decodability. `per_user_out` (one entry per user) and
/// `all_out` may each be null.
///
/// # Safety
/// Handles must be live; non-null outputs must have the stated room.
#[no_mangle]
pub unsafe extern "C" fn dx_verify(
    inst: *const DxInstance,
    sched: *const DxSchedule,
    per_user_out: *mut bool,
    all_out: *mut bool,
) -> DxStatus {
    guard(|| {
        let inst = instance(inst)?.oracle.instance();
        let s = &schedule(sched)?.schedule;
        s.check_against(inst)?;
        let d = verify_decodable(inst, s);
        if !per_user_out.is_null() {
            output(per_user_out, d.per_user.len(), "per-user flags")?.copy_from_slice(&d.per_user);
        }
        if let Some(a) = all_out.as_mut() {
            *a = d.all;
        }
        Ok(())
    })
}

/// Recovers the packet vector at `user` from its observation `x` and the
/// broadcast symbols `v`.
///
/// # Safety
/// `x` must hold `dx_instance_rows(inst, user)` symbols, `v`
/// `dx_schedule_len(sched)` symbols and `w_out` room for one per packet.
#[no_mangle]
pub unsafe extern "C" fn dx_decode(
    inst: *const DxInstance,
    sched: *const DxSchedule,
    user: usize,
    x: *const u32,
    v: *const u32,
    w_out: *mut u32,
) -> DxStatus {
    guard(|| {
        let inst = instance(inst)?.oracle.instance();
        let s = &schedule(sched)?.schedule;
        if user >= inst.users() {
            return Err(invalid(format!("user {user} out of range")));
        }
        let x = input(x, inst.observation(user).rows(), "observation")?;
        let v = input(v, s.len(), "transmissions")?;
        let w = decode(inst, user, s, x, v)?;
        output(w_out, w.len(), "packets")?.copy_from_slice(&w);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses_follow_exit_codes() {
        for exit in [
            Exit::Ok,
            Exit::Usage,
            Exit::Infeasible,
            Exit::Construction,
            Exit::Decode,
        ] {
            assert_eq!(status_of(exit) as i32, exit as i32);
        }
    }

    #[test]
    fn panics_become_internal_errors() {
        assert_eq!(guard(|| panic!("boom")), DxStatus::DxInternal);
        assert!(!dx_last_error().is_null());
        assert_eq!(guard(|| Ok(())), DxStatus::DxOk);
        assert!(dx_last_error().is_null());
    }
}
