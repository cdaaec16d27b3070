//! C ABI over `efx-core`.
//!
//! Instances and solutions are opaque heap handles released with their
//! `_free` function. Every entry point returns an [`EfxStatus`]; on failure
//! [`efx_last_error_message`] describes the most recent error on the calling
//! thread. Strings handed out by the library are released with
//! [`efx_string_free`]. Panics are caught at the boundary and reported as
//! `EFX_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use efx_core::gen::{self, GenSpec};
use efx_core::{io, verify, AgentId, Allocation, CheckLevel, EfxError, Instance, SolveConfig};

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EfxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, an invalid instance or allocation, or an unsatisfiable generator spec.
    InvalidInput = 3,
    NotTriangleFree = 4,
    SearchSpaceTooLarge = 5,
    /// A solver self-check failed.
    Internal = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Check only the final allocation.
pub const EFX_CHECKS_FINAL: u32 = 0;
/// Also check the phase boundaries (the default of the Rust API).
pub const EFX_CHECKS_BOUNDARIES: u32 = 1;
/// Also check after every solver step.
pub const EFX_CHECKS_EVERY: u32 = 2;

/// A parsed instance.
pub struct EfxInstance {
    inner: Instance,
}

/// An allocation produced by [`efx_solve`].
pub struct EfxSolution {
    allocation: Allocation,
    sigma: Vec<AgentId>,
    metrics: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: EfxStatus,
    message: String,
}

impl Failure {
    fn new(status: EfxStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<EfxError> for Failure {
    fn from(e: EfxError) -> Self {
        let status = match e {
            EfxError::NotTriangleFree(_) => EfxStatus::NotTriangleFree,
            EfxError::SearchSpaceTooLarge { .. } => EfxStatus::SearchSpaceTooLarge,
            EfxError::Internal { .. } | EfxError::Precondition(_) => EfxStatus::Internal,
            _ => EfxStatus::InvalidInput,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EfxStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EfxStatus::Ok,
        Ok(Err(f)) => {
            set_error(&f.message);
            f.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {what}"));
            EfxStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::new(
            EfxStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::new(EfxStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(EfxStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            EfxStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(EfxStatus::Internal, "string contains a NUL byte"))
}

/// Copies `src` into `buf` (up to `cap` entries) and stores the full length in `out_len`.
unsafe fn copy_out(
    src: &[usize],
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> Result<(), Failure> {
    write_out(out_len, src.len(), "out_len")?;
    if cap > 0 {
        if buf.is_null() {
            return Err(Failure::new(EfxStatus::NullPointer, "buf is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len().min(cap));
    }
    Ok(())
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn efx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn efx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn efx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses instance JSON into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_instance_from_json(
    json: *const c_char,
    out: *mut *mut EfxInstance,
) -> EfxStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let inner = io::parse_instance(text)?;
        write_out(out, Box::into_raw(Box::new(EfxInstance { inner })), "out")
    })
}

/// Generates an instance from a generator spec given as JSON, e.g.
/// `{"seed": 1, "n": 6, "m": 12, "topology": "tree", "valuation_class": "additive", "v_max": 50, "max_parallel": 4}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_gen_instance(
    spec_json: *const c_char,
    out: *mut *mut EfxInstance,
) -> EfxStatus {
    guard(|| {
        let text = read_str(spec_json, "spec_json")?;
        let spec: GenSpec = serde_json::from_str(text).map_err(EfxError::from)?;
        let inner = gen::gen_instance(&spec)?;
        write_out(out, Box::into_raw(Box::new(EfxInstance { inner })), "out")
    })
}

/// Releases an instance. NULL is ignored.
///
/// # Safety
/// `instance` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn efx_instance_free(instance: *mut EfxInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_instance_agent_count(
    instance: *const EfxInstance,
    out: *mut usize,
) -> EfxStatus {
    guard(|| write_out(out, deref(instance, "instance")?.inner.agent_count(), "out"))
}

/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_instance_good_count(
    instance: *const EfxInstance,
    out: *mut usize,
) -> EfxStatus {
    guard(|| write_out(out, deref(instance, "instance")?.inner.good_count(), "out"))
}

/// Sets `out_found` and, when a triangle exists, writes its agents to `out_agents[0..3]`.
///
/// # Safety
/// `instance` must be a live handle; `out_agents` must hold 3 entries; `out_found` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_instance_find_triangle(
    instance: *const EfxInstance,
    out_agents: *mut usize,
    out_found: *mut bool,
) -> EfxStatus {
    guard(|| {
        let t = deref(instance, "instance")?.inner.find_triangle();
        if let Some(t) = t {
            if out_agents.is_null() {
                return Err(Failure::new(EfxStatus::NullPointer, "out_agents is null"));
            }
            for (k, a) in t.iter().enumerate() {
                out_agents.add(k).write(a.index());
            }
        }
        write_out(out_found, t.is_some(), "out_found")
    })
}

/// Serialises an instance; release the result with [`efx_string_free`].
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_instance_to_json(
    instance: *const EfxInstance,
    out: *mut *mut c_char,
) -> EfxStatus {
    guard(|| {
        let text = io::instance_to_json(&deref(instance, "instance")?.inner);
        write_out(out, to_c_string(text)?, "out")
    })
}

/// Solves an instance. `checks` is one of the `EFX_CHECKS_*` constants.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_solve(
    instance: *const EfxInstance,
    checks: u32,
    out: *mut *mut EfxSolution,
) -> EfxStatus {
    guard(|| {
        let inst = &deref(instance, "instance")?.inner;
        let level = match checks {
            EFX_CHECKS_FINAL => CheckLevel::Final,
            EFX_CHECKS_BOUNDARIES => CheckLevel::Boundaries,
            EFX_CHECKS_EVERY => CheckLevel::Every,
            other => {
                return Err(Failure::new(
                    EfxStatus::OutOfRange,
                    format!("unknown check level {other}"),
                ))
            }
        };
        if out.is_null() {
            return Err(Failure::new(EfxStatus::NullPointer, "out is null"));
        }
        let result = efx_core::solve(inst, &SolveConfig::with_checks(level))?;
        let metrics = serde_json::to_string(&result.metrics).map_err(EfxError::from)?;
        let solution = EfxSolution {
            allocation: result.allocation,
            sigma: result.sigma,
            metrics,
        };
        write_out(out, Box::into_raw(Box::new(solution)), "out")
    })
}

/// Releases a solution. NULL is ignored.
///
/// # Safety
/// `solution` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn efx_solution_free(solution: *mut EfxSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Goods held by `agent`, ascending. Writes at most `cap` ids to `buf` and the
/// bundle size to `out_len`; pass `cap = 0` to query the size.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `cap` entries; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_solution_bundle(
    solution: *const EfxSolution,
    agent: usize,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> EfxStatus {
    guard(|| {
        let sol = deref(solution, "solution")?;
        if agent >= sol.allocation.agent_count() {
            return Err(Failure::new(
                EfxStatus::OutOfRange,
                format!("no agent {agent}"),
            ));
        }
        let goods: Vec<usize> = sol
            .allocation
            .bundle(AgentId(agent))
            .iter()
            .map(|g| g.index())
            .collect();
        copy_out(&goods, buf, cap, out_len)
    })
}

/// The picking sequence, in the same buffer convention as [`efx_solution_bundle`].
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `cap` entries; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_solution_sigma(
    solution: *const EfxSolution,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> EfxStatus {
    guard(|| {
        let sol = deref(solution, "solution")?;
        let sigma: Vec<usize> = sol.sigma.iter().map(|a| a.index()).collect();
        copy_out(&sigma, buf, cap, out_len)
    })
}

/// Allocation JSON (with `sigma`), as printed by `efx solve`.
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_solution_to_json(
    solution: *const EfxSolution,
    out: *mut *mut c_char,
) -> EfxStatus {
    guard(|| {
        let sol = deref(solution, "solution")?;
        let text = io::allocation_to_json(&sol.allocation, Some(&sol.sigma));
        write_out(out, to_c_string(text)?, "out")
    })
}

/// Run metrics as a JSON object.
///
/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efx_solution_metrics_json(
    solution: *const EfxSolution,
    out: *mut *mut c_char,
) -> EfxStatus {
    guard(|| {
        let sol = deref(solution, "solution")?;
        write_out(out, to_c_string(sol.metrics.clone())?, "out")
    })
}

/// Whether an allocation (as JSON) has no strong envy.
///
/// # Safety
/// `instance` must be a live handle; `allocation_json` NUL-terminated; `out_passed` writable.
#[no_mangle]
pub unsafe extern "C" fn efx_check_efx(
    instance: *const EfxInstance,
    allocation_json: *const c_char,
    out_passed: *mut bool,
) -> EfxStatus {
    guard(|| {
        let inst = &deref(instance, "instance")?.inner;
        let (x, _) = io::parse_allocation(read_str(allocation_json, "allocation_json")?, inst)?;
        write_out(out_passed, verify::check_efx(inst, &x).passed, "out_passed")
    })
}
