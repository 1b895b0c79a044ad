//! C ABI over `randham`.
//!
//! Every function returns an [`RhStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read back with
//! [`rh_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use randham::basis::Truncation;
use randham::config::{parse_config, Command};
use randham::experiments::{count_crossings, run_concentration, run_intersections, TestLagrangian};
use randham::field::{gaussian_dimension, HamiltonianSampler, LawDefiningConfig, RandomHamiltonian};
use randham::flow::{advect_curve, integrate_point, inverse_point, FlowSettings, LagrangianCurve};
use randham::hamiltonian::Hamiltonian;
use randham::output::table_to_csv;
use randham::temporal::KernelTag;
use randham::torus::TorusPoint;
use randham::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    FactorizationFailure = 4,
    NotAutonomous = 5,
    Unsupported = 6,
    NonFinite = 7,
    RefinementOverflow = 8,
    DegenerateOverlap = 9,
    ParseError = 10,
    TooManyFailures = 11,
    IoFailure = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhKernel {
    SquaredExponential = 1,
    Periodic = 2,
    Autonomous = 3,
}

/// Kernels arrive as plain integers so that unknown values are rejected
/// instead of producing an invalid enum.
fn kernel_tag(k: u32) -> Result<KernelTag, Fail> {
    match k {
        k if k == RhKernel::SquaredExponential as u32 => Ok(KernelTag::SquaredExponential),
        k if k == RhKernel::Periodic as u32 => Ok(KernelTag::Periodic),
        k if k == RhKernel::Autonomous as u32 => Ok(KernelTag::Autonomous),
        _ => Err(Error::Validation {
            field: "kernel".into(),
            reason: format!("unknown kernel code {k}"),
        }
        .into()),
    }
}

/// Law of a random Hamiltonian; draws are indexed.
pub struct RhSampler(HamiltonianSampler);

pub struct RhHamiltonian(RandomHamiltonian);

pub struct RhCurve(LagrangianCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RhStatus {
    match e {
        Error::OutOfRange { .. } => RhStatus::OutOfRange,
        Error::FactorizationFailure { .. } => RhStatus::FactorizationFailure,
        Error::NotAutonomous => RhStatus::NotAutonomous,
        Error::Unsupported(_) => RhStatus::Unsupported,
        Error::NonFinite { .. } => RhStatus::NonFinite,
        Error::RefinementOverflow { .. } => RhStatus::RefinementOverflow,
        Error::DegenerateOverlap { .. } => RhStatus::DegenerateOverlap,
        Error::Validation { .. } => RhStatus::InvalidArgument,
        Error::Parse(_) => RhStatus::ParseError,
        Error::TooManyFailures { .. } => RhStatus::TooManyFailures,
        Error::Io { .. } => RhStatus::IoFailure,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RhStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RhStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            RhStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            RhStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Parse(format!("{what} is not UTF-8"))))
}

fn law(regularity: f64, spatial_max: u32, temporal_max: u32, kernel: u32, seed: u64) -> Result<LawDefiningConfig, Fail> {
    Ok(LawDefiningConfig::new(
        regularity,
        Truncation {
            spatial_max,
            include_axis_modes: false,
            temporal_max,
        },
        kernel_tag(kernel)?,
    )
    .with_seed(seed))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn rh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of Gaussian coordinates per draw; `kernel` is an [`RhKernel`] value.
///
/// # Safety
/// `out_dim` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rh_gaussian_dimension(
    regularity: f64,
    spatial_max: u32,
    temporal_max: u32,
    kernel: u32,
    out_dim: *mut u64,
) -> RhStatus {
    guard(|| {
        let o = out(out_dim, "out_dim")?;
        *o = gaussian_dimension(&law(regularity, spatial_max, temporal_max, kernel, 0)?)? as u64;
        Ok(())
    })
}

/// # Safety
/// `out_sampler` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rh_sampler_new(
    regularity: f64,
    spatial_max: u32,
    temporal_max: u32,
    kernel: u32,
    seed: u64,
    out_sampler: *mut *mut RhSampler,
) -> RhStatus {
    guard(|| {
        let o = out(out_sampler, "out_sampler")?;
        let s = HamiltonianSampler::new(law(regularity, spatial_max, temporal_max, kernel, seed)?)?;
        *o = Box::into_raw(Box::new(RhSampler(s)));
        Ok(())
    })
}

/// # Safety
/// `sampler` must be null or a handle from [`rh_sampler_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rh_sampler_free(sampler: *mut RhSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Draw number `index` of the sampler's law.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rh_sampler_draw(
    sampler: *const RhSampler,
    index: u64,
    out_h: *mut *mut RhHamiltonian,
) -> RhStatus {
    guard(|| {
        let s = borrow(sampler, "sampler")?;
        let o = out(out_h, "out_h")?;
        *o = Box::into_raw(Box::new(RhHamiltonian(s.0.sample_index(index))));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`rh_sampler_draw`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rh_hamiltonian_free(h: *mut RhHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rh_hamiltonian_value(
    h: *const RhHamiltonian,
    t: f64,
    x: f64,
    y: f64,
    out_value: *mut f64,
) -> RhStatus {
    guard(|| {
        let h = borrow(h, "h")?;
        *out(out_value, "out_value")? = h.0.eval_h(t, TorusPoint::new(x, y))?;
        Ok(())
    })
}

/// `X_H(t, (x, y))` written to `out_xy[0..2]`.
///
/// # Safety
/// `out_xy` must be null or valid for two writes.
#[no_mangle]
pub unsafe extern "C" fn rh_hamiltonian_vector_field(
    h: *const RhHamiltonian,
    t: f64,
    x: f64,
    y: f64,
    out_xy: *mut f64,
) -> RhStatus {
    guard(|| {
        let h = borrow(h, "h")?;
        if out_xy.is_null() {
            return Err(Fail::Null("out_xy"));
        }
        let v = h.0.vector_field(t, [x, y])?;
        ptr::copy_nonoverlapping(v.as_ptr(), out_xy, 2);
        Ok(())
    })
}

/// Time-one image (or preimage when `inverse` is nonzero) of `(x, y)`,
/// reduced to `[0, 1)²`.
///
/// # Safety
/// `out_xy` must be null or valid for two writes.
#[no_mangle]
pub unsafe extern "C" fn rh_hamiltonian_flow_point(
    h: *const RhHamiltonian,
    x: f64,
    y: f64,
    steps: u32,
    inverse: i32,
    out_xy: *mut f64,
) -> RhStatus {
    guard(|| {
        let h = borrow(h, "h")?;
        if out_xy.is_null() {
            return Err(Fail::Null("out_xy"));
        }
        let s = FlowSettings::with_steps(steps as usize);
        s.validate()?;
        let p = TorusPoint::new(x, y);
        let img = if inverse != 0 {
            inverse_point(&h.0, p, &s)?
        } else {
            integrate_point(&h.0, p, 0.0, 1.0, &s)?
        };
        ptr::copy_nonoverlapping([img.point.x, img.point.y].as_ptr(), out_xy, 2);
        Ok(())
    })
}

/// Time-one image of `S¹ × {y}` sampled with `segments` segments.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rh_advect_horizontal(
    h: *const RhHamiltonian,
    y: f64,
    segments: u32,
    steps: u32,
    refinement_threshold: f64,
    max_refinement_depth: u32,
    out_curve: *mut *mut RhCurve,
) -> RhStatus {
    guard(|| {
        let h = borrow(h, "h")?;
        let o = out(out_curve, "out_curve")?;
        if segments < 3 {
            return Err(Error::Validation {
                field: "segments".into(),
                reason: "must be at least 3".into(),
            }
            .into());
        }
        let s = FlowSettings {
            steps: steps as usize,
            refinement_threshold,
            max_refinement_depth,
        };
        let k = LagrangianCurve::horizontal(y, segments as usize);
        *o = Box::into_raw(Box::new(RhCurve(advect_curve(&h.0, &k, 1.0, &s)?)));
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a handle from [`rh_advect_horizontal`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rh_curve_free(curve: *mut RhCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rh_curve_len(curve: *const RhCurve, out_len: *mut u64) -> RhStatus {
    guard(|| {
        *out(out_len, "out_len")? = borrow(curve, "curve")?.0.len() as u64;
        Ok(())
    })
}

/// Copy up to `capacity` lifted vertices as `x0, y0, x1, y1, …` into `buf`.
///
/// # Safety
/// `buf` must be valid for `2 * capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn rh_curve_vertices(
    curve: *const RhCurve,
    buf: *mut f64,
    capacity: u64,
    out_written: *mut u64,
) -> RhStatus {
    guard(|| {
        let c = borrow(curve, "curve")?;
        let w = out(out_written, "out_written")?;
        if buf.is_null() && capacity > 0 {
            return Err(Fail::Null("buf"));
        }
        let n = c.0.vertices.len().min(capacity as usize);
        for (i, v) in c.0.vertices[..n].iter().enumerate() {
            *buf.add(2 * i) = v[0];
            *buf.add(2 * i + 1) = v[1];
        }
        *w = n as u64;
        Ok(())
    })
}

/// Crossings of `curve` with the test Lagrangian `label` (`"L1"` … `"L14"`).
///
/// # Safety
/// Pointers must be null or valid; `label` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn rh_curve_count_crossings(
    curve: *const RhCurve,
    label: *const c_char,
    out_count: *mut u64,
) -> RhStatus {
    guard(|| {
        let c = borrow(curve, "curve")?;
        let l = TestLagrangian::standard(text(label, "label")?)?;
        *out(out_count, "out_count")? = count_crossings(&c.0, &l)?;
        Ok(())
    })
}

/// Run `intersections` or `concentration` from a TOML document and return the
/// CSV table. Free the string with [`rh_string_free`].
///
/// # Safety
/// Strings must be nul-terminated; `out_csv` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rh_run_table(
    command: *const c_char,
    config_toml: *const c_char,
    out_csv: *mut *mut c_char,
) -> RhStatus {
    guard(|| {
        let o = out(out_csv, "out_csv")?;
        let cmd = match text(command, "command")? {
            "intersections" => Command::Intersections,
            "concentration" => Command::Concentration,
            other => {
                return Err(Error::Unsupported(format!("{other:?} does not produce a table")).into());
            }
        };
        let cfg = parse_config(text(config_toml, "config_toml")?, Some(cmd))?;
        let table = match cmd {
            Command::Intersections => run_intersections(&cfg)?,
            _ => run_concentration(&cfg)?,
        };
        let csv = CString::new(table_to_csv(&table)?).expect("csv has no nul");
        *o = csv.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
