//! C ABI over the `endowment-hedge` library.
//!
//! Models and solved surfaces cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible entry
//! point returns an [`EhStatus`]; on failure the message is kept per thread
//! and can be copied out with [`eh_last_error_message`]. Panics are caught
//! and reported as [`EhStatus::Panic`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use endowment_hedge::fd::{self, Grid1D, PriceSurface};
use endowment_hedge::mc::{self, McEstimate};
use endowment_hedge::{Error, HazardParams, MarketSpec, Model, PopulationPair};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhStatus {
    Ok = 0,
    NullPointer = 1,
    /// A model parameter violates its constraints.
    InvalidParameter = 2,
    /// A solve produced values outside their admissible bounds.
    Numerical = 3,
    /// A lookup fell outside the solved domain.
    OutOfDomain = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// Coefficients of one hazard diffusion.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhHazard {
    pub drift: f64,
    pub vol: f64,
    pub floor: f64,
}

/// Market constants.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhMarket {
    pub rate: f64,
    pub q_mort: f64,
    pub alpha: f64,
    pub rho: f64,
    pub maturity: f64,
}

/// Insured and reference dynamics with their time-zero hazards.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhPopulations {
    pub insured: EhHazard,
    pub reference: EhHazard,
    pub initial_insured: f64,
    pub initial_reference: f64,
}

/// Grid in log-excess hazard: `intervals` cells on `[-half_width, half_width]`
/// and `steps` time steps to maturity.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhGrid {
    pub half_width: f64,
    pub intervals: usize,
    pub steps: usize,
}

/// Monte Carlo mean with its standard error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EhEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// A validated model.
pub struct EhModel {
    inner: Model,
}

/// A solved price surface.
pub struct EhSurface {
    inner: PriceSurface,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> EhStatus {
    match e {
        Error::NonConvergedGrid { .. } | Error::ZeroPivot { .. } | Error::DegenerateSensitivity(_) => {
            EhStatus::Numerical
        }
        Error::OutOfDomain { .. } => EhStatus::OutOfDomain,
        Error::NonPositiveDimension(_)
        | Error::DimensionMismatch
        | Error::IncompatibleGrids
        | Error::InvalidArgument(_) => EhStatus::InvalidArgument,
        _ => EhStatus::InvalidParameter,
    }
}

struct Fail(EhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EhStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            EhStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {msg}"));
            EhStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn hazard(h: EhHazard) -> HazardParams {
    HazardParams::new(h.drift, h.vol, h.floor)
}

fn spec(m: EhMarket) -> MarketSpec {
    MarketSpec {
        rate: m.rate,
        q_mort: m.q_mort,
        alpha: m.alpha,
        rho: m.rho,
        maturity: m.maturity,
    }
}

fn estimate(e: McEstimate) -> EhEstimate {
    EhEstimate {
        mean: e.mean,
        std_error: e.std_error,
        n_paths: e.n_paths,
    }
}

unsafe fn grid_for(model: &Model, grid: *const EhGrid) -> Result<Grid1D, Fail> {
    let maturity = model.spec().maturity;
    Ok(match grid.as_ref() {
        None => Grid1D::default_for(maturity)?,
        Some(g) => fd::build_grid(g.half_width, g.intervals, g.steps, maturity)?,
    })
}

unsafe fn emit_surface(out: *mut *mut EhSurface, s: PriceSurface) -> Result<(), Fail> {
    write(out, Box::into_raw(Box::new(EhSurface { inner: s })), "out")
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length excluding the terminator. `buf` may be null when `len`
/// is 0 to query the length.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn eh_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Validates the parameters and returns a model handle in `*out`.
///
/// # Safety
/// Pointers must be null or valid for the pointed-to type.
#[no_mangle]
pub unsafe extern "C" fn eh_model_new(
    market: *const EhMarket,
    pops: *const EhPopulations,
    out: *mut *mut EhModel,
) -> EhStatus {
    guard(|| {
        let m = deref(market, "market")?;
        let p = deref(pops, "pops")?;
        let pops = PopulationPair {
            insured: hazard(p.insured),
            reference: hazard(p.reference),
            initial_insured: p.initial_insured,
            initial_reference: p.initial_reference,
        };
        let model = endowment_hedge::validate(spec(*m), pops)?;
        write(out, Box::into_raw(Box::new(EhModel { inner: model })), "out")
    })
}

/// Built-in study parameters with the given correlation, mortality risk
/// premium and initial insured hazard.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eh_model_study(
    rho: f64,
    q_mort: f64,
    initial_insured: f64,
    out: *mut *mut EhModel,
) -> EhStatus {
    guard(|| {
        let (s, p) = endowment_hedge::study_defaults(rho, q_mort, initial_insured);
        let model = endowment_hedge::validate(s, p)?;
        write(out, Box::into_raw(Box::new(EhModel { inner: model })), "out")
    })
}

/// Copies the model's market constants into `*out`.
///
/// # Safety
/// `model` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eh_model_market(model: *const EhModel, out: *mut EhMarket) -> EhStatus {
    guard(|| {
        let s = deref(model, "model")?.inner.spec();
        let m = EhMarket {
            rate: s.rate,
            q_mort: s.q_mort,
            alpha: s.alpha,
            rho: s.rho,
            maturity: s.maturity,
        };
        write(out, m, "out")
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_model_free(model: *mut EhModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Solves the price surface for a pool of `n_insured` lives. A null `grid`
/// selects the default grid for the model's maturity.
///
/// # Safety
/// Pointers must be null or valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eh_solve_psi(
    model: *const EhModel,
    grid: *const EhGrid,
    n_insured: u32,
    out: *mut *mut EhSurface,
) -> EhStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        if n_insured == 0 {
            return Err(Fail(EhStatus::InvalidArgument, "n_insured must be at least 1".into()));
        }
        let g = grid_for(m, grid)?;
        let s = if n_insured == 1 {
            fd::solve_psi_single(m, &g)?
        } else {
            fd::solve_psi_n(m, &g, n_insured)?.pop().expect("levels")
        };
        emit_surface(out, s)
    })
}

/// Solves the limiting per-contract surface.
///
/// # Safety
/// As for [`eh_solve_psi`].
#[no_mangle]
pub unsafe extern "C" fn eh_solve_beta(
    model: *const EhModel,
    grid: *const EhGrid,
    out: *mut *mut EhSurface,
) -> EhStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let g = grid_for(m, grid)?;
        emit_surface(out, fd::solve_beta(m, &g)?)
    })
}

/// Solves the reference survival factor that marks the q-forward. The
/// surface is indexed by the reference hazard.
///
/// # Safety
/// As for [`eh_solve_psi`].
#[no_mangle]
pub unsafe extern "C" fn eh_solve_survival(
    model: *const EhModel,
    grid: *const EhGrid,
    out: *mut *mut EhSurface,
) -> EhStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let g = grid_for(m, grid)?;
        emit_surface(out, fd::solve_survival_factor(m.reference(), m.spec(), &g)?)
    })
}

/// Undiscounted surface value and its hazard derivative at `(lambda, t)`.
/// Either output pointer may be null.
///
/// # Safety
/// `surface` must be a live handle; outputs null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eh_surface_lookup(
    surface: *const EhSurface,
    lambda: f64,
    t: f64,
    value: *mut f64,
    dlambda: *mut f64,
) -> EhStatus {
    guard(|| {
        let l = deref(surface, "surface")?.inner.lookup(lambda, t)?;
        if !value.is_null() {
            value.write(l.value);
        }
        if !dlambda.is_null() {
            dlambda.write(l.dlambda);
        }
        Ok(())
    })
}

/// Discounted price at `(lambda, t)` with short rate `rate`.
///
/// # Safety
/// `surface` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eh_surface_price(
    surface: *const EhSurface,
    rate: f64,
    lambda: f64,
    t: f64,
    out: *mut f64,
) -> EhStatus {
    guard(|| {
        let p = deref(surface, "surface")?.inner.price(rate, lambda, t)?;
        write(out, p, "out")
    })
}

/// Releases a surface handle. Null is ignored.
///
/// # Safety
/// `surface` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_surface_free(surface: *mut EhSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Monte Carlo estimate of the unloaded single-life factor from
/// `lambda_p0`.
///
/// # Safety
/// `model` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eh_mc_alpha0(
    model: *const EhModel,
    lambda_p0: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    out: *mut EhEstimate,
) -> EhStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let e = mc::estimate_alpha0(m, lambda_p0, n_paths, n_steps, seed)?;
        write(out, estimate(e), "out")
    })
}

/// Monte Carlo estimate of the limiting per-contract factor.
///
/// # Safety
/// As for [`eh_mc_alpha0`].
#[no_mangle]
pub unsafe extern "C" fn eh_mc_beta(
    model: *const EhModel,
    lambda_p0: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    out: *mut EhEstimate,
) -> EhStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let e = mc::estimate_beta(m, lambda_p0, n_paths, n_steps, seed)?;
        write(out, estimate(e), "out")
    })
}
