//! C interface to `stcl`.
//!
//! Every function returns a [`StclStatus`]. On failure the message of the
//! last error on the calling thread is available from
//! [`stcl_last_error_message`]. Handles are opaque and must be released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stcl::error::Error;
use stcl::flux::{flux_preset, TermFlux};
use stcl::geometry::{metric_preset, LeafMesh, Spacetime1p1};
use stcl::harness::fit_rate;
use stcl::solver::{
    evolve_diffusion, evolve_hyperbolic, l1_flux_distance, viscosity_preset, InitialCondition, SchemeConfig,
    SliceField, Trajectory,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StclStatus {
    Ok = 0,
    InvalidArgument = 1,
    UnknownPreset = 2,
    Numerical = 3,
    Mismatch = 4,
    Geometry = 5,
    NullPointer = 6,
    Panic = 7,
    Other = 8,
}

/// Foliated spacetime built from a metric preset.
pub struct StclSpacetime {
    inner: Spacetime1p1,
}

/// Solver output together with the flux it was computed with.
pub struct StclTrajectory {
    inner: Trajectory,
    flux: TermFlux,
}

/// Log-log least-squares fit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StclRateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-width of the 95% band of the slope.
    pub half_width: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StclStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Missing(_) | Error::TimeOutOfRange { .. } => {
            StclStatus::InvalidArgument
        }
        Error::UnknownPreset(_) => StclStatus::UnknownPreset,
        Error::Numerical(_) | Error::Cfl(_) | Error::NonHyperbolic { .. } => StclStatus::Numerical,
        Error::Mismatch(_) => StclStatus::Mismatch,
        Error::InvalidGeometry(_) | Error::SelfOverlap { .. } => StclStatus::Geometry,
        Error::Scenario { source, .. } => status_of(source),
        _ => StclStatus::Other,
    }
}

struct Fail(StclStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> StclStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => StclStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside stcl");
            StclStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(StclStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(StclStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stcl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stcl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a spacetime over `[0, t_max]` from a metric preset. `keys` and
/// `values` hold `n_params` preset parameters (both may be null when
/// `n_params` is 0).
///
/// # Safety
/// String arguments must be NUL-terminated; `keys` and `values` must hold
/// `n_params` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stcl_spacetime_new(
    metric: *const c_char,
    t_max: f64,
    leaf_length: f64,
    keys: *const *const c_char,
    values: *const f64,
    n_params: usize,
    out: *mut *mut StclSpacetime,
) -> StclStatus {
    guard(|| {
        let name = text(metric, "metric")?;
        let mut params = Vec::with_capacity(n_params);
        if n_params > 0 {
            if keys.is_null() || values.is_null() {
                return Err(null("parameter arrays"));
            }
            for i in 0..n_params {
                params.push((text(*keys.add(i), "parameter key")?.to_string(), *values.add(i)));
            }
        }
        let st = metric_preset(name, 0.0, t_max, leaf_length, |k| {
            params.iter().find(|(p, _)| p == k).map(|(_, v)| *v)
        })?;
        write(out, Box::into_raw(Box::new(StclSpacetime { inner: st })), "out")
    })
}

/// # Safety
/// `st` must come from [`stcl_spacetime_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stcl_spacetime_free(st: *mut StclSpacetime) {
    if !st.is_null() {
        drop(Box::from_raw(st));
    }
}

/// Evolves initial datum `ic` (e.g. `"riemann(1,0)"`) under a flux preset up
/// to `t_end`. With a non-null `viscosity` the diffusion model with that
/// preset and coefficient `eps` is solved instead.
///
/// # Safety
/// `st` must be a live handle; strings must be NUL-terminated or null where
/// allowed; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stcl_solve(
    st: *const StclSpacetime,
    flux: *const c_char,
    ic: *const c_char,
    n_cells: usize,
    cfl: f64,
    c0: f64,
    t_end: f64,
    viscosity: *const c_char,
    eps: f64,
    out: *mut *mut StclTrajectory,
) -> StclStatus {
    guard(|| {
        let st = &handle(st, "spacetime")?.inner;
        let f = flux_preset(text(flux, "flux")?, |_| None)?;
        let ic = InitialCondition::parse(text(ic, "initial condition")?)?;
        let mesh = LeafMesh::for_spacetime(st, n_cells)?;
        let u0 = SliceField::from_initial(st.t_min(), mesh, &ic);
        let cfg = SchemeConfig::new(n_cells, c0).with_cfl(cfl);
        let traj = if viscosity.is_null() {
            evolve_hyperbolic(st, &f, &u0, t_end, &cfg)?
        } else {
            let phi = viscosity_preset(text(viscosity, "viscosity")?, eps)?;
            evolve_diffusion(st, &f, phi.as_ref(), &u0, t_end, &cfg)?
        };
        write(out, Box::into_raw(Box::new(StclTrajectory { inner: traj, flux: f })), "out")
    })
}

/// # Safety
/// `traj` must come from [`stcl_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stcl_trajectory_free(traj: *mut StclTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored slices and of cells per slice.
///
/// # Safety
/// `traj` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn stcl_trajectory_shape(
    traj: *const StclTrajectory,
    n_slices: *mut usize,
    n_cells: *mut usize,
) -> StclStatus {
    guard(|| {
        let t = &handle(traj, "trajectory")?.inner;
        write(n_slices, t.slices.len(), "n_slices")?;
        write(n_cells, t.mesh.n_cells(), "n_cells")
    })
}

/// Copies slice `index` into `values` (capacity `len`, at least the cell
/// count) and its time into `t`.
///
/// # Safety
/// `traj` must be a live handle; `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stcl_trajectory_slice(
    traj: *const StclTrajectory,
    index: usize,
    t: *mut f64,
    values: *mut f64,
    len: usize,
) -> StclStatus {
    guard(|| {
        let traj = &handle(traj, "trajectory")?.inner;
        let s = traj.slices.get(index).ok_or_else(|| {
            Fail(
                StclStatus::InvalidArgument,
                format!("slice {index} out of range ({} slices)", traj.slices.len()),
            )
        })?;
        if values.is_null() {
            return Err(null("values"));
        }
        if len < s.values.len() {
            return Err(Fail(
                StclStatus::InvalidArgument,
                format!("buffer of {len} for {} cells", s.values.len()),
            ));
        }
        ptr::copy_nonoverlapping(s.values.as_ptr(), values, s.values.len());
        write(t, s.t, "t")
    })
}

/// Flux distance `sum |f^t(u) - f^t(v)| a dx` between the final slices.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stcl_final_distance(
    st: *const StclSpacetime,
    u: *const StclTrajectory,
    v: *const StclTrajectory,
    out: *mut f64,
) -> StclStatus {
    guard(|| {
        let st = &handle(st, "spacetime")?.inner;
        let u = handle(u, "u")?;
        let v = handle(v, "v")?;
        if u.inner.flux_name != v.inner.flux_name {
            return Err(Fail(
                StclStatus::Mismatch,
                format!("fluxes '{}' and '{}' differ", u.inner.flux_name, v.inner.flux_name),
            ));
        }
        let d = l1_flux_distance(u.inner.last(), v.inner.last(), &u.flux, st)?;
        write(out, d, "out")
    })
}

/// Fits `ln y = slope ln x + intercept` through `n >= 3` positive pairs.
///
/// # Safety
/// `xs` and `ys` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stcl_fit_rate(xs: *const f64, ys: *const f64, n: usize, out: *mut StclRateFit) -> StclStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            return Err(null("data"));
        }
        let pairs: Vec<(f64, f64)> = (0..n).map(|i| (*xs.add(i), *ys.add(i))).collect();
        let fit = fit_rate(&pairs)?;
        write(
            out,
            StclRateFit {
                slope: fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
                half_width: fit.half_width,
            },
            "out",
        )
    })
}
