//! C ABI for `sgflow`.
//!
//! Every fallible function returns an [`SgflowStatus`] and writes results
//! through out-pointers. On failure the message is kept per thread and can
//! be read with [`sgflow_last_error_message`]. Objects are handed out as
//! opaque pointers and must be released with the matching `*_free`
//! function. Panics never cross the boundary; they surface as
//! [`SgflowStatus::Panic`].
//!
//! Pointer contract: every pointer argument is either NULL, which is
//! reported as [`SgflowStatus::NullPointer`], or valid for the access its
//! type implies. Handles must come from this library and be freed once.

// the functions are called from C, where the contract above applies
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DVector;
use sgflow::mp::{self, AsymptoticParams};
use sgflow::sde::{fluctuation_covariance, linear_sde_exact, solve_ode, LinearSde1d};
use sgflow::weak_features::{
    expected_gf_risk_finite, expected_sgf_correction_finite, generate_instance,
    instance_covariance_trace, risk_given_estimator, ModelParams, WeakFeaturesInstance,
};
use sgflow::Error;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgflowStatus {
    Ok = 0,
    InvalidArgument = 1,
    Divergence = 2,
    InsufficientReplicates = 3,
    DegenerateDensity = 4,
    ThresholdDivergence = 5,
    Evaluation = 6,
    Config = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

impl From<&Error> for SgflowStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => SgflowStatus::InvalidArgument,
            Error::Divergence(_) => SgflowStatus::Divergence,
            Error::InsufficientReplicates { .. } => SgflowStatus::InsufficientReplicates,
            Error::DegenerateDensity(_) => SgflowStatus::DegenerateDensity,
            Error::ThresholdDivergence => SgflowStatus::ThresholdDivergence,
            Error::Evaluation(_) => SgflowStatus::Evaluation,
            Error::Config(_) => SgflowStatus::Config,
            Error::Io { .. } => SgflowStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SgflowStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgflowStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            let status = SgflowStatus::from(&e);
            set_error(e.to_string());
            status
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            SgflowStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SgflowStatus::Panic
        }
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: checked non-null; the caller guarantees it points to writable memory.
    unsafe { out.write(value) };
    Ok(())
}

fn read<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: the caller guarantees a non-null pointer refers to a live object.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sgflow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sgflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Large-system parameters (`p/n → alpha`, `d/n → psi`).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgflowAsymptoticParams {
    pub alpha: f64,
    pub psi: f64,
    pub mu: f64,
    pub gamma_prime: f64,
    pub norm_beta_sq: f64,
    pub delta_sq: f64,
}

impl From<SgflowAsymptoticParams> for AsymptoticParams {
    fn from(p: SgflowAsymptoticParams) -> Self {
        AsymptoticParams {
            alpha: p.alpha,
            psi: p.psi,
            mu: p.mu,
            gamma_prime: p.gamma_prime,
            norm_beta_sq: p.norm_beta_sq,
            delta_sq: p.delta_sq,
        }
    }
}

/// Defaults: alpha 0.5, psi 2.5, mu 0.5, gamma' 1, ‖β‖² 1, ‖β-β̂⁰‖² 2.
#[no_mangle]
pub extern "C" fn sgflow_asymptotic_params_default() -> SgflowAsymptoticParams {
    let d = AsymptoticParams::default();
    SgflowAsymptoticParams {
        alpha: d.alpha,
        psi: d.psi,
        mu: d.mu,
        gamma_prime: d.gamma_prime,
        norm_beta_sq: d.norm_beta_sq,
        delta_sq: d.delta_sq,
    }
}

/// Marchenko–Pastur density; 0 outside the support or for invalid alpha.
#[no_mangle]
pub extern "C" fn sgflow_mp_density(alpha: f64, sigma: f64) -> f64 {
    mp::mp_density(alpha, sigma)
}

/// `K(t, s1, s2) = (e^{-2 s1 t} - e^{-2 s2 t}) / (2 (s2 - s1))`.
#[no_mangle]
pub extern "C" fn sgflow_kernel_k(t: f64, s1: f64, s2: f64) -> f64 {
    mp::kernel_k(t, s1, s2)
}

/// Asymptotic GF test risk at time `t` (`t = INFINITY` gives the limit).
#[no_mangle]
pub extern "C" fn sgflow_gf_risk_asymptotic(
    params: *const SgflowAsymptoticParams,
    t: f64,
    out: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let p = AsymptoticParams::from(*read(params, "params")?);
        write(out, mp::gf_risk_asymptotic(&p, t)?, "out")
    })
}

/// Asymptotic SGF correction at time `t` (`t = INFINITY` gives the limit).
#[no_mangle]
pub extern "C" fn sgflow_sgf_correction_asymptotic(
    params: *const SgflowAsymptoticParams,
    t: f64,
    out: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let p = AsymptoticParams::from(*read(params, "params")?);
        write(out, mp::sgf_correction_asymptotic(&p, t)?, "out")
    })
}

/// Infinite-time GF risk; fails with `ThresholdDivergence` at alpha = 1.
#[no_mangle]
pub extern "C" fn sgflow_gf_risk_limit(
    params: *const SgflowAsymptoticParams,
    out: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let p = AsymptoticParams::from(*read(params, "params")?);
        write(out, mp::gf_risk_limit(&p)?, "out")
    })
}

/// Infinite-time SGF correction `(γ'/4)(α/ψ)U max(0, 1-α)`.
#[no_mangle]
pub extern "C" fn sgflow_sgf_correction_limit(
    params: *const SgflowAsymptoticParams,
    out: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let p = AsymptoticParams::from(*read(params, "params")?);
        write(out, mp::sgf_correction_limit(&p)?, "out")
    })
}

fn model(n: usize, d: usize, p: usize, mu: f64, gamma: f64) -> Result<ModelParams, Fail> {
    Ok(ModelParams::new(n, d, p, mu, gamma)?)
}

/// Finite-size expected GF risk over `replicates` sampled spectra.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn sgflow_expected_gf_risk_finite(
    n: usize,
    d: usize,
    p: usize,
    mu: f64,
    gamma: f64,
    t: f64,
    replicates: usize,
    seed: u64,
    value: *mut f64,
    stderr: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let est = expected_gf_risk_finite(&model(n, d, p, mu, gamma)?, t, replicates, seed)?;
        write(value, est.value, "value")?;
        write(stderr, est.stderr, "stderr")
    })
}

/// Finite-size expected SGF correction.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn sgflow_expected_sgf_correction_finite(
    n: usize,
    d: usize,
    p: usize,
    mu: f64,
    gamma: f64,
    t: f64,
    replicates: usize,
    quad_panels: usize,
    seed: u64,
    value: *mut f64,
    stderr: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let est = expected_sgf_correction_finite(
            &model(n, d, p, mu, gamma)?,
            t,
            replicates,
            quad_panels,
            seed,
        )?;
        write(value, est.value, "value")?;
        write(stderr, est.stderr, "stderr")
    })
}

/// Opaque weak-features instance.
pub struct SgflowInstance {
    inner: WeakFeaturesInstance,
}

/// Draws an instance with unit-sphere `β`, `β̂⁰`.
#[no_mangle]
pub extern "C" fn sgflow_instance_new(
    n: usize,
    d: usize,
    p: usize,
    mu: f64,
    seed: u64,
    out: *mut *mut SgflowInstance,
) -> SgflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let inner = generate_instance(&model(n, d, p, mu, 0.0)?, seed)?;
        write(
            out,
            Box::into_raw(Box::new(SgflowInstance { inner })),
            "out",
        )
    })
}

/// Releases an instance; NULL is ignored.
#[no_mangle]
pub extern "C" fn sgflow_instance_free(inst: *mut SgflowInstance) {
    if !inst.is_null() {
        // SAFETY: pointer came from `sgflow_instance_new` and is freed once.
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Sizes `n`, `d`, `p` of an instance.
#[no_mangle]
pub extern "C" fn sgflow_instance_dims(
    inst: *const SgflowInstance,
    n: *mut usize,
    d: *mut usize,
    p: *mut usize,
) -> SgflowStatus {
    guard(|| {
        let i = &read(inst, "inst")?.inner;
        write(n, i.n, "n")?;
        write(d, i.d, "d")?;
        write(p, i.p, "p")
    })
}

/// Test risk of the GF estimator at time `t` started from `β̂⁰_A`.
#[no_mangle]
pub extern "C" fn sgflow_instance_gf_risk(
    inst: *const SgflowInstance,
    t: f64,
    out: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let i = &read(inst, "inst")?.inner;
        let b = i.gf_estimator(&i.beta0_a(), t)?;
        write(
            out,
            risk_given_estimator(&i.beta, &i.subset, &b, i.mu),
            "out",
        )
    })
}

/// Trace of the fluctuation covariance along the GF path from `β̂⁰_A`.
#[no_mangle]
pub extern "C" fn sgflow_instance_covariance_trace(
    inst: *const SgflowInstance,
    t: f64,
    quad_panels: usize,
    out: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let i = &read(inst, "inst")?.inner;
        write(
            out,
            instance_covariance_trace(i, &i.beta0_a(), t, quad_panels)?,
            "out",
        )
    })
}

/// Opaque exactly solvable linear SDE `dw = h(τ)(y - w)dτ + √γ σ(τ)dη`.
pub struct SgflowLinearSde {
    inner: LinearSde1d,
}

fn boxed_sde(sde: LinearSde1d, out: *mut *mut SgflowLinearSde) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    write(
        out,
        Box::into_raw(Box::new(SgflowLinearSde { inner: sde })),
        "out",
    )
}

/// Constant coefficients `h = a`, `σ = b`.
#[no_mangle]
pub extern "C" fn sgflow_linear_sde_constant(
    a: f64,
    b: f64,
    y: f64,
    w0: f64,
    gamma: f64,
    out: *mut *mut SgflowLinearSde,
) -> SgflowStatus {
    guard(|| boxed_sde(LinearSde1d::constant(a, b, y, w0, gamma), out))
}

/// `h = 1`, `σ(s) = e^{-s}`.
#[no_mangle]
pub extern "C" fn sgflow_linear_sde_pinning(
    y: f64,
    w0: f64,
    gamma: f64,
    out: *mut *mut SgflowLinearSde,
) -> SgflowStatus {
    guard(|| boxed_sde(LinearSde1d::pinning(y, w0, gamma), out))
}

/// `h(s) = 1 + s/2`, `σ(s) = 1/(1 + s)`.
#[no_mangle]
pub extern "C" fn sgflow_linear_sde_time_varying(
    y: f64,
    w0: f64,
    gamma: f64,
    out: *mut *mut SgflowLinearSde,
) -> SgflowStatus {
    guard(|| boxed_sde(LinearSde1d::time_varying(y, w0, gamma), out))
}

/// Releases a linear SDE; NULL is ignored.
#[no_mangle]
pub extern "C" fn sgflow_linear_sde_free(sde: *mut SgflowLinearSde) {
    if !sde.is_null() {
        // SAFETY: pointer came from a `sgflow_linear_sde_*` constructor and is freed once.
        drop(unsafe { Box::from_raw(sde) });
    }
}

/// Exact mean and variance at time `t`.
#[no_mangle]
pub extern "C" fn sgflow_linear_sde_exact(
    sde: *const SgflowLinearSde,
    t: f64,
    mean: *mut f64,
    var: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let (m, v) = linear_sde_exact(&read(sde, "sde")?.inner, t)?;
        write(mean, m, "mean")?;
        write(var, v, "var")
    })
}

/// Mean and variance from the fluctuation engine with `steps` flow steps.
#[no_mangle]
pub extern "C" fn sgflow_linear_sde_engine(
    sde: *const SgflowLinearSde,
    t: f64,
    steps: usize,
    mean: *mut f64,
    var: *mut f64,
) -> SgflowStatus {
    guard(|| {
        let s = &read(sde, "sde")?.inner;
        if t == s.t0 {
            write(mean, s.w0, "mean")?;
            return write(var, 0.0, "var");
        }
        let w0 = DVector::from_element(1, s.w0);
        let traj = solve_ode(s, &w0, s.t0, t, steps)?;
        let cov = fluctuation_covariance(s, &traj, t, s.gamma)?;
        write(mean, traj.states.last().map_or(f64::NAN, |w| w[0]), "mean")?;
        write(var, cov.cov_w()[(0, 0)], "var")
    })
}
