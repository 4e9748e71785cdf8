//! C interface. Objects are opaque heap handles created by `*_new` functions and
//! released by the matching `*_free`. Every call returns a [`WkbStatus`]; on
//! failure the message is available from [`wkb_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wkb_disperse::jost::{JostConfig, JostPair};
use wkb_disperse::oracle::{DiscreteOracle, OracleConfig};
use wkb_disperse::potential::PotentialModel;
use wkb_disperse::propagator::{PropagatorConfig, PropagatorEngine};
use wkb_disperse::spectral::SpectralDensityEvaluator;
use wkb_disperse::Error;

/// Result codes; one per library error kind.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WkbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModel = 2,
    InvalidArgument = 3,
    GridTooCoarse = 4,
    TurningPoint = 5,
    TailTooFat = 6,
    NonConstantWronskian = 7,
    WkbUnavailable = 8,
    NoConvergence = 9,
    HypothesisViolated = 10,
    ResourceLimit = 11,
    HorizonExceeded = 12,
    BroadeningTooNarrow = 13,
    Config = 14,
    Io = 15,
    Panic = 99,
}

impl From<&Error> for WkbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidModel(_) => WkbStatus::InvalidModel,
            Error::InvalidArgument(_) => WkbStatus::InvalidArgument,
            Error::GridTooCoarse(_) => WkbStatus::GridTooCoarse,
            Error::TurningPoint { .. } => WkbStatus::TurningPoint,
            Error::TailTooFat(_) => WkbStatus::TailTooFat,
            Error::NonConstantWronskian { .. } => WkbStatus::NonConstantWronskian,
            Error::WkbUnavailable(_) => WkbStatus::WkbUnavailable,
            Error::NoConvergence(_) => WkbStatus::NoConvergence,
            Error::HypothesisViolated(_) => WkbStatus::HypothesisViolated,
            Error::ResourceLimit(_) => WkbStatus::ResourceLimit,
            Error::HorizonExceeded { .. } => WkbStatus::HorizonExceeded,
            Error::BroadeningTooNarrow { .. } => WkbStatus::BroadeningTooNarrow,
            Error::Config(_) => WkbStatus::Config,
            Error::Io(_) => WkbStatus::Io,
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

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> WkbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WkbStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            WkbStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            WkbStatus::Panic
        }
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => {
                set_error(concat!("null pointer: ", stringify!($p)).into());
                return WkbStatus::NullPointer;
            }
        }
    };
}

macro_rules! out {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => {
                set_error(concat!("null output pointer: ", stringify!($p)).into());
                return WkbStatus::NullPointer;
            }
        }
    };
}

/// Potential model handle.
pub struct WkbModel(PotentialModel);

/// Propagator engine handle: coarse Jost data for a fixed point set.
pub struct WkbEngine(PropagatorEngine);

/// Finite-difference reference handle.
pub struct WkbOracle(DiscreteOracle);

/// Scattering data at one λ.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WkbScattering {
    pub lambda: f64,
    pub wr_re: f64,
    pub wr_im: f64,
    pub abs_a2_minus_abs_b2: f64,
    pub unitarity_defect: f64,
    pub wr_spread: f64,
}

/// Complex kernel value with its error estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WkbKernelValue {
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wkb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

fn new_model(out: *mut *mut WkbModel, m: Result<PotentialModel, Error>) -> WkbStatus {
    let out = out!(out);
    guard(|| {
        *out = Box::into_raw(Box::new(WkbModel(m?)));
        Ok(())
    })
}

/// V = -c <x>^{-mu}.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wkb_model_coulomb(c: f64, mu: f64, out: *mut *mut WkbModel) -> WkbStatus {
    new_model(out, PotentialModel::coulomb(c, mu))
}

/// Coefficient c_left for x -> -inf, c_right for x -> +inf, logistic blend.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wkb_model_anisotropic(
    c_left: f64,
    c_right: f64,
    blend_width: f64,
    mu: f64,
    out: *mut *mut WkbModel,
) -> WkbStatus {
    new_model(
        out,
        PotentialModel::anisotropic(c_left, c_right, blend_width, mu),
    )
}

/// Coulomb base plus a compact bump.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wkb_model_bump(
    c: f64,
    bump_height: f64,
    r0: f64,
    mu: f64,
    out: *mut *mut WkbModel,
) -> WkbStatus {
    new_model(out, PotentialModel::bump(c, bump_height, r0, mu))
}

/// V = -c.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wkb_model_constant(c: f64, out: *mut *mut WkbModel) -> WkbStatus {
    new_model(out, PotentialModel::constant(c))
}

/// # Safety
/// `model` must come from a `wkb_model_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wkb_model_free(model: *mut WkbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// V(x).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_potential_eval(
    model: *const WkbModel,
    x: f64,
    out: *mut f64,
) -> WkbStatus {
    let m = deref!(model);
    let out = out!(out);
    guard(|| {
        *out = m.0.eval(x);
        Ok(())
    })
}

/// Wronskian and scattering identities at λ, default tolerances.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_scattering(
    model: *const WkbModel,
    lambda: f64,
    out: *mut WkbScattering,
) -> WkbStatus {
    let m = deref!(model);
    let out = out!(out);
    guard(|| {
        let s = JostPair::build(&m.0, lambda, 0.0, &[], &JostConfig::default())?.scattering()?;
        *out = WkbScattering {
            lambda,
            wr_re: s.wr.re,
            wr_im: s.wr.im,
            abs_a2_minus_abs_b2: s.abs_a2_minus_abs_b2(),
            unitarity_defect: s.unitarity_defect(),
            wr_spread: s.wr_spread,
        };
        Ok(())
    })
}

/// Spectral density Ẽ(λ, x, x').
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_density(
    model: *const WkbModel,
    lambda: f64,
    x: f64,
    xp: f64,
    out: *mut f64,
) -> WkbStatus {
    let m = deref!(model);
    let out = out!(out);
    guard(|| {
        let span = x.abs().max(xp.abs()) + 1.0;
        *out = SpectralDensityEvaluator::new(&m.0, lambda, span, &JostConfig::default())?
            .density(x, xp)?;
        Ok(())
    })
}

/// Engine for the `n` points `xs`, valid for kernels whose energy cut is below `lambda_max`.
///
/// # Safety
/// `xs` must hold `n` values; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_engine_new(
    model: *const WkbModel,
    xs: *const f64,
    n: usize,
    lambda_max: f64,
    out: *mut *mut WkbEngine,
) -> WkbStatus {
    let m = deref!(model);
    let out = out!(out);
    if xs.is_null() {
        set_error("null pointer: xs".into());
        return WkbStatus::NullPointer;
    }
    let pts = std::slice::from_raw_parts(xs, n).to_vec();
    guard(|| {
        let e = PropagatorEngine::new(&m.0, &pts, lambda_max, &PropagatorConfig::default())?;
        *out = Box::into_raw(Box::new(WkbEngine(e)));
        Ok(())
    })
}

/// K(t, xs[i], xs[j]) with its error estimate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_engine_kernel(
    engine: *const WkbEngine,
    t: f64,
    i: usize,
    j: usize,
    out: *mut WkbKernelValue,
) -> WkbStatus {
    let e = deref!(engine);
    let out = out!(out);
    guard(|| {
        let k = e.0.kernel_entries(t, &[(i, j)])?[0];
        *out = WkbKernelValue {
            re: k.value.re,
            im: k.value.im,
            error: k.error,
        };
        Ok(())
    })
}

/// # Safety
/// `engine` must come from `wkb_engine_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wkb_engine_free(engine: *mut WkbEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Finite-difference reference on [-L, L] with spacing h.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_oracle_new(
    model: *const WkbModel,
    l: f64,
    h: f64,
    out: *mut *mut WkbOracle,
) -> WkbStatus {
    let m = deref!(model);
    let out = out!(out);
    guard(|| {
        let cfg = OracleConfig {
            l,
            h,
            ..OracleConfig::default()
        };
        *out = Box::into_raw(Box::new(WkbOracle(DiscreteOracle::discretize_and_solve(
            &m.0, &cfg,
        )?)));
        Ok(())
    })
}

/// Reference kernel on the positive spectrum (no error estimate; `error` is 0).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_oracle_propagator(
    oracle: *const WkbOracle,
    t: f64,
    x: f64,
    xp: f64,
    out: *mut WkbKernelValue,
) -> WkbStatus {
    let o = deref!(oracle);
    let out = out!(out);
    guard(|| {
        let v = o.0.propagator_ref(t, x, xp)?;
        *out = WkbKernelValue {
            re: v.re,
            im: v.im,
            error: 0.0,
        };
        Ok(())
    })
}

/// Box-reflection horizon of the reference.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wkb_oracle_t_safe(oracle: *const WkbOracle, out: *mut f64) -> WkbStatus {
    let o = deref!(oracle);
    let out = out!(out);
    *out = o.0.t_safe;
    WkbStatus::Ok
}

/// # Safety
/// `oracle` must come from `wkb_oracle_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wkb_oracle_free(oracle: *mut WkbOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}
