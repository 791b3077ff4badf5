//! C interface to the ladder-sum engine and the experiment runner.
//!
//! Every fallible call returns a `KwStatus`; on failure the message is kept
//! per thread and read back with `kw_last_error`. Engines are opaque handles
//! released with `kw_engine_free`.

use kwlab::arith::Slope;
use kwlab::experiment::{run_experiment, ExperimentConfig, PartialConfig};
use kwlab::ladder_sums::{LadderEngine, LadderWindow};
use kwlab::spectral_models::ModelPair;
use kwlab::window_functions::{WindowFunction, WindowKind};
use kwlab::LabError;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KwStatus {
    Ok = 0,
    InvalidParameter = 1,
    Unsupported = 2,
    OutOfRange = 3,
    NotALevel = 4,
    GridTooCoarse = 5,
    Tolerance = 6,
    Numeric = 7,
    UnknownExperiment = 8,
    Io = 9,
    Serialization = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

impl From<&LabError> for KwStatus {
    fn from(e: &LabError) -> Self {
        match e {
            LabError::InvalidParameter(_) => KwStatus::InvalidParameter,
            LabError::Unsupported(_) => KwStatus::Unsupported,
            LabError::OutOfRange(_) => KwStatus::OutOfRange,
            LabError::NotALevel(_) => KwStatus::NotALevel,
            LabError::GridTooCoarse { .. } => KwStatus::GridTooCoarse,
            LabError::Tolerance(_) => KwStatus::Tolerance,
            LabError::Numeric(_) => KwStatus::Numeric,
            LabError::UnknownExperiment(_) => KwStatus::UnknownExperiment,
            LabError::Io(_) => KwStatus::Io,
            LabError::Serialization(_) => KwStatus::Serialization,
        }
    }
}

/// Opaque ladder engine over one model pair.
pub struct KwEngine {
    inner: LadderEngine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(KwStatus, String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure(KwStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside kwlab".into());
            KwStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(KwStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(KwStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn engine<'a>(p: *const KwEngine) -> Result<&'a LadderEngine, Failure> {
    p.as_ref()
        .map(|e| &e.inner)
        .ok_or_else(|| Failure(KwStatus::NullPointer, "engine is null".into()))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(KwStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(v);
    Ok(())
}

fn pair(model: &str) -> Result<ModelPair, LabError> {
    match model {
        "torus2" => ModelPair::torus(2, 1),
        "torus3" => ModelPair::torus(3, 1),
        "torus3d2" => ModelPair::torus(3, 2),
        "sphere2" => ModelPair::great_sphere(2, 1),
        "sphere3" => ModelPair::great_sphere(3, 1),
        other => Err(LabError::InvalidParameter(format!("unknown model `{other}`"))),
    }
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn kw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build an engine for `model` (`torus2`, `torus3`, `torus3d2`, `sphere2`,
/// `sphere3`) with spectra up to `lambda_max`.
///
/// # Safety
/// `model` must be a valid nul-terminated string and `out` a valid pointer.
/// The handle written to `out` must be released with `kw_engine_free`.
#[no_mangle]
pub unsafe extern "C" fn kw_engine_new(model: *const c_char, lambda_max: f64, out: *mut *mut KwEngine) -> KwStatus {
    guard(|| {
        let model = text(model, "model")?;
        let inner = LadderEngine::new(pair(model)?, lambda_max)?;
        write(out, Box::into_raw(Box::new(KwEngine { inner })))
    })
}

/// Release an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from `kw_engine_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kw_engine_free(engine: *mut KwEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

unsafe fn sharp_window(c: *const c_char, eps: f64) -> Result<LadderWindow, Failure> {
    Ok(LadderWindow::sharp(Slope::parse(text(c, "slope")?)?, eps)?)
}

/// Sharp ladder sum `sum_{lambda_j <= lambda} sum_{|mu_k - c lambda_j| <= eps} W`.
/// `c` is a slope expression such as `3/5` or `sqrt(1/2)`.
///
/// # Safety
/// `engine` must be a live handle, `c` a nul-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn kw_sharp_ladder_sum(
    engine: *const KwEngine,
    c: *const c_char,
    eps: f64,
    lambda: f64,
    out: *mut f64,
) -> KwStatus {
    guard(|| {
        let e = self::engine(engine)?;
        write(out, e.sharp_ladder_sum(&sharp_window(c, eps)?, lambda)?)
    })
}

/// Exact lattice-pair count behind a torus sharp sum.
///
/// # Safety
/// As for `kw_sharp_ladder_sum`.
#[no_mangle]
pub unsafe extern "C" fn kw_sharp_ladder_count(
    engine: *const KwEngine,
    c: *const c_char,
    eps: f64,
    lambda: f64,
    out: *mut u64,
) -> KwStatus {
    guard(|| {
        let e = self::engine(engine)?;
        write(out, e.sharp_ladder_count(&sharp_window(c, eps)?, lambda)?)
    })
}

/// Sharp jump at the single level `lambda_j`.
///
/// # Safety
/// As for `kw_sharp_ladder_sum`.
#[no_mangle]
pub unsafe extern "C" fn kw_jump_at(
    engine: *const KwEngine,
    c: *const c_char,
    eps: f64,
    lambda_j: f64,
    out: *mut f64,
) -> KwStatus {
    guard(|| {
        let e = self::engine(engine)?;
        write(out, e.jump_at(&sharp_window(c, eps)?, lambda_j)?)
    })
}

/// Fuzzy ladder sum with a window descriptor (`bump:<a>`,
/// `comb:<a>,<spacing>,<teeth>`, `mollified:<T>,<eps>`). Writes the value and
/// the bound on the truncated mass.
///
/// # Safety
/// `engine` must be a live handle, `c` and `window` nul-terminated strings,
/// `out_value` and `out_bound` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn kw_fuzzy_ladder_sum(
    engine: *const KwEngine,
    c: *const c_char,
    window: *const c_char,
    lambda: f64,
    out_value: *mut f64,
    out_bound: *mut f64,
) -> KwStatus {
    guard(|| {
        let e = self::engine(engine)?;
        let w = WindowFunction::new(WindowKind::parse(text(window, "window")?)?)?;
        let lw = LadderWindow::new(Slope::parse(text(c, "slope")?)?, w)?;
        let sum = e.fuzzy_ladder_sum(&lw, lambda)?;
        write(out_value, sum.value)?;
        write(out_bound, sum.truncation_bound)
    })
}

/// Run a registered experiment. `config_toml` holds any subset of the
/// configuration keys and must name the experiment. Writes the number of
/// failed verdict rows to `out_failed`.
///
/// # Safety
/// `config_toml` must be a nul-terminated string and `out_failed` valid.
#[no_mangle]
pub unsafe extern "C" fn kw_run_experiment(config_toml: *const c_char, out_failed: *mut u32) -> KwStatus {
    guard(|| {
        let partial = PartialConfig::from_toml(text(config_toml, "config")?)?;
        let cfg = ExperimentConfig::resolve(partial)?;
        let result = run_experiment(&cfg)?;
        write(out_failed, result.failed() as u32)
    })
}
