//! C ABI over `stochad`.
//!
//! A [`StochadTracer`] is an opaque handle that owns one replicate's random
//! streams, its pruning state, and an arena of stochastic triples. C code
//! refers to triples by [`StochadValueId`]; the tags that tie perturbations
//! to a tracer never cross the boundary. Every fallible call returns a
//! [`StochadStatus`] and, on failure, leaves a message readable through
//! [`stochad_last_error_message`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stochad::backend::{Backend, Program, TripleTracer};
use stochad::dist::DiscreteFamily;
use stochad::estimators::{estimate_mean, estimate_smoothed_mean, EstimateSummary, RunOptions};
use stochad::experiments::{GeometricCube, Life, LifeConfig, Toy, WalkConfig};
use stochad::rng::ReplicateStreams;
use stochad::smoothing::BernoulliFlavor;
use stochad::triple::{make_input, DerivativeMode, StochasticTriple};
use stochad::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    NonFinite = 4,
    Contract = 5,
    Index = 6,
    Evaluation = 7,
    Unsupported = 8,
    Numerical = 9,
    UnknownValue = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochadMode {
    Right = 0,
    Left = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochadFamily {
    Bernoulli = 0,
    Binomial = 1,
    Geometric = 2,
    Poisson = 3,
}

/// Index of a triple inside its tracer's arena.
pub type StochadValueId = u32;

/// Read-only view of a triple. `has_perturbation == 0` leaves the three
/// perturbation fields at zero. `tag` is only meaningful within one tracer.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StochadTriple {
    pub value: f64,
    pub delta: f64,
    pub has_perturbation: u8,
    pub perturbation_delta: f64,
    pub perturbation_weight: f64,
    pub tag: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StochadSummary {
    pub mean: f64,
    pub std_error: f64,
    pub variance: f64,
    pub n: u64,
    pub seed: u64,
    pub seconds: f64,
}

/// Opaque tracer handle.
pub struct StochadTracer {
    tracer: TripleTracer,
    values: Vec<StochasticTriple>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> StochadStatus {
    match err {
        Error::NonFinite(_) => StochadStatus::NonFinite,
        Error::Domain(_) => StochadStatus::Domain,
        Error::Contract(_) => StochadStatus::Contract,
        Error::Index { .. } => StochadStatus::Index,
        Error::Evaluation { .. } => StochadStatus::Evaluation,
        Error::Unsupported(_) => StochadStatus::Unsupported,
        Error::Numerical(_) => StochadStatus::Numerical,
        Error::InvalidArgument(_) => StochadStatus::InvalidArgument,
    }
}

fn fail(status: StochadStatus, msg: impl Into<String>) -> StochadStatus {
    set_last_error(msg.into());
    status
}

/// Run `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), StochadStatus>) -> StochadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StochadStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(StochadStatus::Panic, "internal panic"),
    }
}

fn lib(err: Error) -> StochadStatus {
    let s = status_of(&err);
    fail(s, err.to_string())
}

fn mode_of(m: StochadMode) -> DerivativeMode {
    match m {
        StochadMode::Right => DerivativeMode::Right,
        StochadMode::Left => DerivativeMode::Left,
    }
}

impl StochadTracer {
    fn get(&self, id: StochadValueId) -> Result<&StochasticTriple, StochadStatus> {
        self.values.get(id as usize).ok_or_else(|| fail(StochadStatus::UnknownValue, format!("no value with id {id}")))
    }

    fn push(&mut self, v: StochasticTriple, out: *mut StochadValueId) -> Result<(), StochadStatus> {
        let id = StochadValueId::try_from(self.values.len())
            .map_err(|_| fail(StochadStatus::InvalidArgument, "value arena is full"))?;
        self.values.push(v);
        // SAFETY: callers check `out` for null before computing `v`.
        unsafe { *out = id };
        Ok(())
    }
}

/// # Safety
/// `ptr` must be null or a pointer obtained from [`stochad_tracer_new`] that
/// has not been freed, with no other live reference to it.
unsafe fn tracer_mut<'a>(ptr: *mut StochadTracer) -> Result<&'a mut StochadTracer, StochadStatus> {
    ptr.as_mut().ok_or_else(|| fail(StochadStatus::NullPointer, "null tracer"))
}

fn non_null<T>(p: *mut T, what: &str) -> Result<(), StochadStatus> {
    if p.is_null() {
        Err(fail(StochadStatus::NullPointer, format!("null {what}")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stochad_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Create a tracer for replicate `replicate` of `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn stochad_tracer_new(
    seed: u64,
    replicate: u64,
    mode: StochadMode,
    out: *mut *mut StochadTracer,
) -> StochadStatus {
    guard(|| {
        non_null(out, "output handle")?;
        let t = StochadTracer {
            tracer: TripleTracer::for_replicate(ReplicateStreams::new(seed, replicate), mode_of(mode)),
            values: Vec::new(),
        };
        *out = Box::into_raw(Box::new(t));
        Ok(())
    })
}

/// # Safety
/// `tracer` must be null or a handle from [`stochad_tracer_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stochad_tracer_free(tracer: *mut StochadTracer) {
    if !tracer.is_null() {
        drop(Box::from_raw(tracer));
    }
}

/// The differentiated input `(p, 1, none)`.
///
/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_input(tracer: *mut StochadTracer, p: f64, out: *mut StochadValueId) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output id")?;
        let v = make_input(p).map_err(lib)?;
        t.push(v, out)
    })
}

/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_constant(
    tracer: *mut StochadTracer,
    c: f64,
    out: *mut StochadValueId,
) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output id")?;
        if !c.is_finite() {
            return Err(fail(StochadStatus::NonFinite, format!("constant {c}")));
        }
        let v = t.tracer.constant(c);
        t.push(v, out)
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochadBinaryOp {
    Add = 0,
    Sub = 1,
    Mul = 2,
    Div = 3,
}

/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_binary(
    tracer: *mut StochadTracer,
    op: StochadBinaryOp,
    a: StochadValueId,
    b: StochadValueId,
    out: *mut StochadValueId,
) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output id")?;
        let (x, y) = (*t.get(a)?, *t.get(b)?);
        let r = match op {
            StochadBinaryOp::Add => t.tracer.add(&x, &y),
            StochadBinaryOp::Sub => t.tracer.sub(&x, &y),
            StochadBinaryOp::Mul => t.tracer.mul(&x, &y),
            StochadBinaryOp::Div => t.tracer.div(&x, &y),
        }
        .map_err(lib)?;
        t.push(r, out)
    })
}

/// `c·a`.
///
/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_scale(
    tracer: *mut StochadTracer,
    a: StochadValueId,
    c: f64,
    out: *mut StochadValueId,
) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output id")?;
        let x = *t.get(a)?;
        let r = t.tracer.scale(&x, c).map_err(lib)?;
        t.push(r, out)
    })
}

/// Draw from a discrete family whose parameter is the value `param`.
/// `trials` is read only for the binomial.
///
/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_sample(
    tracer: *mut StochadTracer,
    family: StochadFamily,
    trials: u64,
    param: StochadValueId,
    out: *mut StochadValueId,
) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output id")?;
        let fam = match family {
            StochadFamily::Bernoulli => DiscreteFamily::Bernoulli,
            StochadFamily::Binomial => DiscreteFamily::Binomial { n: trials },
            StochadFamily::Geometric => DiscreteFamily::Geometric,
            StochadFamily::Poisson => DiscreteFamily::Poisson,
        };
        let p = *t.get(param)?;
        let r = t.tracer.discrete(fam, &p).map_err(lib)?;
        t.push(r, out)
    })
}

/// Current state of a value, with pruned perturbations removed.
///
/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_value_get(
    tracer: *mut StochadTracer,
    id: StochadValueId,
    out: *mut StochadTriple,
) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output triple")?;
        let v = t.tracer.resolve(t.get(id)?).map_err(lib)?;
        let mut view = StochadTriple { value: v.value, delta: v.delta, ..Default::default() };
        if let Some(p) = v.pert {
            view.has_perturbation = 1;
            view.perturbation_delta = p.delta_value;
            view.perturbation_weight = p.weight;
            view.tag = p.tag.id();
        }
        *out = view;
        Ok(())
    })
}

/// `δ + sign·w·Δ` for the value, a single-sample derivative estimate when
/// the value is a program output.
///
/// # Safety
/// `tracer` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_derivative_contribution(
    tracer: *mut StochadTracer,
    id: StochadValueId,
    out: *mut f64,
) -> StochadStatus {
    guard(|| {
        let t = tracer_mut(tracer)?;
        non_null(out, "output")?;
        *out = t.tracer.derivative_contribution(t.get(id)?).map_err(lib)?;
        Ok(())
    })
}

fn write_summary(s: EstimateSummary, out: *mut StochadSummary) {
    // SAFETY: checked non-null by every caller.
    unsafe {
        *out = StochadSummary {
            mean: s.mean,
            std_error: s.stderr,
            variance: s.variance,
            n: s.n,
            seed: s.seed,
            seconds: s.seconds,
        }
    };
}

fn run_estimate<P: Program>(
    prog: &P,
    p: f64,
    seed: u64,
    samples: u64,
    threads: u32,
    mode: StochadMode,
    out: *mut StochadSummary,
) -> StochadStatus {
    guard(|| {
        non_null(out, "output summary")?;
        let opts = RunOptions::new(seed, samples).with_threads(threads as usize);
        let s = estimate_mean(prog, p, opts, mode_of(mode)).map_err(lib)?;
        write_summary(s, out);
        Ok(())
    })
}

/// Triple-estimator mean derivative of the toy program at `p`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_toy_derivative(
    p: f64,
    seed: u64,
    samples: u64,
    threads: u32,
    mode: StochadMode,
    out: *mut StochadSummary,
) -> StochadStatus {
    run_estimate(&Toy, p, seed, samples, threads, mode, out)
}

/// Triple-estimator derivative of `E[x_n²]` for the inhomogeneous walk.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_walk_derivative(
    n: u32,
    p: f64,
    seed: u64,
    samples: u64,
    threads: u32,
    mode: StochadMode,
    out: *mut StochadSummary,
) -> StochadStatus {
    match WalkConfig::new(n, p) {
        Ok(cfg) => run_estimate(&cfg.program(), p, seed, samples, threads, mode, out),
        Err(e) => lib(e),
    }
}

/// Triple-estimator derivative of the living-cell count of the stochastic
/// Game of Life.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_life_derivative(
    board_size: u32,
    steps: u32,
    p: f64,
    seed: u64,
    samples: u64,
    threads: u32,
    mode: StochadMode,
    out: *mut StochadSummary,
) -> StochadStatus {
    match LifeConfig::new(board_size as usize, steps as usize) {
        Ok(cfg) => run_estimate(&Life { cfg }, p, seed, samples, threads, mode, out),
        Err(e) => lib(e),
    }
}

/// Smoothed derivative of `E[Geo(p)³]`, biased through the cube.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stochad_geometric_cube_smoothed(
    p: f64,
    seed: u64,
    samples: u64,
    threads: u32,
    mode: StochadMode,
    out: *mut StochadSummary,
) -> StochadStatus {
    guard(|| {
        non_null(out, "output summary")?;
        let opts = RunOptions::new(seed, samples).with_threads(threads as usize);
        let s =
            estimate_smoothed_mean(&GeometricCube, p, opts, mode_of(mode), BernoulliFlavor::default()).map_err(lib)?;
        write_summary(s, out);
        Ok(())
    })
}
