//! Monte Carlo derivative estimators over [`Program`]s.
//!
//! Replicate `r` always draws from the streams of `ReplicateStreams(seed, r)`
//! and replicates are reduced in fixed-size chunks merged in index order, so
//! a summary is bit-identical for any thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::backend::{Backend, Primal, Program, ScoreTracer, SmoothedTracer, TripleTracer};
use crate::error::{Error, Result};
use crate::rng::ReplicateStreams;
use crate::smoothing::{BernoulliFlavor, SmoothedDual};
use crate::triple::{make_input, DerivativeMode};

const CHUNK: u64 = 1024;

// Pilot replicates for the batch control variate live far above any sample
// index, so they never share streams with the reported replicates.
const PILOT_BASE: u64 = 1 << 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub mean: f64,
    pub stderr: f64,
    /// Sample variance (denominator `n − 1`).
    pub variance: f64,
    pub n: u64,
    pub seed: u64,
    pub seconds: f64,
}

/// Seed, replicate count and worker threads of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub samples: u64,
    /// `0` uses all available cores.
    pub threads: usize,
}

impl RunOptions {
    pub fn new(seed: u64, samples: u64) -> Self {
        RunOptions { seed, samples, threads: 1 }
    }

    pub fn with_threads(self, threads: usize) -> Self {
        RunOptions { threads, ..self }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * (other.n as f64 / n as f64);
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        Welford { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn summary(&self, seed: u64, seconds: f64) -> EstimateSummary {
        let variance = self.variance();
        EstimateSummary {
            mean: self.mean,
            stderr: (variance / self.n as f64).sqrt(),
            variance,
            n: self.n,
            seed,
            seconds,
        }
    }
}

/// Evaluate `f` on replicates `first..first + count` and reduce
/// deterministically.
pub fn replicate_stats<F>(seed: u64, first: u64, count: u64, threads: usize, f: F) -> Result<Welford>
where
    F: Fn(ReplicateStreams) -> Result<f64> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let chunk = |c: u64| -> Result<Welford> {
        let mut w = Welford::default();
        let lo = first + c * CHUNK;
        let hi = first + count.min((c + 1) * CHUNK);
        for r in lo..hi {
            let x = f(ReplicateStreams::new(seed, r))?;
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("replicate {r} produced {x}")));
            }
            w.push(x);
        }
        Ok(w)
    };
    let parts: Vec<Result<Welford>> = if threads == 1 || chunks <= 1 {
        (0..chunks).map(chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(chunk).collect())
    };
    parts.into_iter().try_fold(Welford::default(), |acc, w| Ok(acc.merge(w?)))
}

fn run_summary<F>(opts: RunOptions, f: F) -> Result<EstimateSummary>
where
    F: Fn(ReplicateStreams) -> Result<f64> + Sync,
{
    if opts.samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", opts.samples)));
    }
    let start = Instant::now();
    let w = replicate_stats(opts.seed, 0, opts.samples, opts.threads, f)?;
    Ok(w.summary(opts.seed, start.elapsed().as_secs_f64()))
}

/// One stochastic-triple derivative sample of `E[prog(p)]`.
pub fn derivative_estimate<P: Program>(
    prog: &P,
    p: f64,
    streams: ReplicateStreams,
    mode: DerivativeMode,
) -> Result<f64> {
    let mut tracer = TripleTracer::for_replicate(streams, mode);
    let out = prog.run(&mut tracer, make_input(p)?)?;
    tracer.derivative_contribution(&out)
}

pub fn estimate_mean<P: Program>(prog: &P, p: f64, opts: RunOptions, mode: DerivativeMode) -> Result<EstimateSummary> {
    make_input(p)?;
    run_summary(opts, |s| derivative_estimate(prog, p, s, mode))
}

/// One smoothed derivative sample.
pub fn smoothed_estimate<P: Program>(
    prog: &P,
    p: f64,
    streams: ReplicateStreams,
    mode: DerivativeMode,
    flavor: BernoulliFlavor,
) -> Result<f64> {
    let mut tracer = SmoothedTracer::new(streams.sampling(), mode, flavor);
    Ok(prog.run(&mut tracer, SmoothedDual::input(p))?.sderiv)
}

pub fn estimate_smoothed_mean<P: Program>(
    prog: &P,
    p: f64,
    opts: RunOptions,
    mode: DerivativeMode,
    flavor: BernoulliFlavor,
) -> Result<EstimateSummary> {
    run_summary(opts, |s| smoothed_estimate(prog, p, s, mode, flavor))
}

/// Plain evaluation of one replicate.
pub fn primal_sample<P: Program>(prog: &P, p: f64, streams: ReplicateStreams) -> Result<f64> {
    let mut backend = Primal::new(streams.sampling());
    prog.run(&mut backend, p)
}

pub fn estimate_value<P: Program>(prog: &P, p: f64, opts: RunOptions) -> Result<EstimateSummary> {
    run_summary(opts, |s| primal_sample(prog, p, s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// Both evaluations share one random stream.
    Common,
    /// The two evaluations use independent streams.
    Independent,
}

/// Central difference `(X(p + h) − X(p − h)) / 2h`, one replicate.
pub fn finite_difference_sample<P: Program>(
    prog: &P,
    p: f64,
    step: f64,
    streams: ReplicateStreams,
    coupling: Coupling,
) -> Result<f64> {
    let hi = prog.run(&mut Primal::new(streams.sampling()), p + step)?;
    let lo_stream = match coupling {
        Coupling::Common => streams.sampling(),
        Coupling::Independent => streams.independent(),
    };
    let lo = prog.run(&mut Primal::new(lo_stream), p - step)?;
    Ok((hi - lo) / (2.0 * step))
}

pub fn finite_difference<P: Program>(
    prog: &P,
    p: f64,
    step: f64,
    opts: RunOptions,
    coupling: Coupling,
) -> Result<EstimateSummary> {
    if !(step.is_finite() && step != 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step {step} must be finite and nonzero")));
    }
    run_summary(opts, |s| finite_difference_sample(prog, p, step, s, coupling))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlVariate {
    None,
    /// Subtract a baseline equal to the mean output of a separate pilot
    /// batch (10% of the sample count).
    BatchMean,
}

/// Output, score of the discrete choices, and pathwise derivative of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreSample {
    pub value: f64,
    pub score: f64,
    pub pathwise: f64,
}

impl ScoreSample {
    pub fn estimate(&self, baseline: f64) -> f64 {
        (self.value - baseline) * self.score + self.pathwise
    }
}

pub fn score_trace<P: Program>(prog: &P, p: f64, streams: ReplicateStreams) -> Result<ScoreSample> {
    let mut tracer = ScoreTracer::new(streams.sampling());
    let out = prog.run(&mut tracer, SmoothedDual::input(p))?;
    Ok(ScoreSample { value: out.value, score: tracer.score(), pathwise: out.sderiv })
}

/// Score-function estimator for any traced sampler, such as a program run
/// through [`score_trace`] or a hand-written trace.
pub fn score_function_with<F>(opts: RunOptions, cv: ControlVariate, trace: F) -> Result<EstimateSummary>
where
    F: Fn(ReplicateStreams) -> Result<ScoreSample> + Sync,
{
    if opts.samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", opts.samples)));
    }
    let start = Instant::now();
    let baseline = match cv {
        ControlVariate::None => 0.0,
        ControlVariate::BatchMean => {
            let pilot = (opts.samples / 10).max(2);
            replicate_stats(opts.seed, PILOT_BASE, pilot, opts.threads, |s| Ok(trace(s)?.value))?.mean
        }
    };
    let w = replicate_stats(opts.seed, 0, opts.samples, opts.threads, |s| Ok(trace(s)?.estimate(baseline)))?;
    Ok(w.summary(opts.seed, start.elapsed().as_secs_f64()))
}

pub fn score_function<P: Program>(prog: &P, p: f64, opts: RunOptions, cv: ControlVariate) -> Result<EstimateSummary> {
    score_function_with(opts, cv, |s| score_trace(prog, p, s))
}

/// Identity program, handy as a deterministic reference.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Program for Identity {
    fn run<B: Backend>(&self, _backend: &mut B, p: B::Value) -> Result<B::Value> {
        Ok(p)
    }
}
