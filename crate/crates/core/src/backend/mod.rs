//! Execution backends for stochastic programs.
//!
//! A program is written once against [`Backend`] and then run with plain
//! reals ([`Primal`]), stochastic triples ([`TripleTracer`]), smoothed duals
//! ([`SmoothedTracer`]) or score-function bookkeeping ([`ScoreTracer`]).
//! Every sampler consumes exactly one draw from the sampling stream, so all
//! backends see the same primal trajectory for the same stream.

mod primal;
mod score;
mod smoothed;
mod triples;

pub use primal::Primal;
pub use score::ScoreTracer;
pub use smoothed::SmoothedTracer;
pub use triples::{sample_categorical, sample_continuous, sample_discrete, TripleTracer};

use std::fmt;

use crate::dist::{ContinuousFamily, DiscreteFamily};
use crate::error::Result;

pub trait Backend {
    type Value: Clone + fmt::Debug;

    fn constant(&mut self, c: f64) -> Self::Value;

    fn primal(&self, v: &Self::Value) -> f64;

    /// Apply a smooth function `f` with derivative `df`.
    fn unary(&mut self, x: &Self::Value, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<Self::Value>;

    /// Apply a smooth binary function `f` with gradient `grad`.
    fn binary(
        &mut self,
        a: &Self::Value,
        b: &Self::Value,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<Self::Value>;

    fn discrete(&mut self, family: DiscreteFamily, param: &Self::Value) -> Result<Self::Value>;

    /// Inversion sample over `outputs` (in order) with probabilities `probs`.
    fn categorical(&mut self, probs: &[Self::Value], outputs: &[f64]) -> Result<Self::Value>;

    /// Reparameterized continuous sample; `b` is ignored by one-parameter
    /// families.
    fn continuous(&mut self, family: ContinuousFamily, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;

    /// `values[idx]` for an integer-valued index (0-based).
    fn index(&mut self, values: &[Self::Value], idx: &Self::Value) -> Result<Self::Value>;

    /// Read a value as a branch condition (`!= 0`). Backends that cannot
    /// differentiate through control flow reject values carrying derivative
    /// information.
    fn condition(&mut self, v: &Self::Value) -> Result<bool>;

    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.binary(a, b, |x, y| x + y, |_, _| (1.0, 1.0))
    }

    fn sub(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.binary(a, b, |x, y| x - y, |_, _| (1.0, -1.0))
    }

    fn mul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.binary(a, b, |x, y| x * y, |x, y| (y, x))
    }

    fn div(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.binary(a, b, |x, y| x / y, |x, y| (1.0 / y, -x / (y * y)))
    }

    fn neg(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.unary(a, |x| -x, |_| -1.0)
    }

    fn scale(&mut self, a: &Self::Value, c: f64) -> Result<Self::Value> {
        self.unary(a, |x| c * x, |_| c)
    }

    fn offset(&mut self, a: &Self::Value, c: f64) -> Result<Self::Value> {
        self.unary(a, |x| x + c, |_| 1.0)
    }

    fn square(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.unary(a, |x| x * x, |x| 2.0 * x)
    }

    fn powi(&mut self, a: &Self::Value, n: i32) -> Result<Self::Value> {
        self.unary(a, |x| x.powi(n), |x| f64::from(n) * x.powi(n - 1))
    }

    fn exp(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.unary(a, f64::exp, f64::exp)
    }

    fn ln(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.unary(a, f64::ln, |x| 1.0 / x)
    }

    fn sum(&mut self, values: &[Self::Value]) -> Result<Self::Value> {
        let mut acc = self.constant(0.0);
        for v in values {
            acc = self.add(&acc, v)?;
        }
        Ok(acc)
    }

    fn bernoulli(&mut self, p: &Self::Value) -> Result<Self::Value> {
        self.discrete(DiscreteFamily::Bernoulli, p)
    }

    fn binomial(&mut self, n: u64, p: &Self::Value) -> Result<Self::Value> {
        self.discrete(DiscreteFamily::Binomial { n }, p)
    }

    fn geometric(&mut self, p: &Self::Value) -> Result<Self::Value> {
        self.discrete(DiscreteFamily::Geometric, p)
    }

    fn poisson(&mut self, rate: &Self::Value) -> Result<Self::Value> {
        self.discrete(DiscreteFamily::Poisson, rate)
    }

    fn normal(&mut self, mean: &Self::Value, sd: &Self::Value) -> Result<Self::Value> {
        self.continuous(ContinuousFamily::Normal, mean, sd)
    }

    fn exponential(&mut self, scale: &Self::Value) -> Result<Self::Value> {
        let unused = self.constant(0.0);
        self.continuous(ContinuousFamily::Exponential, scale, &unused)
    }

    fn uniform(&mut self, low: &Self::Value, high: &Self::Value) -> Result<Self::Value> {
        self.continuous(ContinuousFamily::Uniform, low, high)
    }
}

/// A stochastic program `X(p)`, generic over the backend it runs on.
pub trait Program: Sync {
    fn run<B: Backend>(&self, backend: &mut B, p: B::Value) -> Result<B::Value>;
}
