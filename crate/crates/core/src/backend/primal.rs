use crate::backend::Backend;
use crate::dist::{categorical_quantile, inversion_quantile, ContinuousFamily, DiscreteFamily};
use crate::error::{Error, EvalPath, Result};
use crate::rng::RandomStream;
use crate::triple::checked_index;

/// Plain evaluation on reals.
#[derive(Clone, Debug)]
pub struct Primal {
    sampling: RandomStream,
}

impl Primal {
    pub fn new(sampling: RandomStream) -> Self {
        Primal { sampling }
    }
}

fn finite(v: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { path: EvalPath::Primal, what: what() })
    }
}

impl Backend for Primal {
    type Value = f64;

    fn constant(&mut self, c: f64) -> f64 {
        c
    }

    fn primal(&self, v: &f64) -> f64 {
        *v
    }

    fn unary(&mut self, x: &f64, f: impl Fn(f64) -> f64, _df: impl Fn(f64) -> f64) -> Result<f64> {
        finite(f(*x), || format!("f({x})"))
    }

    fn binary(
        &mut self,
        a: &f64,
        b: &f64,
        f: impl Fn(f64, f64) -> f64,
        _grad: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<f64> {
        finite(f(*a, *b), || format!("f({a}, {b})"))
    }

    fn discrete(&mut self, family: DiscreteFamily, param: &f64) -> Result<f64> {
        let u = self.sampling.uniform();
        Ok(inversion_quantile(&family.at(*param), u)? as f64)
    }

    fn categorical(&mut self, probs: &[f64], outputs: &[f64]) -> Result<f64> {
        if probs.len() != outputs.len() {
            return Err(Error::Contract("categorical probabilities and outputs differ in length".into()));
        }
        let u = self.sampling.uniform();
        Ok(outputs[categorical_quantile(probs, u)?])
    }

    fn continuous(&mut self, family: ContinuousFamily, a: &f64, b: &f64) -> Result<f64> {
        let u = self.sampling.uniform_open();
        Ok(family.at(*a, *b).sample_at(u)?.0)
    }

    fn index(&mut self, values: &[f64], idx: &f64) -> Result<f64> {
        Ok(values[checked_index(*idx, values.len(), EvalPath::Primal)?])
    }

    fn condition(&mut self, v: &f64) -> Result<bool> {
        Ok(*v != 0.0)
    }
}
