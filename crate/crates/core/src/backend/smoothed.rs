use crate::backend::Backend;
use crate::dist::{
    categorical_quantile, categorical_weights, discrete_weights, inversion_quantile, ContinuousFamily, DiscreteFamily,
};
use crate::error::{Error, EvalPath, Result};
use crate::rng::RandomStream;
use crate::smoothing::{smooth_bernoulli, BernoulliFlavor, SmoothedDual};
use crate::triple::{checked_index, DerivativeMode};

/// Runs a program on smoothed duals.
///
/// Each discrete draw replaces its jump by the conditional expectation of the
/// jump, so only `(value, sderiv)` pairs flow. Exact through code that is
/// linear over the jump range; biased otherwise.
#[derive(Clone, Debug)]
pub struct SmoothedTracer {
    sampling: RandomStream,
    mode: DerivativeMode,
    bernoulli: BernoulliFlavor,
}

impl SmoothedTracer {
    pub fn new(sampling: RandomStream, mode: DerivativeMode, bernoulli: BernoulliFlavor) -> Self {
        SmoothedTracer { sampling, mode, bernoulli }
    }

    /// Smoothed derivative of an integer draw at outcome `x`.
    pub fn discrete_sderiv(family: DiscreteFamily, theta: SmoothedDual, x: u64, mode: DerivativeMode) -> Result<f64> {
        if theta.sderiv == 0.0 {
            return Ok(0.0);
        }
        let dir = if theta.sderiv > 0.0 { mode } else { mode.flipped() };
        let w = discrete_weights(&family.at(theta.value), x, dir)?;
        Ok(mode.sign() * theta.sderiv.abs() * w.net())
    }
}

fn check(v: SmoothedDual, what: impl FnOnce() -> String) -> Result<SmoothedDual> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { path: EvalPath::Primal, what: what() })
    }
}

impl Backend for SmoothedTracer {
    type Value = SmoothedDual;

    fn constant(&mut self, c: f64) -> SmoothedDual {
        SmoothedDual::constant(c)
    }

    fn primal(&self, v: &SmoothedDual) -> f64 {
        v.value
    }

    fn unary(&mut self, x: &SmoothedDual, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<SmoothedDual> {
        check(x.map(f, df), || format!("f({})", x.value))
    }

    fn binary(
        &mut self,
        a: &SmoothedDual,
        b: &SmoothedDual,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<SmoothedDual> {
        let value = f(a.value, b.value);
        let mut sderiv = 0.0;
        if a.sderiv != 0.0 || b.sderiv != 0.0 {
            let (ga, gb) = grad(a.value, b.value);
            if a.sderiv != 0.0 {
                sderiv += ga * a.sderiv;
            }
            if b.sderiv != 0.0 {
                sderiv += gb * b.sderiv;
            }
        }
        check(SmoothedDual::new(value, sderiv), || format!("f({}, {})", a.value, b.value))
    }

    fn discrete(&mut self, family: DiscreteFamily, param: &SmoothedDual) -> Result<SmoothedDual> {
        let u = self.sampling.uniform();
        let x = inversion_quantile(&family.at(param.value), u)?;
        if param.sderiv == 0.0 {
            return Ok(SmoothedDual::constant(x as f64));
        }
        if family == DiscreteFamily::Bernoulli {
            return smooth_bernoulli(*param, x == 1, self.bernoulli);
        }
        let sderiv = Self::discrete_sderiv(family, *param, x, self.mode)?;
        Ok(SmoothedDual::new(x as f64, sderiv))
    }

    fn categorical(&mut self, probs: &[SmoothedDual], outputs: &[f64]) -> Result<SmoothedDual> {
        if probs.len() != outputs.len() {
            return Err(Error::Contract("categorical probabilities and outputs differ in length".into()));
        }
        let values: Vec<f64> = probs.iter().map(|p| p.value).collect();
        let derivs: Vec<f64> = probs.iter().map(|p| p.sderiv).collect();
        let u = self.sampling.uniform();
        let x = categorical_quantile(&values, u)?;
        let w = categorical_weights(&values, &derivs, x, self.mode)?;
        let up = if w.w_up > 0.0 { w.w_up * (outputs[x + 1] - outputs[x]) } else { 0.0 };
        let down = if w.w_down > 0.0 { w.w_down * (outputs[x - 1] - outputs[x]) } else { 0.0 };
        Ok(SmoothedDual::new(outputs[x], self.mode.sign() * (up + down)))
    }

    fn continuous(&mut self, family: ContinuousFamily, a: &SmoothedDual, b: &SmoothedDual) -> Result<SmoothedDual> {
        let u = self.sampling.uniform_open();
        let (x, g) = family.at(a.value, b.value).sample_at(u)?;
        let da = if a.sderiv == 0.0 { 0.0 } else { g[0] * a.sderiv };
        let db = if b.sderiv == 0.0 { 0.0 } else { g[1] * b.sderiv };
        Ok(SmoothedDual::new(x, da + db))
    }

    fn index(&mut self, values: &[SmoothedDual], idx: &SmoothedDual) -> Result<SmoothedDual> {
        if idx.sderiv != 0.0 {
            return Err(Error::Unsupported(
                "indexing with a smoothed integer; run this program with stochastic triples".into(),
            ));
        }
        Ok(values[checked_index(idx.value, values.len(), EvalPath::Primal)?])
    }

    fn condition(&mut self, v: &SmoothedDual) -> Result<bool> {
        if v.sderiv != 0.0 {
            return Err(Error::Unsupported("branching on a value with a nonzero smoothed derivative".into()));
        }
        Ok(v.value != 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn smoothed_draw_averages_to_mean_derivative() {
        for (family, theta) in [
            (DiscreteFamily::Binomial { n: 10 }, 0.6),
            (DiscreteFamily::Geometric, 0.5),
            (DiscreteFamily::Poisson, 2.0),
        ] {
            let dist = family.at(theta);
            for mode in [DerivativeMode::Right, DerivativeMode::Left] {
                for seed in [1.0, -1.0] {
                    let e: f64 = (0..400u64)
                        .filter(|&x| dist.in_support(x))
                        .map(|x| {
                            dist.pmf(x)
                                * SmoothedTracer::discrete_sderiv(family, SmoothedDual::new(theta, seed), x, mode)
                                    .unwrap()
                        })
                        .sum();
                    assert_abs_diff_eq!(e, seed * dist.mean_derivative(), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn bernoulli_uses_flavor() {
        let mut t = SmoothedTracer::new(RandomStream::new(5, 0), DerivativeMode::Right, BernoulliFlavor::Right);
        let mut primal = crate::backend::Primal::new(RandomStream::new(5, 0));
        for _ in 0..50 {
            let x = t.bernoulli(&SmoothedDual::input(0.6)).unwrap();
            let y = primal.bernoulli(&0.6).unwrap();
            assert_eq!(x.value, y);
            let expect = if y == 0.0 { 2.5 } else { 0.0 };
            assert_abs_diff_eq!(x.sderiv, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn categorical_matches_bernoulli_right() {
        let p = 0.3;
        let probs = [SmoothedDual::new(1.0 - p, -1.0), SmoothedDual::new(p, 1.0)];
        let mut t = SmoothedTracer::new(RandomStream::new(9, 0), DerivativeMode::Right, BernoulliFlavor::Right);
        let mut b = SmoothedTracer::new(RandomStream::new(9, 0), DerivativeMode::Right, BernoulliFlavor::Right);
        for _ in 0..50 {
            let c = t.categorical(&probs, &[0.0, 1.0]).unwrap();
            let d = b.bernoulli(&SmoothedDual::input(p)).unwrap();
            assert_eq!(c.value, d.value);
            assert_abs_diff_eq!(c.sderiv, d.sderiv, epsilon = 1e-12);
        }
    }
}
