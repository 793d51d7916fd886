use crate::backend::Backend;
use crate::dist::{categorical_quantile, inversion_quantile, ContinuousFamily, DiscreteFamily};
use crate::error::{Error, EvalPath, Result};
use crate::rng::RandomStream;
use crate::smoothing::SmoothedDual;
use crate::triple::checked_index;

/// Runs a program while accumulating the score `Σ ∂p log P(choice)` of its
/// discrete choices. Continuous draws are differentiated pathwise, so values
/// are duals whose derivative is the pathwise part only.
#[derive(Clone, Debug)]
pub struct ScoreTracer {
    sampling: RandomStream,
    score: f64,
}

impl ScoreTracer {
    pub fn new(sampling: RandomStream) -> Self {
        ScoreTracer { sampling, score: 0.0 }
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    fn add_score(&mut self, term: f64) -> Result<()> {
        if !term.is_finite() {
            return Err(Error::NonFinite(format!("score term {term}")));
        }
        self.score += term;
        Ok(())
    }
}

impl Backend for ScoreTracer {
    type Value = SmoothedDual;

    fn constant(&mut self, c: f64) -> SmoothedDual {
        SmoothedDual::constant(c)
    }

    fn primal(&self, v: &SmoothedDual) -> f64 {
        v.value
    }

    fn unary(&mut self, x: &SmoothedDual, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<SmoothedDual> {
        let y = x.map(f, df);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation { path: EvalPath::Primal, what: format!("f({})", x.value) })
        }
    }

    fn binary(
        &mut self,
        a: &SmoothedDual,
        b: &SmoothedDual,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<SmoothedDual> {
        let value = f(a.value, b.value);
        let mut d = 0.0;
        if a.sderiv != 0.0 || b.sderiv != 0.0 {
            let (ga, gb) = grad(a.value, b.value);
            if a.sderiv != 0.0 {
                d += ga * a.sderiv;
            }
            if b.sderiv != 0.0 {
                d += gb * b.sderiv;
            }
        }
        let y = SmoothedDual::new(value, d);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation { path: EvalPath::Primal, what: format!("f({}, {})", a.value, b.value) })
        }
    }

    fn discrete(&mut self, family: DiscreteFamily, param: &SmoothedDual) -> Result<SmoothedDual> {
        let u = self.sampling.uniform();
        let dist = family.at(param.value);
        let x = inversion_quantile(&dist, u)?;
        if param.sderiv != 0.0 {
            dist.check_interior()?;
            self.add_score(dist.log_pmf_derivative(x) * param.sderiv)?;
        }
        Ok(SmoothedDual::constant(x as f64))
    }

    fn categorical(&mut self, probs: &[SmoothedDual], outputs: &[f64]) -> Result<SmoothedDual> {
        if probs.len() != outputs.len() {
            return Err(Error::Contract("categorical probabilities and outputs differ in length".into()));
        }
        let values: Vec<f64> = probs.iter().map(|p| p.value).collect();
        let u = self.sampling.uniform();
        let x = categorical_quantile(&values, u)?;
        if probs[x].sderiv != 0.0 {
            self.add_score(probs[x].sderiv / probs[x].value)?;
        }
        Ok(SmoothedDual::constant(outputs[x]))
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
            return Err(Error::Contract(format!("integer index carries a derivative {}", idx.sderiv)));
        }
        Ok(values[checked_index(idx.value, values.len(), EvalPath::Primal)?])
    }

    /// Discrete outcomes carry no pathwise derivative, so the score method
    /// can branch on them.
    fn condition(&mut self, v: &SmoothedDual) -> Result<bool> {
        if v.sderiv != 0.0 {
            return Err(Error::Unsupported("branching on a value with a pathwise derivative".into()));
        }
        Ok(v.value != 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bernoulli_score_terms() {
        let mut t = ScoreTracer::new(RandomStream::new(2, 0));
        let mut primal = crate::backend::Primal::new(RandomStream::new(2, 0));
        let mut expect = 0.0;
        for _ in 0..20 {
            let x = t.bernoulli(&SmoothedDual::input(0.6)).unwrap();
            assert_eq!(x.value, primal.bernoulli(&0.6).unwrap());
            expect += if x.value == 1.0 { 1.0 / 0.6 } else { -1.0 / 0.4 };
        }
        assert_abs_diff_eq!(t.score(), expect, epsilon = 1e-10);
    }

    #[test]
    fn constant_parameter_adds_nothing() {
        let mut t = ScoreTracer::new(RandomStream::new(2, 0));
        t.bernoulli(&SmoothedDual::constant(1.0)).unwrap();
        t.poisson(&SmoothedDual::constant(3.0)).unwrap();
        assert_eq!(t.score(), 0.0);
    }

    #[test]
    fn categorical_score_is_relative_derivative() {
        let mut t = ScoreTracer::new(RandomStream::new(4, 0));
        let probs = [SmoothedDual::new(0.25, -1.0), SmoothedDual::new(0.75, 1.0)];
        let x = t.categorical(&probs, &[0.0, 1.0]).unwrap();
        let expect = if x.value == 0.0 { -4.0 } else { 1.0 / 0.75 };
        assert_abs_diff_eq!(t.score(), expect, epsilon = 1e-12);
    }
}
