use crate::backend::{Backend, Program};
use crate::error::Result;

/// `a = p²; b ~ Bin(10, p); c = 2b + 3·Ber(p); return a·c·Normal(b, a)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Toy;

impl Toy {
    /// Intermediate values `[a, b, c, output]`.
    pub fn trace<B: Backend>(&self, bk: &mut B, p: B::Value) -> Result<[B::Value; 4]> {
        let a = bk.square(&p)?;
        let b = bk.binomial(10, &p)?;
        let coin = bk.bernoulli(&p)?;
        let twice_b = bk.scale(&b, 2.0)?;
        let three_coin = bk.scale(&coin, 3.0)?;
        let c = bk.add(&twice_b, &three_coin)?;
        let noise = bk.normal(&b, &a)?;
        let ac = bk.mul(&a, &c)?;
        let out = bk.mul(&ac, &noise)?;
        Ok([a, b, c, out])
    }
}

impl Program for Toy {
    fn run<B: Backend>(&self, bk: &mut B, p: B::Value) -> Result<B::Value> {
        let [_, _, _, out] = self.trace(bk, p)?;
        Ok(out)
    }
}

/// `E[X(p)] = p²·E[(2b + 3·Ber)·b] = 20p³ + 210p⁴`, so the derivative is
/// `60p² + 840p³`.
pub fn toy_exact_derivative(p: f64) -> f64 {
    60.0 * p * p + 840.0 * p.powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{Primal, TripleTracer};
    use crate::dist::Discrete;
    use crate::rng::{RandomStream, ReplicateStreams};
    use crate::triple::{make_input, DerivativeMode, Perturbation, Pruner, StochasticTriple};

    #[test]
    fn exact_mean_by_enumeration() {
        let mean = |p: f64| {
            let bin = Discrete::Binomial { n: 10, p };
            (0..=10u64)
                .map(|b| {
                    let bf = b as f64;
                    bin.pmf(b) * p * p * bf * (2.0 * bf + 3.0 * p)
                })
                .sum::<f64>()
        };
        let h = 1e-6;
        let fd = (mean(0.6 + h) - mean(0.6 - h)) / (2.0 * h);
        assert!((fd - toy_exact_derivative(0.6)).abs() < 1e-6);
        assert!((toy_exact_derivative(0.6) - 203.04).abs() < 1e-9);
    }

    #[test]
    fn intermediate_triples_have_the_printed_structure() {
        // find a replicate with b = 6 and a failed coin, as in the printout
        let r = (0..10_000)
            .find(|&r| {
                let mut t = Primal::new(ReplicateStreams::new(1, r).sampling());
                let [_, b, c, _] = Toy.trace(&mut t, 0.6).unwrap();
                b == 6.0 && c == 12.0
            })
            .unwrap();
        let mut t = TripleTracer::for_replicate(ReplicateStreams::new(1, r), DerivativeMode::Right);
        let [a, b, c, out] = Toy.trace(&mut t, make_input(0.6).unwrap()).unwrap();
        assert!((a.value - 0.36).abs() < 1e-12 && (a.delta - 1.2).abs() < 1e-12 && a.pert.is_none());
        let bp = b.pert.unwrap();
        assert_eq!((b.value, b.delta, bp.delta_value), (6.0, 0.0, 1.0));
        assert!((bp.weight - 10.0).abs() < 1e-9);
        let c = t.resolve(&c).unwrap();
        let cp = c.pert.unwrap();
        assert_eq!(c.value, 12.0);
        assert!((cp.weight - 12.5).abs() < 1e-9);
        assert!(cp.delta_value == 2.0 || cp.delta_value == 3.0);
        let out = t.resolve(&out).unwrap();
        assert!((out.pert.unwrap().weight - 12.5).abs() < 1e-9);
    }

    #[test]
    fn printed_final_triple_collapses_to_its_estimate() {
        let tag = Pruner::new(RandomStream::new(0, 0)).issue(12.5).unwrap();
        let st = StochasticTriple::new(27.11, 94.32, Some(Perturbation::new(6.78, 12.5, tag).unwrap()));
        assert!((st.derivative_contribution(DerivativeMode::Right) - 179.07).abs() < 1e-9);
    }

    #[test]
    fn primal_is_preserved() {
        for r in 0..50 {
            let s = ReplicateStreams::new(9, r);
            let plain = Toy.run(&mut Primal::new(s.sampling()), 0.6).unwrap();
            let mut t = TripleTracer::for_replicate(s, DerivativeMode::Right);
            let traced = Toy.run(&mut t, make_input(0.6).unwrap()).unwrap();
            assert_eq!(plain.to_bits(), traced.value.to_bits());
        }
    }
}
