//! Validation programs and their exact or oracle references.

mod hmm;
mod life;
mod toy;
mod walk;

pub use hmm::{
    kalman_loglik, kalman_loglik_and_grad, particle_filter_gradient, particle_filter_loglik, rotation_matrix,
    simulate_hmm, HmmConfig, HmmData, ParticleState,
};
pub use life::{Life, LifeConfig};
pub use toy::{toy_exact_derivative, Toy};
pub use walk::{walk_exact, walk_score_trace, RandomWalk, TwoStepWalk, WalkConfig};

use crate::backend::{Backend, Program};
use crate::dist::{Discrete, DiscreteFamily};
use crate::error::Result;

/// A single draw from an integer family with parameter `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistDraw(pub DiscreteFamily);

impl Program for DistDraw {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        b.discrete(self.0, &p)
    }
}

/// `scale·Bin(n, p) + shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineBinomial {
    pub n: u64,
    pub scale: f64,
    pub shift: f64,
}

impl Program for AffineBinomial {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        let x = b.binomial(self.n, &p)?;
        let y = b.scale(&x, self.scale)?;
        b.offset(&y, self.shift)
    }
}

/// `B₁ + 2·B₂` with independent `Bᵢ ~ Bin(n, p)`; its two jumps are always
/// pruned against each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinomialSum {
    pub n: u64,
}

impl Program for BinomialSum {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        let b1 = b.binomial(self.n, &p)?;
        let b2 = b.binomial(self.n, &p)?;
        let twice = b.scale(&b2, 2.0)?;
        b.add(&b1, &twice)
    }
}

/// `Geo(p)³`, failure-count convention.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GeometricCube;

impl Program for GeometricCube {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        let x = b.geometric(&p)?;
        b.powi(&x, 3)
    }
}

/// `d/dp E[Geo(p)³]` by enumeration of the support until the remaining
/// terms are negligible.
pub fn geometric_cube_derivative(p: f64) -> f64 {
    let dist = Discrete::Geometric { p };
    let mut total = 0.0;
    let mut x = 0u64;
    loop {
        let pmf = dist.pmf(x);
        let xf = x as f64;
        total += xf.powi(3) * pmf * dist.log_pmf_derivative(x);
        if xf > 10.0 / p && pmf * xf.powi(4) < 1e-18 * total.abs().max(1.0) {
            break;
        }
        x += 1;
    }
    total
}
