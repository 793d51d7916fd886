use crate::backend::{Backend, Program};
use crate::error::{Error, Result};
use crate::estimators::{score_trace, ScoreSample};
use crate::rng::ReplicateStreams;

/// Inhomogeneous walk on the integers: from `x` step up with probability
/// `exp(−x/p)`, down otherwise, starting at 0. Steps are ±1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkConfig {
    pub n: u32,
    pub p: f64,
}

impl WalkConfig {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n == 0 || !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("walk needs n >= 1 and p > 0, got n={n}, p={p}")));
        }
        Ok(WalkConfig { n, p })
    }

    pub fn program(&self) -> RandomWalk {
        RandomWalk { n: self.n }
    }
}

/// The walk as a program of `p`, returning `x_n²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomWalk {
    pub n: u32,
}

impl Program for RandomWalk {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        let mut x = b.constant(0.0);
        for _ in 0..self.n {
            let q = b.binary(
                &x,
                &p,
                |x, p| (-x / p).exp(),
                |x, p| {
                    let q = (-x / p).exp();
                    (-q / p, q * x / (p * p))
                },
            )?;
            let up = b.bernoulli(&q)?;
            let step = b.unary(&up, |u| 2.0 * u - 1.0, |_| 2.0)?;
            x = b.add(&x, &step)?;
        }
        b.square(&x)
    }
}

/// Payoff and score of one walk, the score accumulating `∂p log q` on up
/// steps and `∂p log(1 − q)` on down steps.
pub fn walk_score_trace(cfg: &WalkConfig, streams: ReplicateStreams) -> Result<ScoreSample> {
    score_trace(&cfg.program(), cfg.p, streams)
}

/// Exact `E[x_n²]` and its derivative in `p`, by propagating the state
/// distribution and its derivative.
pub fn walk_exact(n: u32, p: f64) -> (f64, f64) {
    let len = n as usize + 2;
    let mut prob = vec![0.0; len];
    let mut dprob = vec![0.0; len];
    prob[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; len];
        let mut dnext = vec![0.0; len];
        for x in 0..len - 1 {
            if prob[x] == 0.0 && dprob[x] == 0.0 {
                continue;
            }
            let xf = x as f64;
            let q = (-xf / p).exp();
            let dq = q * xf / (p * p);
            next[x + 1] += prob[x] * q;
            dnext[x + 1] += dprob[x] * q + prob[x] * dq;
            if x > 0 {
                next[x - 1] += prob[x] * (1.0 - q);
                dnext[x - 1] += dprob[x] * (1.0 - q) - prob[x] * dq;
            }
        }
        prob = next;
        dprob = dnext;
    }
    let sq = |v: &[f64]| v.iter().enumerate().map(|(x, w)| (x * x) as f64 * w).sum::<f64>();
    (sq(&prob), sq(&dprob))
}

/// `X₁ ~ Ber(p)`, `X₂ ~ Ber(p·(1 + X₁))`, returning `X₁ + X₂`. Needs
/// `p ≤ 1/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TwoStepWalk;

impl Program for TwoStepWalk {
    fn run<B: Backend>(&self, b: &mut B, p: B::Value) -> Result<B::Value> {
        let x1 = b.bernoulli(&p)?;
        let factor = b.offset(&x1, 1.0)?;
        let q = b.mul(&p, &factor)?;
        let x2 = b.bernoulli(&q)?;
        b.add(&x1, &x2)
    }
}
