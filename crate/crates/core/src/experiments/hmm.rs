//! Linear-Gaussian hidden Markov model: simulation, exact Kalman
//! likelihood, and a particle filter whose resampling step is differentiated
//! with smoothed weights.
//!
//! `x₁ ~ N(μ, s₀·I)`, `xᵢ = Φ xᵢ₋₁ + N(0, q·I)`, `yᵢ = xᵢ + N(0, r·I)`.
//! The parameter vector is `θ = vec(Φ)` in column-major order.

use nalgebra::{DMatrix, DVector};

use crate::dist::standard_normal_quantile;
use crate::error::{Error, Result};
use crate::rng::{RandomStream, ReplicateStreams};
use crate::smoothing::{new_weight, SmoothedDual};

// Stream 3 of the first replicate block is never used by a replicate.
const DATA_STREAM: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HmmConfig {
    pub d: usize,
    pub n: usize,
    pub particles: usize,
    /// Rotation angle of each planar block of `Φ`.
    pub angle: f64,
    pub q_var: f64,
    pub r_var: f64,
    pub init_var: f64,
}

impl HmmConfig {
    pub fn new(d: usize, n: usize, particles: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidArgument(format!("need d >= 1 and n >= 1, got d={d}, n={n}")));
        }
        if particles < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 particles, got {particles}")));
        }
        Ok(HmmConfig { d, n, particles, angle: std::f64::consts::PI / 10.0, q_var: 0.02, r_var: 0.01, init_var: 0.001 })
    }

    pub fn phi(&self) -> DMatrix<f64> {
        rotation_matrix(self.d, self.angle)
    }
}

/// Block-diagonal rotation by `angle` in each coordinate pair; a trailing odd
/// coordinate is left fixed.
pub fn rotation_matrix(d: usize, angle: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(d, d);
    let (s, c) = angle.sin_cos();
    for b in 0..d / 2 {
        let i = 2 * b;
        m[(i, i)] = c;
        m[(i, i + 1)] = -s;
        m[(i + 1, i)] = s;
        m[(i + 1, i + 1)] = c;
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct HmmData {
    pub mu: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub latents: Vec<DVector<f64>>,
    pub observations: Vec<DVector<f64>>,
}

fn normal(rng: &mut RandomStream) -> f64 {
    standard_normal_quantile(rng.uniform_open())
}

/// One trajectory of the model with `μ ~ N(0, I)`.
pub fn simulate_hmm(cfg: &HmmConfig, seed: u64) -> HmmData {
    let mut rng = RandomStream::new(seed, DATA_STREAM);
    let d = cfg.d;
    let phi = cfg.phi();
    let mu = DVector::from_fn(d, |_, _| normal(&mut rng));
    let (s0, sq, sr) = (cfg.init_var.sqrt(), cfg.q_var.sqrt(), cfg.r_var.sqrt());
    let mut latents = Vec::with_capacity(cfg.n);
    let mut observations = Vec::with_capacity(cfg.n);
    let mut x = DVector::from_fn(d, |i, _| mu[i] + s0 * normal(&mut rng));
    for i in 0..cfg.n {
        if i > 0 {
            let noise = DVector::from_fn(d, |_, _| sq * normal(&mut rng));
            x = &phi * &x + noise;
        }
        let y = DVector::from_fn(d, |j, _| x[j] + sr * normal(&mut rng));
        latents.push(x.clone());
        observations.push(y);
    }
    HmmData { mu, phi, latents, observations }
}

/// Exact log-likelihood of `observations` under transition matrix `phi`.
pub fn kalman_loglik(
    cfg: &HmmConfig,
    mu: &DVector<f64>,
    observations: &[DVector<f64>],
    phi: &DMatrix<f64>,
) -> Result<f64> {
    let d = cfg.d;
    let eye = DMatrix::<f64>::identity(d, d);
    let mut m = mu.clone();
    let mut p = &eye * cfg.init_var;
    let mut ll = 0.0;
    let log2pi = (2.0 * std::f64::consts::PI).ln();
    for (i, y) in observations.iter().enumerate() {
        if i > 0 {
            m = phi * &m;
            p = phi * &p * phi.transpose() + &eye * cfg.q_var;
        }
        let s = &p + &eye * cfg.r_var;
        let chol = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("innovation covariance at step {i} is not positive definite")))?;
        let resid = y - &m;
        let sol = chol.solve(&resid);
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        ll += -0.5 * (d as f64 * log2pi + logdet + resid.dot(&sol));
        let gain = &p * chol.inverse();
        m += &gain * resid;
        p = (&eye - &gain) * &p;
    }
    Ok(ll)
}

/// Kalman log-likelihood and its gradient in `vec(Φ)` by central differences
/// with the given step.
pub fn kalman_gradient(
    cfg: &HmmConfig,
    mu: &DVector<f64>,
    observations: &[DVector<f64>],
    phi: &DMatrix<f64>,
    step: f64,
) -> Result<(f64, Vec<f64>)> {
    let ll = kalman_loglik(cfg, mu, observations, phi)?;
    let d = cfg.d;
    let mut grad = Vec::with_capacity(d * d);
    for j in 0..d * d {
        let (r, c) = (j % d, j / d);
        let mut hi = phi.clone();
        hi[(r, c)] += step;
        let mut lo = phi.clone();
        lo[(r, c)] -= step;
        let diff = kalman_loglik(cfg, mu, observations, &hi)? - kalman_loglik(cfg, mu, observations, &lo)?;
        grad.push(diff / (2.0 * step));
    }
    Ok((ll, grad))
}

pub fn kalman_loglik_and_grad(
    cfg: &HmmConfig,
    mu: &DVector<f64>,
    observations: &[DVector<f64>],
    phi: &DMatrix<f64>,
) -> Result<(f64, Vec<f64>)> {
    kalman_gradient(cfg, mu, observations, phi, 1e-6)
}

/// Particle cloud: positions (`K × d`, row per particle) and log-weights
/// relative to the common factor already folded into the likelihood.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub d: usize,
    pub positions: Vec<SmoothedDual>,
    pub log_weights: Vec<SmoothedDual>,
}

impl ParticleState {
    pub fn particle(&self, k: usize) -> &[SmoothedDual] {
        &self.positions[k * self.d..(k + 1) * self.d]
    }

    /// Add `log p(y | x)` to every particle's log-weight.
    fn observe(&mut self, y: &DVector<f64>, r_var: f64) {
        let d = self.d;
        let norm = -0.5 * d as f64 * (2.0 * std::f64::consts::PI * r_var).ln();
        for k in 0..self.log_weights.len() {
            let mut sq = SmoothedDual::constant(0.0);
            for (j, x) in self.positions[k * d..(k + 1) * d].iter().enumerate() {
                let e = *x - y[j];
                sq = sq + e * e;
            }
            self.log_weights[k] = self.log_weights[k] + sq * (-0.5 / r_var) + norm;
        }
    }

    /// `log Σ exp(log wₖ)`, shifted by the largest primal log-weight.
    fn log_sum(&self) -> Result<(f64, Vec<SmoothedDual>, SmoothedDual)> {
        let m = self.log_weights.iter().map(|w| w.value).fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Numerical("particle weights degenerated to zero; increase the particle count".into()));
        }
        let w: Vec<SmoothedDual> = self.log_weights.iter().map(|lw| (*lw - m).exp()).collect();
        let total: SmoothedDual = w.iter().copied().sum();
        Ok((m, w, total))
    }
}

/// Log of the bootstrap particle-filter likelihood estimate, as a dual in the
/// direction encoded by the derivative parts of `theta = vec(Φ)`.
///
/// Resampling is multinomial before every propagation step. With
/// `resampling_grad`, each resampled particle carries
/// `new_weight(ϖ_k / Σϖ)`; without it the resampled weights are constant and
/// the estimator is biased.
pub fn particle_filter_loglik(
    cfg: &HmmConfig,
    mu: &DVector<f64>,
    observations: &[DVector<f64>],
    theta: &[SmoothedDual],
    rng: &mut RandomStream,
    resampling_grad: bool,
) -> Result<SmoothedDual> {
    let (d, kk) = (cfg.d, cfg.particles);
    if theta.len() != d * d {
        return Err(Error::Contract(format!("theta has {} entries, expected {}", theta.len(), d * d)));
    }
    if kk < 2 {
        return Err(Error::InvalidArgument("need at least 2 particles".into()));
    }
    let log_k = (kk as f64).ln();
    let (s0, sq) = (cfg.init_var.sqrt(), cfg.q_var.sqrt());
    let mut state = ParticleState {
        d,
        positions: (0..kk * d).map(|i| SmoothedDual::constant(mu[i % d] + s0 * normal(rng))).collect(),
        log_weights: vec![SmoothedDual::constant(0.0); kk],
    };
    let mut loglik = SmoothedDual::constant(0.0);
    for (i, y) in observations.iter().enumerate() {
        if i > 0 {
            let (m, w, total) = state.log_sum()?;
            loglik = loglik + total.ln() + (m - log_k);
            let mut cdf = Vec::with_capacity(kk);
            let mut acc = 0.0;
            for wk in &w {
                acc += wk.value / total.value;
                cdf.push(acc);
            }
            let mut positions = Vec::with_capacity(kk * d);
            let mut log_weights = Vec::with_capacity(kk);
            for _ in 0..kk {
                let u = rng.uniform().get();
                let a = cdf.partition_point(|&c| c <= u).min(kk - 1);
                let lw = if resampling_grad { new_weight(w[a] / total)?.ln() } else { SmoothedDual::constant(0.0) };
                log_weights.push(lw);
                positions.extend_from_slice(state.particle(a));
            }
            for k in 0..kk {
                let x = &positions[k * d..(k + 1) * d];
                for r in 0..d {
                    let mut v = SmoothedDual::constant(sq * normal(rng));
                    for (c, xc) in x.iter().enumerate() {
                        v = v + theta[c * d + r] * *xc;
                    }
                    state.positions[k * d + r] = v;
                }
            }
            state.log_weights = log_weights;
        }
        state.observe(y, cfg.r_var);
    }
    let (m, _, total) = state.log_sum()?;
    Ok(loglik + total.ln() + (m - log_k))
}

/// Particle-filter log-likelihood and its gradient in `vec(Φ)`, one
/// directional pass per entry on identical randomness.
pub fn particle_filter_gradient(
    cfg: &HmmConfig,
    mu: &DVector<f64>,
    observations: &[DVector<f64>],
    phi: &DMatrix<f64>,
    streams: ReplicateStreams,
    resampling_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    let d = cfg.d;
    let mut grad = Vec::with_capacity(d * d);
    let mut ll = f64::NAN;
    for j in 0..d * d {
        let theta: Vec<SmoothedDual> =
            (0..d * d).map(|i| SmoothedDual::new(phi[(i % d, i / d)], if i == j { 1.0 } else { 0.0 })).collect();
        let out = particle_filter_loglik(cfg, mu, observations, &theta, &mut streams.sampling(), resampling_grad)?;
        ll = out.value;
        grad.push(out.sderiv);
    }
    Ok((ll, grad))
}
