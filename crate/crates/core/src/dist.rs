//! Distribution families, their inversion samplers, and the jump weights of
//! their stochastic derivatives.
//!
//! Every integer family is sampled by inverting its CDF at a shared uniform
//! draw. Nudging the parameter then moves the sample by at most one support
//! point, and [`discrete_weights`] gives the rate of that move conditional on
//! the primal outcome.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::UniformDraw;
use crate::triple::DerivativeMode;

/// Integer-valued families with one differentiable parameter.
///
/// `Geometric` counts failures before the first success, so its support is
/// `{0, 1, 2, ...}` and its mean is `(1 - p) / p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Discrete {
    Bernoulli { p: f64 },
    Binomial { n: u64, p: f64 },
    Geometric { p: f64 },
    Poisson { rate: f64 },
}

// Sequential Poisson inversion starts from exp(-rate).
const MAX_POISSON_RATE: f64 = 700.0;

impl Discrete {
    pub fn param(&self) -> f64 {
        match *self {
            Discrete::Bernoulli { p } | Discrete::Binomial { p, .. } | Discrete::Geometric { p } => p,
            Discrete::Poisson { rate } => rate,
        }
    }

    pub fn with_param(&self, theta: f64) -> Self {
        match *self {
            Discrete::Bernoulli { .. } => Discrete::Bernoulli { p: theta },
            Discrete::Binomial { n, .. } => Discrete::Binomial { n, p: theta },
            Discrete::Geometric { .. } => Discrete::Geometric { p: theta },
            Discrete::Poisson { .. } => Discrete::Poisson { rate: theta },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Discrete::Bernoulli { .. } => "bernoulli",
            Discrete::Binomial { .. } => "binomial",
            Discrete::Geometric { .. } => "geometric",
            Discrete::Poisson { .. } => "poisson",
        }
    }

    /// Parameters valid for sampling; boundary values (`p ∈ {0, 1}`,
    /// `rate = 0`) are allowed here since they are degenerate but well
    /// defined.
    pub fn check_closed(&self) -> Result<()> {
        let ok = match *self {
            Discrete::Bernoulli { p } | Discrete::Binomial { p, .. } => (0.0..=1.0).contains(&p),
            Discrete::Geometric { p } => p > 0.0 && p <= 1.0,
            Discrete::Poisson { rate } => (0.0..=MAX_POISSON_RATE).contains(&rate),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self:?}")))
        }
    }

    /// Parameters strictly inside the domain, as required for differentiation.
    pub fn check_interior(&self) -> Result<()> {
        let ok = match *self {
            Discrete::Bernoulli { p } | Discrete::Binomial { p, .. } | Discrete::Geometric { p } => p > 0.0 && p < 1.0,
            Discrete::Poisson { rate } => rate > 0.0 && rate <= MAX_POISSON_RATE,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self:?} is on the boundary of its parameter domain")))
        }
    }

    pub fn in_support(&self, x: u64) -> bool {
        match *self {
            Discrete::Bernoulli { .. } => x <= 1,
            Discrete::Binomial { n, .. } => x <= n,
            Discrete::Geometric { .. } | Discrete::Poisson { .. } => true,
        }
    }

    pub fn pmf(&self, x: u64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        let xf = x as f64;
        match *self {
            Discrete::Bernoulli { p } => {
                if x == 1 {
                    p
                } else {
                    1.0 - p
                }
            }
            Discrete::Binomial { n, p } => {
                if p == 0.0 {
                    return if x == 0 { 1.0 } else { 0.0 };
                }
                if p == 1.0 {
                    return if x == n { 1.0 } else { 0.0 };
                }
                let nf = n as f64;
                let log_choose = ln_gamma(nf + 1.0) - ln_gamma(xf + 1.0) - ln_gamma(nf - xf + 1.0);
                (log_choose + xf * p.ln() + (nf - xf) * (-p).ln_1p()).exp()
            }
            Discrete::Geometric { p } => {
                if p == 1.0 {
                    return if x == 0 { 1.0 } else { 0.0 };
                }
                p * (xf * (-p).ln_1p()).exp()
            }
            Discrete::Poisson { rate } => {
                if rate == 0.0 {
                    return if x == 0 { 1.0 } else { 0.0 };
                }
                (xf * rate.ln() - rate - ln_gamma(xf + 1.0)).exp()
            }
        }
    }

    /// `P(X <= x)`, with `cdf(-1) = 0`.
    pub fn cdf(&self, x: i64) -> f64 {
        if x < 0 {
            return 0.0;
        }
        let xu = x as u64;
        match *self {
            Discrete::Bernoulli { p } => {
                if xu == 0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Discrete::Binomial { n, p } => {
                if xu >= n || p == 0.0 {
                    1.0
                } else if p == 1.0 {
                    0.0
                } else {
                    beta_reg((n - xu) as f64, xu as f64 + 1.0, 1.0 - p)
                }
            }
            Discrete::Geometric { p } => -(((xu + 1) as f64) * (-p).ln_1p()).exp_m1(),
            Discrete::Poisson { rate } => {
                let mut term = (-rate).exp();
                let mut acc = term;
                for k in 1..=xu {
                    term *= rate / k as f64;
                    acc += term;
                }
                acc.min(1.0)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Discrete::Bernoulli { p } => p,
            Discrete::Binomial { n, p } => n as f64 * p,
            Discrete::Geometric { p } => (1.0 - p) / p,
            Discrete::Poisson { rate } => rate,
        }
    }

    /// d/dθ of the mean.
    pub fn mean_derivative(&self) -> f64 {
        match *self {
            Discrete::Bernoulli { .. } => 1.0,
            Discrete::Binomial { n, .. } => n as f64,
            Discrete::Geometric { p } => -1.0 / (p * p),
            Discrete::Poisson { .. } => 1.0,
        }
    }

    /// Score `∂θ log P(X = x)`.
    pub fn log_pmf_derivative(&self, x: u64) -> f64 {
        let xf = x as f64;
        match *self {
            Discrete::Bernoulli { p } => {
                if x == 1 {
                    1.0 / p
                } else {
                    -1.0 / (1.0 - p)
                }
            }
            Discrete::Binomial { n, p } => {
                let up = if x > 0 { xf / p } else { 0.0 };
                let down = if x < n { (n - x) as f64 / (1.0 - p) } else { 0.0 };
                up - down
            }
            Discrete::Geometric { p } => {
                let fail = if x > 0 { xf / (1.0 - p) } else { 0.0 };
                1.0 / p - fail
            }
            Discrete::Poisson { rate } => xf / rate - 1.0,
        }
    }
}

/// A discrete family with its parameter left open, as used by samplers that
/// receive the parameter as a traced value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscreteFamily {
    Bernoulli,
    Binomial { n: u64 },
    Geometric,
    Poisson,
}

impl DiscreteFamily {
    pub fn at(self, theta: f64) -> Discrete {
        match self {
            DiscreteFamily::Bernoulli => Discrete::Bernoulli { p: theta },
            DiscreteFamily::Binomial { n } => Discrete::Binomial { n, p: theta },
            DiscreteFamily::Geometric => Discrete::Geometric { p: theta },
            DiscreteFamily::Poisson => Discrete::Poisson { rate: theta },
        }
    }
}

/// Rates of the two adjacent jumps `x → x − 1` and `x → x + 1`, as
/// nonnegative magnitudes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DistWeights {
    pub w_down: f64,
    pub w_up: f64,
}

impl DistWeights {
    pub fn total(&self) -> f64 {
        self.w_down + self.w_up
    }

    /// Expected jump `w_up − w_down` per unit parameter change in the
    /// weights' direction.
    pub fn net(&self) -> f64 {
        self.w_up - self.w_down
    }
}

/// Jump weights of an integer family conditional on the primal outcome `x`.
///
/// `mode` selects the one-sided limit: right keeps the terms active for
/// `ε > 0`, left those active for `ε < 0`.
pub fn discrete_weights(dist: &Discrete, x: u64, mode: DerivativeMode) -> Result<DistWeights> {
    dist.check_interior()?;
    if !dist.in_support(x) {
        return Err(Error::Contract(format!("outcome {x} is outside the support of {dist:?}")));
    }
    let xf = x as f64;
    let right = mode == DerivativeMode::Right;
    let w = match *dist {
        Discrete::Bernoulli { p } => match (right, x) {
            (true, 0) => DistWeights { w_down: 0.0, w_up: 1.0 / (1.0 - p) },
            (false, 1) => DistWeights { w_down: 1.0 / p, w_up: 0.0 },
            _ => DistWeights::default(),
        },
        Discrete::Binomial { n, p } => {
            if right && x < n {
                DistWeights { w_down: 0.0, w_up: (n - x) as f64 / (1.0 - p) }
            } else if !right && x > 0 {
                DistWeights { w_down: xf / p, w_up: 0.0 }
            } else {
                DistWeights::default()
            }
        }
        Discrete::Geometric { p } => {
            if right {
                DistWeights { w_down: if x > 0 { xf / (p * (1.0 - p)) } else { 0.0 }, w_up: 0.0 }
            } else {
                DistWeights { w_down: 0.0, w_up: (xf + 1.0) / p }
            }
        }
        Discrete::Poisson { rate } => {
            if right {
                DistWeights { w_down: 0.0, w_up: 1.0 }
            } else {
                DistWeights { w_down: if x > 0 { xf / rate } else { 0.0 }, w_up: 0.0 }
            }
        }
    };
    Ok(w)
}

/// Generalized inverse CDF: the smallest `x` with `P(X <= x) > u`.
pub fn inversion_quantile(dist: &Discrete, u: UniformDraw) -> Result<u64> {
    dist.check_closed()?;
    let u = u.get();
    let x = match *dist {
        Discrete::Bernoulli { p } => u64::from(u >= 1.0 - p),
        Discrete::Binomial { n, p } => {
            if p == 0.0 {
                0
            } else if p == 1.0 {
                n
            } else {
                // smallest k in [0, n] with cdf(k) > u; cdf(n) = 1 > u always
                let (mut lo, mut hi) = (0u64, n);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if dist.cdf(mid as i64) > u {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            }
        }
        Discrete::Geometric { p } => {
            if p == 1.0 {
                0
            } else {
                let r = (-u).ln_1p() / (-p).ln_1p();
                r.floor().max(0.0) as u64
            }
        }
        Discrete::Poisson { rate } => {
            let mut k = 0u64;
            let mut term = (-rate).exp();
            let mut acc = term;
            while acc <= u {
                k += 1;
                term *= rate / k as f64;
                if term == 0.0 {
                    break;
                }
                acc += term;
            }
            k
        }
    };
    Ok(x)
}

/// Inversion over a categorical distribution with outcomes in the given
/// order. Returns the 0-based outcome index.
pub fn categorical_quantile(probs: &[f64], u: UniformDraw) -> Result<usize> {
    check_categorical(probs)?;
    let u = u.get();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

pub(crate) fn check_categorical(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Contract("categorical needs at least one outcome".into()));
    }
    if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::Contract(format!("categorical probabilities {probs:?} must be nonnegative")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("categorical probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Jump weights of a categorical draw at outcome index `x` towards its
/// neighbours `x − 1` and `x + 1`, given each probability's derivative.
pub fn categorical_weights(probs: &[f64], dprobs: &[f64], x: usize, mode: DerivativeMode) -> Result<DistWeights> {
    check_categorical(probs)?;
    if dprobs.len() != probs.len() || x >= probs.len() {
        return Err(Error::Contract("categorical derivative or index has the wrong length".into()));
    }
    if probs[x].is_nan() || probs[x] <= 0.0 {
        return Err(Error::Domain(format!("categorical outcome {x} has zero probability")));
    }
    let eps = mode.sign();
    let below: f64 = dprobs[..x].iter().sum();
    let through = below + dprobs[x];
    let w_up = if x + 1 < probs.len() && eps * through < 0.0 { through.abs() / probs[x] } else { 0.0 };
    let w_down = if x > 0 && eps * below > 0.0 { below.abs() / probs[x] } else { 0.0 };
    Ok(DistWeights { w_down, w_up })
}

/// Continuous families, all sampled by reparameterization at one draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Continuous {
    Exponential { scale: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

impl Continuous {
    pub fn check(&self) -> Result<()> {
        let ok = match *self {
            Continuous::Exponential { scale } => scale > 0.0 && scale.is_finite(),
            Continuous::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Continuous::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self:?}")))
        }
    }

    /// Sample at the open-interval draw `u`, returning the value and its
    /// partial derivatives with respect to the two parameters (the second is
    /// zero for one-parameter families).
    pub fn sample_at(&self, u: f64) -> Result<(f64, [f64; 2])> {
        self.check()?;
        Ok(match *self {
            Continuous::Exponential { scale } => {
                let x = -scale * (-u).ln_1p();
                (x, [x / scale, 0.0])
            }
            Continuous::Normal { mean, sd } => {
                let z = standard_normal_quantile(u);
                (mean + sd * z, [1.0, z])
            }
            Continuous::Uniform { low, high } => (low + (high - low) * u, [1.0 - u, u]),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuousFamily {
    /// Parameterized by scale; the second parameter is ignored.
    Exponential,
    Normal,
    Uniform,
}

impl ContinuousFamily {
    pub fn at(self, a: f64, b: f64) -> Continuous {
        match self {
            ContinuousFamily::Exponential => Continuous::Exponential { scale: a },
            ContinuousFamily::Normal => Continuous::Normal { mean: a, sd: b },
            ContinuousFamily::Uniform => Continuous::Uniform { low: a, high: b },
        }
    }
}

pub fn standard_normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}
