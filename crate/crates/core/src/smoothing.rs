//! Smoothed stochastic derivatives.
//!
//! Taking the conditional expectation of the jump part over the alternate
//! values collapses a triple into an ordinary dual number `(value, sderiv)`.
//! Smoothed duals follow the classical chain rule, so they compose through
//! any code that is linear over the jump range (exactly) and through mildly
//! nonlinear code (with small bias).

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::triple::{DerivativeMode, StochasticTriple};

/// A value paired with its smoothed derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SmoothedDual {
    pub value: f64,
    pub sderiv: f64,
}

impl SmoothedDual {
    pub const fn new(value: f64, sderiv: f64) -> Self {
        SmoothedDual { value, sderiv }
    }

    pub const fn constant(value: f64) -> Self {
        SmoothedDual { value, sderiv: 0.0 }
    }

    /// Seed an input with unit derivative.
    pub const fn input(value: f64) -> Self {
        SmoothedDual { value, sderiv: 1.0 }
    }

    /// Apply a smooth scalar function with known derivative.
    pub fn map(self, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        let sderiv = if self.sderiv == 0.0 { 0.0 } else { df(self.value) * self.sderiv };
        SmoothedDual { value: f(self.value), sderiv }
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        SmoothedDual { value: e, sderiv: e * self.sderiv }
    }

    pub fn ln(self) -> Self {
        SmoothedDual { value: self.value.ln(), sderiv: self.sderiv / self.value }
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        SmoothedDual { value: s, sderiv: self.sderiv / (2.0 * s) }
    }

    pub fn powi(self, n: i32) -> Self {
        self.map(|x| x.powi(n), |x| f64::from(n) * x.powi(n - 1))
    }

    /// Stop-gradient: same value, zero derivative.
    pub fn frozen(self) -> Self {
        SmoothedDual::constant(self.value)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.sderiv.is_finite()
    }
}

impl Add for SmoothedDual {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        SmoothedDual::new(self.value + rhs.value, self.sderiv + rhs.sderiv)
    }
}

impl Sub for SmoothedDual {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        SmoothedDual::new(self.value - rhs.value, self.sderiv - rhs.sderiv)
    }
}

impl Mul for SmoothedDual {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        SmoothedDual::new(self.value * rhs.value, self.sderiv * rhs.value + self.value * rhs.sderiv)
    }
}

impl Div for SmoothedDual {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = self.value / rhs.value;
        SmoothedDual::new(v, (self.sderiv - v * rhs.sderiv) / rhs.value)
    }
}

impl Neg for SmoothedDual {
    type Output = Self;
    fn neg(self) -> Self {
        SmoothedDual::new(-self.value, -self.sderiv)
    }
}

impl Add<f64> for SmoothedDual {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        SmoothedDual::new(self.value + rhs, self.sderiv)
    }
}

impl Sub<f64> for SmoothedDual {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        SmoothedDual::new(self.value - rhs, self.sderiv)
    }
}

impl Mul<f64> for SmoothedDual {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        SmoothedDual::new(self.value * rhs, self.sderiv * rhs)
    }
}

impl Div<f64> for SmoothedDual {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        SmoothedDual::new(self.value / rhs, self.sderiv / rhs)
    }
}

impl std::iter::Sum for SmoothedDual {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(SmoothedDual::default(), Add::add)
    }
}

/// Which smoothed derivative to attach to a Bernoulli draw.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BernoulliFlavor {
    Right,
    Left,
    /// The mixture `p·left + (1 − p)·right`, identically equal to the input
    /// derivative at either outcome.
    #[default]
    StraightThrough,
}

/// Collapse a (resolved) triple into a smoothed dual by taking its jump at
/// face value. For triples with a single jump alternative this is exactly the
/// conditional expectation.
pub fn smooth_collapse(st: &StochasticTriple, mode: DerivativeMode) -> SmoothedDual {
    SmoothedDual::new(st.value, st.derivative_contribution(mode))
}

/// Smoothed derivative of a Bernoulli draw with outcome `x` and probability
/// `p`.
pub fn smooth_bernoulli(p: SmoothedDual, x: bool, flavor: BernoulliFlavor) -> Result<SmoothedDual> {
    if !(p.value > 0.0 && p.value < 1.0) {
        return Err(Error::Domain(format!("Bernoulli probability {} is not interior", p.value)));
    }
    let sderiv = match flavor {
        BernoulliFlavor::Right if !x => p.sderiv / (1.0 - p.value),
        BernoulliFlavor::Left if x => p.sderiv / p.value,
        BernoulliFlavor::StraightThrough => p.sderiv,
        _ => 0.0,
    };
    Ok(SmoothedDual::new(if x { 1.0 } else { 0.0 }, sderiv))
}

/// Weight factor for a resampled particle: primal value 1, derivative that of
/// the left smoothed Bernoulli at outcome 1, i.e. `p' / p`.
pub fn new_weight(p: SmoothedDual) -> Result<SmoothedDual> {
    if p.value <= 0.0 || !p.value.is_finite() {
        return Err(Error::Domain(format!("resampling probability {} must be positive", p.value)));
    }
    Ok(SmoothedDual::new(1.0, p.sderiv / p.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{discrete_weights, Discrete};
    use crate::rng::RandomStream;
    use crate::triple::{Perturbation, Pruner};
    use approx::assert_abs_diff_eq;

    #[test]
    fn collapse_examples() {
        let mut pruner = Pruner::new(RandomStream::new(0, 0));
        let w = discrete_weights(&Discrete::Bernoulli { p: 0.6 }, 0, DerivativeMode::Right).unwrap();
        let t = pruner.issue(w.w_up).unwrap();
        let ber = StochasticTriple::new(0.0, 0.0, Some(Perturbation::new(1.0, w.w_up, t).unwrap()));
        assert_abs_diff_eq!(smooth_collapse(&ber, DerivativeMode::Right).sderiv, 2.5, epsilon = 1e-12);

        let plain = StochasticTriple::new(5.0, 1.5, None);
        assert_eq!(smooth_collapse(&plain, DerivativeMode::Right), SmoothedDual::new(5.0, 1.5));

        let w = discrete_weights(&Discrete::Geometric { p: 0.5 }, 2, DerivativeMode::Right).unwrap();
        let t = pruner.issue(w.w_down).unwrap();
        let geo = StochasticTriple::new(2.0, 0.0, Some(Perturbation::new(-1.0, w.w_down, t).unwrap()));
        assert_abs_diff_eq!(smooth_collapse(&geo, DerivativeMode::Right).sderiv, -8.0, epsilon = 1e-12);
    }

    #[test]
    fn geometric_collapse_matches_enumeration() {
        // E[smoothed derivative] over the truncated support equals d/dp E[Geo(p)] = −1/p².
        let p = 0.5;
        let dist = Discrete::Geometric { p };
        let expect: f64 = (0..200u64)
            .map(|x| {
                let w = discrete_weights(&dist, x, DerivativeMode::Right).unwrap();
                dist.pmf(x) * w.net()
            })
            .sum();
        let h = 1e-6;
        let fd = ((1.0 - (p + h)) / (p + h) - (1.0 - (p - h)) / (p - h)) / (2.0 * h);
        assert_abs_diff_eq!(expect, fd, epsilon = 1e-5);
    }

    #[test]
    fn bernoulli_flavors() {
        let p = SmoothedDual::input(0.6);
        assert_abs_diff_eq!(smooth_bernoulli(p, true, BernoulliFlavor::Left).unwrap().sderiv, 1.0 / 0.6);
        assert_eq!(smooth_bernoulli(p, false, BernoulliFlavor::Left).unwrap().sderiv, 0.0);
        assert_abs_diff_eq!(smooth_bernoulli(p, false, BernoulliFlavor::Right).unwrap().sderiv, 2.5, epsilon = 1e-12);
        assert_eq!(smooth_bernoulli(p, true, BernoulliFlavor::Right).unwrap().sderiv, 0.0);
        for x in [false, true] {
            let st = smooth_bernoulli(SmoothedDual::new(0.6, 1.7), x, BernoulliFlavor::StraightThrough).unwrap();
            assert_eq!(st.sderiv, 1.7);
        }
        assert!(smooth_bernoulli(SmoothedDual::input(1.0), true, BernoulliFlavor::Left).is_err());
        assert!(smooth_bernoulli(SmoothedDual::input(0.0), true, BernoulliFlavor::Left).is_err());
    }

    #[test]
    fn straight_through_identity_exhaustive() {
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            for flavor in [BernoulliFlavor::Right, BernoulliFlavor::Left, BernoulliFlavor::StraightThrough] {
                let input = SmoothedDual::input(p);
                let e = (1.0 - p) * smooth_bernoulli(input, false, flavor).unwrap().sderiv
                    + p * smooth_bernoulli(input, true, flavor).unwrap().sderiv;
                assert!((e - 1.0).abs() <= 1e-12, "{flavor:?} p={p}: {e}");
            }
        }
    }

    #[test]
    fn new_weight_examples() {
        assert_eq!(new_weight(SmoothedDual::new(0.25, 1.0)).unwrap(), SmoothedDual::new(1.0, 4.0));
        assert_eq!(new_weight(SmoothedDual::new(1.0, 1.0)).unwrap(), SmoothedDual::new(1.0, 1.0));
        assert_eq!(new_weight(SmoothedDual::new(0.25, 0.0)).unwrap(), SmoothedDual::new(1.0, 0.0));
        assert!(new_weight(SmoothedDual::new(0.0, 1.0)).is_err());
        assert!(new_weight(SmoothedDual::new(-0.5, 1.0)).is_err());
    }

    #[test]
    fn new_weight_equals_stop_gradient_ratio() {
        for (v, d) in [(0.25, 1.0), (0.7, -3.0), (0.01, 0.5), (1.0, 0.0)] {
            let p = SmoothedDual::new(v, d);
            let ratio = p / p.frozen();
            let nw = new_weight(p).unwrap();
            assert_abs_diff_eq!(nw.value, ratio.value, epsilon = 1e-15);
            assert_abs_diff_eq!(nw.sderiv, ratio.sderiv, epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_arithmetic_follows_chain_rule() {
        let x = SmoothedDual::input(1.3);
        let y = (x * x + x.exp()) / (x.sqrt() - 0.2);
        let f = |t: f64| (t * t + t.exp()) / (t.sqrt() - 0.2);
        let h = 1e-6;
        let fd = (f(1.3 + h) - f(1.3 - h)) / (2.0 * h);
        assert_abs_diff_eq!(y.value, f(1.3), epsilon = 1e-12);
        assert!((y.sderiv - fd).abs() < 1e-6 * fd.abs());
        let z = x.ln().powi(3);
        assert_abs_diff_eq!(z.sderiv, 3.0 * 1.3f64.ln().powi(2) / 1.3, epsilon = 1e-12);
    }
}
