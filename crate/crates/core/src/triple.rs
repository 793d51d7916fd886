//! Stochastic triples: a primal value, an infinitesimal dual part, and at most
//! one finite perturbation that occurs with infinitesimal probability.
//!
//! A perturbation `(Δ, w, tag)` says that with probability `w·ε` the program
//! takes an alternate path on which this value equals `value + Δ`. The tag
//! names the upstream jump event. All values carrying the same tag live in the
//! same alternate world, so their perturbations compose additively, while
//! perturbations with distinct tags are pruned down to one.
//!
//! Pruning state is shared by the whole evaluation: when tag `b` loses against
//! tag `a`, every value carrying `b` silently drops its perturbation and every
//! value carrying `a` adopts the combined weight. [`TagRegistry`] keeps that
//! state and [`Pruner`] pairs it with the random stream used for the choices.

use std::fmt;

use crate::error::{Error, EvalPath, Result};
use crate::rng::RandomStream;

/// Identifier of an upstream jump event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag(u64);

impl Tag {
    pub fn id(self) -> u64 {
        self.0
    }
}

/// Direction of the one-sided stochastic derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DerivativeMode {
    #[default]
    Right,
    Left,
}

impl DerivativeMode {
    /// Sign of the infinitesimal input perturbation ε.
    pub fn sign(self) -> f64 {
        match self {
            DerivativeMode::Right => 1.0,
            DerivativeMode::Left => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DerivativeMode::Right => DerivativeMode::Left,
            DerivativeMode::Left => DerivativeMode::Right,
        }
    }
}

impl std::str::FromStr for DerivativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(DerivativeMode::Right),
            "left" => Ok(DerivativeMode::Left),
            other => Err(Error::InvalidArgument(format!("unknown derivative mode `{other}`"))),
        }
    }
}

/// A finite change `delta_value` with rate `weight` (a nonnegative magnitude;
/// the sign of ε is carried by [`DerivativeMode`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub delta_value: f64,
    pub weight: f64,
    pub tag: Tag,
}

impl Perturbation {
    pub fn new(delta_value: f64, weight: f64, tag: Tag) -> Result<Self> {
        if !delta_value.is_finite() {
            return Err(Error::Contract(format!("perturbation change {delta_value} is not finite")));
        }
        check_weight(weight)?;
        Ok(Perturbation { delta_value, weight, tag })
    }
}

fn check_weight(weight: f64) -> Result<()> {
    if weight.is_finite() && weight >= 0.0 {
        Ok(())
    } else {
        Err(Error::Contract(format!("perturbation weight {weight} must be finite and nonnegative")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StochasticTriple {
    pub value: f64,
    pub delta: f64,
    pub pert: Option<Perturbation>,
}

impl StochasticTriple {
    pub fn new(value: f64, delta: f64, pert: Option<Perturbation>) -> Self {
        StochasticTriple { value, delta, pert }
    }

    pub fn constant(value: f64) -> Self {
        StochasticTriple { value, delta: 0.0, pert: None }
    }

    /// Collapse into one derivative sample `δ + w·Δ`, with the left-mode sign
    /// applied so the result always estimates the ordinary derivative.
    ///
    /// The perturbation is taken at face value; use
    /// [`Pruner::resolve_triple`] first when the triple came out of a traced
    /// evaluation.
    pub fn derivative_contribution(&self, mode: DerivativeMode) -> f64 {
        let jump = self.pert.map_or(0.0, |p| p.weight * p.delta_value);
        self.delta + mode.sign() * jump
    }

    /// Value on the alternate path selected by `tag`.
    pub(crate) fn alternate(&self, survivor: Option<Tag>) -> f64 {
        match (self.pert, survivor) {
            (Some(p), Some(t)) if p.tag == t => self.value + p.delta_value,
            _ => self.value,
        }
    }
}

impl fmt::Display for StochasticTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.value, self.delta)?;
        if let Some(p) = self.pert {
            write!(f, " + ({} with probability {}ε)", p.delta_value, p.weight)?;
        }
        Ok(())
    }
}

/// Seed a program input: the triple `p + 1ε`.
pub fn make_input(p: f64) -> Result<StochasticTriple> {
    if !p.is_finite() {
        return Err(Error::NonFinite(format!("input parameter {p}")));
    }
    Ok(StochasticTriple { value: p, delta: 1.0, pert: None })
}

/// Push a triple through a smooth scalar function `f` with derivative `df`.
///
/// The dual part follows the chain rule; the perturbation is mapped exactly
/// to `f(x + Δ) − f(x)` and keeps its weight and tag.
pub fn lift_smooth(st: &StochasticTriple, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<StochasticTriple> {
    let value = f(st.value);
    if !value.is_finite() {
        return Err(Error::Evaluation { path: EvalPath::Primal, what: format!("f({})", st.value) });
    }
    let delta = if st.delta == 0.0 { 0.0 } else { df(st.value) * st.delta };
    if !delta.is_finite() {
        return Err(Error::Evaluation { path: EvalPath::Primal, what: format!("f'({})", st.value) });
    }
    let pert = match st.pert {
        Some(p) => {
            let x_alt = st.value + p.delta_value;
            let alt = f(x_alt);
            if !alt.is_finite() {
                return Err(Error::Evaluation { path: EvalPath::Alternate, what: format!("f({x_alt})") });
            }
            Some(Perturbation { delta_value: alt - value, ..p })
        }
        None => None,
    };
    Ok(StochasticTriple { value, delta, pert })
}

/// Binary counterpart of [`lift_smooth`]. `survivor` is the tag of the
/// alternate world both operands have been reconciled to (see
/// [`Pruner::unify`]).
pub(crate) fn lift_binary(
    a: &StochasticTriple,
    b: &StochasticTriple,
    survivor: Option<(Tag, f64)>,
    f: impl Fn(f64, f64) -> f64,
    grad: impl Fn(f64, f64) -> (f64, f64),
) -> Result<StochasticTriple> {
    let value = f(a.value, b.value);
    if !value.is_finite() {
        return Err(Error::Evaluation { path: EvalPath::Primal, what: format!("f({}, {})", a.value, b.value) });
    }
    let delta = if a.delta == 0.0 && b.delta == 0.0 {
        0.0
    } else {
        let (ga, gb) = grad(a.value, b.value);
        let da = if a.delta == 0.0 { 0.0 } else { ga * a.delta };
        let db = if b.delta == 0.0 { 0.0 } else { gb * b.delta };
        da + db
    };
    if !delta.is_finite() {
        return Err(Error::Evaluation {
            path: EvalPath::Primal,
            what: format!("gradient at ({}, {})", a.value, b.value),
        });
    }
    let pert = match survivor {
        Some((tag, weight)) => {
            let (xa, xb) = (a.alternate(Some(tag)), b.alternate(Some(tag)));
            let alt = f(xa, xb);
            if !alt.is_finite() {
                return Err(Error::Evaluation { path: EvalPath::Alternate, what: format!("f({xa}, {xb})") });
            }
            Some(Perturbation { delta_value: alt - value, weight, tag })
        }
        None => None,
    };
    Ok(StochasticTriple { value, delta, pert })
}

/// Per-evaluation table of issued tags: the current weight of each live jump
/// event, or `None` once it has been pruned.
#[derive(Clone, Debug, Default)]
pub struct TagRegistry {
    weights: Vec<Option<f64>>,
}

impl TagRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocate a never-before-issued tag for a jump with rate `weight`.
    pub fn issue(&mut self, weight: f64) -> Result<Tag> {
        check_weight(weight)?;
        self.weights.push(Some(weight));
        Ok(Tag(self.weights.len() as u64 - 1))
    }

    pub fn issued(&self) -> usize {
        self.weights.len()
    }

    /// Current weight, or `None` if pruned.
    pub fn weight(&self, tag: Tag) -> Result<Option<f64>> {
        self.weights
            .get(tag.0 as usize)
            .copied()
            .ok_or_else(|| Error::Contract(format!("tag {} was never issued", tag.0)))
    }

    pub fn is_live(&self, tag: Tag) -> bool {
        matches!(self.weight(tag), Ok(Some(_)))
    }

    fn set(&mut self, tag: Tag, weight: Option<f64>) {
        self.weights[tag.0 as usize] = weight;
    }
}

/// The two possible results of pruning `a` against `b`, each with its
/// selection probability. Both carry the combined weight.
pub fn pruning_outcomes(a: &Perturbation, b: &Perturbation) -> Result<[(Perturbation, f64); 2]> {
    check_weight(a.weight)?;
    check_weight(b.weight)?;
    let total = a.weight + b.weight;
    if total == 0.0 {
        return Ok([(Perturbation { weight: 0.0, ..*a }, 0.0), (Perturbation { weight: 0.0, ..*b }, 0.0)]);
    }
    Ok([
        (Perturbation { weight: total, ..*a }, a.weight / total),
        (Perturbation { weight: total, ..*b }, b.weight / total),
    ])
}

/// Tag registry plus the random stream that drives pruning decisions.
#[derive(Clone, Debug)]
pub struct Pruner {
    registry: TagRegistry,
    rng: RandomStream,
}

impl Pruner {
    pub fn new(rng: RandomStream) -> Self {
        Pruner { registry: TagRegistry::new(), rng }
    }

    pub fn registry(&self) -> &TagRegistry {
        &self.registry
    }

    pub fn issue(&mut self, weight: f64) -> Result<Tag> {
        self.registry.issue(weight)
    }

    /// A uniform draw from the pruning stream, for auxiliary choices that must
    /// not disturb the sampling stream.
    pub fn coin(&mut self) -> f64 {
        self.rng.uniform().get()
    }

    /// Refresh a perturbation against the registry: drop it if its event was
    /// pruned, otherwise adopt the event's current weight.
    pub fn resolve(&self, pert: Option<Perturbation>) -> Result<Option<Perturbation>> {
        match pert {
            None => Ok(None),
            Some(p) => Ok(self.registry.weight(p.tag)?.map(|weight| Perturbation { weight, ..p })),
        }
    }

    pub fn resolve_triple(&self, st: &StochasticTriple) -> Result<StochasticTriple> {
        Ok(StochasticTriple { pert: self.resolve(st.pert)?, ..*st })
    }

    /// Reconcile the alternate worlds of several perturbations into one.
    ///
    /// Live tags are merged online in order of appearance: each newcomer is
    /// kept with probability proportional to its weight, the loser is marked
    /// pruned, and the survivor takes the summed weight. Returns the surviving
    /// tag and its weight.
    pub fn unify<'a>(
        &mut self,
        perts: impl IntoIterator<Item = Option<&'a Perturbation>>,
    ) -> Result<Option<(Tag, f64)>> {
        let mut survivor: Option<(Tag, f64)> = None;
        for p in perts.into_iter().flatten() {
            let Some(weight) = self.registry.weight(p.tag)? else { continue };
            survivor = match survivor {
                None => Some((p.tag, weight)),
                Some((tag, _)) if tag == p.tag => survivor,
                Some((tag, w_kept)) => {
                    let total = w_kept + weight;
                    if total == 0.0 {
                        self.registry.set(tag, None);
                        self.registry.set(p.tag, None);
                        None
                    } else {
                        let coin = self.rng.uniform().get() * total;
                        let (keep, drop) = if coin < w_kept { (tag, p.tag) } else { (p.tag, tag) };
                        self.registry.set(drop, None);
                        self.registry.set(keep, Some(total));
                        Some((keep, total))
                    }
                }
            };
        }
        Ok(survivor)
    }
}

/// Merge two perturbation slots into one.
///
/// Equal tags are the same jump and add; distinct live tags are pruned by
/// weight, the survivor carrying `w_a + w_b`. A combined weight of zero
/// yields no perturbation.
pub fn combine_perturbations(
    a: Option<Perturbation>,
    b: Option<Perturbation>,
    pruner: &mut Pruner,
) -> Result<Option<Perturbation>> {
    for p in a.iter().chain(b.iter()) {
        check_weight(p.weight)?;
    }
    let (a, b) = (pruner.resolve(a)?, pruner.resolve(b)?);
    let survivor = pruner.unify([a.as_ref(), b.as_ref()])?;
    Ok(survivor.map(|(tag, weight)| {
        let pick = |p: Option<Perturbation>| p.filter(|p| p.tag == tag).map_or(0.0, |p| p.delta_value);
        Perturbation { delta_value: pick(a) + pick(b), weight, tag }
    }))
}

/// Look up `values[idx]` where the index is an integer-valued triple.
///
/// If the index carries a perturbation, the result's perturbation points at
/// the element under the alternate index. Perturbations already on the
/// primal element are reconciled with it by pruning.
pub fn index_array(
    values: &[StochasticTriple],
    idx: &StochasticTriple,
    pruner: &mut Pruner,
) -> Result<StochasticTriple> {
    if idx.delta != 0.0 {
        return Err(Error::Contract(format!("integer index carries an infinitesimal part {}", idx.delta)));
    }
    let primal = checked_index(idx.value, values.len(), EvalPath::Primal)?;
    let idx_pert = pruner.resolve(idx.pert)?;
    let elem = pruner.resolve_triple(&values[primal])?;
    let survivor = pruner.unify([idx_pert.as_ref(), elem.pert.as_ref()])?;
    let pert = match survivor {
        None => None,
        Some((tag, weight)) => {
            let alt_value = match idx_pert {
                Some(p) if p.tag == tag => {
                    let alt = checked_index(idx.value + p.delta_value, values.len(), EvalPath::Alternate)?;
                    let target = pruner.resolve_triple(&values[alt])?;
                    target.alternate(Some(tag))
                }
                _ => elem.alternate(Some(tag)),
            };
            Some(Perturbation { delta_value: alt_value - elem.value, weight, tag })
        }
    };
    Ok(StochasticTriple { value: elem.value, delta: elem.delta, pert })
}

pub(crate) fn checked_index(x: f64, len: usize, path: EvalPath) -> Result<usize> {
    if x.fract() != 0.0 || !x.is_finite() {
        return Err(Error::Contract(format!("index {x} on the {path} path is not an integer")));
    }
    if x < 0.0 || x >= len as f64 {
        return Err(Error::Index { path, index: x as i64, len });
    }
    Ok(x as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pruner() -> Pruner {
        Pruner::new(RandomStream::new(0, 1))
    }

    #[test]
    fn make_input_seeds_unit_dual() {
        assert_eq!(make_input(0.6).unwrap(), StochasticTriple::new(0.6, 1.0, None));
        assert_eq!(make_input(0.0).unwrap(), StochasticTriple::new(0.0, 1.0, None));
        assert_eq!(make_input(-3.5).unwrap(), StochasticTriple::new(-3.5, 1.0, None));
        assert!(matches!(make_input(f64::NAN), Err(Error::NonFinite(_))));
        assert!(make_input(f64::INFINITY).is_err());
    }

    #[test]
    fn square_of_input() {
        let st = lift_smooth(&make_input(0.6).unwrap(), |x| x * x, |x| 2.0 * x).unwrap();
        assert_abs_diff_eq!(st.value, 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(st.delta, 1.2, epsilon = 1e-15);
        assert!(st.pert.is_none());
    }

    #[test]
    fn cube_maps_perturbation_exactly() {
        let mut p = pruner();
        let tag = p.issue(8.0).unwrap();
        let st = StochasticTriple::new(2.0, 0.0, Some(Perturbation::new(-1.0, 8.0, tag).unwrap()));
        let out = lift_smooth(&st, |x| x.powi(3), |x| 3.0 * x * x).unwrap();
        assert_eq!(out.value, 8.0);
        assert_eq!(out.delta, 0.0);
        let pert = out.pert.unwrap();
        // brute force: (2 - 1)^3 - 2^3
        assert_eq!(pert.delta_value, 1.0f64.powi(3) - 2.0f64.powi(3));
        assert_eq!((pert.weight, pert.tag), (8.0, tag));
    }

    #[test]
    fn identity_lift_is_noop() {
        let mut p = pruner();
        let tag = p.issue(3.0).unwrap();
        let st = StochasticTriple::new(1.5, -2.0, Some(Perturbation::new(4.0, 3.0, tag).unwrap()));
        assert_eq!(lift_smooth(&st, |x| x, |_| 1.0).unwrap(), st);
    }

    #[test]
    fn lift_reports_failing_path() {
        let mut p = pruner();
        let tag = p.issue(1.0).unwrap();
        let st = StochasticTriple::new(1.0, 1.0, Some(Perturbation::new(-1.0, 1.0, tag).unwrap()));
        let err = lift_smooth(&st, |x| 1.0 / x, |x| -1.0 / (x * x)).unwrap_err();
        assert!(matches!(err, Error::Evaluation { path: EvalPath::Alternate, .. }));
        let err = lift_smooth(&StochasticTriple::constant(-1.0), f64::ln, |x| 1.0 / x).unwrap_err();
        assert!(matches!(err, Error::Evaluation { path: EvalPath::Primal, .. }));
    }

    #[test]
    fn combine_with_absent_is_identity() {
        let mut p = pruner();
        let t1 = p.issue(5.0).unwrap();
        let a = Perturbation::new(1.0, 5.0, t1).unwrap();
        assert_eq!(combine_perturbations(Some(a), None, &mut p).unwrap(), Some(a));
        assert_eq!(combine_perturbations(None, Some(a), &mut p).unwrap(), Some(a));
        assert_eq!(combine_perturbations(None, None, &mut p).unwrap(), None);
    }

    #[test]
    fn coupled_jumps_add() {
        let mut p = pruner();
        let t1 = p.issue(4.0).unwrap();
        let a = Perturbation::new(1.0, 4.0, t1).unwrap();
        let b = Perturbation::new(2.0, 4.0, t1).unwrap();
        let c = combine_perturbations(Some(a), Some(b), &mut p).unwrap().unwrap();
        assert_eq!(c, Perturbation::new(3.0, 4.0, t1).unwrap());
    }

    #[test]
    fn pruning_outcome_probabilities() {
        let mut p = pruner();
        let t1 = p.issue(10.0).unwrap();
        let t2 = p.issue(2.5).unwrap();
        let a = Perturbation::new(2.0, 10.0, t1).unwrap();
        let b = Perturbation::new(3.0, 2.5, t2).unwrap();
        let [(pa, qa), (pb, qb)] = pruning_outcomes(&a, &b).unwrap();
        assert_eq!((pa.weight, pb.weight), (12.5, 12.5));
        assert_abs_diff_eq!(qa, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(qb, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn pruning_frequency_matches_weights() {
        let mut picks = 0usize;
        let trials = 20_000;
        for s in 0..trials {
            let mut p = Pruner::new(RandomStream::new(11, s));
            let t1 = p.issue(10.0).unwrap();
            let t2 = p.issue(2.5).unwrap();
            let a = Perturbation::new(2.0, 10.0, t1).unwrap();
            let b = Perturbation::new(3.0, 2.5, t2).unwrap();
            let c = combine_perturbations(Some(a), Some(b), &mut p).unwrap().unwrap();
            assert_eq!(c.weight, 12.5);
            if c.tag == t2 {
                assert_eq!(c.delta_value, 3.0);
                assert!(!p.registry().is_live(t1));
                picks += 1;
            } else {
                assert!(!p.registry().is_live(t2));
            }
        }
        let frac = picks as f64 / trials as f64;
        // binomial sd = sqrt(0.2 * 0.8 / 20000) ≈ 0.0028
        assert!((frac - 0.2).abs() < 0.012, "{frac}");
    }

    #[test]
    fn pruned_tags_vanish_and_survivors_reweight() {
        let mut p = pruner();
        let t1 = p.issue(1.0).unwrap();
        let t2 = p.issue(3.0).unwrap();
        let a = Perturbation::new(1.0, 1.0, t1).unwrap();
        let b = Perturbation::new(1.0, 3.0, t2).unwrap();
        let c = combine_perturbations(Some(a), Some(b), &mut p).unwrap().unwrap();
        let (kept, lost) = if c.tag == t1 { (a, b) } else { (b, a) };
        assert_eq!(p.resolve(Some(lost)).unwrap(), None);
        assert_eq!(p.resolve(Some(kept)).unwrap().unwrap().weight, 4.0);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let mut p = pruner();
        let t1 = p.issue(1.0).unwrap();
        let bad = Perturbation { delta_value: 1.0, weight: -1.0, tag: t1 };
        assert!(matches!(combine_perturbations(Some(bad), None, &mut p), Err(Error::Contract(_))));
        assert!(Perturbation::new(1.0, -0.5, t1).is_err());
        assert!(p.issue(-2.0).is_err());
    }

    #[test]
    fn tags_are_fresh() {
        let mut p = pruner();
        let tags: Vec<Tag> = (0..5).map(|_| p.issue(1.0).unwrap()).collect();
        for w in tags.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(p.registry().issued(), 5);
    }

    #[test]
    fn contribution_examples() {
        let mut p = pruner();
        let t = p.issue(10.0).unwrap();
        let st = StochasticTriple::new(3.0, 2.0, Some(Perturbation::new(1.0, 10.0, t).unwrap()));
        assert_eq!(st.derivative_contribution(DerivativeMode::Right), 12.0);
        assert_eq!(st.derivative_contribution(DerivativeMode::Left), -8.0);

        let t = p.issue(12.5).unwrap();
        let st = StochasticTriple::new(27.11, 94.32, Some(Perturbation::new(6.78, 12.5, t).unwrap()));
        assert_abs_diff_eq!(st.derivative_contribution(DerivativeMode::Right), 179.07, epsilon = 1e-9);

        assert_eq!(StochasticTriple::new(5.0, 1.5, None).derivative_contribution(DerivativeMode::Right), 1.5);
    }

    #[test]
    fn index_plain_and_perturbed() {
        let mut p = pruner();
        let values: Vec<StochasticTriple> = [10.0, 20.0, 30.0].map(StochasticTriple::constant).to_vec();
        let plain = index_array(&values, &StochasticTriple::constant(1.0), &mut p).unwrap();
        assert_eq!(plain, StochasticTriple::constant(20.0));

        let t = p.issue(2.5).unwrap();
        let idx = StochasticTriple::new(1.0, 0.0, Some(Perturbation::new(1.0, 2.5, t).unwrap()));
        let out = index_array(&values, &idx, &mut p).unwrap();
        assert_eq!(out, StochasticTriple::new(20.0, 0.0, Some(Perturbation::new(10.0, 2.5, t).unwrap())));
    }

    #[test]
    fn index_into_dual_elements() {
        let mut p = pruner();
        let values = vec![StochasticTriple::new(10.0, 1.0, None), StochasticTriple::new(20.0, 2.0, None)];
        let t = p.issue(3.0).unwrap();
        let idx = StochasticTriple::new(0.0, 0.0, Some(Perturbation::new(1.0, 3.0, t).unwrap()));
        let out = index_array(&values, &idx, &mut p).unwrap();
        // alternate path evaluates the whole lookup at index 1: 20 - 10
        assert_eq!(out, StochasticTriple::new(10.0, 1.0, Some(Perturbation::new(10.0, 3.0, t).unwrap())));
    }

    #[test]
    fn index_errors() {
        let mut p = pruner();
        let values: Vec<StochasticTriple> = [1.0, 2.0].map(StochasticTriple::constant).to_vec();
        let err = index_array(&values, &StochasticTriple::constant(2.0), &mut p).unwrap_err();
        assert!(matches!(err, Error::Index { path: EvalPath::Primal, .. }));

        let t = p.issue(1.0).unwrap();
        let idx = StochasticTriple::new(1.0, 0.0, Some(Perturbation::new(1.0, 1.0, t).unwrap()));
        let err = index_array(&values, &idx, &mut p).unwrap_err();
        assert!(matches!(err, Error::Index { path: EvalPath::Alternate, index: 2, .. }));

        let err = index_array(&values, &StochasticTriple::new(0.0, 1.0, None), &mut p).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn display_matches_printout_style() {
        let mut p = pruner();
        let t = p.issue(10.0).unwrap();
        let st = StochasticTriple::new(6.0, 0.0, Some(Perturbation::new(1.0, 10.0, t).unwrap()));
        assert_eq!(st.to_string(), "6 + 0ε + (1 with probability 10ε)");
    }
}
