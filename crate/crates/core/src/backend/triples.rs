use crate::backend::Backend;
use crate::dist::{
    categorical_quantile, categorical_weights, discrete_weights, inversion_quantile, ContinuousFamily, DiscreteFamily,
    DistWeights,
};
use crate::error::{Error, Result};
use crate::rng::{RandomStream, ReplicateStreams, UniformDraw};
use crate::triple::{
    combine_perturbations, index_array, lift_binary, lift_smooth, DerivativeMode, Perturbation, Pruner,
    StochasticTriple,
};

/// Runs a program on stochastic triples.
///
/// Holds the per-evaluation state: the sampling stream, the tag registry and
/// pruning stream, and the derivative direction.
#[derive(Clone, Debug)]
pub struct TripleTracer {
    sampling: RandomStream,
    pruner: Pruner,
    mode: DerivativeMode,
}

impl TripleTracer {
    pub fn new(sampling: RandomStream, pruning: RandomStream, mode: DerivativeMode) -> Self {
        TripleTracer { sampling, pruner: Pruner::new(pruning), mode }
    }

    pub fn for_replicate(streams: ReplicateStreams, mode: DerivativeMode) -> Self {
        Self::new(streams.sampling(), streams.pruning(), mode)
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn pruner(&self) -> &Pruner {
        &self.pruner
    }

    pub fn pruner_mut(&mut self) -> &mut Pruner {
        &mut self.pruner
    }

    /// Bring a triple up to date with all pruning decisions made so far.
    pub fn resolve(&self, st: &StochasticTriple) -> Result<StochasticTriple> {
        self.pruner.resolve_triple(st)
    }

    /// One derivative sample from a program output.
    pub fn derivative_contribution(&self, st: &StochasticTriple) -> Result<f64> {
        Ok(self.resolve(st)?.derivative_contribution(self.mode))
    }
}

fn on_alternate(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{m} (alternate path)")),
        e => e,
    }
}

/// Draw a fresh jump direction: `+1` with probability `w_up / total`.
fn jump_direction(w: &DistWeights, pruner: &mut Pruner) -> f64 {
    if w.w_down == 0.0 {
        1.0
    } else if w.w_up == 0.0 {
        -1.0
    } else if pruner.coin() * w.total() < w.w_up {
        1.0
    } else {
        -1.0
    }
}

/// Sample an integer family whose parameter is a triple, at the draw `u`.
///
/// The primal outcome comes from inversion at the primal parameter. A
/// perturbation on the parameter is carried to the outcome by inverting at the
/// alternate parameter with the same `u` (same tag, same weight). The
/// parameter's dual part opens a new jump with weight `|δ|·(w_down + w_up)`,
/// looked up in the direction `sign(δ)·mode`. Both are merged by pruning.
pub fn sample_discrete(
    family: DiscreteFamily,
    param: &StochasticTriple,
    u: UniformDraw,
    mode: DerivativeMode,
    pruner: &mut Pruner,
) -> Result<StochasticTriple> {
    let theta = pruner.resolve_triple(param)?;
    if !theta.value.is_finite() || !theta.delta.is_finite() {
        return Err(Error::NonFinite(format!("distribution parameter {theta}")));
    }
    let dist = family.at(theta.value);
    let x = inversion_quantile(&dist, u)?;
    let mut pert = match theta.pert {
        Some(pp) => {
            let alt = inversion_quantile(&family.at(theta.value + pp.delta_value), u).map_err(on_alternate)?;
            Some(Perturbation { delta_value: alt as f64 - x as f64, ..pp })
        }
        None => None,
    };
    if theta.delta != 0.0 {
        let dir = if theta.delta > 0.0 { mode } else { mode.flipped() };
        let w = discrete_weights(&dist, x, dir)?;
        let total = theta.delta.abs() * w.total();
        if total > 0.0 {
            let step = jump_direction(&w, pruner);
            let tag = pruner.issue(total)?;
            pert = combine_perturbations(pert, Some(Perturbation::new(step, total, tag)?), pruner)?;
        }
    }
    Ok(StochasticTriple { value: x as f64, delta: 0.0, pert })
}

/// Categorical draw over `outputs` whose probabilities are triples; the
/// probabilities' dual parts act as their parameter derivatives.
pub fn sample_categorical(
    probs: &[StochasticTriple],
    outputs: &[f64],
    u: UniformDraw,
    mode: DerivativeMode,
    pruner: &mut Pruner,
) -> Result<StochasticTriple> {
    if probs.len() != outputs.len() {
        return Err(Error::Contract("categorical probabilities and outputs differ in length".into()));
    }
    let probs = probs.iter().map(|p| pruner.resolve_triple(p)).collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = probs.iter().map(|p| p.value).collect();
    let deltas: Vec<f64> = probs.iter().map(|p| p.delta).collect();
    let x = categorical_quantile(&values, u)?;

    let survivor = pruner.unify(probs.iter().map(|p| p.pert.as_ref()))?;
    let mut pert = match survivor {
        Some((tag, weight)) => {
            let alt: Vec<f64> = probs.iter().map(|p| p.alternate(Some(tag))).collect();
            let x_alt = categorical_quantile(&alt, u).map_err(on_alternate)?;
            Some(Perturbation { delta_value: outputs[x_alt] - outputs[x], weight, tag })
        }
        None => None,
    };
    let w = categorical_weights(&values, &deltas, x, mode)?;
    if w.total() > 0.0 {
        let target = if jump_direction(&w, pruner) > 0.0 { x + 1 } else { x - 1 };
        let tag = pruner.issue(w.total())?;
        let fresh = Perturbation::new(outputs[target] - outputs[x], w.total(), tag)?;
        pert = combine_perturbations(pert, Some(fresh), pruner)?;
    }
    Ok(StochasticTriple { value: outputs[x], delta: 0.0, pert })
}

/// Reparameterized continuous draw at the open-interval draw `u`. Parameter
/// perturbations move the sample along the same draw; no new jump is created.
pub fn sample_continuous(
    family: ContinuousFamily,
    a: &StochasticTriple,
    b: &StochasticTriple,
    u: f64,
    pruner: &mut Pruner,
) -> Result<StochasticTriple> {
    let a = pruner.resolve_triple(a)?;
    let b = pruner.resolve_triple(b)?;
    let (x, grad) = family.at(a.value, b.value).sample_at(u)?;
    let da = if a.delta == 0.0 { 0.0 } else { grad[0] * a.delta };
    let db = if b.delta == 0.0 { 0.0 } else { grad[1] * b.delta };
    let survivor = pruner.unify([a.pert.as_ref(), b.pert.as_ref()])?;
    let pert = match survivor {
        Some((tag, weight)) => {
            let (x_alt, _) =
                family.at(a.alternate(Some(tag)), b.alternate(Some(tag))).sample_at(u).map_err(on_alternate)?;
            Some(Perturbation { delta_value: x_alt - x, weight, tag })
        }
        None => None,
    };
    Ok(StochasticTriple { value: x, delta: da + db, pert })
}

impl Backend for TripleTracer {
    type Value = StochasticTriple;

    fn constant(&mut self, c: f64) -> StochasticTriple {
        StochasticTriple::constant(c)
    }

    fn primal(&self, v: &StochasticTriple) -> f64 {
        v.value
    }

    fn unary(
        &mut self,
        x: &StochasticTriple,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<StochasticTriple> {
        lift_smooth(&self.resolve(x)?, f, df)
    }

    fn binary(
        &mut self,
        a: &StochasticTriple,
        b: &StochasticTriple,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<StochasticTriple> {
        let (a, b) = (self.resolve(a)?, self.resolve(b)?);
        let survivor = self.pruner.unify([a.pert.as_ref(), b.pert.as_ref()])?;
        lift_binary(&a, &b, survivor, f, grad)
    }

    fn discrete(&mut self, family: DiscreteFamily, param: &StochasticTriple) -> Result<StochasticTriple> {
        let u = self.sampling.uniform();
        sample_discrete(family, param, u, self.mode, &mut self.pruner)
    }

    fn categorical(&mut self, probs: &[StochasticTriple], outputs: &[f64]) -> Result<StochasticTriple> {
        let u = self.sampling.uniform();
        sample_categorical(probs, outputs, u, self.mode, &mut self.pruner)
    }

    fn continuous(
        &mut self,
        family: ContinuousFamily,
        a: &StochasticTriple,
        b: &StochasticTriple,
    ) -> Result<StochasticTriple> {
        let u = self.sampling.uniform_open();
        sample_continuous(family, a, b, u, &mut self.pruner)
    }

    fn index(&mut self, values: &[StochasticTriple], idx: &StochasticTriple) -> Result<StochasticTriple> {
        index_array(values, idx, &mut self.pruner)
    }

    fn condition(&mut self, v: &StochasticTriple) -> Result<bool> {
        let v = self.resolve(v)?;
        if v.delta != 0.0 || v.pert.is_some() {
            return Err(Error::Unsupported(
                "branching on a value that carries derivative information; express the choice with \
                 arithmetic or array indexing instead"
                    .into(),
            ));
        }
        Ok(v.value != 0.0)
    }
}
