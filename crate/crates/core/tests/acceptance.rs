//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every line is printed whether it passes or not; the process
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use stochad::dist::{discrete_weights, Discrete, DiscreteFamily};
use stochad::estimators::{
    estimate_mean, estimate_smoothed_mean, finite_difference, score_function, score_function_with, ControlVariate,
    Coupling, RunOptions, Welford,
};
use stochad::experiments::{
    geometric_cube_derivative, kalman_loglik_and_grad, particle_filter_gradient, simulate_hmm, toy_exact_derivative,
    walk_score_trace, DistDraw, GeometricCube, HmmConfig, Life, LifeConfig, Toy, TwoStepWalk, WalkConfig,
};
use stochad::report::strip_metadata;
use stochad::rng::ReplicateStreams;
use stochad::smoothing::{smooth_bernoulli, BernoulliFlavor, SmoothedDual};
use stochad::triple::{pruning_outcomes, DerivativeMode, Perturbation, Pruner, TagRegistry};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn opts(samples: u64) -> RunOptions {
    RunOptions::new(SEED, samples).with_threads(0)
}

fn exact_weight_identities() -> Outcome {
    let cases = [
        (Discrete::Bernoulli { p: 0.6 }, 1.0),
        (Discrete::Binomial { n: 10, p: 0.6 }, 10.0),
        (Discrete::Geometric { p: 0.5 }, -4.0),
        (Discrete::Poisson { rate: 2.0 }, 1.0),
    ];
    let mut worst = 0.0f64;
    for (dist, target) in cases {
        let (mut total, mut mass, mut x) = (0.0, 0.0, 0u64);
        while mass < 1.0 - 1e-12 && dist.in_support(x) {
            let w = discrete_weights(&dist, x, DerivativeMode::Right).expect("interior parameter");
            total += dist.pmf(x) * w.net();
            mass += dist.pmf(x);
            x += 1;
        }
        worst = worst.max((total - target).abs());
    }
    outcome(worst < 1e-10, format!("max |error| {worst:.2e} (tol 1e-10)"))
}

fn pruning_micro_unbiasedness() -> Outcome {
    let deltas = [-3.0, -0.5, 0.0, 1.0, 2.5, 7.0];
    let weights = [0.0, 1e-3, 0.4, 1.0, 3.0, 250.0];
    let mut registry = TagRegistry::new();
    let (ta, tb) = (registry.issue(1.0).unwrap(), registry.issue(1.0).unwrap());
    let mut worst = 0.0f64;
    for &da in &deltas {
        for &db in &deltas {
            for &wa in &weights {
                for &wb in &weights {
                    let a = Perturbation::new(da, wa, ta).unwrap();
                    let b = Perturbation::new(db, wb, tb).unwrap();
                    let expect: f64 = pruning_outcomes(&a, &b)
                        .unwrap()
                        .iter()
                        .map(|(kept, prob)| prob * kept.weight * kept.delta_value)
                        .sum();
                    let target = wa * da + wb * db;
                    worst = worst.max((expect - target).abs() / target.abs().max(1.0));
                }
            }
        }
    }
    // the online pruner must select with the same probabilities
    let (mut kept_a, trials) = (0u32, 20_000u32);
    for r in 0..trials {
        let mut pruner = Pruner::new(ReplicateStreams::new(SEED, r as u64).pruning());
        let a = Perturbation::new(1.0, 1.0, pruner.issue(1.0).unwrap()).unwrap();
        let b = Perturbation::new(2.0, 3.0, pruner.issue(3.0).unwrap()).unwrap();
        let (tag, w) = pruner.unify([Some(&a), Some(&b)]).unwrap().unwrap();
        assert_eq!(w, 4.0);
        kept_a += u32::from(tag == a.tag);
    }
    let freq = kept_a as f64 / trials as f64;
    let se = (0.25 * 0.75 / trials as f64).sqrt();
    let pass = worst < 1e-12 && (freq - 0.25).abs() < 4.0 * se;
    outcome(pass, format!("max rel error {worst:.2e} (tol 1e-12); online keep rate {freq:.4} vs 0.25"))
}

fn toy_program() -> Outcome {
    let s = estimate_mean(&Toy, 0.6, opts(100_000), DerivativeMode::Right).unwrap();
    let tol = (3.0 * s.stderr).max(1.0);
    let pass = (s.mean - 204.63).abs() <= tol;
    outcome(
        pass,
        format!(
            "mean {:.3} ± {:.3} vs 204.63 ± {tol:.3}; exact derivative 60p²+840p³ = {:.3}",
            s.mean,
            s.stderr,
            toy_exact_derivative(0.6)
        ),
    )
}

fn two_step_walk() -> Outcome {
    // E = 2p + p² by enumeration of the four outcomes
    let target = 2.0 + 2.0 * 0.2;
    let s = estimate_mean(&TwoStepWalk, 0.2, opts(100_000), DerivativeMode::Right).unwrap();
    let pass = (s.mean - target).abs() <= 3.0 * s.stderr;
    outcome(pass, format!("mean {:.4} ± {:.4} vs {target}", s.mean, s.stderr))
}

fn binomial_variance_scaling() -> Outcome {
    let ratio = |n: u64| {
        let prog = DistDraw(DiscreteFamily::Binomial { n });
        let t = estimate_mean(&prog, 0.6, opts(100_000), DerivativeMode::Right).unwrap();
        let s = score_function(&prog, 0.6, opts(100_000), ControlVariate::None).unwrap();
        s.variance / t.variance
    };
    let (small, large) = (ratio(10), ratio(1000));
    let growth = large / small;
    outcome(
        growth >= 500.0,
        format!("score/triple variance ratio {small:.1} -> {large:.1}, growth {growth:.0} (need >= 500)"),
    )
}

fn walk_variance_ordering() -> Outcome {
    let mut pass = true;
    let mut prev = 0.0;
    let mut parts = Vec::new();
    for n in [10u32, 50, 100] {
        let cfg = WalkConfig::new(n, f64::from(n)).unwrap();
        let o = opts(10_000);
        let t = estimate_mean(&cfg.program(), cfg.p, o, DerivativeMode::Right).unwrap().variance;
        let cv = score_function_with(o, ControlVariate::BatchMean, |s| walk_score_trace(&cfg, s)).unwrap().variance;
        let sc = score_function_with(o, ControlVariate::None, |s| walk_score_trace(&cfg, s)).unwrap().variance;
        let ratio = sc / t;
        pass &= t < cv && cv < sc && ratio > prev;
        prev = ratio;
        parts.push(format!("n={n}: {t:.1} < {cv:.1} < {sc:.1}"));
    }
    outcome(pass, parts.join("; "))
}

fn geometric_cube_bias() -> Outcome {
    let p = 0.01;
    let exact = geometric_cube_derivative(p);
    let s =
        estimate_smoothed_mean(&GeometricCube, p, opts(10_000_000), DerivativeMode::Right, BernoulliFlavor::default())
            .unwrap();
    let rel = (s.mean - exact).abs() / exact.abs();
    let rel_se = s.stderr / exact.abs();
    outcome(rel < 0.005 + 3.0 * rel_se, format!("relative bias {rel:.5} vs 0.005 + 3·{rel_se:.5} (exact {exact:.6e})"))
}

fn life_unbiasedness() -> Outcome {
    let life = Life { cfg: LifeConfig::new(9, 5).unwrap() };
    let o = opts(20_000);
    let t = estimate_mean(&life, 0.3, o, DerivativeMode::Right).unwrap();
    let fd = finite_difference(&life, 0.3, 0.02, o, Coupling::Common).unwrap();
    let z = 1.959964;
    let overlap = (t.mean - fd.mean).abs() <= z * (t.stderr + fd.stderr);
    outcome(
        overlap,
        format!("triple {:.2} ± {:.2}, central FD {:.2} ± {:.2}", t.mean, z * t.stderr, fd.mean, z * fd.stderr),
    )
}

fn particle_filter() -> Outcome {
    let cfg = HmmConfig::new(2, 20, 100).unwrap();
    let data = simulate_hmm(&cfg, SEED);
    let (_, kalman) = kalman_loglik_and_grad(&cfg, &data.mu, &data.observations, &data.phi).unwrap();
    let run = |grad_on: bool| {
        let mut acc = vec![Welford::default(); kalman.len()];
        for r in 0..1000 {
            let s = ReplicateStreams::new(SEED, r);
            let (_, g) = particle_filter_gradient(&cfg, &data.mu, &data.observations, &data.phi, s, grad_on).unwrap();
            for (w, v) in acc.iter_mut().zip(g) {
                w.push(v);
            }
        }
        acc
    };
    let within = |acc: &[Welford]| -> Vec<f64> {
        acc.iter().zip(&kalman).map(|(w, k)| (w.mean - k).abs() / (w.variance() / w.n as f64).sqrt()).collect()
    };
    let on = within(&run(true));
    let off = within(&run(false));
    let pass = on.iter().all(|z| *z <= 3.0) && off.iter().any(|z| *z > 3.0);
    let fmt = |zs: &[f64]| zs.iter().map(|z| format!("{z:.1}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("|mean − kalman|/se on: [{}], off: [{}]", fmt(&on), fmt(&off)))
}

fn straight_through_identity() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let p = i as f64 / 10.0;
        for flavor in [BernoulliFlavor::Right, BernoulliFlavor::Left, BernoulliFlavor::StraightThrough] {
            let input = SmoothedDual::input(p);
            let e = (1.0 - p) * smooth_bernoulli(input, false, flavor).unwrap().sderiv
                + p * smooth_bernoulli(input, true, flavor).unwrap().sderiv;
            worst = worst.max((e - 1.0).abs());
        }
        // pointwise, p·left + (1 − p)·right is the constant 1 at both outcomes
        for x in [false, true] {
            let r = smooth_bernoulli(SmoothedDual::input(p), x, BernoulliFlavor::Right).unwrap().sderiv;
            let l = smooth_bernoulli(SmoothedDual::input(p), x, BernoulliFlavor::Left).unwrap().sderiv;
            worst = worst.max((p * l + (1.0 - p) * r - 1.0).abs());
        }
    }
    outcome(worst < 1e-12, format!("max |error| {worst:.2e} (tol 1e-12)"))
}

fn cli_body(args: &[&str], threads: &str, dir: &Path, tag: &str) -> String {
    let out = dir.join(format!("{tag}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_stochad"))
        .args(args)
        .args(["--threads", threads, "--seed", "7", "--out"])
        .arg(&out)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
    strip_metadata(&std::fs::read_to_string(out).unwrap())
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 7] = [
        &["toy", "--samples", "3000"],
        &["toy", "--samples", "3000", "--smoothing", "on"],
        &["walk", "--n", "30", "--samples", "3000"],
        &["life", "--board-size", "5", "--steps", "2", "--samples", "2500"],
        &["pfilter", "--n", "5", "--particles", "20", "--samples", "40"],
        &["dist-check", "--dist", "poisson", "--p", "3.0", "--samples", "3000"],
        &["variance-study", "--experiment", "walk", "--grid", "10,20", "--samples", "2500"],
    ];
    let mut bad = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let first = cli_body(args, "1", dir.path(), &format!("{i}a"));
        let again = cli_body(args, "1", dir.path(), &format!("{i}b"));
        let wide = cli_body(args, "8", dir.path(), &format!("{i}c"));
        if first != again || first != wide || first.lines().count() < 2 {
            bad.push(args[0]);
        }
    }
    let pass = bad.is_empty();
    outcome(
        pass,
        if pass {
            format!("{} invocations byte-identical at 1 and 8 threads", commands.len())
        } else {
            format!("differs: {bad:?}")
        },
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("exact weight identities", exact_weight_identities, Duration::from_secs(1)),
        ("pruning micro-unbiasedness", pruning_micro_unbiasedness, Duration::from_secs(5)),
        ("toy program mean derivative", toy_program, Duration::from_secs(30)),
        ("two-step walk", two_step_walk, Duration::from_secs(10)),
        ("binomial variance scaling", binomial_variance_scaling, Duration::from_secs(120)),
        ("walk variance ordering", walk_variance_ordering, Duration::from_secs(120)),
        ("geometric cube smoothing bias", geometric_cube_bias, Duration::from_secs(120)),
        ("game of life unbiasedness", life_unbiasedness, Duration::from_secs(180)),
        ("particle filter gradient", particle_filter, Duration::from_secs(300)),
        ("straight-through identity", straight_through_identity, Duration::from_secs(1)),
        ("cli determinism", cli_determinism, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {:>2} {name}: {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
