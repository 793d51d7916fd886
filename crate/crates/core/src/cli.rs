//! Command-line harness.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags, unusable output
//! path, invalid configuration), 1 on runtime failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dist::{Discrete, DiscreteFamily};
use crate::error::Error;
use crate::estimators::{
    estimate_mean, estimate_smoothed_mean, finite_difference, replicate_stats, score_function, score_function_with,
    ControlVariate, Coupling, EstimateSummary, RunOptions,
};
use crate::experiments::{
    kalman_loglik_and_grad, particle_filter_gradient, simulate_hmm, toy_exact_derivative, walk_exact, walk_score_trace,
    DistDraw, HmmConfig, Life, LifeConfig, Toy, WalkConfig,
};
use crate::report::{Format, Report, ReportRow};
use crate::smoothing::BernoulliFlavor;
use crate::triple::DerivativeMode;

pub const GIT_DESCRIBE: &str = match option_env!("STOCHAD_GIT_DESCRIBE") {
    Some(s) => s,
    None => "unknown",
};

#[derive(Debug, Parser)]
#[command(name = "stochad", version, about = "Unbiased derivative estimates for programs with discrete randomness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicates per estimator.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Right,
    Left,
}

impl From<ModeArg> for DerivativeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Right => DerivativeMode::Right,
            ModeArg::Left => DerivativeMode::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CvArg {
    None,
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Bernoulli,
    Binomial,
    Geometric,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyArg {
    Walk,
    Binomial,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Toy program mixing binomial, Bernoulli and normal draws.
    Toy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.6)]
        p: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Right)]
        mode: ModeArg,
        /// Also report the smoothed estimator.
        #[arg(long, value_enum, default_value_t = Toggle::Off)]
        smoothing: Toggle,
    },
    /// Inhomogeneous random walk with payoff `x_n²`.
    Walk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: u32,
        /// Walk scale; defaults to `n`.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Right)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = CvArg::Batch)]
        cv: CvArg,
    },
    /// Stochastic Game of Life, living-cell count after a number of steps.
    Life {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 9)]
        board_size: usize,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 0.02)]
        fd_step: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Right)]
        mode: ModeArg,
    },
    /// Particle-filter gradient of a linear-Gaussian model's log-likelihood.
    Pfilter {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Number of observations.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        particles: usize,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        resampling_grad: Toggle,
    },
    /// Derivative of the mean of a single discrete draw.
    DistCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        dist: DistArg,
        /// Binomial trial count.
        #[arg(long, default_value_t = 10)]
        n: u64,
        /// Probability, or rate for the Poisson family.
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Right)]
        mode: ModeArg,
    },
    /// Estimator variances across a grid of sizes.
    VarianceStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        experiment: StudyArg,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
        grid: Vec<u64>,
        /// Binomial probability (the walk uses `p = n`).
        #[arg(long, default_value_t = 0.6)]
        p: f64,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Toy { common, .. }
            | Command::Walk { common, .. }
            | Command::Life { common, .. }
            | Command::Pfilter { common, .. }
            | Command::DistCheck { common, .. }
            | Command::VarianceStudy { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Toy { .. } => "toy",
            Command::Walk { .. } => "walk",
            Command::Life { .. } => "life",
            Command::Pfilter { .. } => "pfilter",
            Command::DistCheck { .. } => "dist-check",
            Command::VarianceStudy { .. } => "variance-study",
        }
    }
}

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => CliError::Usage(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

fn opts(c: &Common) -> RunOptions {
    RunOptions::new(c.seed, c.samples).with_threads(c.threads)
}

fn family_of(dist: DistArg, n: u64) -> DiscreteFamily {
    match dist {
        DistArg::Bernoulli => DiscreteFamily::Bernoulli,
        DistArg::Binomial => DiscreteFamily::Binomial { n },
        DistArg::Geometric => DiscreteFamily::Geometric,
        DistArg::Poisson => DiscreteFamily::Poisson,
    }
}

/// Run a parsed command and build its report.
pub fn execute(cmd: &Command) -> Result<Report, CliError> {
    let c = cmd.common();
    let o = opts(c);
    let mut report = Report::default();
    match *cmd {
        Command::Toy { p, mode, smoothing, .. } => {
            let mode = mode.into();
            let s = estimate_mean(&Toy, p, o, mode)?;
            report.push(ReportRow::new("toy", "triple", p, &s));
            if smoothing == Toggle::On {
                let s = estimate_smoothed_mean(&Toy, p, o, mode, BernoulliFlavor::StraightThrough)?;
                report.push(ReportRow::new("toy", "smoothed", p, &s));
            }
            report.note("exact_derivative", toy_exact_derivative(p));
        }
        Command::Walk { n, p, mode, cv, .. } => {
            let cfg = WalkConfig::new(n, p.unwrap_or(f64::from(n)))?;
            let s = estimate_mean(&cfg.program(), cfg.p, o, mode.into())?;
            report.push(ReportRow::new("walk", "triple", cfg.p, &s));
            let (name, cv) = match cv {
                CvArg::None => ("score", ControlVariate::None),
                CvArg::Batch => ("score-cv", ControlVariate::BatchMean),
            };
            let s = score_function_with(o, cv, |st| walk_score_trace(&cfg, st))?;
            report.push(ReportRow::new("walk", name, cfg.p, &s));
            report.note("exact_derivative", walk_exact(cfg.n, cfg.p).1);
        }
        Command::Life { board_size, steps, p, fd_step, mode, .. } => {
            let life = Life { cfg: LifeConfig::new(board_size, steps)? };
            if !(p > 0.0 && p < 1.0) {
                return Err(CliError::Usage(format!("--p must lie in (0, 1), got {p}")));
            }
            let s = estimate_mean(&life, p, o, mode.into())?;
            report.push(ReportRow::new("life", "triple", p, &s));
            let s = finite_difference(&life, p, fd_step, o, Coupling::Common)?;
            report.push(ReportRow::new("life", "fd-common", p, &s));
        }
        Command::Pfilter { dim, n, particles, resampling_grad, .. } => {
            let cfg = HmmConfig::new(dim, n, particles)?;
            let data = simulate_hmm(&cfg, c.seed);
            let (_, exact) = kalman_loglik_and_grad(&cfg, &data.mu, &data.observations, &data.phi)?;
            let on = resampling_grad == Toggle::On;
            let name = if on { "smoothed" } else { "no-resampling-grad" };
            for (j, g) in exact.iter().enumerate() {
                let s = replicate_stats_summary(o, |st| {
                    Ok(particle_filter_gradient(&cfg, &data.mu, &data.observations, &data.phi, st, on)?.1[j])
                })?;
                report.push(ReportRow::new("pfilter", name, format!("theta{j}"), &s));
                report.note(&format!("kalman_gradient_theta{j}"), g);
            }
        }
        Command::DistCheck { dist, n, p, mode, .. } => {
            let family = family_of(dist, n);
            family.at(p).check_interior().map_err(|e| CliError::Usage(e.to_string()))?;
            let prog = DistDraw(family);
            let mode = mode.into();
            let name = family.at(p).name();
            report.push(ReportRow::new(name, "triple", p, &estimate_mean(&prog, p, o, mode)?));
            report.push(ReportRow::new(
                name,
                "smoothed",
                p,
                &estimate_smoothed_mean(&prog, p, o, mode, BernoulliFlavor::StraightThrough)?,
            ));
            report.push(ReportRow::new(name, "score", p, &score_function(&prog, p, o, ControlVariate::None)?));
            report.note("exact_derivative", family.at(p).mean_derivative());
        }
        Command::VarianceStudy { experiment, ref grid, p, .. } => {
            if grid.is_empty() {
                return Err(CliError::Usage("--grid needs at least one value".into()));
            }
            for &size in grid {
                match experiment {
                    StudyArg::Walk => {
                        let n =
                            u32::try_from(size).map_err(|_| CliError::Usage(format!("grid value {size} too large")))?;
                        let cfg = WalkConfig::new(n, f64::from(n))?;
                        let t = estimate_mean(&cfg.program(), cfg.p, o, DerivativeMode::Right)?;
                        let cv = score_function_with(o, ControlVariate::BatchMean, |st| walk_score_trace(&cfg, st))?;
                        let sc = score_function_with(o, ControlVariate::None, |st| walk_score_trace(&cfg, st))?;
                        report.push(ReportRow::new("walk", "triple", size, &t));
                        report.push(ReportRow::new("walk", "score-cv", size, &cv));
                        report.push(ReportRow::new("walk", "score", size, &sc));
                    }
                    StudyArg::Binomial => {
                        let d = Discrete::Binomial { n: size, p };
                        d.check_interior().map_err(|e| CliError::Usage(e.to_string()))?;
                        let prog = DistDraw(DiscreteFamily::Binomial { n: size });
                        let t = estimate_mean(&prog, p, o, DerivativeMode::Right)?;
                        let sc = score_function(&prog, p, o, ControlVariate::None)?;
                        report.push(ReportRow::new("binomial", "triple", size, &t));
                        report.push(ReportRow::new("binomial", "score", size, &sc));
                    }
                }
            }
        }
    }
    Ok(report)
}

fn replicate_stats_summary<F>(o: RunOptions, f: F) -> Result<EstimateSummary, Error>
where
    F: Fn(crate::rng::ReplicateStreams) -> crate::Result<f64> + Sync,
{
    if o.samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", o.samples)));
    }
    let start = Instant::now();
    let w = replicate_stats(o.seed, 0, o.samples, o.threads, f)?;
    Ok(w.summary(o.seed, start.elapsed().as_secs_f64()))
}

fn check_output(path: &std::path::Path) -> Result<(), CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => return Ok(()),
    };
    if !parent.is_dir() {
        return Err(CliError::Usage(format!("output directory {} does not exist", parent.display())));
    }
    Ok(())
}

/// Parse, run and write; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

pub fn run_cli(cli: &Cli) -> Result<(), CliError> {
    let c = cli.command.common();
    if let Some(out) = &c.out {
        check_output(out)?;
    }
    let start = Instant::now();
    let report = execute(&cli.command)?;
    let meta = vec![
        ("stochad".to_string(), format!("{} ({GIT_DESCRIBE})", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), cli.command.name().to_string()),
        ("seed".to_string(), c.seed.to_string()),
        ("samples".to_string(), c.samples.to_string()),
        ("wall_seconds".to_string(), format!("{:.3}", start.elapsed().as_secs_f64())),
    ];
    let format = match c.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let text = report.render(format, &meta);
    match &c.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))?,
    }
    Ok(())
}
