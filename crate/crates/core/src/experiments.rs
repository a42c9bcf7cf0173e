//! Monte Carlo harness: measures deviation frequencies and estimator bias
//! of the sample-average estimator across a grid of sample sizes, pairs
//! every measurement with the predicted sample-complexity bounds, and
//! writes the result as CSV.
//!
//! Trials are parallelized by trial index. Each trial owns a pre-assigned
//! counter stream, results are reduced in trial order, and rows are
//! written in grid order, so the output is byte-identical regardless of
//! how many worker threads run the trials.

use crate::bounds::{
    sample_lower_bound, sample_upper_bound, sublinear_hard_instance, superlinear_hard_instance,
    BoundsError, UpperBoundMode,
};
use crate::divergence::DivergenceSpec;
use crate::risk::{worst_case_value, FiniteInstance, RiskError};
use crate::saa::{saa_estimate, truncated_saa_estimate, truncation_level, TruncationMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("trial {index} failed: {source}")]
    Trial { index: u64, source: RiskError },
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where the reference instance comes from: given explicitly, or built as
/// one of the two-point instances that witness the lower bounds (the
/// divergence, budget, and accuracy are taken from the enclosing config).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Explicit { payoffs: Vec<f64>, probabilities: Vec<f64> },
    SublinearHard { p: f64 },
    SuperlinearHard { payoff_bound: f64 },
}

/// Truncation of the estimator, either at an explicit level or at the
/// level implied by a mode at the configured accuracy. Exactly one of the
/// two fields must be set.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default)]
    pub mode: Option<TruncationMode>,
    #[serde(default)]
    pub level: Option<f64>,
}

fn default_ub_mode() -> UpperBoundMode {
    UpperBoundMode::Bernstein
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub divergence: DivergenceSpec,
    pub tau: f64,
    pub instance: InstanceSource,
    pub n_grid: Vec<u64>,
    pub eps: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub truncation: Option<TruncationConfig>,
    #[serde(default = "default_ub_mode")]
    pub ub_mode: UpperBoundMode,
    pub output_path: String,
}

/// One measured point of the complexity curve. The predicted bounds are
/// absent when no finite bound exists for the configuration (or when the
/// payoff scale is outside the range the bound formulas cover).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub deviation_freq: f64,
    pub mean_estimate: f64,
    pub std_estimate: f64,
    pub r_true: f64,
    pub predicted_lb: Option<f64>,
    pub predicted_ub: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub rows_written: usize,
}

fn run_trials(
    inst: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>, ExperimentError> {
    let raw: Vec<Result<f64, RiskError>> = (0..trials)
        .into_par_iter()
        .map(|t| match trunc {
            Some(level) => truncated_saa_estimate(inst, spec, tau, level, n, seed, t),
            None => saa_estimate(inst, spec, tau, n, seed, t),
        })
        .collect();
    let mut values = Vec::with_capacity(raw.len());
    for (index, r) in raw.into_iter().enumerate() {
        values.push(r.map_err(|source| ExperimentError::Trial { index: index as u64, source })?);
    }
    Ok(values)
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let trials = values.len() as f64;
    let mean = values.iter().sum::<f64>() / trials;
    let std = if values.len() >= 2 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Frequency of `|R_n - R| >= eps` over `trials` independent estimates at
/// sample size `n`, together with the estimate moments. The exact value is
/// solved once. Frequencies from fewer than about a hundred trials carry
/// binomial noise wider than the effects under study.
pub fn deviation_frequency(
    inst: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    n: u64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<CurvePoint, ExperimentError> {
    if trials < 1 {
        return Err(ExperimentError::InvalidConfig("trials must be >= 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ExperimentError::InvalidConfig(format!(
            "eps must be finite and > 0, got {eps}"
        )));
    }
    let r_true = worst_case_value(inst, spec, tau)?;
    let values = run_trials(inst, spec, tau, None, n, trials, seed)?;
    Ok(summarize(&values, n, eps, r_true))
}

fn summarize(values: &[f64], n: u64, eps: f64, r_true: f64) -> CurvePoint {
    let (mean_estimate, std_estimate) = mean_and_std(values);
    let hits = values.iter().filter(|v| (*v - r_true).abs() >= eps).count();
    CurvePoint {
        n,
        deviation_freq: hits as f64 / values.len() as f64,
        mean_estimate,
        std_estimate,
        r_true,
        predicted_lb: None,
        predicted_ub: None,
    }
}

/// Sample mean and standard error of the estimator at sample size `n`.
/// The mean sits at or below the exact value in expectation, which is the
/// downward bias this measures.
pub fn bias_estimate(
    inst: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64), ExperimentError> {
    if trials < 2 {
        return Err(ExperimentError::InvalidConfig(
            "trials must be >= 2 for a standard error".into(),
        ));
    }
    let values = run_trials(inst, spec, tau, None, n, trials, seed)?;
    let (mean, std) = mean_and_std(&values);
    Ok((mean, std / (trials as f64).sqrt()))
}

struct RunContext {
    instance: FiniteInstance,
    spec: DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
    r_true: f64,
    predicted_lb: Option<f64>,
    predicted_ub: Option<f64>,
}

fn validate_config(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let fail = |msg: String| Err(ExperimentError::InvalidConfig(msg));
    if !(cfg.tau >= 0.0 && cfg.tau.is_finite()) {
        return fail(format!("tau must be finite and >= 0, got {}", cfg.tau));
    }
    if cfg.trials < 1 {
        return fail("trials must be >= 1".into());
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return fail(format!("eps must be finite and > 0, got {}", cfg.eps));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return fail(format!("delta must lie in (0, 1), got {}", cfg.delta));
    }
    if cfg.n_grid.iter().any(|&n| n < 1) {
        return fail("n_grid entries must be >= 1".into());
    }
    if cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return fail("n_grid must be strictly increasing".into());
    }
    if let Some(t) = &cfg.truncation {
        match (t.mode, t.level) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return fail("truncation requires exactly one of mode or level".into()),
        }
    }
    Ok(())
}

fn resolve_instance(cfg: &ExperimentConfig) -> Result<FiniteInstance, ExperimentError> {
    match &cfg.instance {
        InstanceSource::Explicit { payoffs, probabilities } => {
            Ok(FiniteInstance::new(payoffs.clone(), probabilities.clone())?)
        }
        InstanceSource::SublinearHard { p } => {
            Ok(sublinear_hard_instance(&cfg.divergence, cfg.tau, *p)?.instance().clone())
        }
        InstanceSource::SuperlinearHard { payoff_bound } => {
            Ok(superlinear_hard_instance(&cfg.divergence, cfg.tau, *payoff_bound, cfg.eps)?
                .instance()
                .clone())
        }
    }
}

fn prepare(cfg: &ExperimentConfig) -> Result<RunContext, ExperimentError> {
    validate_config(cfg)?;
    let instance = resolve_instance(cfg)?;
    let spec = cfg.divergence.clone();
    let bound = instance.payoff_bound();
    let r_true = worst_case_value(&instance, &spec, cfg.tau)?;
    let trunc = match &cfg.truncation {
        None => None,
        Some(TruncationConfig { mode: Some(mode), level: None }) => {
            Some(truncation_level(&spec, cfg.tau, bound, cfg.eps, *mode)?)
        }
        Some(TruncationConfig { mode: None, level: Some(level) }) => Some(*level),
        Some(_) => unreachable!("validated to exactly one of mode or level"),
    };
    // Predictions degrade to empty rather than aborting: a missing bound
    // (unbounded complexity, or a payoff scale outside the formulas) is a
    // legitimate measurement outcome for the curve.
    let predicted_lb = sample_lower_bound(&spec, cfg.tau, bound, cfg.eps).ok();
    let predicted_ub =
        sample_upper_bound(&spec, cfg.tau, bound, cfg.eps, cfg.delta, cfg.ub_mode).ok();
    Ok(RunContext { instance, spec, tau: cfg.tau, trunc, r_true, predicted_lb, predicted_ub })
}

fn point_for(
    ctx: &RunContext,
    n: u64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<CurvePoint, ExperimentError> {
    let values =
        run_trials(&ctx.instance, &ctx.spec, ctx.tau, ctx.trunc, n, trials, seed)?;
    let mut point = summarize(&values, n, eps, ctx.r_true);
    point.predicted_lb = ctx.predicted_lb;
    point.predicted_ub = ctx.predicted_ub;
    Ok(point)
}

/// One curve point per entry of `n_grid`, in grid order, sharing a single
/// exact solve and a single bound evaluation.
pub fn complexity_curve(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>, ExperimentError> {
    let ctx = prepare(cfg)?;
    cfg.n_grid.iter().map(|&n| point_for(&ctx, n, cfg.eps, cfg.trials, cfg.seed)).collect()
}

pub const CSV_HEADER: &str =
    "n,trials,eps,deviation_freq,mean_estimate,std_estimate,r_true,predicted_lb,predicted_ub,seed";

fn float_field(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(point: &CurvePoint, trials: u64, eps: f64, seed: u64) -> String {
    let opt = |x: Option<f64>| x.map(float_field).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        point.n,
        trials,
        float_field(eps),
        float_field(point.deviation_freq),
        float_field(point.mean_estimate),
        float_field(point.std_estimate),
        float_field(point.r_true),
        opt(point.predicted_lb),
        opt(point.predicted_ub),
        seed,
    )
}

/// Run the configured experiment and stream the curve to `output_path` as
/// CSV, one row per grid point, flushed as soon as it is computed so an
/// aborted run keeps its finished rows.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    let ctx = prepare(cfg)?;
    let file = std::fs::File::create(&cfg.output_path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let mut rows_written = 0usize;
    for &n in &cfg.n_grid {
        let point = point_for(&ctx, n, cfg.eps, cfg.trials, cfg.seed)?;
        writeln!(out, "{}", csv_row(&point, cfg.trials, cfg.eps, cfg.seed))?;
        out.flush()?;
        rows_written += 1;
    }
    Ok(RunSummary { rows_written })
}
