//! Sample-size calculus: how many draws are enough (upper bounds), how many
//! are necessary (lower bounds), and the two-point instances that realize
//! the lower bounds.
//!
//! The split is governed by the growth function `g(x) = phi(x)/x`:
//!
//! * When `g` is unbounded (superlinear and indicator entries), estimation
//!   is possible at every accuracy, with sample counts driven by the
//!   truncation level `L(eps) = g_inv(32 B tau / eps)`. Hard two-point
//!   instances with a vanishing high-payoff atom show the rates are tight.
//! * When `g` is bounded (the sublinear entries), a fixed budget can always
//!   lift an arbitrarily small atom to a constant risk floor, so for
//!   accuracies below that floor no sample size suffices for all reference
//!   measures. The floor and the critical atom mass are computable
//!   constants.
//!
//! All sample counts are reported as `f64`: they are analytic expressions
//! that can exceed any practical range, and the experiment layer compares
//! them against measured deviation frequencies rather than allocating them.

use crate::divergence::{DivergenceError, DivergenceSpec, GrowthClass};
use crate::extreal::ExtReal;
use crate::opt::bisect_last_true;
use crate::risk::{worst_case_value, FiniteInstance};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid bounds input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("eps = {eps} is too large for a hard instance at this budget: {reason}")]
    EpsTooLarge { eps: f64, reason: String },
    #[error("atom probability {p} is outside (0, {limit}) required by the construction")]
    ProbabilityOutOfRange { p: f64, limit: f64 },
}

/// Constants behind the sublinear impossibility argument, for a fixed
/// divergence and budget. `phi(x) <= growth_bound * x` holds for every
/// `x >= level_threshold`; any two-point instance whose high atom has mass
/// below `probability_ceiling` then admits a feasible density with value at
/// least `risk_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublinearConstants {
    pub growth_bound: f64,
    pub level_threshold: f64,
    pub risk_floor: f64,
    pub probability_ceiling: f64,
}

/// A two-point instance witnessing a sample complexity lower bound, plus
/// the quantities the bound is stated in: the risk separation `guarantee`
/// and the largest sample count `le_cam_n` at which any estimator still
/// fails with probability at least 1/4.
#[derive(Debug, Clone, Serialize)]
pub struct HardInstance {
    #[serde(flatten)]
    instance: FiniteInstance,
    pub payoff_bound: f64,
    pub guarantee: f64,
    pub le_cam_n: u64,
}

impl HardInstance {
    pub fn instance(&self) -> &FiniteInstance {
        &self.instance
    }
}

/// Which concentration argument prices the sample complexity upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBoundMode {
    /// Uniform Hoeffding over the dual box: scales with `M^2 / eps^2`.
    Hoeffding,
    /// Variance-aware Bernstein: scales with `M B / eps^2 + M / eps`.
    Bernstein,
    /// Telescoped truncation levels: near-optimal for fast-growing
    /// divergences, at the price of logarithmic factors.
    Increment,
}

fn validate_tau(tau: f64) -> Result<(), BoundsError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(BoundsError::InvalidInput(format!(
            "divergence budget tau must be finite and > 0, got {tau}"
        )));
    }
    Ok(())
}

fn validate_bound_scale(b: f64, eps: f64) -> Result<(), BoundsError> {
    if !(b >= 1.0 && b.is_finite()) {
        return Err(BoundsError::InvalidInput(format!(
            "payoff bound must be finite and >= 1, got {b}"
        )));
    }
    if !(eps > 0.0 && eps <= b) {
        return Err(BoundsError::InvalidInput(format!(
            "accuracy eps must lie in (0, {b}], got {eps}"
        )));
    }
    Ok(())
}

/// Linear growth envelope `phi(x) <= g x` for `x >= l`, with `g, l >= 1`.
/// Only sublinear entries have one.
fn growth_envelope(spec: &DivergenceSpec) -> (f64, f64) {
    use crate::divergence::DivergenceKind::*;
    match spec.kind() {
        Variation | Burg | NeymanChiSq | EssSupIndicator => (1.0, 1.0),
        Hellinger => (1.0, 1.0),
        CressieRead { k } => ((1.0 / (1.0 - k)).max(1.0), 1.0),
        Kl | CvarIndicator { .. } => {
            unreachable!("no linear envelope exists for unbounded growth")
        }
    }
}

/// Impossibility constants for a sublinear divergence at budget `tau`.
pub fn sublinear_constants(
    spec: &DivergenceSpec,
    tau: f64,
) -> Result<SublinearConstants, BoundsError> {
    validate_tau(tau)?;
    if spec.growth_class() != GrowthClass::Sublinear {
        return Err(BoundsError::InvalidInput(format!(
            "{spec} does not have sublinear growth"
        )));
    }
    let (g, l) = growth_envelope(spec);
    // Largest symmetric interval around 1 on which phi stays within half
    // the budget, capped so the implied density level clears the envelope.
    let r_max = (tau / (2.0 * g)).min(1.0);
    let half = ExtReal::finite(0.5 * tau);
    let fits = |r: f64| spec.phi_value(1.0 - r) <= half && spec.phi_value(1.0 + r) <= half;
    let r = bisect_last_true(fits, 0.0, r_max, 1e-14);
    Ok(SublinearConstants {
        growth_bound: g,
        level_threshold: l,
        risk_floor: r,
        probability_ceiling: r / l,
    })
}

/// Two-point instance (payoffs 1 and 0) whose risk stays at least
/// `risk_floor` for every high-atom mass in `(0, probability_ceiling)`,
/// while `n <= le_cam_n` samples miss the atom entirely with probability
/// at least 1/2.
pub fn sublinear_hard_instance(
    spec: &DivergenceSpec,
    tau: f64,
    p: f64,
) -> Result<HardInstance, BoundsError> {
    let constants = sublinear_constants(spec, tau)?;
    if !(p > 0.0 && p < constants.probability_ceiling) {
        return Err(BoundsError::ProbabilityOutOfRange {
            p,
            limit: constants.probability_ceiling,
        });
    }
    let instance = FiniteInstance::new(vec![1.0, 0.0], vec![p, 1.0 - p])
        .expect("two-point instance is valid");
    Ok(HardInstance {
        instance,
        payoff_bound: 1.0,
        guarantee: constants.risk_floor,
        le_cam_n: saturating_floor(1.0 / (2.0 * p)),
    })
}

/// Two-point instance (payoffs `b` and 0) whose risk is at least `eps`
/// although the high atom has mass only `(eps/b) / g_inv(tau b / (2 eps))`.
/// Any estimator from `n <= le_cam_n` samples fails by `eps/2` with
/// probability at least 1/4. Requires unbounded growth; fails with
/// `EpsTooLarge` when the accuracy is too coarse for the construction to
/// stay inside the budget.
pub fn superlinear_hard_instance(
    spec: &DivergenceSpec,
    tau: f64,
    b: f64,
    eps: f64,
) -> Result<HardInstance, BoundsError> {
    validate_tau(tau)?;
    validate_bound_scale(b, eps)?;
    if spec.growth_class() == GrowthClass::Sublinear {
        return Err(BoundsError::InvalidInput(format!(
            "{spec} has sublinear growth; use the sublinear construction"
        )));
    }
    let level = spec.growth_inverse(tau * b / (2.0 * eps))?;
    let p = (eps / b) / level;
    let slack = 1.0 + 1e-9;
    let half = ExtReal::finite(0.5 * tau * slack);
    if !(p > 0.0 && p <= 0.5 * slack) {
        return Err(BoundsError::EpsTooLarge {
            eps,
            reason: format!("the high atom would need mass {p} > 1/2"),
        });
    }
    if !(spec.phi_value(level).weighted(p) <= half) {
        return Err(BoundsError::EpsTooLarge {
            eps,
            reason: "lifting the high atom alone exceeds half the budget".into(),
        });
    }
    let low_density = (1.0 - eps / b) / (1.0 - p);
    if !(spec.phi_value(low_density) <= half) {
        return Err(BoundsError::EpsTooLarge {
            eps,
            reason: "deflating the low atom exceeds half the budget".into(),
        });
    }
    let instance = FiniteInstance::new(vec![b, 0.0], vec![p, 1.0 - p])
        .expect("two-point instance is valid");
    Ok(HardInstance {
        instance,
        payoff_bound: b,
        guarantee: eps,
        le_cam_n: saturating_floor(1.0 / (2.0 * p)),
    })
}

fn saturating_floor(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.floor() as u64
    }
}

/// Probability that `n` draws from a two-point instance with high-atom mass
/// `p` never see the atom, halved: the Le Cam failure probability for any
/// estimator at the corresponding hard instance pair.
pub fn le_cam_bound(p: f64, n: u64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    0.5 * (1.0 - p).powf(n as f64)
}

/// Deviation width of the variance-aware concentration bound for a
/// nonnegative statistic bounded by `m_bound` with empirical mean `mean`:
/// `4 (sqrt(m_bound mean log(2/delta) / n) + m_bound log(2/delta) / n)`.
pub fn bernstein_width(m_bound: f64, mean: f64, n: u64, delta: f64) -> f64 {
    assert!(m_bound > 0.0 && m_bound.is_finite(), "m_bound must be finite and > 0");
    assert!(mean >= 0.0 && mean.is_finite(), "mean must be finite and >= 0");
    assert!(n >= 1, "n must be >= 1");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let lg = (2.0 / delta).ln();
    let n = n as f64;
    4.0 * ((m_bound * mean * lg / n).sqrt() + m_bound * lg / n)
}

/// Samples that force any estimator below accuracy `eps` with constant
/// probability: `max(g_inv(tau b / (2 eps)) b / (2 eps), b^2 / eps^2)`.
/// Errors with the growth error when no finite level reaches the target,
/// which is exactly the regime where the complexity is unbounded.
pub fn sample_lower_bound(
    spec: &DivergenceSpec,
    tau: f64,
    b: f64,
    eps: f64,
) -> Result<f64, BoundsError> {
    validate_tau(tau)?;
    validate_bound_scale(b, eps)?;
    let level = spec.growth_inverse(tau * b / (2.0 * eps))?;
    Ok((level * b / (2.0 * eps)).max(b * b / (eps * eps)))
}

/// Largest high-atom mass at which the two-point risk (payoffs 1 and 0)
/// stays at or below one half. This is the instance-dependent constant in
/// the quadratic lower bound; it does not depend on the payoff scale.
pub fn quadratic_lower_bound_probability(
    spec: &DivergenceSpec,
    tau: f64,
) -> Result<f64, BoundsError> {
    validate_tau(tau)?;
    if spec.growth_class() == GrowthClass::Sublinear {
        return Err(BoundsError::InvalidInput(format!(
            "{spec} has sublinear growth: the two-point risk does not vanish with the atom"
        )));
    }
    let risk_at = |p: f64| {
        let inst = FiniteInstance::new(vec![1.0, 0.0], vec![p, 1.0 - p])
            .expect("two-point instance is valid");
        worst_case_value(&inst, spec, tau).expect("two-point worst case is solvable")
    };
    if risk_at(0.5) <= 0.5 {
        return Ok(0.5);
    }
    let mut lo = 1e-9;
    while risk_at(lo) > 0.5 {
        lo /= 10.0;
        if lo < 1e-300 {
            return Err(BoundsError::InvalidInput(
                "the two-point risk stays above 1/2 for every positive atom mass".into(),
            ));
        }
    }
    Ok(bisect_last_true(|p| risk_at(p) <= 0.5, lo, 0.5, 1e-15))
}

fn level_for(spec: &DivergenceSpec, tau: f64, b: f64, eps: f64) -> Result<f64, BoundsError> {
    Ok(spec.growth_inverse(32.0 * b * tau / eps)?)
}

fn envelope_m(level: f64, b: f64) -> f64 {
    (3.0 + 2.0 * level) * b
}

fn envelope_lipschitz(level: f64, b: f64, lambda_lo: f64, tau: f64) -> f64 {
    level + 1.0 + 2.0 * (1.0 + level) * b / lambda_lo + tau
}

/// Samples sufficient for `|R - R_n| <= eps` with probability `1 - delta`,
/// uniformly over reference measures with payoffs in `[-b, b]`. Errors with
/// the growth error when the required truncation level `g_inv(32 b tau /
/// eps)` does not exist, the regime where no such bound is possible.
pub fn sample_upper_bound(
    spec: &DivergenceSpec,
    tau: f64,
    b: f64,
    eps: f64,
    delta: f64,
    mode: UpperBoundMode,
) -> Result<f64, BoundsError> {
    validate_tau(tau)?;
    validate_bound_scale(b, eps)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BoundsError::InvalidInput(format!(
            "failure probability delta must lie in (0, 1), got {delta}"
        )));
    }
    let level = level_for(spec, tau, b, eps)?;
    let lambda_lo = eps / (8.0 * tau);
    let m = envelope_m(level, b);
    let lip = envelope_lipschitz(level, b, lambda_lo, tau);
    let n = match mode {
        UpperBoundMode::Hoeffding => {
            let lg = (256.0 * b * b * lip * lip / (tau * eps * eps * delta)).ln();
            128.0 * m * m * lg / (eps * eps)
        }
        UpperBoundMode::Bernstein => {
            let lg = (256.0 * b * b * lip / (eps * eps * tau * delta)).ln();
            2048.0 * m * b * lg / (eps * eps) + 32.0 * m * lg / eps
        }
        UpperBoundMode::Increment => {
            let doublings = (b / eps).log2().max(1.0);
            let rounds = doublings.ceil();
            let lg = (1024.0 * b * b * doublings * doublings * lip * lip
                / (tau * eps * eps * delta))
                .ln();
            let sup = increment_supremum(spec, tau, b, eps)?;
            sup * lg * rounds * rounds / (eps * eps) + 32.0 * m * lg * rounds / eps
        }
    };
    Ok(n)
}

/// `sup over eps' in [eps, b] of 4096 M(eps') eps'`, by a log-spaced grid
/// refined until the value moves by less than 0.1 percent.
fn increment_supremum(
    spec: &DivergenceSpec,
    tau: f64,
    b: f64,
    eps: f64,
) -> Result<f64, BoundsError> {
    let mut points = 200usize;
    let mut previous = f64::NAN;
    loop {
        let mut best = 0.0f64;
        for i in 0..points {
            let t = i as f64 / (points - 1) as f64;
            let e = eps * (b / eps).powf(t);
            let level = level_for(spec, tau, b, e)?;
            best = best.max(4096.0 * envelope_m(level, b) * e);
        }
        if previous.is_finite() && (best - previous).abs() <= 1e-3 * previous {
            return Ok(best);
        }
        previous = best;
        points *= 2;
        if points > 6400 {
            return Ok(best);
        }
    }
}
