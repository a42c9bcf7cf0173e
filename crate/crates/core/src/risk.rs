//! The exact oracle: worst-case expectations over a phi-divergence ball
//! around a finite distribution.
//!
//! For an instance with payoffs `x_i`, probabilities `p_i`, and a budget
//! `tau`, the quantity computed is
//!
//! ```text
//! R = sup { sum_i p_i x_i z_i :  z >= 0,  sum_i p_i z_i = 1,
//!                                sum_i p_i phi(z_i) <= tau }
//! ```
//!
//! together with a maximizing density `z` and a dual certificate. The dual is
//!
//! ```text
//! R = inf_{lambda >= 0, mu}  lambda tau + mu + sum_i p_i (lambda phi)*(x_i - mu)
//! ```
//!
//! and every evaluation of the right-hand side upper-bounds `R`, so the
//! reported `gap` is a genuine accuracy certificate, not an estimate.
//!
//! Solver layout. A fill construction handles every instance whose
//! unconstrained optimum (mass pushed onto the highest payoffs at the domain
//! or truncation cap) already fits the budget; this covers the two indicator
//! entries outright. The variation entry is a mass-transport problem solved
//! greedily and exactly. The smooth entries are solved through their
//! optimality conditions: for each multiplier `lambda` the shift `mu` is
//! bisected until the candidate density has mean one, then `lambda` is
//! bisected until the divergence meets the budget. The dual certificate comes
//! from a nested ternary search over the box `[lambda_lo, 2B/tau] x
//! [min x, max x]`; restricting `lambda` away from zero costs at most
//! `lambda_lo tau`, which the certification threshold accounts for.

use crate::divergence::{DivergenceError, DivergenceKind, DivergenceSpec, Maximizer, NUMERIC_CAP};
use crate::extreal::ExtReal;
use crate::opt::{bisect_first_true, bisect_last_true, ternary_min};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("primal-dual gap {gap:.3e} exceeds the certification threshold {threshold:.3e}")]
    GapTooLarge { gap: f64, threshold: f64 },
}

/// A finite sample space: payoffs with their reference probabilities.
/// Probabilities must be nonnegative and sum to one within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct FiniteInstance {
    payoffs: Vec<f64>,
    probabilities: Vec<f64>,
}

impl FiniteInstance {
    pub fn new(payoffs: Vec<f64>, probabilities: Vec<f64>) -> Result<Self, RiskError> {
        let invalid = |msg: String| Err(RiskError::InvalidInstance(msg));
        if payoffs.is_empty() {
            return invalid("at least one atom is required".into());
        }
        if payoffs.len() != probabilities.len() {
            return invalid(format!(
                "{} payoffs vs {} probabilities",
                payoffs.len(),
                probabilities.len()
            ));
        }
        if let Some(x) = payoffs.iter().find(|x| !x.is_finite()) {
            return invalid(format!("payoffs must be finite, got {x}"));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return invalid(format!("probabilities must be finite and >= 0, got {p}"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(FiniteInstance { payoffs, probabilities })
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `max_i |x_i|` over atoms with positive probability.
    pub fn payoff_bound(&self) -> f64 {
        self.payoffs
            .iter()
            .zip(&self.probabilities)
            .filter(|(_, p)| **p > 0.0)
            .fold(0.0, |b, (x, _)| b.max(x.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.payoffs.iter().zip(&self.probabilities).map(|(x, p)| x * p).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    payoffs: Vec<f64>,
    probabilities: Vec<f64>,
}

impl TryFrom<InstanceRepr> for FiniteInstance {
    type Error = RiskError;
    fn try_from(r: InstanceRepr) -> Result<Self, RiskError> {
        FiniteInstance::new(r.payoffs, r.probabilities)
    }
}

impl From<FiniteInstance> for InstanceRepr {
    fn from(i: FiniteInstance) -> InstanceRepr {
        InstanceRepr { payoffs: i.payoffs, probabilities: i.probabilities }
    }
}

/// Where the dual search ended relative to its `lambda` box. A point hugging
/// an edge is still a valid certificate; the flag is a diagnostic (the lower
/// edge is expected whenever the divergence budget does not bind).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStatus {
    Interior,
    BoxBoundary,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualPoint {
    pub lambda: f64,
    pub mu: f64,
    /// Dual objective at `(lambda, mu)`; an upper bound on the worst-case
    /// expectation.
    pub value: f64,
    pub status: DualStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    /// The worst-case expectation, evaluated at the reported density.
    pub value: f64,
    /// Worst-case density per input atom. Entries for zero-probability atoms
    /// are reported as 1; they carry no mass and do not constrain anything.
    pub density: Vec<f64>,
    /// Dual certificate; `dual.value >= value` up to rounding.
    pub dual: DualPoint,
    /// `dual.value - value`. Small gaps certify both sides.
    pub gap: f64,
    /// `|E_P[density] - 1|`.
    pub mean_residual: f64,
    /// `max(0, E_P[phi(density)] - tau)`.
    pub divergence_residual: f64,
}

/// Atoms with positive probability, in input order, with a map back to the
/// input positions.
struct Active {
    xs: Vec<f64>,
    ps: Vec<f64>,
    idx: Vec<usize>,
    x_min: f64,
    x_max: f64,
}

impl Active {
    fn from_instance(inst: &FiniteInstance) -> Active {
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        let mut idx = Vec::new();
        for (i, (&x, &p)) in inst.payoffs.iter().zip(&inst.probabilities).enumerate() {
            if p > 0.0 {
                xs.push(x);
                ps.push(p);
                idx.push(i);
            }
        }
        let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Active { xs, ps, idx, x_min, x_max }
    }

    fn len(&self) -> usize {
        self.xs.len()
    }

    fn bound(&self) -> f64 {
        self.x_max.abs().max(self.x_min.abs())
    }

    fn value_of(&self, zeta: &[f64]) -> f64 {
        self.xs.iter().zip(&self.ps).zip(zeta).map(|((x, p), z)| x * p * z).sum()
    }

    fn mean_of(&self, zeta: &[f64]) -> f64 {
        self.ps.iter().zip(zeta).map(|(p, z)| p * z).sum()
    }

    fn divergence_of(&self, spec: &DivergenceSpec, zeta: &[f64]) -> f64 {
        self.ps.iter().zip(zeta).map(|(p, z)| p * spec.phi_raw(*z)).sum()
    }
}

/// Exact worst-case expectation with a maximizing density and a dual
/// certificate. `tol` governs the certificate only; the certification
/// threshold is `10 tol (1 + B) + 2 lambda_lo tau`.
pub fn worst_case_expectation(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    tol: f64,
) -> Result<RiskReport, RiskError> {
    solve_full(instance, spec, tau, None, tol)
}

/// Worst-case expectation for the truncated divergence `phi + ind([0, L])`:
/// densities are additionally capped at `trunc`. Requires
/// `1 <= trunc <= 1e12`.
pub fn truncated_risk(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: f64,
    tol: f64,
) -> Result<RiskReport, RiskError> {
    validate_trunc(trunc)?;
    solve_full(instance, spec, tau, Some(trunc), tol)
}

pub(crate) fn validate_trunc(trunc: f64) -> Result<(), RiskError> {
    if !trunc.is_finite() || !(1.0..=NUMERIC_CAP).contains(&trunc) {
        return Err(RiskError::InvalidInput(format!(
            "truncation level must lie in [1, 1e12], got {trunc}"
        )));
    }
    Ok(())
}

/// The worst-case expectation alone, skipping the dual certificate. This is
/// the path the sample-average estimators hammer, so it stays cheap.
pub fn worst_case_value(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
) -> Result<f64, RiskError> {
    value_only(instance, spec, tau, None)
}

pub(crate) fn value_only(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
) -> Result<f64, RiskError> {
    validate_tau(tau)?;
    let active = Active::from_instance(instance);
    if active.x_max == active.x_min {
        return Ok(active.x_max);
    }
    if tau == 0.0 && !spec.is_indicator() {
        return Ok(instance.mean());
    }
    let zeta = solve_primal(&active, spec, tau, trunc);
    Ok(active.value_of(&zeta))
}

/// The dual objective `lambda tau + mu + sum_i p_i (lambda phi)*(x_i - mu)`
/// over atoms with positive probability. Every finite value upper-bounds the
/// worst-case expectation.
pub fn dual_objective(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    lambda: f64,
    mu: f64,
) -> ExtReal {
    assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be finite and >= 0");
    assert!(mu.is_finite(), "mu must be finite");
    assert!(tau >= 0.0 && tau.is_finite(), "tau must be finite and >= 0");
    let active = Active::from_instance(instance);
    ExtReal::from_value(dual_value(&active, spec, tau, None, lambda, mu))
}

/// Minimize the dual objective over the restricted box. Errors at `tau = 0`
/// for non-indicator entries, where the box is unbounded (the worst case is
/// then the plain expectation and needs no dual).
pub fn dual_minimize(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    tol: f64,
) -> Result<DualPoint, RiskError> {
    validate_tau(tau)?;
    validate_tol(tol)?;
    if tau == 0.0 && !spec.is_indicator() {
        return Err(RiskError::InvalidInput(
            "the dual box is unbounded at tau = 0; the worst case is the plain expectation".into(),
        ));
    }
    let active = Active::from_instance(instance);
    Ok(dual_search(&active, spec, tau, None, tol))
}

fn validate_tau(tau: f64) -> Result<(), RiskError> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(RiskError::InvalidInput(format!(
            "divergence budget tau must be finite and >= 0, got {tau}"
        )));
    }
    Ok(())
}

fn validate_tol(tol: f64) -> Result<(), RiskError> {
    if !(tol > 0.0 && tol <= 0.1) {
        return Err(RiskError::InvalidInput(format!(
            "tolerance must lie in (0, 0.1], got {tol}"
        )));
    }
    Ok(())
}

fn solve_full(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
    tol: f64,
) -> Result<RiskReport, RiskError> {
    validate_tau(tau)?;
    validate_tol(tol)?;
    let active = Active::from_instance(instance);

    if active.x_max == active.x_min {
        // Every feasible density has mean one, so the expectation is pinned.
        let x = active.x_max;
        let zeta = vec![1.0; active.len()];
        let dual = DualPoint { lambda: 0.0, mu: x, value: x, status: DualStatus::Interior };
        return assemble(instance, spec, tau, tol, &active, zeta, dual);
    }

    if tau == 0.0 && !spec.is_indicator() {
        // A zero budget forces the density to 1 almost surely. The
        // certificate sits at a large multiplier, where the dual approaches
        // the plain expectation from above at rate variance/lambda. Doubling
        // only lowers the dual here (the lambda tau term vanishes), so it is
        // safe to escape any remaining infinite conjugate terms that way.
        let spread = active.x_max - active.x_min;
        let mu = instance.mean();
        let mut lambda = (4.0 * spread * spread / tol).max(spread);
        let mut value = dual_value(&active, spec, tau, trunc, lambda, mu);
        let mut guard = 0;
        while !value.is_finite() && guard < 200 {
            lambda *= 2.0;
            value = dual_value(&active, spec, tau, trunc, lambda, mu);
            guard += 1;
        }
        let dual = DualPoint { lambda, mu, value, status: DualStatus::Interior };
        let zeta = vec![1.0; active.len()];
        return assemble(instance, spec, tau, tol, &active, zeta, dual);
    }

    let zeta = solve_primal(&active, spec, tau, trunc);
    let dual = dual_search(&active, spec, tau, trunc, tol);
    assemble(instance, spec, tau, tol, &active, zeta, dual)
}

fn assemble(
    instance: &FiniteInstance,
    spec: &DivergenceSpec,
    tau: f64,
    tol: f64,
    active: &Active,
    zeta_active: Vec<f64>,
    dual: DualPoint,
) -> Result<RiskReport, RiskError> {
    let value = active.value_of(&zeta_active);
    let gap = dual.value - value;
    let lambda_lo = dual_lambda_lo(tau, tol);
    let threshold = 10.0 * tol * (1.0 + active.bound()) + 2.0 * lambda_lo * tau;
    if gap > threshold {
        return Err(RiskError::GapTooLarge { gap, threshold });
    }
    let mut density = vec![1.0; instance.len()];
    for (slot, z) in active.idx.iter().zip(&zeta_active) {
        density[*slot] = *z;
    }
    let mean_residual = (active.mean_of(&zeta_active) - 1.0).abs();
    let divergence_residual = (active.divergence_of(spec, &zeta_active) - tau).max(0.0);
    Ok(RiskReport { value, density, dual, gap, mean_residual, divergence_residual })
}

/// Maximizing density over the active atoms. Requires non-constant payoffs
/// and either `tau > 0` or an indicator entry.
fn solve_primal(active: &Active, spec: &DivergenceSpec, tau: f64, trunc: Option<f64>) -> Vec<f64> {
    let cap = match trunc {
        Some(l) => l.min(spec.domain_upper().raw()),
        None => spec.domain_upper().raw(),
    };
    // Unconstrained-by-tau optimum: highest payoffs filled to the cap.
    let fill = top_fill(active, cap);
    if active.divergence_of(spec, &fill) <= tau {
        return fill;
    }
    match spec.kind() {
        DivergenceKind::Variation => variation_transport(active, tau, cap),
        DivergenceKind::CvarIndicator { .. } | DivergenceKind::EssSupIndicator => {
            unreachable!("indicator fill is always within budget")
        }
        _ => kkt_solve(active, spec, tau, trunc),
    }
}

/// Mass one distributed greedily over atoms in decreasing payoff order, at
/// most `cap` per unit of reference mass. Equal payoffs are filled as a
/// group, which among all fills minimizes the divergence. `cap` may be
/// `+inf` (everything lands on the top group). Requires `cap >= 1` so that
/// the fill can always absorb the whole mass.
fn top_fill(active: &Active, cap: f64) -> Vec<f64> {
    debug_assert!(cap >= 1.0);
    let m = active.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| active.xs[b].partial_cmp(&active.xs[a]).unwrap().then(a.cmp(&b)));
    let mut zeta = vec![0.0; m];
    let mut remaining = 1.0f64;
    let mut g = 0;
    while g < m && remaining > 0.0 {
        let mut h = g;
        let mut group_mass = 0.0;
        while h < m && active.xs[order[h]] == active.xs[order[g]] {
            group_mass += active.ps[order[h]];
            h += 1;
        }
        let take = if cap.is_finite() { remaining.min(cap * group_mass) } else { remaining };
        // take / group_mass can round one ulp past the cap, which matters
        // when the domain ends exactly there; clamp the level, not the mass.
        let level =
            if cap.is_finite() { (take / group_mass).min(cap) } else { take / group_mass };
        for &i in &order[g..h] {
            zeta[i] = level;
        }
        remaining -= take;
        g = h;
    }
    debug_assert!(remaining <= 1e-12, "cap >= 1 absorbs all mass up to rounding");
    zeta
}

/// Exact worst case for the variation entry: transport up to `tau/2` units
/// of mass from the lowest payoffs to the highest, respecting the cap.
fn variation_transport(active: &Active, tau: f64, cap: f64) -> Vec<f64> {
    let m = active.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| active.xs[b].partial_cmp(&active.xs[a]).unwrap().then(a.cmp(&b)));
    let mut zeta = vec![1.0; m];
    let mut budget = 0.5 * tau;
    let mut ri = 0usize; // receivers walk the descending order forward
    let mut di = m; // donors walk it backward
    while budget > 0.0 && ri < di {
        let r = order[ri];
        let d = order[di - 1];
        if active.xs[d] >= active.xs[r] {
            break;
        }
        let room =
            if cap.is_finite() { (cap - zeta[r]) * active.ps[r] } else { f64::INFINITY };
        if room <= 0.0 {
            ri += 1;
            continue;
        }
        let avail = zeta[d] * active.ps[d];
        let take = budget.min(room).min(avail);
        zeta[r] += take / active.ps[r];
        zeta[d] -= take / active.ps[d];
        budget -= take;
        if take == avail {
            zeta[d] = 0.0;
            di -= 1;
        }
        if take == room {
            zeta[r] = cap;
            ri += 1;
        }
    }
    zeta
}

/// Smooth entries with a binding budget: the maximizing density is the
/// conjugate maximizer at `(lambda, mu)`, with `mu` chosen so the mean is
/// one and `lambda` so the divergence meets the budget. Both conditions are
/// monotone, so two nested bisections settle them; a final repair step
/// restores exact feasibility.
fn kkt_solve(active: &Active, spec: &DivergenceSpec, tau: f64, trunc: Option<f64>) -> Vec<f64> {
    let m = active.len();
    let mut zeta = vec![0.0; m];
    let fill_dens = |lambda: f64, mu: f64, zeta: &mut Vec<f64>| {
        for (z, &x) in zeta.iter_mut().zip(&active.xs) {
            *z = match spec.maximizer(lambda, x - mu, trunc) {
                Maximizer::Finite { x: point, .. } => point,
                Maximizer::Unbounded => NUMERIC_CAP,
            };
        }
    };
    let mu_for = |lambda: f64, zeta: &mut Vec<f64>| -> f64 {
        let mut lo = active.x_min;
        let mut hi = active.x_max;
        for _ in 0..70 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            fill_dens(lambda, mid, zeta);
            if active.mean_of(zeta) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        fill_dens(lambda, mu, zeta);
        mu
    };
    // The budget test is applied to the mean-normalized candidate: at tiny
    // lambda the mean jumps by whole percents per ulp of mu, so the raw
    // candidate can sit far from mean one and its divergence says nothing
    // about the density the repair step will actually produce.
    let excess = |lambda: f64, zeta: &mut Vec<f64>| -> f64 {
        mu_for(lambda, zeta);
        let s = active.mean_of(zeta);
        if s > 0.0 && s.is_finite() {
            for z in zeta.iter_mut() {
                *z /= s;
            }
        }
        active.divergence_of(spec, zeta) - tau
    };

    let scale = active.bound();
    let lambda_a = 1e-14 * scale;
    if excess(lambda_a, &mut zeta) <= 0.0 {
        // The ball is so large that even the near-point-mass density fits.
        repair(active, spec, tau, trunc, &mut zeta);
        return zeta;
    }
    let mut lambda_b = scale.max(1e-9);
    let mut guard = 0;
    while excess(lambda_b, &mut zeta) > 0.0 {
        lambda_b *= 2.0;
        guard += 1;
        assert!(guard < 300, "divergence of the candidate density never met the budget");
    }
    let lambda_hat = bisect_first_true(
        |l| {
            let mut buf = vec![0.0; m];
            excess(l, &mut buf) <= 0.0
        },
        lambda_a,
        lambda_b,
        1e-12,
    );
    mu_for(lambda_hat, &mut zeta);
    repair(active, spec, tau, trunc, &mut zeta);
    zeta
}

/// Restore exact feasibility: scale to mean one, clamp to the truncation
/// window, then shrink toward 1 (which preserves the mean) until the
/// divergence is within budget.
fn repair(
    active: &Active,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
    zeta: &mut [f64],
) {
    let s = active.mean_of(zeta);
    if s > 0.0 && s.is_finite() {
        for z in zeta.iter_mut() {
            *z /= s;
        }
    }
    if let Some(l) = trunc {
        let cap = l.min(spec.domain_upper().raw());
        for z in zeta.iter_mut() {
            *z = z.min(cap);
        }
    }
    if active.divergence_of(spec, zeta) > tau {
        let blend_ok = |t: f64| {
            let d: f64 = active
                .ps
                .iter()
                .zip(zeta.iter())
                .map(|(p, z)| p * spec.phi_raw(1.0 + t * (z - 1.0)))
                .sum();
            d <= tau
        };
        let t = bisect_last_true(blend_ok, 0.0, 1.0, 1e-16);
        for z in zeta.iter_mut() {
            *z = 1.0 + t * (*z - 1.0);
        }
    }
}

/// Dual objective; `+inf` when any conjugate term is infinite.
fn dual_value(
    active: &Active,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
    lambda: f64,
    mu: f64,
) -> f64 {
    let mut acc = lambda * tau + mu;
    for (&x, &p) in active.xs.iter().zip(&active.ps) {
        let c = match trunc {
            None => spec.conjugate(lambda, x - mu),
            Some(l) => ExtReal::finite(spec.truncated_conjugate(lambda, x - mu, l)),
        };
        match c.finite_value() {
            Some(v) => acc += p * v,
            None => return f64::INFINITY,
        }
    }
    acc
}

fn dual_lambda_lo(tau: f64, tol: f64) -> f64 {
    if tau > 0.0 {
        (tol / (2.0 * tau)).max(1e-12)
    } else {
        0.0
    }
}

/// Nested ternary search over the dual box. For indicator entries the
/// conjugate does not depend on `lambda`, so the `lambda` axis collapses to
/// zero and only `mu` is searched.
fn dual_search(
    active: &Active,
    spec: &DivergenceSpec,
    tau: f64,
    trunc: Option<f64>,
    tol: f64,
) -> DualPoint {
    let inner = |lambda: f64, iters: u32| {
        ternary_min(
            |mu| dual_value(active, spec, tau, trunc, lambda, mu),
            active.x_min,
            active.x_max,
            iters,
        )
    };
    if spec.is_indicator() {
        let best = inner(0.0, 160);
        return DualPoint {
            lambda: 0.0,
            mu: best.x,
            value: best.value,
            status: DualStatus::Interior,
        };
    }
    let lambda_lo = dual_lambda_lo(tau, tol);
    let lambda_hi = (2.0 * active.bound() / tau).max(2.0 * lambda_lo);
    let outer = ternary_min(|lambda| inner(lambda, 56).value, lambda_lo, lambda_hi, 96);
    // More inner iterations at the chosen multiplier can only improve on the
    // coarser value the outer search saw there.
    let polish = inner(outer.x, 160);
    let near_lo = outer.x <= lambda_lo * (1.0 + 1e-3);
    let near_hi = outer.x >= lambda_hi * (1.0 - 1e-3);
    DualPoint {
        lambda: outer.x,
        mu: polish.x,
        value: polish.value.min(outer.value),
        status: if near_lo || near_hi { DualStatus::BoxBoundary } else { DualStatus::Interior },
    }
}
