//! The divergence catalog: pointwise values, convex conjugates, and the
//! growth calculus that drives truncation levels and sample-size bounds.
//!
//! Every entry is a convex `phi: [0, inf) -> [0, inf]` with `phi(1) = 0`;
//! negative arguments are assigned `+inf`. The catalog:
//!
//! ```text
//! kl              x ln x - x + 1
//! cvar            indicator of [0, 1/alpha],          alpha in (0, 1)
//! cressie_read    (x^k - k x + k - 1) / (k (k - 1)),  k not in {-1, 0, 1}
//! variation       |x - 1|
//! burg            -ln x + x - 1
//! neyman_chi_sq   (x - 1)^2 / x
//! hellinger       (sqrt(x) - 1)^2
//! ess_sup         0 on [0, inf)
//! ```
//!
//! Growth is the dichotomy that decides estimability: `phi` is superlinear
//! when `phi(x)/x -> inf` and sublinear when the ratio stays bounded. The two
//! indicator entries are special cases: `cvar` jumps to `+inf` at `1/alpha`
//! (classified `Indicator`), `ess_sup` is identically zero (the extreme
//! sublinear entry).
//!
//! Numeric conventions. Suprema are searched on `[0, 1e12]`
//! ([`NUMERIC_CAP`]); a maximand still rising at the cap, or a conjugate
//! maximizer falling beyond it, is reported as `+inf`. The same cap bounds
//! [`DivergenceSpec::growth_inverse`]. This keeps the closed-form and numeric
//! paths consistent with each other at double precision, at the price of
//! treating astronomically large but finite suprema as infinite.

use crate::extreal::ExtReal;
use crate::opt::{bisect_first_true, golden_max};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Upper end of every numeric search window on the `x` axis.
pub const NUMERIC_CAP: f64 = 1e12;

/// Iteration budget for golden-section runs. A bracket of width 1e12 shrinks
/// below 1e-13 in about 120 iterations, so 400 never binds.
const GOLDEN_BUDGET: u32 = 400;

#[derive(Debug, Error)]
pub enum DivergenceError {
    #[error("invalid divergence parameter: {0}")]
    InvalidParameter(String),
    #[error("conjugate search did not converge: bracket width {width:.3e} above tolerance {tol:.3e}")]
    NonConvergence { width: f64, tol: f64 },
    #[error("growth function stays below {y:.6e} for every x up to the numeric cap 1e12")]
    GrowthUnbounded { y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Kl,
    CvarIndicator { alpha: f64 },
    CressieRead { k: f64 },
    Variation,
    Burg,
    NeymanChiSq,
    Hellinger,
    EssSupIndicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Sublinear,
    Superlinear,
    Indicator,
}

/// A catalog divergence together with its derived classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct DivergenceSpec {
    kind: DivergenceKind,
    domain_upper: ExtReal,
    growth_class: GrowthClass,
}

impl DivergenceSpec {
    pub fn kl() -> Self {
        Self::from_kind(DivergenceKind::Kl)
    }

    pub fn cvar(alpha: f64) -> Result<Self, DivergenceError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DivergenceError::InvalidParameter(format!(
                "cvar level alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self::from_kind(DivergenceKind::CvarIndicator { alpha }))
    }

    /// `k = 1` and `k = -1` are outside the family; `k = 0` makes the
    /// normalizing factor vanish (that limit is the Burg entry).
    pub fn cressie_read(k: f64) -> Result<Self, DivergenceError> {
        if !k.is_finite() || k == 1.0 || k == -1.0 {
            return Err(DivergenceError::InvalidParameter(format!(
                "cressie-read exponent k must be finite and outside {{-1, 1}}, got {k}"
            )));
        }
        if k == 0.0 {
            return Err(DivergenceError::InvalidParameter(
                "cressie-read k = 0 is the burg divergence; use that entry".into(),
            ));
        }
        Ok(Self::from_kind(DivergenceKind::CressieRead { k }))
    }

    pub fn variation() -> Self {
        Self::from_kind(DivergenceKind::Variation)
    }

    pub fn burg() -> Self {
        Self::from_kind(DivergenceKind::Burg)
    }

    pub fn neyman_chi_sq() -> Self {
        Self::from_kind(DivergenceKind::NeymanChiSq)
    }

    pub fn hellinger() -> Self {
        Self::from_kind(DivergenceKind::Hellinger)
    }

    pub fn ess_sup() -> Self {
        Self::from_kind(DivergenceKind::EssSupIndicator)
    }

    fn from_kind(kind: DivergenceKind) -> Self {
        let domain_upper = match kind {
            DivergenceKind::CvarIndicator { alpha } => ExtReal::finite(1.0 / alpha),
            _ => ExtReal::INF,
        };
        let growth_class = match kind {
            DivergenceKind::Kl => GrowthClass::Superlinear,
            DivergenceKind::CressieRead { k } if k > 1.0 => GrowthClass::Superlinear,
            DivergenceKind::CvarIndicator { .. } => GrowthClass::Indicator,
            _ => GrowthClass::Sublinear,
        };
        DivergenceSpec { kind, domain_upper, growth_class }
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    /// Supremum of the effective domain (`1/alpha` for `cvar`, `+inf`
    /// otherwise; the lower end is always 0).
    pub fn domain_upper(&self) -> ExtReal {
        self.domain_upper
    }

    pub fn growth_class(&self) -> GrowthClass {
        self.growth_class
    }

    /// Entries on which `phi` vanishes identically over its domain, so the
    /// divergence budget `tau` never binds and the dual is constant in
    /// `lambda`.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self.kind,
            DivergenceKind::CvarIndicator { .. } | DivergenceKind::EssSupIndicator
        )
    }

    /// Entries whose kinked conjugates make the worst-case density
    /// non-unique (piecewise-linear `phi`). The risk oracle solves these by a
    /// direct mass-transport argument instead of conjugate maximizers.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(
            self.kind,
            DivergenceKind::Variation
                | DivergenceKind::CvarIndicator { .. }
                | DivergenceKind::EssSupIndicator
        )
    }

    /// Whether a whole neighborhood `[1 - d, 1 + d]` of 1 sits inside the
    /// domain for some `d > 0`. True for every catalog entry (for `cvar`
    /// because `1/alpha > 1` strictly); the hard-instance constructions
    /// require it.
    pub fn regular_near_one(&self) -> bool {
        self.domain_upper.raw() > 1.0
    }

    /// `phi(x)` as an extended real; `+inf` off the domain.
    pub fn phi_value(&self, x: f64) -> ExtReal {
        ExtReal::from_value(self.phi_raw(x))
    }

    /// `phi(x)` as a raw f64 (`+inf` off the domain, never NaN). The hot
    /// paths in the solvers use this directly.
    pub(crate) fn phi_raw(&self, x: f64) -> f64 {
        assert!(!x.is_nan(), "phi argument is NaN");
        if x < 0.0 {
            return f64::INFINITY;
        }
        let v = match self.kind {
            DivergenceKind::Kl => {
                if x == 0.0 {
                    1.0
                } else {
                    x * x.ln() - x + 1.0
                }
            }
            DivergenceKind::CvarIndicator { alpha } => {
                if x <= 1.0 / alpha {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            // 0^k handles the boundary: 1/k at x = 0 for k > 0, +inf for
            // k < 0 (the domain is open at 0 there).
            DivergenceKind::CressieRead { k } => (x.powf(k) - k * x + k - 1.0) / (k * (k - 1.0)),
            DivergenceKind::Variation => (x - 1.0).abs(),
            DivergenceKind::Burg => -x.ln() + x - 1.0,
            DivergenceKind::NeymanChiSq => {
                let d = x - 1.0;
                d * d / x
            }
            DivergenceKind::Hellinger => {
                let d = x.sqrt() - 1.0;
                d * d
            }
            DivergenceKind::EssSupIndicator => 0.0,
        };
        // Convexity and phi(1) = 0 force phi >= 0; clip the last-ulp
        // cancellation noise near x = 1.
        v.max(0.0)
    }

    /// The scaled conjugate `(lambda phi)*(y) = sup_{x >= 0} x y - lambda phi(x)`.
    ///
    /// Every catalog entry has a closed form (the maximizer solves
    /// `y = lambda phi'(x)`); [`Self::conjugate_numeric`] is the independent
    /// cross-check. At `lambda = 0` this is the support function of the
    /// domain, finite only when the domain is bounded or `y <= 0`. A supremum
    /// whose maximizer falls beyond [`NUMERIC_CAP`] is reported as `+inf` on
    /// both paths.
    pub fn conjugate(&self, lambda: f64, y: f64) -> ExtReal {
        assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be finite and >= 0");
        assert!(y.is_finite(), "conjugate argument must be finite");
        if lambda == 0.0 {
            return self.support_function(y, None);
        }
        match self.kind {
            // Maximizer e^{y/lambda}, value lambda (e^{y/lambda} - 1).
            DivergenceKind::Kl => {
                let t = y / lambda;
                if t >= NUMERIC_CAP.ln() {
                    ExtReal::INF
                } else {
                    ExtReal::from_value(lambda * t.exp_m1())
                }
            }
            DivergenceKind::CvarIndicator { alpha } => ExtReal::finite(y.max(0.0) / alpha),
            DivergenceKind::Variation => {
                if y > lambda {
                    ExtReal::INF
                } else {
                    ExtReal::finite(y.max(-lambda))
                }
            }
            DivergenceKind::CressieRead { k } if k == 2.0 => {
                if y >= -lambda {
                    ExtReal::finite(y + y * y / (2.0 * lambda))
                } else {
                    ExtReal::finite(-lambda / 2.0)
                }
            }
            DivergenceKind::CressieRead { .. } => match self.maximizer(lambda, y, None) {
                Maximizer::Finite { value, .. } => ExtReal::from_value(value),
                Maximizer::Unbounded => ExtReal::INF,
            },
            // Maximizer lambda/(lambda - y), value -lambda ln(1 - y/lambda);
            // the maximizer passes the cap once y/lambda > 1 - 1/cap.
            DivergenceKind::Burg => {
                let t = y / lambda;
                if t > 1.0 - 1.0 / NUMERIC_CAP {
                    ExtReal::INF
                } else {
                    ExtReal::from_value(-lambda * (-t).ln_1p())
                }
            }
            // Maximizer sqrt(lambda/(lambda - y)), value 2(lambda -
            // sqrt(lambda (lambda - y))), rationalized for small y. The
            // maximizer cannot pass the cap at double precision.
            DivergenceKind::NeymanChiSq => {
                if y >= lambda {
                    ExtReal::INF
                } else {
                    let s = (lambda * (lambda - y)).sqrt();
                    ExtReal::from_value(2.0 * lambda * y / (lambda + s))
                }
            }
            // Maximizer (lambda/(lambda - y))^2, value lambda y/(lambda - y);
            // past the cap once y > lambda (1 - 1/sqrt(cap)).
            DivergenceKind::Hellinger => {
                if y > lambda * (1.0 - 1.0 / NUMERIC_CAP.sqrt()) {
                    ExtReal::INF
                } else {
                    ExtReal::from_value(lambda * y / (lambda - y))
                }
            }
            DivergenceKind::EssSupIndicator => {
                if y > 0.0 {
                    ExtReal::INF
                } else {
                    ExtReal::ZERO
                }
            }
        }
    }

    /// Numeric conjugate oracle: doubling bracket capped at [`NUMERIC_CAP`],
    /// then golden-section to absolute `x` tolerance `tol`. Independent of
    /// the closed forms, which it cross-checks.
    pub fn conjugate_numeric(
        &self,
        lambda: f64,
        y: f64,
        tol: f64,
    ) -> Result<ExtReal, DivergenceError> {
        assert!(lambda > 0.0 && lambda.is_finite(), "numeric conjugate needs lambda > 0");
        assert!(y.is_finite());
        if !(tol > 0.0) {
            return Err(DivergenceError::InvalidParameter(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let m = |x: f64| x * y - lambda * self.phi_raw(x);
        let window = self.domain_upper.raw().min(NUMERIC_CAP);
        match bracket_peak(&m, window, self.domain_upper.raw() > NUMERIC_CAP) {
            None => Ok(ExtReal::INF),
            Some(hi) => {
                let r = golden_max(&m, 0.0, hi, tol, GOLDEN_BUDGET);
                if r.width > tol && r.width > 1e-12 * hi.max(1.0) {
                    return Err(DivergenceError::NonConvergence { width: r.width, tol });
                }
                // x = 1 is always feasible with phi(1) = 0, so the supremum
                // is at least y; folding that candidate in also makes kinks
                // sitting exactly at 1 come out exact.
                Ok(ExtReal::from_value(r.value.max(y)))
            }
        }
    }

    /// Conjugate of the truncated divergence `phi + indicator([0, L])`:
    /// the supremum of `x y - lambda phi(x)` over `x in [0, L]`. Always
    /// finite; requires `1 <= L <= 1e12` so that the window contains 1 and
    /// stays inside the numeric cap.
    pub fn truncated_conjugate(&self, lambda: f64, y: f64, trunc: f64) -> f64 {
        assert!(
            (1.0..=NUMERIC_CAP).contains(&trunc),
            "truncation level must lie in [1, 1e12], got {trunc}"
        );
        assert!(lambda >= 0.0 && lambda.is_finite());
        assert!(y.is_finite());
        if lambda == 0.0 {
            return self.support_function(y, Some(trunc)).expect_finite("truncated support");
        }
        match self.maximizer(lambda, y, Some(trunc)) {
            Maximizer::Finite { value, .. } => value,
            Maximizer::Unbounded => unreachable!("truncated window is compact"),
        }
    }

    /// Maximizer of `x y - lambda phi(x)` over the (possibly truncated)
    /// domain window, in closed form for every entry; this is what turns a
    /// dual solution back into a worst-case density. On flat argmax sets the
    /// smallest maximizer is returned. `Unbounded` means the free maximizer
    /// fell past [`NUMERIC_CAP`] and can only surface without truncation.
    pub(crate) fn maximizer(&self, lambda: f64, y: f64, trunc: Option<f64>) -> Maximizer {
        debug_assert!(lambda > 0.0);
        let window = trunc
            .map(|l| l.min(self.domain_upper.raw()))
            .unwrap_or_else(|| self.domain_upper.raw().min(NUMERIC_CAP));
        let capped = trunc.is_none() && self.domain_upper.raw() > NUMERIC_CAP;
        let m = |x: f64| x * y - lambda * self.phi_raw(x);
        // Free maximizer over the whole domain, +inf when the maximand keeps
        // rising; the window clamp below is exact because the maximand is
        // concave.
        let free = match self.kind {
            DivergenceKind::Kl => (y / lambda).exp(),
            DivergenceKind::CressieRead { k } => {
                let base = 1.0 + y * (k - 1.0) / lambda;
                if base <= 0.0 {
                    // k > 1: the maximand is decreasing on the whole domain.
                    // k < 1: y is at or past the asymptotic slope
                    // lambda/(1-k) and the maximand rises forever.
                    if k > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    base.powf(1.0 / (k - 1.0))
                }
            }
            DivergenceKind::Variation => {
                if y > lambda {
                    f64::INFINITY
                } else if y == -lambda {
                    // Argmax set [0, 1]; smallest.
                    0.0
                } else if y >= -lambda {
                    // Argmax set is {1}, or [1, window] at y = lambda.
                    1.0
                } else {
                    0.0
                }
            }
            DivergenceKind::Burg => {
                let t = y / lambda;
                if t >= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (1.0 - t)
                }
            }
            DivergenceKind::NeymanChiSq => {
                if y >= lambda {
                    f64::INFINITY
                } else {
                    (lambda / (lambda - y)).sqrt()
                }
            }
            DivergenceKind::Hellinger => {
                if y >= lambda {
                    f64::INFINITY
                } else {
                    let r = lambda / (lambda - y);
                    r * r
                }
            }
            // Linear maximand on the domain window.
            DivergenceKind::CvarIndicator { .. } | DivergenceKind::EssSupIndicator => {
                if y > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        };
        if free > window {
            if capped && free > NUMERIC_CAP {
                return Maximizer::Unbounded;
            }
            return Maximizer::Finite { x: window, value: m(window) };
        }
        Maximizer::Finite { x: free, value: m(free) }
    }

    /// Support function of `dom(phi)` intersected with `[0, trunc]`; the
    /// `lambda = 0` conjugate.
    fn support_function(&self, y: f64, trunc: Option<f64>) -> ExtReal {
        let upper = match trunc {
            Some(l) => ExtReal::finite(l).min(self.domain_upper),
            None => self.domain_upper,
        };
        match upper.finite_value() {
            Some(u) => ExtReal::finite((u * y).max(0.0)),
            None => {
                if y > 0.0 {
                    ExtReal::INF
                } else {
                    ExtReal::ZERO
                }
            }
        }
    }

    /// The growth function `g(x) = inf_{x' >= x} phi(x')/x'` for `x >= 1`.
    ///
    /// For a convex `phi >= 0` with `phi(1) = 0`, `phi(x)/x` factors as the
    /// secant slope from 1 times `(x-1)/x`, both nondecreasing on `[1, inf)`,
    /// so the infimum is attained at `x' = x` and `g(x) = phi(x)/x` for the
    /// whole catalog. The indicator entries jump straight to `+inf` at the
    /// domain edge.
    pub fn growth_value(&self, x: f64) -> ExtReal {
        assert!(x >= 1.0, "growth function is defined on [1, inf), got {x}");
        self.phi_value(x).weighted(1.0 / x)
    }

    /// Generalized inverse of the growth function: the least `x >= 1` with
    /// `g(x) >= y`, for `y > 0`.
    ///
    /// For `cvar` this is `1/alpha` whatever `y` is, since `g` jumps from 0
    /// to `+inf` there. Everything else is bisected to relative tolerance
    /// 1e-12 after a doubling bracket; if even `g(1e12)` stays below `y`
    /// (every sublinear entry for `y` above its asymptote, `ess_sup` always)
    /// the inverse is unattainable and [`DivergenceError::GrowthUnbounded`]
    /// is returned.
    pub fn growth_inverse(&self, y: f64) -> Result<f64, DivergenceError> {
        assert!(y > 0.0 && y.is_finite(), "growth inverse needs y > 0, got {y}");
        if let DivergenceKind::CvarIndicator { alpha } = self.kind {
            return Ok(1.0 / alpha);
        }
        let g = |x: f64| self.growth_value(x).raw();
        if g(NUMERIC_CAP) < y {
            return Err(DivergenceError::GrowthUnbounded { y });
        }
        let mut hi = 1.0_f64;
        while g(hi) < y {
            hi = (2.0 * hi).min(NUMERIC_CAP);
        }
        if hi == 1.0 {
            return Ok(1.0);
        }
        Ok(bisect_first_true(|x| g(x) >= y, hi / 2.0, hi, 1e-12))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DivergenceKind::Kl => "kl",
            DivergenceKind::CvarIndicator { .. } => "cvar",
            DivergenceKind::CressieRead { .. } => "cressie_read",
            DivergenceKind::Variation => "variation",
            DivergenceKind::Burg => "burg",
            DivergenceKind::NeymanChiSq => "neyman_chi_sq",
            DivergenceKind::Hellinger => "hellinger",
            DivergenceKind::EssSupIndicator => "ess_sup",
        }
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::CvarIndicator { alpha } => write!(f, "cvar(alpha={alpha})"),
            DivergenceKind::CressieRead { k } => write!(f, "cressie_read(k={k})"),
            _ => f.write_str(self.name()),
        }
    }
}

pub(crate) enum Maximizer {
    Finite { x: f64, value: f64 },
    Unbounded,
}

/// Doubling bracket for a concave maximand on `[0, window]`. Returns a right
/// end that brackets the peak, or `None` when the window is the artificial
/// numeric cap and the maximand is still rising there (supremum reported as
/// unbounded).
fn bracket_peak(m: &impl Fn(f64) -> f64, window: f64, capped: bool) -> Option<f64> {
    if window <= 1.0 {
        return Some(window);
    }
    let mut hi = 1.0_f64;
    while hi < window {
        let next = (2.0 * hi).min(window);
        let stop = m(next) <= m(hi);
        hi = next;
        if stop {
            return Some(hi);
        }
    }
    if capped && m(window) > m(window * (1.0 - 1e-9)) {
        return None;
    }
    Some(window)
}

// --- JSON shape: {"name": "cvar", "params": {"alpha": 0.1}} ---

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    name: String,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    params: Params,
}

#[derive(Serialize, Deserialize, Default)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
}

impl Params {
    fn is_empty(&self) -> bool {
        self.alpha.is_none() && self.k.is_none()
    }
}

impl From<DivergenceSpec> for SpecRepr {
    fn from(spec: DivergenceSpec) -> SpecRepr {
        let mut params = Params::default();
        match spec.kind {
            DivergenceKind::CvarIndicator { alpha } => params.alpha = Some(alpha),
            DivergenceKind::CressieRead { k } => params.k = Some(k),
            _ => {}
        }
        SpecRepr { name: spec.name().to_owned(), params }
    }
}

impl TryFrom<SpecRepr> for DivergenceSpec {
    type Error = DivergenceError;

    fn try_from(repr: SpecRepr) -> Result<DivergenceSpec, DivergenceError> {
        let missing = |what: &str| {
            DivergenceError::InvalidParameter(format!("{} requires params.{what}", repr.name))
        };
        match repr.name.as_str() {
            "kl" => Ok(DivergenceSpec::kl()),
            "cvar" => DivergenceSpec::cvar(repr.params.alpha.ok_or_else(|| missing("alpha"))?),
            "cressie_read" => {
                DivergenceSpec::cressie_read(repr.params.k.ok_or_else(|| missing("k"))?)
            }
            "variation" => Ok(DivergenceSpec::variation()),
            "burg" => Ok(DivergenceSpec::burg()),
            "neyman_chi_sq" => Ok(DivergenceSpec::neyman_chi_sq()),
            "hellinger" => Ok(DivergenceSpec::hellinger()),
            "ess_sup" => Ok(DivergenceSpec::ess_sup()),
            other => Err(DivergenceError::InvalidParameter(format!(
                "unknown divergence name {other:?}"
            ))),
        }
    }
}
