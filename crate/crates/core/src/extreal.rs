//! Values on the extended half-line `(-inf, +inf]`.
//!
//! Divergence values `phi(x)` and conjugates `(lambda*phi)*(y)` are `+inf` off
//! their effective domains, so infinities are ordinary data here. What is
//! never ordinary data is NaN or `-inf`: every constructor rejects them, and
//! the only arithmetic provided (addition, nonnegative weighting, min/max)
//! cannot produce an indeterminate form from valid inputs.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// A finite `f64` or `+inf`. NaN and `-inf` are unrepresentable by contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INF: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps a finite value. Panics on NaN or any infinity: callers that can
    /// legitimately overflow should use [`ExtReal::from_value`].
    pub fn finite(v: f64) -> ExtReal {
        assert!(v.is_finite(), "ExtReal::finite called with {v}");
        ExtReal(v)
    }

    /// Wraps a value that may have saturated to `+inf` (e.g. an overflowing
    /// `exp`). Panics on NaN or `-inf`.
    pub fn from_value(v: f64) -> ExtReal {
        assert!(!v.is_nan(), "ExtReal::from_value called with NaN");
        assert!(v != f64::NEG_INFINITY, "ExtReal::from_value called with -inf");
        ExtReal(v)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// The finite value, if any.
    pub fn finite_value(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// The finite value; panics with `what` if the value is `+inf`.
    pub fn expect_finite(self, what: &str) -> f64 {
        assert!(self.is_finite(), "{what} is +inf");
        self.0
    }

    /// Raw representation, with `+inf` mapped to `f64::INFINITY`. Useful at
    /// the boundary to numeric code that understands IEEE infinities.
    pub fn raw(self) -> f64 {
        self.0
    }

    /// Scales by a strictly positive weight, or by zero when the value is
    /// finite. `0 * inf` is the one indeterminate form reachable through
    /// multiplication, so it is rejected; callers skip zero-probability atoms.
    pub fn weighted(self, w: f64) -> ExtReal {
        assert!(w >= 0.0 && w.is_finite(), "weight must be finite and >= 0, got {w}");
        assert!(
            w > 0.0 || self.is_finite(),
            "0 * inf is indeterminate; drop zero-weight terms instead"
        );
        ExtReal(self.0 * w)
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    // fin + fin may saturate to +inf, which is the correct reading; inf + fin
    // and inf + inf are +inf. -inf is unrepresentable, so no NaN can form.
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal(self.0 + rhs.0)
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        assert!(!rhs.is_nan() && rhs != f64::NEG_INFINITY);
        ExtReal(self.0 + rhs)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &ExtReal) -> Option<Ordering> {
        Some(self.cmp_total(other))
    }
}

impl ExtReal {
    // The representable subset is totally ordered; expose that directly.
    fn cmp_total(&self, other: &ExtReal) -> Ordering {
        self.0.partial_cmp(&other.0).expect("ExtReal is NaN-free")
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.0
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "inf")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_addition() {
        let v = ExtReal::finite(2.5) + ExtReal::INF;
        assert!(v.is_infinite());
        assert_eq!(ExtReal::finite(1.0) + ExtReal::finite(2.0), ExtReal::finite(3.0));
    }

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(ExtReal::finite(1e300) < ExtReal::INF);
        assert!(ExtReal::finite(-3.0) < ExtReal::finite(0.0));
        assert_eq!(ExtReal::INF.max(ExtReal::finite(7.0)), ExtReal::INF);
        assert_eq!(ExtReal::INF.min(ExtReal::finite(7.0)), ExtReal::finite(7.0));
    }

    #[test]
    #[should_panic(expected = "NaN")]
    fn nan_is_rejected() {
        let _ = ExtReal::from_value(f64::NAN);
    }

    #[test]
    #[should_panic(expected = "indeterminate")]
    fn zero_times_infinity_is_rejected() {
        let _ = ExtReal::INF.weighted(0.0);
    }

    #[test]
    fn weighting_scales_finite_values() {
        assert_eq!(ExtReal::finite(4.0).weighted(0.25), ExtReal::finite(1.0));
        assert!(ExtReal::INF.weighted(0.5).is_infinite());
        assert_eq!(ExtReal::finite(4.0).weighted(0.0), ExtReal::ZERO);
    }
}
