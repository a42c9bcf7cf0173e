//! One-dimensional search primitives shared by the conjugate evaluator and
//! the dual solver. All routines are derivative-free and deterministic.

/// (sqrt(5) - 1) / 2, the golden-section interior ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub(crate) struct GoldenResult {
    /// Peak location; exercised by tests, informational to callers.
    #[allow(dead_code)]
    pub x: f64,
    pub value: f64,
    /// Final bracket width. Callers decide whether a stalled bracket counts
    /// as convergence (it does once the width is at floating-point scale).
    pub width: f64,
}

/// Golden-section maximization of a concave function on `[lo, hi]`.
///
/// `f` may return `-inf` outside its effective domain (the finite region of a
/// concave function is an interval, so the probes still bracket correctly).
/// Ties keep the left subinterval, which biases the reported maximizer toward
/// the smallest one on flat tops. The best sampled point is returned, and the
/// sample set always includes both endpoints.
pub(crate) fn golden_max(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: u32,
) -> GoldenResult {
    debug_assert!(lo <= hi && tol > 0.0);
    let mut a = lo;
    let mut b = hi;
    let mut best_x = a;
    let mut best_v = f(a);
    let consider = |x: f64, v: f64, best_x: &mut f64, best_v: &mut f64| {
        if v > *best_v || (v == *best_v && x < *best_x) {
            *best_x = x;
            *best_v = v;
        }
    };
    let vb = f(b);
    consider(b, vb, &mut best_x, &mut best_v);
    if b - a <= tol {
        return GoldenResult { x: best_x, value: best_v, width: b - a };
    }

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    consider(c, fc, &mut best_x, &mut best_v);
    consider(d, fd, &mut best_x, &mut best_v);
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            // Bracket can stall once c collides with its neighbors at
            // floating-point resolution; stop rather than loop on noise.
            if c <= a || c >= d {
                break;
            }
            fc = f(c);
            consider(c, fc, &mut best_x, &mut best_v);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            if d <= c || d >= b {
                break;
            }
            fd = f(d);
            consider(d, fd, &mut best_x, &mut best_v);
        }
    }
    GoldenResult { x: best_x, value: best_v, width: b - a }
}

pub(crate) struct TernaryResult {
    pub x: f64,
    pub value: f64,
}

/// Ternary minimization of a convex function on `[lo, hi]`.
///
/// `f` may return `+inf`, but only on an interval attached to the left
/// endpoint (true of both axes of the dual objective: the conjugate blows up
/// for small multipliers and for small shifts, never large ones), and `f(hi)`
/// must be finite. Returns the best sampled point, which is always a true
/// function value and hence a valid upper bound on the minimum even when the
/// bracket has not collapsed. Each iteration shrinks the bracket by 2/3.
pub(crate) fn ternary_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: u32) -> TernaryResult {
    debug_assert!(lo <= hi);
    let mut a = lo;
    let mut b = hi;
    let mut best_x = b;
    let mut best_v = f(b);
    debug_assert!(best_v < f64::INFINITY, "ternary_min: f(hi) must be finite");
    let consider = |x: f64, v: f64, bx: &mut f64, bv: &mut f64| {
        if v < *bv {
            *bx = x;
            *bv = v;
        }
    };
    for _ in 0..iters {
        let third = (b - a) / 3.0;
        let m1 = a + third;
        let m2 = b - third;
        if !(m1 < m2) {
            break;
        }
        let f1 = f(m1);
        let f2 = f(m2);
        consider(m1, f1, &mut best_x, &mut best_v);
        consider(m2, f2, &mut best_x, &mut best_v);
        if f2 == f64::INFINITY {
            // The infinite region is left-attached, so the minimum lies
            // strictly to the right of m2.
            a = m2;
        } else if f1 == f64::INFINITY {
            a = m1;
        } else if f1 <= f2 {
            b = m2;
        } else {
            a = m1;
        }
    }
    let mid = 0.5 * (a + b);
    consider(mid, f(mid), &mut best_x, &mut best_v);
    TernaryResult { x: best_x, value: best_v }
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// true on `[lo, x*]` and false beyond. Requires `pred(lo)`; `pred(hi)` may
/// be true (then `hi` is returned). The result is exact to `tol` or to
/// floating-point resolution, whichever is coarser.
pub(crate) fn bisect_last_true(pred: impl Fn(f64) -> bool, lo: f64, hi: f64, tol: f64) -> f64 {
    debug_assert!(lo <= hi);
    debug_assert!(pred(lo), "bisect_last_true: predicate must hold at lo");
    if pred(hi) {
        return hi;
    }
    let mut t = lo; // invariant: pred(t)
    let mut u = hi; // invariant: !pred(u)
    for _ in 0..200 {
        if u - t <= tol {
            break;
        }
        let mid = 0.5 * (t + u);
        if mid <= t || mid >= u {
            break;
        }
        if pred(mid) {
            t = mid;
        } else {
            u = mid;
        }
    }
    t
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// false on `[lo, x*)` and true from `x*` on. Requires `pred(hi)`.
pub(crate) fn bisect_first_true(
    pred: impl Fn(f64) -> bool,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> f64 {
    debug_assert!(lo <= hi);
    debug_assert!(pred(hi), "bisect_first_true: predicate must hold at hi");
    if pred(lo) {
        return lo;
    }
    let mut t = lo; // invariant: !pred(t)
    let mut u = hi; // invariant: pred(u)
    for _ in 0..200 {
        if u - t <= rel_tol * u.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (t + u);
        if mid <= t || mid >= u {
            break;
        }
        if pred(mid) {
            u = mid;
        } else {
            t = mid;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_max_finds_parabola_peak() {
        let r = golden_max(|x| -(x - 1.3) * (x - 1.3), 0.0, 10.0, 1e-10, 200);
        assert!((r.x - 1.3).abs() < 1e-7, "argmax {}", r.x);
        assert!(r.value > -1e-13);
        assert!(r.width <= 1e-10);
    }

    #[test]
    fn golden_max_handles_minus_infinity_tails() {
        // Concave with effective domain (0.5, inf): -inf plateau on the left.
        let f = |x: f64| if x <= 0.5 { f64::NEG_INFINITY } else { (x - 0.5).ln() - x };
        let r = golden_max(f, 0.0, 50.0, 1e-10, 300);
        assert!((r.x - 1.5).abs() < 1e-6, "argmax {}", r.x);
    }

    #[test]
    fn golden_max_on_plateau_prefers_left() {
        let f = |x: f64| if x < 2.0 { x } else { 2.0 };
        let r = golden_max(f, 0.0, 8.0, 1e-12, 300);
        assert!((r.value - 2.0).abs() < 1e-9);
        assert!(r.x <= 2.0 + 1e-6, "plateau maximizer should be its left edge, got {}", r.x);
    }

    #[test]
    fn ternary_min_finds_quartic_valley() {
        let f = |x: f64| (x - 0.7).powi(4) + 2.0;
        let r = ternary_min(f, -5.0, 5.0, 120);
        assert!((r.x - 0.7).abs() < 1e-4, "argmin {}", r.x);
        assert!((r.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ternary_min_steps_over_left_infinite_region() {
        // Convex, +inf on [lo, 1), minimized at 2.
        let f = |x: f64| if x < 1.0 { f64::INFINITY } else { (x - 2.0) * (x - 2.0) };
        let r = ternary_min(f, -100.0, 50.0, 160);
        assert!((r.x - 2.0).abs() < 1e-6, "argmin {}", r.x);
        assert!(r.value < 1e-12);
    }

    #[test]
    fn bisect_finds_threshold_from_both_sides() {
        let last = bisect_last_true(|x| x * x <= 2.0, 0.0, 10.0, 1e-12);
        assert!((last - 2.0_f64.sqrt()).abs() < 1e-9);
        let first = bisect_first_true(|x| x * x >= 2.0, 0.0, 10.0, 1e-14);
        assert!((first - 2.0_f64.sqrt()).abs() < 1e-9);
    }
}
