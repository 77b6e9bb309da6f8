//! Real root isolation for univariate polynomials on a bounded interval.
//!
//! Roots of `p` are separated by roots of `p'`, so isolating the critical
//! points recursively splits the interval into pieces on which `p` is
//! monotone. Each piece holds at most one root, found by bisection.

use crate::series::horner;

/// Roots and near-tangencies of a polynomial on `[lo, hi]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Isolation {
    /// Simple (sign-changing) roots in increasing order.
    pub roots: Vec<f64>,
    /// Critical points where `|p|` dips below the tangency threshold without
    /// a sign change (even-multiplicity roots up to rounding).
    pub tangencies: Vec<f64>,
}

pub const TANGENCY_THRESHOLD: f64 = 1e-9;

/// Polynomial value for ascending coefficients.
#[inline]
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    horner(coeffs, x)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

fn trim(coeffs: &[f64]) -> &[f64] {
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1] == 0.0 {
        end -= 1;
    }
    &coeffs[..end]
}

/// Cauchy bound: every real root satisfies `|x| ≤ 1 + max |a_k / a_n|`.
pub fn cauchy_bound(coeffs: &[f64]) -> f64 {
    let c = trim(coeffs);
    match c.split_last() {
        None => 0.0,
        Some((&lead, rest)) if lead != 0.0 => {
            1.0 + rest.iter().map(|a| (a / lead).abs()).fold(0.0, f64::max)
        }
        Some(_) => 0.0,
    }
}

/// Bisection of a bracketed sign change to interval width `width`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut f_lo = f(lo);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Isolates every real root of `coeffs` (ascending order) in `[lo, hi]`.
pub fn isolate(coeffs: &[f64], lo: f64, hi: f64, width: f64) -> Isolation {
    let c = trim(coeffs);
    let mut out = Isolation::default();
    if c.len() < 2 || hi <= lo {
        return out;
    }
    let critical = if c.len() > 2 {
        isolate_all(&derivative(c), lo, hi, width)
    } else {
        Vec::new()
    };

    let mut knots = Vec::with_capacity(critical.len() + 2);
    knots.push(lo);
    knots.extend(critical.iter().copied().filter(|&x| x > lo && x < hi));
    knots.push(hi);

    // A knot where |p| falls below the tangency threshold is resolved by its
    // neighbouring knots: same sign on both sides means a tangency, opposite
    // signs a root located at the knot itself.
    let mut values: Vec<f64> = knots.iter().map(|&x| eval(c, x)).collect();
    let mut crossing = vec![false; knots.len()];
    for i in 1..knots.len() - 1 {
        if values[i].abs() >= TANGENCY_THRESHOLD {
            continue;
        }
        let (left, right) = (values[i - 1], values[i + 1]);
        if left != 0.0 && right != 0.0 && (left < 0.0) == (right < 0.0) {
            out.tangencies.push(knots[i]);
            values[i] = left;
        } else {
            crossing[i] = true;
            values[i] = 0.0;
        }
    }
    if values[0] == 0.0 {
        crossing[0] = true;
    }
    if values[knots.len() - 1] == 0.0 {
        crossing[knots.len() - 1] = true;
    }

    for i in 0..knots.len() {
        if crossing[i] {
            push_unique(&mut out.roots, knots[i], width);
        }
        if i + 1 < knots.len() {
            let (fa, fb) = (values[i], values[i + 1]);
            if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
                let r = bisect(|x| eval(c, x), knots[i], knots[i + 1], width);
                push_unique(&mut out.roots, r, width);
            }
        }
    }
    out
}

/// All roots including tangencies; used for the critical-point recursion
/// where every extremum location matters.
fn isolate_all(coeffs: &[f64], lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let iso = isolate(coeffs, lo, hi, width);
    let mut all = iso.roots;
    all.extend(iso.tangencies);
    all.sort_by(f64::total_cmp);
    all
}

fn push_unique(roots: &mut Vec<f64>, x: f64, width: f64) {
    if roots.last().is_none_or(|&last| x - last > width) {
        roots.push(x);
    }
}
