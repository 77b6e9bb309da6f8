//! Single-machine-infinite-bus analytics.
//!
//! The SMIB swing equation `δ̈ + αδ̇ + β(sin δ − sin δ_s) = 0` has its
//! controlling unstable equilibrium at `δ_u1 = π − δ_s`. Its order-`n`
//! truncated expansion about `δ_s` has an approximate UEP at the smallest
//! root `δ > δ_s` of `Σ_{k=1..n} sin(δ_s + kπ/2)/k! (δ − δ_s)^k = 0`, which
//! decides whether the surrogate's stability verdicts are conservative
//! (estimate below `δ_u1`) or optimistic (above, or absent).

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;
use crate::series::pair_coefficients;

/// Highest order accepted by the numeric UEP search.
pub const MAX_ORDER: usize = 15;
/// Upper end of the displacement window searched for the approximate UEP.
pub const UEP_WINDOW: f64 = 4.0 * PI;
/// Bisection width for the approximate UEP.
pub const ROOT_WIDTH: f64 = 1e-10;
/// Bisection width on `δ_s` for the existence thresholds.
pub const THRESHOLD_WIDTH: f64 = 1e-4;
/// Slack allowed in the ordering chains; covers the root bisection width.
pub const ORDERING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmibParams {
    delta_s: f64,
    alpha: f64,
    beta: f64,
}

impl SmibParams {
    pub fn new(delta_s: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(delta_s > 0.0 && delta_s < FRAC_PI_2) {
            return Err(Error::InvalidInput(format!(
                "delta_s must lie in (0, pi/2), got {delta_s}"
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self { delta_s, alpha, beta })
    }

    /// Parameters where only the operating angle matters (UEP analytics).
    pub fn at_angle(delta_s: f64) -> Result<Self> {
        Self::new(delta_s, 0.0, 1.0)
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Controlling UEP of the original system.
    pub fn delta_u1(&self) -> f64 {
        PI - self.delta_s
    }

    pub fn delta_u2(&self) -> f64 {
        -PI - self.delta_s
    }
}

/// Approximate UEP `δ_u1_TEn`, absent when the truncated restoring force
/// never vanishes beyond the SEP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UepEstimate {
    pub order: usize,
    pub delta_s: f64,
    pub value: Option<f64>,
}

impl UepEstimate {
    pub fn is_present(&self) -> bool {
        self.value.is_some()
    }

    /// `value − (π − δ_s)`; negative means conservative.
    pub fn error(&self) -> Option<f64> {
        self.value.map(|v| v - (PI - self.delta_s))
    }
}

/// Closed-form approximate UEP for orders 2 and 3.
pub fn uep_closed_form(p: &SmibParams, order: usize) -> Result<UepEstimate> {
    let ds = p.delta_s;
    let (s, c) = ds.sin_cos();
    let value = match order {
        2 => ds + 2.0 * c / s,
        3 => ds + ((9.0 + 15.0 * c * c).sqrt() - 3.0 * s) / (2.0 * c),
        _ => {
            return Err(Error::UnsupportedOrder {
                order,
                reason: "closed forms exist only for orders 2 and 3",
            })
        }
    };
    Ok(UepEstimate {
        order,
        delta_s: ds,
        value: Some(value),
    })
}

/// Coefficients of `Σ_{k=1..n} c_k x^{k-1}`, i.e. the order-`n` restoring
/// force divided by the trivial root `x = 0`.
pub fn reduced_force_coefficients(delta_s: f64, order: usize) -> Result<Vec<f64>> {
    let series = pair_coefficients(1.0, 0.0, delta_s, order)?;
    Ok(series.coeffs()[1..].to_vec())
}

/// Smallest root `x ∈ (0, window]` of the truncated restoring force, using
/// exact critical-point partitioning of the window. Pass `None` to search up
/// to the Cauchy bound.
pub fn smallest_positive_root(
    delta_s: f64,
    order: usize,
    window: Option<f64>,
) -> Result<Option<f64>> {
    let g = reduced_force_coefficients(delta_s, order)?;
    let bound = roots::cauchy_bound(&g) * (1.0 + 1e-12);
    let upper = window.map_or(bound, |w| w.min(bound));
    if upper <= 0.0 {
        return Ok(None);
    }
    let iso = roots::isolate(&g, 0.0, upper, ROOT_WIDTH);
    Ok(iso.roots.into_iter().find(|&x| x > 0.0))
}

/// Numeric approximate UEP for any order in `2..=15`: `δ_s + x` for the
/// smallest root `x` in the search window `(0, 4π]`. Far roots outside the
/// window (order 2 below δ_s ≈ 0.158, order 6 below its threshold) count as
/// absent.
pub fn uep_numeric(p: &SmibParams, order: usize) -> Result<UepEstimate> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder {
            order,
            reason: "numeric UEP search supports orders 2..=15",
        });
    }
    let x = smallest_positive_root(p.delta_s, order, Some(UEP_WINDOW))?;
    Ok(UepEstimate {
        order,
        delta_s: p.delta_s,
        value: x.map(|x| p.delta_s + x),
    })
}

fn uep_at(delta_s: f64, order: usize) -> Option<f64> {
    SmibParams::at_angle(delta_s)
        .and_then(|p| uep_numeric(&p, order))
        .ok()
        .and_then(|u| u.value)
}

/// `δ_s` at which the order-5 or order-6 approximate UEP appears, located by
/// bisection on the absent/present transition.
pub fn existence_threshold(order: usize) -> Result<f64> {
    if order != 5 && order != 6 {
        return Err(Error::UnsupportedOrder {
            order,
            reason: "existence thresholds are defined for orders 5 and 6",
        });
    }
    let (mut lo, mut hi) = (1e-3, 1.0);
    debug_assert!(uep_at(lo, order).is_none() && uep_at(hi, order).is_some());
    while hi - lo > THRESHOLD_WIDTH {
        let mid = 0.5 * (lo + hi);
        if uep_at(mid, order).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `δ_s` grid `{step, 2·step, ...} ∩ (0, π/2)`.
pub fn angle_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be > 0, got {step}")));
    }
    Ok((1..)
        .map(|k| k as f64 * step)
        .take_while(|&d| d < FRAC_PI_2)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_s: f64,
    pub order: usize,
    pub estimate: Option<f64>,
    pub error: Option<f64>,
}

/// Approximate UEPs over the `δ_s` grid for each requested order. Rows are
/// ordered by `δ_s`, then by the position of the order in `orders`.
pub fn sweep_ueps(orders: &[usize], step: f64) -> Result<Vec<SweepRow>> {
    for &n in orders {
        if !(2..=MAX_ORDER).contains(&n) {
            return Err(Error::UnsupportedOrder {
                order: n,
                reason: "numeric UEP search supports orders 2..=15",
            });
        }
    }
    let grid = angle_grid(step)?;
    let rows: Vec<Vec<SweepRow>> = grid
        .par_iter()
        .map(|&ds| {
            orders
                .iter()
                .map(|&n| {
                    let estimate = uep_at(ds, n);
                    SweepRow {
                        delta_s: ds,
                        order: n,
                        estimate,
                        error: estimate.map(|v| v - (PI - ds)),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Orders whose approximate UEP stays below `δ_u1`.
pub const CONSERVATIVE_CHAIN: [usize; 4] = [3, 4, 7, 8];
/// Orders whose approximate UEP stays above `δ_u1` (or vanishes).
pub const OPTIMISTIC_CHAIN: [usize; 4] = [2, 5, 6, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chain {
    Conservative,
    Optimistic,
}

/// One broken link. `None` in an order slot stands for the true UEP `δ_u1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingViolation {
    pub delta_s: f64,
    pub chain: Chain,
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub lower_value: f64,
    pub upper_value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub points: usize,
    /// `(δ_s, order)` pairs skipped because the estimate was absent.
    pub absent: Vec<(f64, usize)>,
    pub violations: Vec<OrderingViolation>,
}

impl OrderingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both ordering chains at one operating angle.
///
/// Conservative: `TE3 ≤ TE4 ≤ TE7 ≤ TE8 ≤ δ_u1`. Optimistic:
/// `TE2 ≥ TE5 ≥ TE6 ≥ TE9 ≥ δ_u1`, with absent estimates dropped from the
/// chain.
pub fn check_ordering_at(delta_s: f64) -> OrderingReport {
    let u1 = PI - delta_s;
    let mut report = OrderingReport {
        points: 1,
        ..Default::default()
    };
    for (chain, orders) in [
        (Chain::Conservative, CONSERVATIVE_CHAIN),
        (Chain::Optimistic, OPTIMISTIC_CHAIN),
    ] {
        let mut links: Vec<(Option<usize>, f64)> = Vec::with_capacity(5);
        for n in orders {
            match uep_at(delta_s, n) {
                Some(v) => links.push((Some(n), v)),
                None => report.absent.push((delta_s, n)),
            }
        }
        links.push((None, u1));
        for w in links.windows(2) {
            let ((a, va), (b, vb)) = (w[0], w[1]);
            let (lower, upper, lower_value, upper_value) = match chain {
                Chain::Conservative => (a, b, va, vb),
                Chain::Optimistic => (b, a, vb, va),
            };
            if lower_value > upper_value + ORDERING_SLACK {
                report.violations.push(OrderingViolation {
                    delta_s,
                    chain,
                    lower,
                    upper,
                    lower_value,
                    upper_value,
                });
            }
        }
    }
    report
}

/// Ordering chains over the whole `δ_s` grid.
pub fn check_ordering(step: f64) -> Result<OrderingReport> {
    let grid = angle_grid(step)?;
    let parts: Vec<OrderingReport> = grid.par_iter().map(|&d| check_ordering_at(d)).collect();
    let mut out = OrderingReport::default();
    for p in parts {
        out.points += p.points;
        out.absent.extend(p.absent);
        out.violations.extend(p.violations);
    }
    Ok(out)
}

/// Claim 1 gap `y(x) = 2 arccos x + 2x/√(1−x²) − π` with `x = cos δ_s`, i.e.
/// `δ_u1_TE2 − δ_u1`.
pub fn claim1_gap(x: f64) -> f64 {
    2.0 * x.acos() + 2.0 * x / (1.0 - x * x).sqrt() - PI
}

/// Claim 2 gap `y(x) = 2 arccos x + (√(9+15x²) − 3√(1−x²))/(2x) − π`, i.e.
/// `δ_u1_TE3 − δ_u1`.
pub fn claim2_gap(x: f64) -> f64 {
    2.0 * x.acos() + ((9.0 + 15.0 * x * x).sqrt() - 3.0 * (1.0 - x * x).sqrt()) / (2.0 * x) - PI
}

/// Left side of the derivative sign condition for the Claim 2 gap:
/// `(1 − 4x²) √((1 + 5x²/3)/(1 − x²))`; must stay below 3 on `(0, 1)`.
pub fn claim2_condition(x: f64) -> f64 {
    (1.0 - 4.0 * x * x) * ((1.0 + 5.0 * x * x / 3.0) / (1.0 - x * x)).sqrt()
}

/// Upper bound of `claim2_condition` on `(0, 1/2)`: the first factor is at
/// most its value at 0 and the second at most its value at 1/2.
pub fn claim2_condition_bound() -> f64 {
    let first = 1.0 - 4.0 * 0.0f64.powi(2);
    let second = ((1.0f64 + 5.0 * 0.25 / 3.0) / (1.0 - 0.25)).sqrt();
    first * second
}

/// Verdict family predicted for an order: orders `4k` and `4k−1` are
/// conservative, `4k−2` and `4k−3` optimistic.
pub fn conjectured_chain(order: usize) -> Chain {
    match order % 4 {
        0 | 3 => Chain::Conservative,
        _ => Chain::Optimistic,
    }
}

/// SMIB energy: `½ω² − β cos δ − β δ sin δ_s` for the original system, or the
/// polynomial potential `½ω² + β Σ c_k (δ−δ_s)^{k+1}/(k+1)` for order `n`.
/// The sign makes the potential increase away from the SEP for both.
pub fn smib_energy(p: &SmibParams, order: Option<usize>, delta: f64, omega: f64) -> Result<f64> {
    let kinetic = 0.5 * omega * omega;
    let potential = match order {
        None => -p.beta * delta.cos() - p.beta * delta * p.delta_s.sin(),
        Some(n) => {
            let s = pair_coefficients(1.0, 0.0, p.delta_s, n)?;
            let x = delta - p.delta_s;
            s.coeffs()
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * x.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum::<f64>()
                * p.beta
        }
    };
    Ok(kinetic + potential)
}

/// Power-angle curve samples for the original and truncated systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeltaTable {
    pub delta_s: f64,
    pub p_max: f64,
    pub orders: Vec<usize>,
    /// `(δ, P_e, [P_en for each order])`.
    pub rows: Vec<(f64, f64, Vec<f64>)>,
}

impl PdeltaTable {
    /// Mechanical power balancing the SEP.
    pub fn p_m(&self) -> f64 {
        self.p_max * self.delta_s.sin()
    }

    /// First sampled crossing of `P_en` with `P_m` strictly right of `δ_s`.
    pub fn right_intersection(&self, order: usize) -> Option<f64> {
        let col = self.orders.iter().position(|&n| n == order)?;
        let pm = self.p_m();
        let right: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.0 > self.delta_s + 1e-9)
            .map(|r| (r.0, r.2[col] - pm))
            .collect();
        right
            .windows(2)
            .find(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
            .map(|w| w[0].0 - w[0].1 * (w[1].0 - w[0].0) / (w[1].1 - w[0].1))
    }
}

/// Samples `P_e = P_max sin δ` and `P_en = P_max[sin δ_s + Σ c_k (δ−δ_s)^k]`.
pub fn pdelta_curve(
    delta_s: f64,
    p_max: f64,
    orders: &[usize],
    range: (f64, f64),
    samples: usize,
) -> Result<PdeltaTable> {
    let (lo, hi) = range;
    if !(lo <= delta_s && delta_s <= hi) {
        return Err(Error::InvalidInput(format!(
            "delta range [{lo}, {hi}] must contain delta_s = {delta_s}"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidInput("samples must be >= 2".into()));
    }
    if !(p_max.is_finite() && p_max > 0.0) {
        return Err(Error::InvalidInput(format!("p_max must be > 0, got {p_max}")));
    }
    let series = orders
        .iter()
        .map(|&n| pair_coefficients(p_max, 0.0, delta_s, n))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..samples)
        .map(|i| {
            let d = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            let approx = series.iter().map(|s| s.eval(d - delta_s)).collect();
            (d, p_max * d.sin(), approx)
        })
        .collect();
    Ok(PdeltaTable {
        delta_s,
        p_max,
        orders: orders.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn closed_form_values_at_pi_over_six() {
        let p = SmibParams::at_angle(FRAC_PI_6).unwrap();
        // independent evaluation of the two closed forms
        let te2 = FRAC_PI_6 + 2.0 * 3f64.sqrt() / 2.0 / 0.5;
        let te3 = FRAC_PI_6 + ((9.0f64 + 15.0 * 0.75).sqrt() - 1.5) / 3f64.sqrt();
        let u2 = uep_closed_form(&p, 2).unwrap().value.unwrap();
        let u3 = uep_closed_form(&p, 3).unwrap().value.unwrap();
        assert!((u2 - te2).abs() < 1e-12);
        assert!((u3 - te3).abs() < 1e-12);
        assert!((u2 - 3.98769).abs() < 5e-5);
        assert!((u3 - 2.25562).abs() < 5e-5);
        assert!(u3 < 5.0 * PI / 6.0);
    }

    #[test]
    fn closed_form_limit_at_quarter_turn() {
        let p = SmibParams::at_angle(FRAC_PI_2 - 1e-9).unwrap();
        let u = uep_closed_form(&p, 2).unwrap().value.unwrap();
        assert!((u - FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn closed_form_rejects_other_orders() {
        let p = SmibParams::at_angle(0.5).unwrap();
        assert!(uep_closed_form(&p, 4).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SmibParams::new(0.0, 0.0, 1.0).is_err());
        assert!(SmibParams::new(FRAC_PI_2, 0.0, 1.0).is_err());
        assert!(SmibParams::new(0.5, -0.1, 1.0).is_err());
        assert!(SmibParams::new(0.5, 0.1, 0.0).is_err());
        let p = SmibParams::new(0.5, 0.1, 2.0).unwrap();
        assert!((p.delta_u1() - (PI - 0.5)).abs() < 1e-15);
        assert!((p.delta_u2() + PI + 0.5).abs() < 1e-15);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let p = SmibParams::at_angle(FRAC_PI_6).unwrap();
        for n in [2, 3] {
            let a = uep_numeric(&p, n).unwrap().value.unwrap();
            let b = uep_closed_form(&p, n).unwrap().value.unwrap();
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn order_five_absent_at_low_loading() {
        let p = SmibParams::at_angle(0.3).unwrap();
        let u = uep_numeric(&p, 5).unwrap();
        assert!(!u.is_present());
        assert!(u.error().is_none());
    }

    #[test]
    fn high_order_converges_to_true_uep() {
        let p = SmibParams::at_angle(FRAC_PI_6).unwrap();
        let u = uep_numeric(&p, 15).unwrap().value.unwrap();
        assert!((u - 5.0 * PI / 6.0).abs() < 1e-6, "{u}");
    }

    #[test]
    fn numeric_order_range() {
        let p = SmibParams::at_angle(0.5).unwrap();
        assert!(uep_numeric(&p, 1).is_err());
        assert!(uep_numeric(&p, 16).is_err());
    }

    #[test]
    fn thresholds() {
        let t5 = existence_threshold(5).unwrap();
        let t6 = existence_threshold(6).unwrap();
        assert!((t5 - 0.401).abs() < 0.002, "{t5}");
        assert!((t6 - 0.233).abs() < 0.002, "{t6}");
        let p = SmibParams::at_angle(t5 + 0.01).unwrap();
        assert!(uep_numeric(&p, 5).unwrap().is_present());
        assert!(existence_threshold(4).is_err());
    }

    #[test]
    fn sweep_signs() {
        let rows = sweep_ueps(&[2, 3], 0.01).unwrap();
        for r in rows {
            let p = SmibParams::at_angle(r.delta_s).unwrap();
            let closed = uep_closed_form(&p, r.order).unwrap().value.unwrap();
            match (r.order, r.error) {
                (2, Some(e)) => assert!(e > 0.0, "{r:?}"),
                // closed-form root lies beyond the search window
                (2, None) => assert!(closed - r.delta_s > UEP_WINDOW),
                (_, e) => assert!(e.unwrap() < 0.0, "{r:?}"),
            }
        }
        let p = SmibParams::at_angle(1.0).unwrap();
        let e9 = uep_numeric(&p, 9).unwrap().error().unwrap();
        let e6 = uep_numeric(&p, 6).unwrap().error().unwrap();
        assert!(e9.abs() < e6.abs());
    }

    #[test]
    fn ordering_pointwise() {
        let r = check_ordering_at(0.3);
        assert!(r.holds(), "{r:?}");
        assert!(r.absent.contains(&(0.3, 5)));
        let d = std::f64::consts::FRAC_PI_4;
        let te3 = uep_at(d, 3).unwrap();
        let te4 = uep_at(d, 4).unwrap();
        assert!(te3 < te4);
    }

    #[test]
    fn claim_constants() {
        assert!((claim2_gap(1.0) - (6f64.sqrt() - PI)).abs() < 1e-12);
        assert!((claim2_gap(1.0) + 0.6921).abs() < 1e-4);
        assert!((claim2_condition_bound() - 1.3744).abs() < 1e-4);
        assert!(claim1_gap(0.5) > 0.0);
        assert!(claim2_gap(0.5) < 0.0);
    }

    #[test]
    fn claim_gaps_match_estimates() {
        for ds in [0.2, 0.7, 1.3] {
            let p = SmibParams::at_angle(ds).unwrap();
            let x = ds.cos();
            let e2 = uep_closed_form(&p, 2).unwrap().error().unwrap();
            let e3 = uep_closed_form(&p, 3).unwrap().error().unwrap();
            assert!((e2 - claim1_gap(x)).abs() < 1e-9);
            assert!((e3 - claim2_gap(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn conjecture_families() {
        for n in CONSERVATIVE_CHAIN {
            assert_eq!(conjectured_chain(n), Chain::Conservative);
        }
        for n in OPTIMISTIC_CHAIN {
            assert_eq!(conjectured_chain(n), Chain::Optimistic);
        }
    }

    #[test]
    fn pdelta_curves() {
        let ds = 30f64.to_radians();
        let t = pdelta_curve(ds, 1.0, &[2, 3, 5, 9], (ds, PI + 0.5), 4001).unwrap();
        for (d, pe, approx) in &t.rows[..1] {
            assert_eq!(*d, ds);
            assert!((pe - ds.sin()).abs() < 1e-15);
            for a in approx {
                assert!((a - ds.sin()).abs() < 1e-15);
            }
        }
        assert!(t.right_intersection(5).is_some());

        let ds = 20f64.to_radians();
        let t = pdelta_curve(ds, 1.0, &[5], (0.0, ds + 4.0 * PI), 20001).unwrap();
        assert!(t.right_intersection(5).is_none());

        assert!(pdelta_curve(0.5, 1.0, &[2], (0.6, 1.0), 10).is_err());
        assert!(pdelta_curve(0.5, 1.0, &[2], (0.0, 1.0), 1).is_err());
    }
}
