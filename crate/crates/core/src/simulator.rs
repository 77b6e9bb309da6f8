//! Swing dynamics of the original network and its truncated expansions,
//! fixed-step RK4 integration and endpoint stability classification.
//!
//! State layout is interleaved `(δ_1, Δω_1, ..., δ_m, Δω_m)`, angles in rad
//! and speed deviations in rad/s. Each machine obeys
//! `δ̈_i = −(D_i/2H_i) δ̇_i + (ω_s/2H_i)(P_mi − P_ei)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ReducedNetwork;
use crate::series::{pair_coefficients, TruncSeries};

/// Largest truncation order supported by the simulator.
pub const MAX_TTE_ORDER: usize = 15;
/// Angle magnitude past which a trajectory is declared diverged.
pub const DIVERGENCE_ANGLE: f64 = 1e4;
/// Largest SEP power residual accepted as an expansion point.
pub const EXPANSION_RESIDUAL: f64 = 1e-6;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_SPREAD: f64 = std::f64::consts::PI;

/// Dynamics selector: the original trigonometric model, or its expansion
/// truncated at order `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Order {
    Original,
    Truncated(usize),
}

impl Order {
    pub fn truncation(self) -> Option<usize> {
        match self {
            Order::Original => None,
            Order::Truncated(n) => Some(n),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Original => f.write_str("original"),
            Order::Truncated(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("original") || t.eq_ignore_ascii_case("orig") {
            return Ok(Order::Original);
        }
        let t = t.trim_start_matches(['n', 'N', 'o']);
        let n: usize = t
            .parse()
            .map_err(|_| Error::InvalidInput(format!("invalid order {s:?}")))?;
        if !(1..=MAX_TTE_ORDER).contains(&n) {
            return Err(Error::UnsupportedOrder {
                order: n,
                reason: "truncation order must lie in 1..=15",
            });
        }
        Ok(Order::Truncated(n))
    }
}

/// Parses lists like `2..9`, `3,4,7,8` or `original,2,5`.
pub fn parse_orders(text: &str) -> Result<Vec<Order>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let lo: usize = a.trim().parse().map_err(|_| bad_range(part))?;
            let hi: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad_range(part))?;
            if lo > hi {
                return Err(bad_range(part));
            }
            for n in lo..=hi {
                out.push(Order::from_str(&n.to_string())?);
            }
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty order list".into()));
    }
    Ok(out)
}

fn bad_range(part: &str) -> Error {
    Error::InvalidInput(format!("invalid order range {part:?}"))
}

/// Original or truncated swing dynamics of a reduced network.
#[derive(Debug, Clone, PartialEq)]
pub struct TteSystem {
    base: ReducedNetwork,
    order: Order,
    expansion_sep: Vec<f64>,
    /// Row-major `m × m` pair series; diagonal entries unused.
    pair_series: Vec<Option<TruncSeries>>,
    infinite_series: Vec<Option<TruncSeries>>,
    /// `ω_s / 2H_i`.
    accel: Vec<f64>,
    /// `D_i / 2H_i`.
    decay: Vec<f64>,
    /// `P_mi − E_i² G_i`.
    net_input: Vec<f64>,
}

impl TteSystem {
    /// Builds order-`order` dynamics expanded at `sep`. For
    /// [`Order::Original`] the point is only stored as the reference SEP.
    pub fn new(base: &ReducedNetwork, sep: &[f64], order: Order) -> Result<Self> {
        let m = base.m;
        if sep.len() != m {
            return Err(Error::InvalidInput(format!(
                "expansion point has {} angles for {m} machines",
                sep.len()
            )));
        }
        if sep.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("expansion point"));
        }
        if order != Order::Original {
            let residual = base.power_residual(sep);
            if !(residual < EXPANSION_RESIDUAL) {
                return Err(Error::NotEquilibrium(residual));
            }
        }
        Self::expanded_about(base, sep, order)
    }

    /// Expansion about an arbitrary point, without the equilibrium check.
    /// The constant term keeps the original field's value at `point`.
    pub fn expanded_about(base: &ReducedNetwork, point: &[f64], order: Order) -> Result<Self> {
        let m = base.m;
        let sep = point;
        if sep.len() != m || sep.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("expansion point must hold m finite angles".into()));
        }
        let mut pair_series = vec![None; m * m];
        let mut infinite_series = vec![None; m];
        if let Order::Truncated(n) = order {
            if !(1..=MAX_TTE_ORDER).contains(&n) {
                return Err(Error::UnsupportedOrder {
                    order: n,
                    reason: "truncation order must lie in 1..=15",
                });
            }
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        pair_series[i * m + j] = Some(pair_coefficients(
                            base.c_at(i, j),
                            base.d_at(i, j),
                            sep[i] - sep[j],
                            n,
                        )?);
                    }
                }
                if let Some(link) = base.infinite_link(i) {
                    infinite_series[i] = Some(pair_coefficients(link.c, link.d, sep[i], n)?);
                }
            }
        }
        Ok(Self {
            accel: base.h.iter().map(|h| base.omega_s / (2.0 * h)).collect(),
            decay: base.damping.iter().zip(&base.h).map(|(d, h)| d / (2.0 * h)).collect(),
            net_input: (0..m).map(|i| base.pm[i] - base.e[i] * base.e[i] * base.g[i]).collect(),
            base: base.clone(),
            order,
            expansion_sep: sep.to_vec(),
            pair_series,
            infinite_series,
        })
    }

    /// Original dynamics of a network that need not have an equilibrium
    /// (a fault-on network, say).
    pub fn original(base: &ReducedNetwork) -> Self {
        Self::new(base, &vec![0.0; base.m], Order::Original).expect("original dynamics")
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn base(&self) -> &ReducedNetwork {
        &self.base
    }

    pub fn expansion_sep(&self) -> &[f64] {
        &self.expansion_sep
    }

    pub fn machines(&self) -> usize {
        self.base.m
    }

    pub fn dimension(&self) -> usize {
        2 * self.base.m
    }

    pub fn pair_series(&self, i: usize, j: usize) -> Option<&TruncSeries> {
        self.pair_series[i * self.base.m + j].as_ref()
    }

    pub fn infinite_series(&self, i: usize) -> Option<&TruncSeries> {
        self.infinite_series[i].as_ref()
    }

    /// Equilibrium state `(sep, 0)`.
    pub fn equilibrium_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension()];
        for (i, a) in self.expansion_sep.iter().enumerate() {
            x[2 * i] = *a;
        }
        x
    }

    /// `P_ei − E_i² G_i` at the angles held in the interleaved `state`.
    #[inline]
    fn coupling_power(&self, i: usize, state: &[f64]) -> f64 {
        let m = self.base.m;
        let di = state[2 * i];
        let mut p = 0.0;
        match self.order {
            Order::Original => {
                for j in 0..m {
                    if j != i {
                        let (s, c) = (di - state[2 * j]).sin_cos();
                        p += self.base.c[i * m + j] * s + self.base.d[i * m + j] * c;
                    }
                }
                if let Some(link) = self.base.infinite_link(i) {
                    let (s, c) = di.sin_cos();
                    p += link.c * s + link.d * c;
                }
            }
            Order::Truncated(_) => {
                let dsep = di - self.expansion_sep[i];
                for j in 0..m {
                    if let Some(series) = &self.pair_series[i * m + j] {
                        let x = dsep - (state[2 * j] - self.expansion_sep[j]);
                        p += series.eval(x);
                    }
                }
                if let Some(series) = &self.infinite_series[i] {
                    p += series.eval(dsep);
                }
            }
        }
        p
    }

    /// Electrical powers `P_ei` under this system's dynamics.
    pub fn electrical_power(&self, state: &[f64]) -> Vec<f64> {
        (0..self.base.m)
            .map(|i| {
                self.base.e[i] * self.base.e[i] * self.base.g[i] + self.coupling_power(i, state)
            })
            .collect()
    }

    /// Writes `dx/dt` into `out`.
    #[inline]
    pub fn rhs_into(&self, state: &[f64], out: &mut [f64]) {
        for i in 0..self.base.m {
            let accelerating = self.net_input[i] - self.coupling_power(i, state);
            out[2 * i] = state[2 * i + 1];
            out[2 * i + 1] = -self.decay[i] * state[2 * i + 1] + self.accel[i] * accelerating;
        }
    }
}

pub fn build_tte_system(net: &ReducedNetwork, sep: &[f64], order: Order) -> Result<TteSystem> {
    TteSystem::new(net, sep, order)
}

/// Checked right-hand side.
pub fn rhs(sys: &TteSystem, state: &[f64]) -> Result<Vec<f64>> {
    if state.len() != sys.dimension() {
        return Err(Error::InvalidInput(format!(
            "state has {} entries, expected {}",
            state.len(),
            sys.dimension()
        )));
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rhs state"));
    }
    let mut out = vec![0.0; state.len()];
    sys.rhs_into(state, &mut out);
    Ok(out)
}

/// Sampled trajectory. `states` is row-major, one interleaved state per
/// sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dimension: usize,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub diverged: bool,
    /// Whether angles are measured against an infinite bus at angle 0.
    pub has_reference: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    /// CSV with columns `t, δ_1..δ_m, Δω_1..Δω_m`.
    pub fn to_csv(&self) -> String {
        let m = self.dimension / 2;
        let mut out = String::from("t");
        for i in 1..=m {
            out.push_str(&format!(",delta_{i}"));
        }
        for i in 1..=m {
            out.push_str(&format!(",omega_{i}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            let x = self.state(k);
            out.push_str(&format!("{}", self.times[k]));
            for i in 0..m {
                out.push_str(&format!(",{}", x[2 * i]));
            }
            for i in 0..m {
                out.push_str(&format!(",{}", x[2 * i + 1]));
            }
            out.push('\n');
        }
        out
    }
}

/// Reusable RK4 stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dimension: usize) -> Self {
        Self {
            k1: vec![0.0; dimension],
            k2: vec![0.0; dimension],
            k3: vec![0.0; dimension],
            k4: vec![0.0; dimension],
            tmp: vec![0.0; dimension],
        }
    }

    /// One classical RK4 step of size `h`, in place.
    #[inline]
    pub fn step(&mut self, sys: &TteSystem, x: &mut [f64], h: f64) {
        let n = x.len();
        sys.rhs_into(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn is_diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite()) || x.iter().step_by(2).any(|d| d.abs() > DIVERGENCE_ANGLE)
}

/// Step sizes covering `[0, horizon]` with `dt` and one shorter final step.
fn step_plan(horizon: f64, dt: f64) -> (usize, f64) {
    let full = (horizon / dt * (1.0 + 1e-12)).floor() as usize;
    let rest = horizon - full as f64 * dt;
    (full, if rest > 1e-12 * dt { rest } else { 0.0 })
}

fn validate_span(horizon: f64, dt: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "horizon and dt must be positive, got T={horizon}, dt={dt}"
        )));
    }
    Ok(())
}

/// Integrates in place without recording samples; returns `true` when the
/// trajectory diverged (and stopped early).
pub fn advance(sys: &TteSystem, x: &mut [f64], horizon: f64, dt: f64) -> Result<bool> {
    validate_span(horizon, dt)?;
    if x.len() != sys.dimension() {
        return Err(Error::InvalidInput("state dimension mismatch".into()));
    }
    let (full, rest) = step_plan(horizon, dt);
    let mut rk = Rk4::new(x.len());
    if is_diverged(x) {
        return Ok(true);
    }
    for _ in 0..full {
        rk.step(sys, x, dt);
        if is_diverged(x) {
            return Ok(true);
        }
    }
    if rest > 0.0 {
        rk.step(sys, x, rest);
        if is_diverged(x) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fixed-step RK4 over `[0, horizon]`, recording every step.
pub fn integrate(sys: &TteSystem, x0: &[f64], horizon: f64, dt: f64) -> Result<Trajectory> {
    validate_span(horizon, dt)?;
    if x0.len() != sys.dimension() {
        return Err(Error::InvalidInput("state dimension mismatch".into()));
    }
    let (full, rest) = step_plan(horizon, dt);
    let n = x0.len();
    let mut traj = Trajectory {
        dimension: n,
        times: Vec::with_capacity(full + 2),
        states: Vec::with_capacity((full + 2) * n),
        diverged: false,
        has_reference: sys.base.has_infinite_bus(),
    };
    let mut x = x0.to_vec();
    traj.times.push(0.0);
    traj.states.extend_from_slice(&x);
    if is_diverged(&x) {
        traj.diverged = true;
        return Ok(traj);
    }
    let mut rk = Rk4::new(n);
    let steps = (0..full).map(|k| ((k + 1) as f64 * dt, dt));
    let last = (rest > 0.0).then_some((horizon, rest));
    for (t, h) in steps.chain(last) {
        rk.step(sys, &mut x, h);
        traj.times.push(t);
        traj.states.extend_from_slice(&x);
        if is_diverged(&x) {
            traj.diverged = true;
            break;
        }
    }
    Ok(traj)
}

/// Endpoint spread test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpreadTest {
    /// `max |δ_i(T) − δ_j(T)| < Δ`.
    Absolute,
    /// `max |(δ_i(T) − δ_j(T)) − (δ*_i − δ*_j)| < Δ` against a reference SEP.
    RelativeTo(Vec<f64>),
}

/// Largest pairwise angle spread of `state`, including the infinite bus
/// (angle 0) when present.
pub fn max_spread(state: &[f64], has_reference: bool, sep: Option<&[f64]>) -> f64 {
    let m = state.len() / 2;
    let angle = |i: usize| -> f64 {
        if i == m {
            0.0
        } else {
            state[2 * i] - sep.map_or(0.0, |s| s[i])
        }
    };
    let count = m + usize::from(has_reference);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        for j in i + 1..count {
            worst = worst.max((angle(i) - angle(j)).abs());
        }
    }
    worst
}

pub fn is_stable_endpoint(state: &[f64], has_reference: bool, spread: f64, test: &SpreadTest) -> bool {
    if is_diverged(state) {
        return false;
    }
    let sep = match test {
        SpreadTest::Absolute => None,
        SpreadTest::RelativeTo(s) => Some(s.as_slice()),
    };
    max_spread(state, has_reference, sep) < spread
}

/// Stable iff the trajectory did not diverge and its endpoint spread stays
/// below `spread`.
pub fn classify_stable(traj: &Trajectory, spread: f64) -> bool {
    classify_stable_with(traj, spread, &SpreadTest::Absolute)
}

pub fn classify_stable_with(traj: &Trajectory, spread: f64, test: &SpreadTest) -> bool {
    !traj.diverged && is_stable_endpoint(traj.final_state(), traj.has_reference, spread, test)
}

/// Integration and classification settings shared by the boundary and
/// clearing-time searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub spread: f64,
    /// Compare endpoint spreads against the system's expansion SEP.
    pub relative_spread: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            spread: DEFAULT_SPREAD,
            relative_spread: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        validate_span(self.horizon, self.dt)?;
        if !(self.spread > 0.0) {
            return Err(Error::InvalidInput("spread threshold must be positive".into()));
        }
        Ok(())
    }

    /// Integrates from `x0` for the horizon and classifies the endpoint.
    pub fn settles(&self, sys: &TteSystem, x0: &[f64]) -> Result<bool> {
        let mut x = x0.to_vec();
        let diverged = advance(sys, &mut x, self.horizon, self.dt)?;
        if diverged {
            return Ok(false);
        }
        let test = if self.relative_spread {
            SpreadTest::RelativeTo(sys.expansion_sep().to_vec())
        } else {
            SpreadTest::Absolute
        };
        Ok(is_stable_endpoint(&x, sys.base().has_infinite_bus(), self.spread, &test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_contingency, CaseData, IEEE9_CONTINGENCIES};

    #[test]
    fn order_parsing() {
        assert_eq!("original".parse::<Order>().unwrap(), Order::Original);
        assert_eq!("7".parse::<Order>().unwrap(), Order::Truncated(7));
        assert!("0".parse::<Order>().is_err());
        assert!("16".parse::<Order>().is_err());
        assert_eq!(parse_orders("2..4").unwrap().len(), 3);
        assert_eq!(
            parse_orders("original,3,8").unwrap(),
            vec![Order::Original, Order::Truncated(3), Order::Truncated(8)]
        );
        assert!(parse_orders("5..2").is_err());
        assert!(parse_orders("").is_err());
    }

    #[test]
    fn zero_rhs_at_expansion_point() {
        let net = ReducedNetwork::smib(0.5, 0.1, 2.0);
        for order in [Order::Original, Order::Truncated(1), Order::Truncated(9)] {
            let sys = TteSystem::new(&net, &[0.5], order).unwrap();
            let r = rhs(&sys, &sys.equilibrium_state()).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-14), "{r:?}");
        }
    }

    #[test]
    fn rejects_non_equilibrium_expansion() {
        let net = ReducedNetwork::smib(0.5, 0.1, 2.0);
        assert!(matches!(
            TteSystem::new(&net, &[0.7], Order::Truncated(3)),
            Err(Error::NotEquilibrium(_))
        ));
    }

    #[test]
    fn smib_order_two_matches_truncated_swing_equation() {
        let (ds, alpha, beta) = (0.6, 0.2, 3.0);
        let net = ReducedNetwork::smib(ds, alpha, beta);
        let sys = TteSystem::new(&net, &[ds], Order::Truncated(2)).unwrap();
        let coeffs = crate::smib::reduced_force_coefficients(ds, 2).unwrap();
        for (d, w) in [(0.9, 0.3), (0.1, -1.0), (2.0, 0.0)] {
            let x = d - ds;
            let force = beta * (coeffs[0] * x + coeffs[1] * x * x);
            let expected = -alpha * w - force;
            let r = rhs(&sys, &[d, w]).unwrap();
            assert!((r[0] - w).abs() < 1e-15);
            assert!((r[1] - expected).abs() < 1e-12, "{} vs {expected}", r[1]);
        }
    }

    #[test]
    fn smib_uep_is_an_equilibrium() {
        let ds = 0.4;
        let net = ReducedNetwork::smib(ds, 0.0, 1.5);
        let sys = TteSystem::new(&net, &[ds], Order::Original).unwrap();
        let r = rhs(&sys, &[std::f64::consts::PI - ds, 0.0]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_at_sep_and_spread() {
        let net = ReducedNetwork::smib(0.5, 0.1, 2.0);
        let sys = TteSystem::new(&net, &[0.5], Order::Original).unwrap();
        let traj = integrate(&sys, &sys.equilibrium_state(), 1.0, 1e-3).unwrap();
        assert_eq!(traj.len(), 1001);
        assert!(traj.states.chunks(2).all(|x| (x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14));
        assert!(classify_stable(&traj, std::f64::consts::PI));
        assert!((traj.final_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_last_step() {
        let net = ReducedNetwork::smib(0.5, 0.1, 2.0);
        let sys = TteSystem::new(&net, &[0.5], Order::Original).unwrap();
        let traj = integrate(&sys, &[0.6, 0.0], 0.0105, 1e-3).unwrap();
        assert_eq!(traj.len(), 12);
        assert!((traj.final_time() - 0.0105).abs() < 1e-15);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn diverged_trajectories_are_unstable() {
        let net = ReducedNetwork::smib(0.5, 0.0, 2.0);
        let sys = TteSystem::new(&net, &[0.5], Order::Truncated(2)).unwrap();
        // far past the order-2 UEP the quadratic force runs away
        let traj = integrate(&sys, &[8.0, 5.0], 10.0, 1e-3).unwrap();
        assert!(traj.diverged);
        assert!(traj.final_time() < 10.0);
        assert!(!classify_stable(&traj, std::f64::consts::PI));
    }

    #[test]
    fn fault_on_spread_grows() {
        let case = CaseData::ieee9();
        let cont = build_contingency(&case, &IEEE9_CONTINGENCIES[0]).unwrap();
        let sys = TteSystem::original(&cont.fault_on);
        let mut x0 = vec![0.0; 6];
        for i in 0..3 {
            x0[2 * i] = cont.prefault_sep[i];
        }
        let traj = integrate(&sys, &x0, 0.3, 1e-3).unwrap();
        let spreads: Vec<f64> = (0..traj.len())
            .map(|k| max_spread(traj.state(k), false, None))
            .collect();
        assert!(spreads.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(spreads.last().unwrap() > &(spreads[0] + 0.1));
    }

    #[test]
    fn truncated_fault_on_needs_equilibrium() {
        let case = CaseData::ieee9();
        let cont = build_contingency(&case, &IEEE9_CONTINGENCIES[0]).unwrap();
        let err = TteSystem::new(&cont.fault_on, &cont.prefault_sep, Order::Truncated(4)).unwrap_err();
        assert!(matches!(err, Error::NotEquilibrium(_)));
    }
}
