//! Critical clearing times of line-trip contingencies for the original and
//! truncated post-fault systems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CaseData, ContingencyDef, ContingencySet};
use crate::simulator::{advance, integrate, Order, SimConfig, Trajectory, TteSystem};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_CAP: f64 = 1.0;
pub const ESCALATION_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CctConfig {
    pub sim: SimConfig,
    pub tol: f64,
    pub cap: f64,
    pub escalation_step: f64,
    /// Use the truncated dynamics, expanded at the prefault SEP, during the
    /// fault too. Off by default: the fault-on phase runs the original model.
    pub tte_fault_on: bool,
}

impl Default for CctConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            tol: DEFAULT_TOL,
            cap: DEFAULT_CAP,
            escalation_step: ESCALATION_STEP,
            tte_fault_on: false,
        }
    }
}

impl CctConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if !(self.tol > 0.0 && self.cap > 0.0 && self.escalation_step > 0.0) {
            return Err(Error::InvalidInput(
                "tol, cap and escalation step must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fault-on and post-fault dynamics of one contingency at one order.
#[derive(Debug, Clone)]
pub struct ContingencyDynamics {
    pub id: u32,
    pub order: Order,
    fault_on: TteSystem,
    postfault: TteSystem,
    prefault_sep: Vec<f64>,
    slip: f64,
}

impl ContingencyDynamics {
    pub fn new(cont: &ContingencySet, order: Order, tte_fault_on: bool) -> Result<Self> {
        let fault_on = if tte_fault_on {
            TteSystem::expanded_about(&cont.fault_on, &cont.prefault_sep, order)?
        } else {
            TteSystem::original(&cont.fault_on)
        };
        Ok(Self {
            id: cont.id,
            order,
            fault_on,
            postfault: TteSystem::new(&cont.postfault_frame, &cont.postfault_sep, order)?,
            prefault_sep: cont.prefault_sep.clone(),
            slip: cont.postfault_slip,
        })
    }

    pub fn postfault(&self) -> &TteSystem {
        &self.postfault
    }

    /// State at the clearing instant, expressed in the post-fault frame.
    pub fn cleared_state(&self, t_clear: f64, dt: f64) -> Result<Option<Vec<f64>>> {
        let mut x = vec![0.0; 2 * self.prefault_sep.len()];
        for (i, a) in self.prefault_sep.iter().enumerate() {
            x[2 * i] = *a;
        }
        if t_clear > 0.0 && advance(&self.fault_on, &mut x, t_clear, dt)? {
            return Ok(None);
        }
        for w in x.iter_mut().skip(1).step_by(2) {
            *w -= self.slip;
        }
        Ok(Some(x))
    }

    /// Whether the post-fault trajectory settles after clearing at `t_clear`.
    pub fn stable_at(&self, t_clear: f64, sim: &SimConfig) -> Result<bool> {
        if !(t_clear >= 0.0 && t_clear.is_finite()) {
            return Err(Error::InvalidInput(format!("clearing time {t_clear} must be ≥ 0")));
        }
        match self.cleared_state(t_clear, sim.dt)? {
            None => Ok(false),
            Some(x) => sim.settles(&self.postfault, &x),
        }
    }
}

/// Fault-on and post-fault trajectory for one clearing time, concatenated on
/// a common clock. Speeds after clearing are relative to the post-fault
/// frame. Returns the trajectory and its stability verdict.
pub fn simulate_trajectory(
    cont: &ContingencySet,
    order: Order,
    t_clear: f64,
    cfg: &CctConfig,
) -> Result<(Trajectory, bool)> {
    cfg.validate()?;
    let dyn_ = ContingencyDynamics::new(cont, order, cfg.tte_fault_on)?;
    let stable = dyn_.stable_at(t_clear, &cfg.sim)?;
    let mut x0 = vec![0.0; 2 * cont.prefault_sep.len()];
    for (i, a) in cont.prefault_sep.iter().enumerate() {
        x0[2 * i] = *a;
    }
    let mut traj = if t_clear > 0.0 {
        integrate(&dyn_.fault_on, &x0, t_clear, cfg.sim.dt)?
    } else {
        Trajectory {
            dimension: x0.len(),
            times: vec![0.0],
            states: x0,
            diverged: false,
            has_reference: false,
        }
    };
    if traj.diverged {
        return Ok((traj, false));
    }
    let mut cleared = traj.final_state().to_vec();
    for w in cleared.iter_mut().skip(1).step_by(2) {
        *w -= dyn_.slip;
    }
    let post = integrate(&dyn_.postfault, &cleared, cfg.sim.horizon, cfg.sim.dt)?;
    let t0 = traj.final_time();
    for k in 1..post.len() {
        traj.times.push(t0 + post.times[k]);
        traj.states.extend_from_slice(post.state(k));
    }
    traj.diverged = post.diverged;
    traj.has_reference = post.has_reference;
    Ok((traj, stable))
}

pub fn simulate_contingency(
    cont: &ContingencySet,
    order: Order,
    t_clear: f64,
    cfg: &CctConfig,
) -> Result<bool> {
    ContingencyDynamics::new(cont, order, cfg.tte_fault_on)?.stable_at(t_clear, &cfg.sim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CctValue {
    Cleared(f64),
    ExceedsCap,
}

impl CctValue {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            CctValue::Cleared(t) => Some(*t),
            CctValue::ExceedsCap => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.seconds().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CctResult {
    pub contingency: u32,
    pub order: Order,
    pub cct: CctValue,
    /// Largest clearing time seen stable and smallest seen unstable.
    pub bracket: (f64, f64),
    pub simulations: usize,
}

impl CctResult {
    /// `cct / cct_original`, infinite when this search hit the cap.
    pub fn normalized(&self, original: &CctResult) -> Option<f64> {
        let base = original.cct.seconds()?;
        Some(self.cct.as_f64() / base)
    }
}

/// Escalates the clearing time in `escalation_step` increments until the
/// first instability, then bisects to a bracket no wider than `tol` and
/// reports its midpoint.
pub fn find_cct(cont: &ContingencySet, order: Order, cfg: &CctConfig) -> Result<CctResult> {
    cfg.validate()?;
    let dyn_ = ContingencyDynamics::new(cont, order, cfg.tte_fault_on)?;
    find_cct_with(&dyn_, cfg)
}

pub fn find_cct_with(dyn_: &ContingencyDynamics, cfg: &CctConfig) -> Result<CctResult> {
    let mut simulations = 0;
    let mut probe = |t: f64| -> Result<bool> {
        simulations += 1;
        dyn_.stable_at(t, &cfg.sim)
    };
    let mut lo = 0.0;
    let mut hi = None;
    let mut k = 1;
    loop {
        let t = (k as f64 * cfg.escalation_step).min(cfg.cap);
        if probe(t)? {
            lo = t;
        } else {
            hi = Some(t);
            break;
        }
        if t >= cfg.cap {
            break;
        }
        k += 1;
    }
    let Some(mut hi) = hi else {
        return Ok(CctResult {
            contingency: dyn_.id,
            order: dyn_.order,
            cct: CctValue::ExceedsCap,
            bracket: (lo, f64::INFINITY),
            simulations,
        });
    };
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CctResult {
        contingency: dyn_.id,
        order: dyn_.order,
        cct: CctValue::Cleared(0.5 * (lo + hi)),
        bracket: (lo, hi),
        simulations,
    })
}

/// One table row: the original-system CCT and one cell per requested order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CctRow {
    pub def: ContingencyDef,
    pub original: std::result::Result<CctResult, String>,
    pub cells: Vec<std::result::Result<CctResult, String>>,
}

impl CctRow {
    pub fn normalized(&self, k: usize) -> Option<f64> {
        let orig = self.original.as_ref().ok()?;
        self.cells[k].as_ref().ok()?.normalized(orig)
    }

    pub fn original_cct(&self) -> Option<f64> {
        self.original.as_ref().ok()?.cct.seconds()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CctTable {
    pub orders: Vec<Order>,
    pub rows: Vec<CctRow>,
}

impl CctTable {
    pub fn column(&self, order: Order) -> Option<usize> {
        self.orders.iter().position(|o| *o == order)
    }

    pub fn normalized_column(&self, order: Order) -> Vec<Option<f64>> {
        match self.column(order) {
            Some(k) => self.rows.iter().map(|r| r.normalized(k)).collect(),
            None => vec![None; self.rows.len()],
        }
    }

    /// Mean `|1 − normalized|` over the finite cells of one order.
    pub fn mean_error(&self, order: Order) -> Option<f64> {
        let vals: Vec<f64> = self
            .normalized_column(order)
            .into_iter()
            .flatten()
            .filter(|v| v.is_finite())
            .map(|v| (1.0 - v).abs())
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// `id,fault_bus,line,original,<orders...>` with normalized cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,fault_bus,line,original");
        for o in &self.orders {
            out.push_str(&format!(",n{o}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}-{},{}",
                r.def.id,
                r.def.fault_bus,
                r.def.line_from,
                r.def.line_to,
                cell_text(r.original.as_ref().map(|c| c.cct.as_f64()))
            ));
            for k in 0..self.orders.len() {
                let text = match (&r.cells[k], r.normalized(k)) {
                    (Err(e), _) => format!("error: {}", e.replace(',', ";")),
                    (Ok(_), Some(v)) => fmt_value(v),
                    (Ok(_), None) => "nan".into(),
                };
                out.push(',');
                out.push_str(&text);
            }
            out.push('\n');
        }
        out
    }

    /// Same layout with absolute clearing times in seconds, at full
    /// precision.
    pub fn to_csv_absolute(&self) -> String {
        let mut out = String::from("id,fault_bus,line,original");
        for o in &self.orders {
            out.push_str(&format!(",n{o}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}-{},{}",
                r.def.id,
                r.def.fault_bus,
                r.def.line_from,
                r.def.line_to,
                exact_text(r.original.as_ref().map(|c| c.cct.as_f64()))
            ));
            for c in &r.cells {
                out.push(',');
                out.push_str(&exact_text(c.as_ref().map(|c| c.cct.as_f64())));
            }
            out.push('\n');
        }
        out
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.3}")
    }
}

fn exact_text(v: std::result::Result<f64, &String>) -> String {
    match v {
        Ok(v) if v.is_infinite() => "inf".into(),
        Ok(v) => format!("{v}"),
        Err(e) => format!("error: {}", e.replace(',', ";")),
    }
}

/// Parses the absolute layout back into `(id, [original, orders...])`
/// rows; `inf` reads as infinity, error cells as NaN.
pub fn parse_absolute_csv(text: &str) -> Result<Vec<(u32, Vec<f64>)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?;
    if !header.starts_with("id,fault_bus,line,original") {
        return Err(Error::Parse(format!("unexpected table header {header:?}")));
    }
    lines
        .enumerate()
        .map(|(n, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            let id = fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: {e}", n + 1)))?;
            let vals = fields[3..]
                .iter()
                .map(|f| match *f {
                    "inf" => Ok(f64::INFINITY),
                    f if f.starts_with("error") => Ok(f64::NAN),
                    f => f.parse().map_err(|e| Error::Parse(format!("row {}: {e}", n + 1))),
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((id, vals))
        })
        .collect()
}

fn cell_text(v: std::result::Result<f64, &String>) -> String {
    match v {
        Ok(v) => fmt_value(v),
        Err(e) => format!("error: {}", e.replace(',', ";")),
    }
}

/// CCT table over `defs` × (original + `orders`). All cells run in parallel;
/// per-cell failures are recorded instead of aborting.
pub fn cct_table(
    case: &CaseData,
    defs: &[ContingencyDef],
    orders: &[Order],
    cfg: &CctConfig,
) -> Result<CctTable> {
    cfg.validate()?;
    let sets: Vec<std::result::Result<ContingencySet, String>> = defs
        .par_iter()
        .map(|d| crate::network::build_contingency(case, d).map_err(|e| e.to_string()))
        .collect();
    let mut columns = vec![Order::Original];
    columns.extend(orders.iter().copied().filter(|o| *o != Order::Original));
    let jobs: Vec<(usize, usize)> = (0..defs.len())
        .flat_map(|r| (0..columns.len()).map(move |c| (r, c)))
        .collect();
    let results: Vec<std::result::Result<CctResult, String>> = jobs
        .par_iter()
        .map(|&(r, c)| {
            let set = sets[r].as_ref().map_err(Clone::clone)?;
            find_cct(set, columns[c], cfg).map_err(|e| e.to_string())
        })
        .collect();
    let mut it = results.into_iter();
    let rows = defs
        .iter()
        .map(|d| {
            let original = it.next().expect("cell");
            let cells = (1..columns.len()).map(|_| it.next().expect("cell")).collect();
            CctRow {
                def: *d,
                original,
                cells,
            }
        })
        .collect();
    Ok(CctTable {
        orders: columns[1..].to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_contingency, IEEE9_CONTINGENCIES};

    fn cont(k: usize) -> ContingencySet {
        build_contingency(&CaseData::ieee9(), &IEEE9_CONTINGENCIES[k - 1]).unwrap()
    }

    #[test]
    fn immediate_clearing_is_stable() {
        let cfg = CctConfig::default();
        for k in [1, 7] {
            let c = cont(k);
            for order in [Order::Original, Order::Truncated(2), Order::Truncated(3)] {
                assert!(simulate_contingency(&c, order, 0.0, &cfg).unwrap(), "{k} {order}");
            }
        }
    }

    #[test]
    fn cleared_state_is_in_the_postfault_frame() {
        let c = cont(1);
        let d = ContingencyDynamics::new(&c, Order::Original, false).unwrap();
        let x = d.cleared_state(0.0, 1e-3).unwrap().unwrap();
        assert!((x[1] + c.postfault_slip).abs() < 1e-15);
    }

    #[test]
    fn negative_clearing_time_rejected() {
        let cfg = CctConfig::default();
        assert!(simulate_contingency(&cont(1), Order::Original, -0.1, &cfg).is_err());
    }

    #[test]
    fn csv_renders_cap_as_inf() {
        let r = |cct| CctResult {
            contingency: 1,
            order: Order::Truncated(5),
            cct,
            bracket: (0.0, 1.0),
            simulations: 1,
        };
        let table = CctTable {
            orders: vec![Order::Truncated(5)],
            rows: vec![CctRow {
                def: IEEE9_CONTINGENCIES[0],
                original: Ok(r(CctValue::Cleared(0.25))),
                cells: vec![Ok(r(CctValue::ExceedsCap))],
            }],
        };
        let csv = table.to_csv();
        assert_eq!(csv, "id,fault_bus,line,original,n5\n1,4,4-6,0.250,inf\n");
        assert_eq!(table.mean_error(Order::Truncated(5)), None);
        let rows = parse_absolute_csv(&table.to_csv_absolute()).unwrap();
        assert_eq!(rows, vec![(1, vec![0.25, f64::INFINITY])]);
    }

    #[test]
    fn absolute_table_round_trips() {
        let cfg = CctConfig { tol: 0.01, ..CctConfig::default() };
        let table = cct_table(&CaseData::ieee9(), &IEEE9_CONTINGENCIES[6..7], &[Order::Truncated(3)], &cfg).unwrap();
        let rows = parse_absolute_csv(&table.to_csv_absolute()).unwrap();
        let r = &table.rows[0];
        assert_eq!(rows[0].1[0], r.original_cct().unwrap());
        assert_eq!(rows[0].1[1], r.cells[0].as_ref().unwrap().cct.as_f64());
    }

    #[test]
    fn trajectory_spans_fault_and_postfault() {
        let cfg = CctConfig::default();
        let (traj, stable) = simulate_trajectory(&cont(1), Order::Original, 0.5, &cfg).unwrap();
        assert!(!stable);
        assert!((traj.times[500] - 0.5).abs() < 1e-9);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }
}
