//! Case file schema `tte-stab-case/1`.
//!
//! ```json
//! {
//!   "schema": "tte-stab-case/1",
//!   "name": "ieee9",
//!   "base_mva": 100.0,
//!   "frequency_hz": 60.0,
//!   "buses":    [{ "id": 1, "kind": "slack", "vm": 1.04, "va": 0.0, "p_load": 0.0, "q_load": 0.0 }],
//!   "branches": [{ "from": 1, "to": 4, "r": 0.0, "x": 0.0576, "b": 0.0, "in_service": true }],
//!   "machines": [{ "bus": 1, "h": 23.64, "d": 23.64, "xd_prime": 0.0608, "p_m": 0.716 }]
//! }
//! ```
//!
//! Quantities are per unit on `base_mva`, angles in radians, `b` is the total
//! line charging, `h` in seconds. Bus voltages carry a solved power flow.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CASE_SCHEMA: &str = "tte-stab-case/1";

/// Bundled WSCC 3-machine 9-bus case with its solved power flow.
pub const IEEE9_JSON: &str = include_str!("../../data/ieee9.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    pub vm: f64,
    pub va: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

fn in_service_default() -> bool {
    true
}

impl Branch {
    pub fn connects(&self, a: u32, b: u32) -> bool {
        (self.from == a && self.to == b) || (self.from == b && self.to == a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub bus: u32,
    /// Inertia constant, s.
    pub h: f64,
    /// Damping constant in the `D/2H · δ̇` term.
    pub d: f64,
    pub xd_prime: f64,
    /// Mechanical power, pu.
    pub p_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseData {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub base_mva: f64,
    pub frequency_hz: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub machines: Vec<Machine>,
}

impl CaseData {
    /// Synchronous speed `ω_s = 2π f`, rad/s.
    pub fn omega_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency_hz
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn branch_index(&self, a: u32, b: u32) -> Option<usize> {
        self.branches.iter().position(|br| br.connects(a, b))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let case: CaseData = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serializes")
    }

    pub fn ieee9() -> Self {
        Self::from_json(IEEE9_JSON).expect("bundled case is valid")
    }

    /// Structural checks: schema tag, unique buses, known endpoints, one
    /// slack, positive machine constants, and connectivity over in-service
    /// branches.
    pub fn validate(&self) -> Result<()> {
        if self.schema != CASE_SCHEMA {
            return Err(Error::Case(format!(
                "unsupported schema {:?}, expected {CASE_SCHEMA:?}",
                self.schema
            )));
        }
        if !(self.base_mva > 0.0 && self.frequency_hz > 0.0) {
            return Err(Error::Case("base_mva and frequency_hz must be positive".into()));
        }
        let mut ids = BTreeSet::new();
        for (k, b) in self.buses.iter().enumerate() {
            if !ids.insert(b.id) {
                return Err(Error::Case(format!("buses[{k}]: duplicate bus id {}", b.id)));
            }
            if !(b.vm > 0.0 && b.vm.is_finite() && b.va.is_finite()) {
                return Err(Error::Case(format!("buses[{k}]: invalid voltage")));
            }
        }
        if self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() != 1 {
            return Err(Error::Case("exactly one slack bus required".into()));
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::Case(format!(
                        "branches[{k}]: branch references unknown bus {end}"
                    )));
                }
            }
            if br.from == br.to {
                return Err(Error::Case(format!("branches[{k}]: self loop at bus {}", br.from)));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::Case(format!("branches[{k}]: zero impedance")));
            }
        }
        if self.machines.is_empty() {
            return Err(Error::Case("at least one machine required".into()));
        }
        let mut machine_buses = BTreeSet::new();
        for (k, m) in self.machines.iter().enumerate() {
            if !ids.contains(&m.bus) {
                return Err(Error::Case(format!(
                    "machines[{k}]: machine references unknown bus {}",
                    m.bus
                )));
            }
            if !machine_buses.insert(m.bus) {
                return Err(Error::Case(format!(
                    "machines[{k}]: more than one machine on bus {}",
                    m.bus
                )));
            }
            if !(m.h > 0.0) {
                return Err(Error::Case(format!("machines[{k}]: H must be positive")));
            }
            if !(m.d >= 0.0 && m.xd_prime > 0.0 && m.p_m.is_finite()) {
                return Err(Error::Case(format!("machines[{k}]: invalid constants")));
            }
        }
        let slack = self.buses.iter().find(|b| b.kind == BusKind::Slack).unwrap();
        if !machine_buses.contains(&slack.id) {
            return Err(Error::Case("the slack bus must host a machine".into()));
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for br in self.branches.iter().filter(|b| b.in_service) {
            adj.entry(br.from).or_default().push(br.to);
            adj.entry(br.to).or_default().push(br.from);
        }
        let start = self.buses[0].id;
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(b) = stack.pop() {
            for &n in adj.get(&b).into_iter().flatten() {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        let isolated: Vec<u32> = self
            .buses
            .iter()
            .map(|b| b.id)
            .filter(|id| !seen.contains(id))
            .collect();
        if isolated.is_empty() {
            Ok(())
        } else {
            Err(Error::Case(format!(
                "disconnected network: buses {isolated:?} unreachable from bus {start}"
            )))
        }
    }
}

/// Reads and validates a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<CaseData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    CaseData::from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Case(msg) => Error::Case(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_case_shape() {
        let c = CaseData::ieee9();
        assert_eq!(c.buses.len(), 9);
        assert_eq!(c.branches.len(), 9);
        assert_eq!(c.machines.len(), 3);
        assert!((c.machines[1].p_m * c.base_mva - 163.0).abs() < 1e-9);
        for m in &c.machines {
            assert_eq!(m.d, m.h);
        }
    }

    #[test]
    fn unknown_machine_bus() {
        let mut c = CaseData::ieee9();
        c.machines[2].bus = 99;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("machine references unknown bus"), "{err}");
    }

    #[test]
    fn disconnected() {
        let mut c = CaseData::ieee9();
        // bus 3 hangs off a single transformer
        let k = c.branch_index(3, 9).unwrap();
        c.branches[k].in_service = false;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("disconnected"), "{err}");
    }

    #[test]
    fn parse_error_has_location() {
        let err = CaseData::from_json("{ \"schema\": }").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        let c = CaseData::ieee9();
        assert_eq!(CaseData::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn rejects_wrong_schema() {
        let mut c = CaseData::ieee9();
        c.schema = "other/2".into();
        assert!(c.validate().is_err());
    }
}
