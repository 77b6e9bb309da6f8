//! (N−1) line-trip contingencies: fault at a bus, cleared by tripping a line
//! that ends at that bus.

use serde::{Deserialize, Serialize};

use super::case::CaseData;
use super::reduce::{prefault_angles, reduce_network, ReducedNetwork};
use super::sep::{solve_sep, solve_synchronous};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyDef {
    pub id: u32,
    pub fault_bus: u32,
    pub line_from: u32,
    pub line_to: u32,
}

impl ContingencyDef {
    pub const fn new(id: u32, fault_bus: u32, line_from: u32, line_to: u32) -> Self {
        Self {
            id,
            fault_bus,
            line_from,
            line_to,
        }
    }
}

/// The twelve line-trip contingencies of the 9-bus case.
pub const IEEE9_CONTINGENCIES: [ContingencyDef; 12] = [
    ContingencyDef::new(1, 4, 4, 6),
    ContingencyDef::new(2, 4, 4, 5),
    ContingencyDef::new(3, 5, 4, 5),
    ContingencyDef::new(4, 5, 5, 7),
    ContingencyDef::new(5, 6, 4, 6),
    ContingencyDef::new(6, 6, 6, 9),
    ContingencyDef::new(7, 7, 5, 7),
    ContingencyDef::new(8, 7, 7, 8),
    ContingencyDef::new(9, 8, 7, 8),
    ContingencyDef::new(10, 8, 8, 9),
    ContingencyDef::new(11, 9, 6, 9),
    ContingencyDef::new(12, 9, 8, 9),
];

/// The same list as a contingency file.
pub const IEEE9_CONTINGENCY_CSV: &str = include_str!("../../data/ieee9_contingencies.csv");

pub const CONTINGENCY_HEADER: &str = "id,fault_bus,line_from,line_to";

/// Parses a contingency list with header `id,fault_bus,line_from,line_to`.
pub fn parse_contingencies(text: &str) -> Result<Vec<ContingencyDef>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.replace(' ', "") == CONTINGENCY_HEADER => {}
        Some((n, h)) => {
            return Err(Error::Parse(format!(
                "line {}: expected header {CONTINGENCY_HEADER:?}, found {h:?}",
                n + 1
            )))
        }
        None => return Err(Error::Parse("empty contingency list".into())),
    }
    lines
        .map(|(n, l)| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields", n + 1)));
            }
            let num = |k: usize| {
                fields[k]
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("line {}, field {}: {e}", n + 1, k + 1)))
            };
            Ok(ContingencyDef::new(num(0)?, num(1)?, num(2)?, num(3)?))
        })
        .collect()
}

pub fn format_contingencies(defs: &[ContingencyDef]) -> String {
    let mut out = String::from(CONTINGENCY_HEADER);
    out.push('\n');
    for d in defs {
        out.push_str(&format!("{},{},{},{}\n", d.id, d.fault_bus, d.line_from, d.line_to));
    }
    out
}

/// Prefault, fault-on and postfault reduced networks of one contingency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencySet {
    pub id: u32,
    pub fault_bus: u32,
    pub tripped_line: (u32, u32),
    pub prefault: ReducedNetwork,
    pub fault_on: ReducedNetwork,
    /// Postfault network in the laboratory frame.
    pub postfault: ReducedNetwork,
    /// Postfault network in the frame rotating at `postfault_slip`, where
    /// `postfault_sep` is an exact equilibrium.
    pub postfault_frame: ReducedNetwork,
    pub prefault_sep: Vec<f64>,
    pub postfault_sep: Vec<f64>,
    pub postfault_slip: f64,
}

pub fn build_contingency(case: &CaseData, def: &ContingencyDef) -> Result<ContingencySet> {
    if def.fault_bus != def.line_from && def.fault_bus != def.line_to {
        return Err(Error::InvalidInput(format!(
            "contingency {}: fault bus {} is not an endpoint of line {}-{}",
            def.id, def.fault_bus, def.line_from, def.line_to
        )));
    }
    let branch = case.branch_index(def.line_from, def.line_to).ok_or_else(|| {
        Error::InvalidInput(format!(
            "contingency {}: no branch {}-{} in the case",
            def.id, def.line_from, def.line_to
        ))
    })?;
    if !case.branches[branch].in_service {
        return Err(Error::InvalidInput(format!(
            "contingency {}: branch {}-{} is already out of service",
            def.id, def.line_from, def.line_to
        )));
    }
    let prefault = reduce_network(case, None, None)?;
    let fault_on = reduce_network(case, Some(def.fault_bus), None)?;
    let postfault = reduce_network(case, None, Some(branch))?;
    let prefault_sep = solve_sep(&prefault, &prefault_angles(case))?;
    let eq = solve_synchronous(&postfault, &prefault_sep)?;
    Ok(ContingencySet {
        id: def.id,
        fault_bus: def.fault_bus,
        tripped_line: (def.line_from, def.line_to),
        postfault_frame: postfault.in_rotating_frame(eq.slip),
        prefault,
        fault_on,
        postfault,
        prefault_sep,
        postfault_sep: eq.angles,
        postfault_slip: eq.slip,
    })
}

pub fn build_all(case: &CaseData, defs: &[ContingencyDef]) -> Result<Vec<ContingencySet>> {
    defs.iter().map(|d| build_contingency(case, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let case = CaseData::ieee9();
        let first = build_contingency(&case, &IEEE9_CONTINGENCIES[0]).unwrap();
        assert_eq!((first.id, first.fault_bus, first.tripped_line), (1, 4, (4, 6)));
        let last = build_contingency(&case, &IEEE9_CONTINGENCIES[11]).unwrap();
        assert_eq!((last.id, last.fault_bus, last.tripped_line), (12, 9, (8, 9)));
        assert!(last.postfault_frame.power_residual(&last.postfault_sep) < 1e-8);
    }

    #[test]
    fn fault_bus_must_be_on_line() {
        let case = CaseData::ieee9();
        let err = build_contingency(&case, &ContingencyDef::new(99, 4, 7, 8)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)), "{err}");
    }

    #[test]
    fn list_round_trip() {
        let text = format_contingencies(&IEEE9_CONTINGENCIES);
        assert_eq!(parse_contingencies(&text).unwrap(), IEEE9_CONTINGENCIES.to_vec());
        assert_eq!(parse_contingencies(IEEE9_CONTINGENCY_CSV).unwrap(), IEEE9_CONTINGENCIES.to_vec());
        assert!(parse_contingencies("a,b\n1,2").is_err());
        assert!(parse_contingencies("id,fault_bus,line_from,line_to\n1,2,x,4").is_err());
    }

    #[test]
    fn trip_changes_only_eliminated_couplings() {
        let case = CaseData::ieee9();
        let pre = reduce_network(&case, None, None).unwrap();
        let post = reduce_network(&case, None, case.branch_index(4, 6)).unwrap();
        assert_eq!(pre.e, post.e);
        assert_eq!(pre.pm, post.pm);
        // with all buses eliminated every coupling is touched by the elimination
        assert!(pre.c.iter().zip(&post.c).any(|(a, b)| a != b));
    }

    #[test]
    fn deterministic() {
        let case = CaseData::ieee9();
        let a = build_contingency(&case, &IEEE9_CONTINGENCIES[4]).unwrap();
        let b = build_contingency(&case, &IEEE9_CONTINGENCIES[4]).unwrap();
        assert_eq!(a, b);
    }
}
