//! Multi-machine case data and its reduction to the classical model.

pub mod case;
pub mod contingency;
pub mod powerflow;
pub mod reduce;
pub mod sep;

pub use case::{load_case, Branch, Bus, BusKind, CaseData, Machine, CASE_SCHEMA};
pub use contingency::{
    build_all, build_contingency, format_contingencies, parse_contingencies, ContingencyDef,
    ContingencySet, IEEE9_CONTINGENCIES, IEEE9_CONTINGENCY_CSV,
};
pub use powerflow::{build_ybus, redispatch, solve_power_flow};
pub use reduce::{kron_reduce, prefault_angles, reduce_network, InfiniteBusLink, ReducedNetwork};
pub use sep::{solve_sep, solve_synchronous, Equilibrium};
