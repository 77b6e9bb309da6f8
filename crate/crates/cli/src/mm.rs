use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

use tte_stab::boundary::{
    boundary_campaign, sample_directions, CampaignTarget, DirectionMode, SearchConfig,
    DEFAULT_EPS, DEFAULT_L0, DEFAULT_S0, MAX_EVALUATIONS,
};
use tte_stab::cct::{cct_table, simulate_trajectory, CctConfig, CctTable};
use tte_stab::network::{
    build_contingency, load_case, parse_contingencies, prefault_angles, redispatch,
    reduce_network, solve_sep, CaseData, ContingencyDef, ContingencySet, IEEE9_CONTINGENCIES,
};
use tte_stab::simulator::{parse_orders, Order, SimConfig, TteSystem};

use crate::output::{Failure, Sink};
use crate::MmArgs;

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Integration step in seconds.
    #[arg(long, default_value_t = SimConfig::default().dt)]
    dt: f64,
    /// Simulated time after clearing, in seconds.
    #[arg(long, default_value_t = SimConfig::default().horizon)]
    horizon: f64,
    /// Endpoint angle-spread threshold in radians.
    #[arg(long, default_value_t = SimConfig::default().spread)]
    spread: f64,
    /// Measure the endpoint spread relative to the equilibrium.
    #[arg(long)]
    relative_spread: bool,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            spread: self.spread,
            relative_spread: self.relative_spread,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum MmCommand {
    /// Dumps the per-pair expansion coefficients `e_k`.
    Expand {
        /// Expand the post-fault system of this contingency; the intact
        /// network when unset.
        #[arg(long)]
        cont: Option<u32>,
        #[arg(long)]
        order: usize,
    },
    /// Simulates one fault, clearing and post-fault trajectory.
    Simulate {
        #[arg(long)]
        cont: u32,
        #[arg(long, default_value = "original")]
        order: Order,
        #[arg(long)]
        t_clear: f64,
        /// Keep every n-th sample.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        tte_fault_on: bool,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Stability-boundary distances along random directions.
    Boundary {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "2..9")]
        orders: String,
        #[arg(long, default_value = "gaussian")]
        mode: DirectionMode,
        /// Search around this contingency's post-fault equilibrium; the
        /// intact network when unset.
        #[arg(long)]
        cont: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_L0)]
        l0: f64,
        #[arg(long, default_value_t = DEFAULT_S0)]
        s0: f64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = MAX_EVALUATIONS)]
        max_evaluations: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Critical clearing times, normalized by the original system.
    Cct {
        #[arg(long, default_value = "2..9")]
        orders: String,
        #[arg(long, default_value_t = CctConfig::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = CctConfig::default().cap)]
        cap: f64,
        #[arg(long, default_value_t = CctConfig::default().escalation_step)]
        escalation_step: f64,
        #[arg(long)]
        tte_fault_on: bool,
        /// Also solve the re-dispatched case (`--dispatch`, default
        /// `2:2.0,3:1.0`) and print both tables side by side.
        #[arg(long)]
        compare_tables: bool,
        #[command(flatten)]
        sim: SimArgs,
    },
}

const DEFAULT_DISPATCH: &str = "2:2.0,3:1.0";

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

/// A missing `ieee9.json` resolves to the bundled copy.
fn resolve_case(path: Option<&PathBuf>) -> Result<CaseData, Failure> {
    match path {
        None => Ok(CaseData::ieee9()),
        Some(p) if !p.exists() && p.file_name().is_some_and(|n| n == "ieee9.json") => {
            Ok(CaseData::ieee9())
        }
        Some(p) => Ok(load_case(p)?),
    }
}

fn resolve_contingencies(path: Option<&PathBuf>) -> Result<Vec<ContingencyDef>, Failure> {
    match path {
        None => Ok(IEEE9_CONTINGENCIES.to_vec()),
        Some(p) => Ok(parse_contingencies(&read(p)?)?),
    }
}

/// `machine:pu` pairs with 1-based machine numbers.
fn parse_dispatch(text: &str) -> Result<Vec<(usize, f64)>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let bad = || Failure::Validation(format!("bad dispatch entry {item:?}"));
            let (m, p) = item.split_once(':').ok_or_else(bad)?;
            let m: usize = m.trim().parse().map_err(|_| bad())?;
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            if m == 0 || !p.is_finite() {
                return Err(bad());
            }
            Ok((m - 1, p))
        })
        .collect()
}

fn contingency(case: &CaseData, defs: &[ContingencyDef], id: u32) -> Result<ContingencySet, Failure> {
    let def = defs
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| Failure::Validation(format!("no contingency with id {id}")))?;
    Ok(build_contingency(case, def)?)
}

fn intact(case: &CaseData) -> Result<CampaignTarget, Failure> {
    let net = reduce_network(case, None, None)?;
    let sep = solve_sep(&net, &prefault_angles(case))?;
    Ok(CampaignTarget { net, sep })
}

fn target(case: &CaseData, defs: &[ContingencyDef], cont: Option<u32>) -> Result<CampaignTarget, Failure> {
    match cont {
        None => intact(case),
        Some(id) => {
            let set = contingency(case, defs, id)?;
            Ok(CampaignTarget { net: set.postfault_frame, sep: set.postfault_sep })
        }
    }
}

fn expansion_csv(sys: &TteSystem) -> String {
    let mut out = String::from("pair_i,pair_j,k,e_k\n");
    let m = sys.machines();
    for i in 0..m {
        for j in 0..m {
            if let Some(s) = sys.pair_series(i, j) {
                for (k, e) in s.coeffs().iter().enumerate() {
                    out.push_str(&format!("{},{},{k},{e}\n", i + 1, j + 1));
                }
            }
        }
        // the infinite bus is numbered 0
        if let Some(s) = sys.infinite_series(i) {
            for (k, e) in s.coeffs().iter().enumerate() {
                out.push_str(&format!("{},0,{k},{e}\n", i + 1));
            }
        }
    }
    out
}

fn side_by_side(base: &CctTable, stressed: &CctTable) -> String {
    let b = base.to_csv();
    let s = stressed.to_csv();
    let mut out = String::new();
    for (k, (lb, ls)) in b.lines().zip(s.lines()).enumerate() {
        let mut right = ls.split(',');
        // both tables share the id column
        let id = right.next().unwrap_or_default();
        let rest: Vec<&str> = right.collect();
        if k == 0 {
            let left: Vec<String> = lb.split(',').skip(1).map(|c| format!("base_{c}")).collect();
            let r: Vec<String> = rest.iter().map(|c| format!("redispatch_{c}")).collect();
            out.push_str(&format!("{id},{},{}\n", left.join(","), r.join(",")));
        } else {
            let left: Vec<&str> = lb.split(',').skip(1).collect();
            out.push_str(&format!("{id},{},{}\n", left.join(","), rest.join(",")));
        }
    }
    out
}

fn report_errors(table: &CctTable, label: &str) {
    for row in &table.rows {
        if let Err(e) = &row.original {
            eprintln!("{label} contingency {}: original: {e}", row.def.id);
        }
        for (o, c) in table.orders.iter().zip(&row.cells) {
            if let Err(e) = c {
                eprintln!("{label} contingency {}: order {o}: {e}", row.def.id);
            }
        }
    }
}

pub fn run(args: MmArgs, sink: &Sink) -> Result<(), Failure> {
    let mut case = resolve_case(args.case.as_ref())?;
    let defs = resolve_contingencies(args.contingencies.as_ref())?;
    let compare = matches!(args.command, MmCommand::Cct { compare_tables: true, .. });
    if let (Some(d), false) = (&args.dispatch, compare) {
        case = redispatch(&case, &parse_dispatch(d)?)?;
    }
    match args.command {
        MmCommand::Expand { cont, order } => {
            let order = Order::Truncated(order);
            order.truncation().ok_or_else(|| Failure::Validation("order must be >= 1".into()))?;
            let t = target(&case, &defs, cont)?;
            let sys = TteSystem::new(&t.net, &t.sep, order)?;
            sink.primary("expansion.csv", &expansion_csv(&sys))
        }
        MmCommand::Simulate { cont, order, t_clear, stride, tte_fault_on, sim } => {
            if stride == 0 {
                return Err(Failure::Validation("--stride must be at least 1".into()));
            }
            let set = contingency(&case, &defs, cont)?;
            let cfg = CctConfig { sim: sim.config(), tte_fault_on, ..CctConfig::default() };
            let (traj, stable) = simulate_trajectory(&set, order, t_clear, &cfg)?;
            let full = traj.to_csv();
            let mut lines = full.lines();
            let mut out = String::new();
            if let Some(h) = lines.next() {
                out.push_str(h);
                out.push('\n');
            }
            let body: Vec<&str> = lines.collect();
            for (k, l) in body.iter().enumerate() {
                if k % stride == 0 || k + 1 == body.len() {
                    out.push_str(l);
                    out.push('\n');
                }
            }
            sink.primary("trajectory.csv", &out)?;
            let verdict = match (traj.diverged, stable) {
                (true, _) => "unstable (diverged)",
                (false, true) => "stable",
                (false, false) => "unstable",
            };
            eprintln!("contingency {cont}, order {order}, t_clear {t_clear}: {verdict}");
            Ok(())
        }
        MmCommand::Boundary {
            count, seed, orders, mode, cont, l0, s0, eps, max_evaluations, sim,
        } => {
            let orders = parse_orders(&orders)?;
            let t = target(&case, &defs, cont)?;
            let cfg = SearchConfig { l0, s0, eps, sim: sim.config(), max_evaluations };
            let dirs = sample_directions(count, 2 * t.net.m, seed, mode)?;
            let campaign = boundary_campaign(&t, &orders, &dirs, &cfg)?;
            sink.secondary("boundary.csv", &campaign.to_csv())?;
            sink.primary("boundary_summary.json", &(campaign.summary_json() + "\n"))
        }
        MmCommand::Cct {
            orders, tol, cap, escalation_step, tte_fault_on, compare_tables, sim,
        } => {
            let orders = parse_orders(&orders)?;
            let cfg = CctConfig { sim: sim.config(), tol, cap, escalation_step, tte_fault_on };
            let base = cct_table(&case, &defs, &orders, &cfg)?;
            report_errors(&base, "base");
            if !compare_tables {
                sink.secondary("cct_absolute.csv", &base.to_csv_absolute())?;
                return sink.primary("cct.csv", &base.to_csv());
            }
            let dispatch = parse_dispatch(args.dispatch.as_deref().unwrap_or(DEFAULT_DISPATCH))?;
            let stressed_case = redispatch(&case, &dispatch)?;
            let stressed = cct_table(&stressed_case, &defs, &orders, &cfg)?;
            report_errors(&stressed, "redispatch");
            sink.secondary("cct_base.csv", &base.to_csv())?;
            sink.secondary("cct_base_absolute.csv", &base.to_csv_absolute())?;
            sink.secondary("cct_redispatch.csv", &stressed.to_csv())?;
            sink.secondary("cct_redispatch_absolute.csv", &stressed.to_csv_absolute())?;
            sink.secondary("case_redispatch.json", &(stressed_case.to_json() + "\n"))?;
            sink.primary("cct_compare.csv", &side_by_side(&base, &stressed))
        }
    }
}
