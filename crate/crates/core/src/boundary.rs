//! Directional search for the stability-boundary distance from an SEP and
//! random-direction campaigns comparing truncated systems with the original.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ReducedNetwork;
use crate::simulator::{Order, SimConfig, TteSystem};

pub const DEFAULT_L0: f64 = 0.1;
pub const DEFAULT_S0: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 1e-3;
pub const MAX_EVALUATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub l0: f64,
    pub s0: f64,
    pub eps: f64,
    pub sim: SimConfig,
    pub max_evaluations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            l0: DEFAULT_L0,
            s0: DEFAULT_S0,
            eps: DEFAULT_EPS,
            sim: SimConfig::default(),
            max_evaluations: MAX_EVALUATIONS,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if !(self.l0 > 0.0 && self.s0 > 0.0 && self.eps > 0.0) {
            return Err(Error::InvalidInput("l0, s0 and eps must be positive".into()));
        }
        if !(self.eps < self.s0) {
            return Err(Error::InvalidInput(format!(
                "eps ({}) must be smaller than s0 ({})",
                self.eps, self.s0
            )));
        }
        if self.max_evaluations == 0 {
            return Err(Error::InvalidInput("simulation cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResult {
    pub direction: Vec<f64>,
    /// Last stable distance along the direction.
    pub l_star: f64,
    /// Nearest distance beyond `l_star` seen unstable (`l_star + s` at
    /// termination).
    pub l_unstable: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionMode {
    /// Normalized standard Gaussian components: uniform on the sphere.
    Gaussian,
    /// Normalized uniform-[0,1) components, confined to the positive orthant.
    UniformOrthant,
}

impl std::str::FromStr for DirectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "sphere" => Ok(DirectionMode::Gaussian),
            "uniform" | "orthant" | "rand" => Ok(DirectionMode::UniformOrthant),
            _ => Err(Error::InvalidInput(format!("unknown direction mode {s:?}"))),
        }
    }
}

/// `count` unit vectors of length `dimension`, reproducible from `seed`.
pub fn sample_directions(
    count: usize,
    dimension: usize,
    seed: u64,
    mode: DirectionMode,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 || dimension == 0 {
        return Err(Error::InvalidInput("need at least one direction of positive dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..dimension)
            .map(|_| match mode {
                DirectionMode::Gaussian => rng.sample::<f64, _>(StandardNormal),
                DirectionMode::UniformOrthant => rng.random::<f64>(),
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(out)
}

/// Directional search from `sys`'s expansion SEP. Grows `l` by `s` while
/// stable; on instability halves `s` and steps back by it; returns once a
/// stable point is reached with `s < ε`.
pub fn search_along(sys: &TteSystem, direction: &[f64], cfg: &SearchConfig) -> Result<BoundaryResult> {
    cfg.validate()?;
    if direction.len() != sys.dimension() {
        return Err(Error::InvalidInput(format!(
            "direction has {} components, state has {}",
            direction.len(),
            sys.dimension()
        )));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidInput(format!("direction norm {norm} is not 1")));
    }
    let origin = sys.equilibrium_state();
    let mut x0 = origin.clone();
    let mut l = cfg.l0;
    let mut s = cfg.s0;
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    let mut evaluations = 0;
    loop {
        if evaluations == cfg.max_evaluations {
            return Err(Error::SearchCapExceeded {
                evaluations,
                lower,
                upper,
            });
        }
        for ((x, o), n) in x0.iter_mut().zip(&origin).zip(direction) {
            *x = o + l * n;
        }
        evaluations += 1;
        if cfg.sim.settles(sys, &x0)? {
            lower = l;
            if s < cfg.eps {
                return Ok(BoundaryResult {
                    direction: direction.to_vec(),
                    l_star: l,
                    l_unstable: upper.min(l + s),
                    evaluations,
                });
            }
            l += s;
        } else {
            upper = upper.min(l);
            s /= 2.0;
            l -= s;
        }
    }
}

/// Network and SEP a campaign searches around.
#[derive(Debug, Clone)]
pub struct CampaignTarget {
    pub net: ReducedNetwork,
    pub sep: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Found(BoundaryResult),
    /// No instability within the simulation cap.
    Undetectable { evaluations: usize, lower: f64 },
    Failed(String),
}

impl Outcome {
    fn from_result(r: Result<BoundaryResult>) -> Self {
        match r {
            Ok(b) => Outcome::Found(b),
            Err(Error::SearchCapExceeded { evaluations, lower, .. }) => {
                Outcome::Undetectable { evaluations, lower }
            }
            Err(e) => Outcome::Failed(e.to_string()),
        }
    }

    pub fn l_star(&self) -> Option<f64> {
        match self {
            Outcome::Found(b) => Some(b.l_star),
            _ => None,
        }
    }

    pub fn evaluations(&self) -> usize {
        match self {
            Outcome::Found(b) => b.evaluations,
            Outcome::Undetectable { evaluations, .. } => *evaluations,
            Outcome::Failed(_) => 0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Found(_) => "ok",
            Outcome::Undetectable { .. } => "undetectable",
            Outcome::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRow {
    pub index: usize,
    pub direction: Vec<f64>,
    pub original: Outcome,
    pub cells: Vec<Outcome>,
}

impl DirectionRow {
    /// `l*(order) / l*(original)`; infinite for an undetectable boundary.
    pub fn ratio(&self, k: usize) -> Option<f64> {
        let base = self.original.l_star()?;
        match &self.cells[k] {
            Outcome::Found(b) => Some(b.l_star / base),
            Outcome::Undetectable { .. } => Some(f64::INFINITY),
            Outcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub orders: Vec<Order>,
    pub rows: Vec<DirectionRow>,
}

/// Runs the search along every direction for the original system and each
/// order. Per-direction failures are recorded, never propagated.
pub fn boundary_campaign(
    target: &CampaignTarget,
    orders: &[Order],
    directions: &[Vec<f64>],
    cfg: &SearchConfig,
) -> Result<Campaign> {
    cfg.validate()?;
    let mut columns = vec![Order::Original];
    columns.extend(orders.iter().copied().filter(|o| *o != Order::Original));
    let systems: Vec<std::result::Result<TteSystem, String>> = columns
        .iter()
        .map(|o| TteSystem::new(&target.net, &target.sep, *o).map_err(|e| e.to_string()))
        .collect();
    if let Err(e) = &systems[0] {
        return Err(Error::InvalidInput(format!("original system: {e}")));
    }
    let jobs: Vec<(usize, usize)> = (0..directions.len())
        .flat_map(|d| (0..columns.len()).map(move |c| (d, c)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(d, c)| match &systems[c] {
            Ok(sys) => Outcome::from_result(search_along(sys, &directions[d], cfg)),
            Err(e) => Outcome::Failed(e.clone()),
        })
        .collect();
    let mut it = outcomes.into_iter();
    let rows = directions
        .iter()
        .enumerate()
        .map(|(index, dir)| DirectionRow {
            index,
            direction: dir.clone(),
            original: it.next().expect("outcome"),
            cells: (1..columns.len()).map(|_| it.next().expect("outcome")).collect(),
        })
        .collect();
    Ok(Campaign {
        orders: columns[1..].to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub order: Order,
    pub ok: usize,
    pub undetectable: usize,
    pub failed: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// (probability, value) pairs over the finite ratios.
    pub quantiles: Vec<(f64, f64)>,
    /// Bin edges and counts over the finite ratios.
    pub histogram_edges: Vec<f64>,
    pub histogram_counts: Vec<usize>,
}

const QUANTILES: [f64; 7] = [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0];
const HISTOGRAM_BINS: usize = 40;

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Campaign {
    pub fn ratios(&self, order: Order) -> Vec<Option<f64>> {
        match self.orders.iter().position(|o| *o == order) {
            Some(k) => self.rows.iter().map(|r| r.ratio(k)).collect(),
            None => Vec::new(),
        }
    }

    pub fn summary(&self) -> Vec<OrderSummary> {
        self.orders
            .iter()
            .enumerate()
            .map(|(k, &order)| {
                let mut ok = 0;
                let mut undetectable = 0;
                let mut failed = 0;
                let mut vals = Vec::new();
                for r in &self.rows {
                    match (&r.cells[k], r.ratio(k)) {
                        (Outcome::Found(_), Some(v)) => {
                            ok += 1;
                            vals.push(v);
                        }
                        (Outcome::Undetectable { .. }, _) => undetectable += 1,
                        _ => failed += 1,
                    }
                }
                vals.sort_by(f64::total_cmp);
                let (edges, counts) = histogram(&vals);
                OrderSummary {
                    order,
                    ok,
                    undetectable,
                    failed,
                    min: vals.first().copied(),
                    max: vals.last().copied(),
                    quantiles: if vals.is_empty() {
                        Vec::new()
                    } else {
                        QUANTILES.iter().map(|&p| (p, quantile(&vals, p))).collect()
                    },
                    histogram_edges: edges,
                    histogram_counts: counts,
                }
            })
            .collect()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    /// `direction_index,order,l_star,ratio,evaluations,outcome`, original
    /// system rows included with ratio 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction_index,order,l_star,ratio,evaluations,outcome\n");
        for r in &self.rows {
            let base = r.original.l_star();
            let mut line = |order: Order, o: &Outcome, ratio: Option<f64>| {
                let l = o.l_star().map_or_else(|| "inf".to_string(), |v| format!("{v}"));
                let l = if matches!(o, Outcome::Failed(_)) { "nan".into() } else { l };
                let ratio = ratio.map_or_else(|| "nan".to_string(), |v| {
                    if v.is_infinite() { "inf".into() } else { format!("{v}") }
                });
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.index,
                    order,
                    l,
                    ratio,
                    o.evaluations(),
                    o.label()
                ));
            };
            line(Order::Original, &r.original, base.map(|_| 1.0));
            for (k, o) in r.cells.iter().enumerate() {
                line(self.orders[k], o, r.ratio(k));
            }
        }
        out
    }
}

fn histogram(sorted: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return (Vec::new(), Vec::new());
    };
    let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
    let bins = if hi > lo { HISTOGRAM_BINS } else { 1 };
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0; bins];
    for v in sorted {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    (edges, counts)
}
