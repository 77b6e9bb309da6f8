use std::f64::consts::PI;

use clap::Subcommand;
use serde_json::json;

use tte_stab::simulator::{parse_orders, Order};
use tte_stab::smib::{
    angle_grid, check_ordering, existence_threshold,
    pdelta_curve, sweep_ueps, uep_closed_form, uep_numeric, SmibParams,
};

use crate::output::{Failure, Sink};

#[derive(Debug, Subcommand)]
pub enum SmibCommand {
    /// Approximate UEPs at one operating angle.
    Uep {
        #[arg(long)]
        delta_s: f64,
        #[arg(long, default_value = "2..9")]
        orders: String,
    },
    /// Approximate UEPs and their errors over the operating-angle grid.
    Sweep {
        #[arg(long, default_value = "3,4,7,8")]
        orders: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Operating-angle thresholds below which orders 5 and 6 lose their UEP.
    Thresholds,
    /// Power-angle curves of the original and truncated systems.
    Pdelta {
        #[arg(long)]
        delta_s: f64,
        #[arg(long, default_value_t = 1.0)]
        pmax: f64,
        #[arg(long, default_value = "2,3")]
        orders: String,
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = PI)]
        max: f64,
        #[arg(long, default_value_t = 629)]
        samples: usize,
    },
    /// Checks that order 2 overestimates and order 3 underestimates the UEP,
    /// and the order chains, over the operating-angle grid.
    Claims {
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
}

fn smib_orders(text: &str, min: usize) -> Result<Vec<usize>, Failure> {
    parse_orders(text)?
        .into_iter()
        .map(|o| match o {
            Order::Truncated(n) if n >= min => Ok(n),
            other => Err(Failure::Validation(format!(
                "order {other} is not available here (use {min}..15)"
            ))),
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

pub fn run(cmd: SmibCommand, sink: &Sink) -> Result<(), Failure> {
    match cmd {
        SmibCommand::Uep { delta_s, orders } => {
            let p = SmibParams::at_angle(delta_s)?;
            let mut out = String::from("delta_s,order,uep,error,method\n");
            for n in smib_orders(&orders, 2)? {
                let (est, method) = if n <= 3 {
                    (uep_closed_form(&p, n)?, "closed_form")
                } else {
                    (uep_numeric(&p, n)?, "numeric")
                };
                out.push_str(&format!(
                    "{delta_s},{n},{},{},{method}\n",
                    opt(est.value),
                    opt(est.error())
                ));
            }
            sink.primary("uep.csv", &out)
        }
        SmibCommand::Sweep { orders, step } => {
            let rows = sweep_ueps(&smib_orders(&orders, 2)?, step)?;
            let mut out = String::from("delta_s,order,uep,error\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.delta_s,
                    r.order,
                    opt(r.estimate),
                    opt(r.error)
                ));
            }
            sink.primary("sweep.csv", &out)
        }
        SmibCommand::Thresholds => {
            let mut out = String::from("order,delta_s_threshold\n");
            for n in [5, 6] {
                out.push_str(&format!("{n},{}\n", existence_threshold(n)?));
            }
            sink.primary("thresholds.csv", &out)
        }
        SmibCommand::Pdelta { delta_s, pmax, orders, min, max, samples } => {
            let orders = smib_orders(&orders, 1)?;
            let table = pdelta_curve(delta_s, pmax, &orders, (min, max), samples)?;
            let mut out = String::from("delta,pe");
            for n in &orders {
                out.push_str(&format!(",pe_n{n}"));
            }
            out.push('\n');
            for (d, pe, approx) in &table.rows {
                out.push_str(&format!("{d},{pe}"));
                for v in approx {
                    out.push_str(&format!(",{v}"));
                }
                out.push('\n');
            }
            sink.primary("pdelta.csv", &out)
        }
        SmibCommand::Claims { step } => {
            let grid = angle_grid(step)?;
            let mut above = 0;
            let mut below = 0;
            for &ds in &grid {
                let p = SmibParams::at_angle(ds)?;
                if !matches!(uep_closed_form(&p, 2)?.value, Some(u) if u > PI - ds) {
                    above += 1;
                }
                if !matches!(uep_closed_form(&p, 3)?.value, Some(u) if u < PI - ds) {
                    below += 1;
                }
            }
            let ordering = check_ordering(step)?;
            let summary = json!({
                "points": grid.len(),
                "order2_not_above_violations": above,
                "order3_not_below_violations": below,
                "ordering_violations": ordering.violations,
                "absent_estimates": ordering.absent.len(),
            });
            let text = serde_json::to_string_pretty(&summary).expect("json") + "\n";
            sink.primary("claims.json", &text)?;
            let total = above + below + ordering.violations.len();
            if total > 0 {
                return Err(Failure::Validation(format!("{total} inequality violations")));
            }
            Ok(())
        }
    }
}
