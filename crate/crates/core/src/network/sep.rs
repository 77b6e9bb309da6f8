//! Stable equilibrium of the reduced swing model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::reduce::ReducedNetwork;
use crate::error::{Error, Result};

pub const SEP_TOLERANCE: f64 = 1e-8;
pub const SEP_MAX_ITER: usize = 50;
const NEWTON_TOLERANCE: f64 = 1e-12;
const MAX_ANGLE_STEP: f64 = 0.5;

/// Equilibrium angles plus the synchronous speed offset (rad/s) of the
/// frame in which they are stationary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub angles: Vec<f64>,
    pub slip: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Strict SEP: machine 1 is the angle reference, Newton runs on the `m − 1`
/// difference equations, and all `m` balances are verified afterwards. A
/// network whose dispatch does not balance its losses yields
/// [`Error::InconsistentDispatch`]. With an infinite bus, every angle is
/// an unknown.
pub fn solve_sep(net: &ReducedNetwork, guess: &[f64]) -> Result<Vec<f64>> {
    solve(net, guess, false).map(|eq| eq.angles)
}

/// SEP that absorbs a power imbalance into a common speed offset `σ`:
/// solves `P_mi − P_ei(δ) = D_i σ / ω_s` for the angle differences and `σ`.
/// The relative-angle dynamics of the network are stationary at the result,
/// and `net.in_rotating_frame(σ)` has an exact SEP there.
pub fn solve_synchronous(net: &ReducedNetwork, guess: &[f64]) -> Result<Equilibrium> {
    solve(net, guess, !net.has_infinite_bus())
}

fn jacobian_entry(net: &ReducedNetwork, angles: &[f64], i: usize, j: usize) -> f64 {
    // ∂P_ei/∂δ_j
    if i == j {
        let mut s = 0.0;
        for k in 0..net.m {
            if k != i {
                let (sn, cs) = (angles[i] - angles[k]).sin_cos();
                s += net.c_at(i, k) * cs - net.d_at(i, k) * sn;
            }
        }
        if let Some(link) = net.infinite_link(i) {
            let (sn, cs) = angles[i].sin_cos();
            s += link.c * cs - link.d * sn;
        }
        s
    } else {
        let (sn, cs) = (angles[i] - angles[j]).sin_cos();
        -(net.c_at(i, j) * cs - net.d_at(i, j) * sn)
    }
}

fn solve(net: &ReducedNetwork, guess: &[f64], with_slip: bool) -> Result<Equilibrium> {
    let m = net.m;
    if guess.len() != m {
        return Err(Error::InvalidInput(format!(
            "guess has {} angles for {m} machines",
            guess.len()
        )));
    }
    if guess.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("SEP guess"));
    }
    let anchored = !net.has_infinite_bus();
    // unknown angle indices and equation indices
    let free: Vec<usize> = if anchored { (1..m).collect() } else { (0..m).collect() };
    let equations: Vec<usize> = if with_slip || !anchored {
        (0..m).collect()
    } else {
        (1..m).collect()
    };
    let dim = free.len() + usize::from(with_slip);
    let mut angles = guess.to_vec();
    let mut slip = 0.0;

    let residual_of = |angles: &[f64], slip: f64| -> Vec<f64> {
        let pe = net.electrical_power(angles);
        (0..m)
            .map(|i| net.pm[i] - pe[i] - net.damping[i] * slip / net.omega_s)
            .collect()
    };

    let mut iterations = 0;
    loop {
        let r = residual_of(&angles, slip);
        let worst = equations.iter().map(|&i| r[i].abs()).fold(0.0, f64::max);
        if !worst.is_finite() {
            return Err(Error::NonConvergence {
                stage: "SEP Newton",
                iterations,
                mismatch: worst,
            });
        }
        if worst < NEWTON_TOLERANCE || (dim == 0) {
            break;
        }
        if iterations == SEP_MAX_ITER {
            return Err(Error::NonConvergence {
                stage: "SEP Newton",
                iterations,
                mismatch: worst,
            });
        }
        let mut jac = DMatrix::zeros(equations.len(), dim);
        for (row, &i) in equations.iter().enumerate() {
            for (col, &j) in free.iter().enumerate() {
                // residual = P_m − P_e − ..., so d(residual)/dδ = −∂P_e/∂δ
                jac[(row, col)] = -jacobian_entry(net, &angles, i, j);
            }
            if with_slip {
                jac[(row, free.len())] = -net.damping[i] / net.omega_s;
            }
        }
        let rhs = DVector::from_iterator(equations.len(), equations.iter().map(|&i| -r[i]));
        let step = jac.lu().solve(&rhs).ok_or(Error::NonConvergence {
            stage: "SEP Newton (singular Jacobian)",
            iterations,
            mismatch: worst,
        })?;
        let biggest = free
            .iter()
            .enumerate()
            .map(|(k, _)| step[k].abs())
            .fold(0.0, f64::max);
        let scale = if biggest > MAX_ANGLE_STEP { MAX_ANGLE_STEP / biggest } else { 1.0 };
        for (k, &j) in free.iter().enumerate() {
            angles[j] += scale * step[k];
        }
        if with_slip {
            slip += scale * step[free.len()];
        }
        iterations += 1;
    }

    let r = residual_of(&angles, slip);
    let (machine, residual) = r
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if residual >= SEP_TOLERANCE {
        return Err(Error::InconsistentDispatch {
            machine: machine + 1,
            residual,
        });
    }
    Ok(Equilibrium {
        angles,
        slip,
        residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::case::CaseData;
    use crate::network::reduce::{prefault_angles, reduce_network};

    #[test]
    fn prefault_fixed_point() {
        let case = CaseData::ieee9();
        let net = reduce_network(&case, None, None).unwrap();
        let guess = prefault_angles(&case);
        let sep = solve_sep(&net, &guess).unwrap();
        for (a, b) in sep.iter().zip(&guess) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn inflated_dispatch_is_inconsistent() {
        let case = CaseData::ieee9();
        let mut net = reduce_network(&case, None, None).unwrap();
        net.pm[0] += 10.0;
        match solve_sep(&net, &prefault_angles(&case)) {
            Err(Error::InconsistentDispatch { machine, .. }) => assert_eq!(machine, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn postfault_needs_a_slip() {
        let case = CaseData::ieee9();
        let net = reduce_network(&case, None, case.branch_index(4, 6)).unwrap();
        let guess = prefault_angles(&case);
        assert!(matches!(
            solve_sep(&net, &guess),
            Err(Error::InconsistentDispatch { .. })
        ));
        let eq = solve_synchronous(&net, &guess).unwrap();
        assert!(eq.residual < 1e-8);
        let framed = net.in_rotating_frame(eq.slip);
        assert!(framed.power_residual(&eq.angles) < 1e-8);
        assert_eq!(eq.angles[0], guess[0]);
        // constant-impedance loads shift with the postfault voltages; the
        // imbalance settles as a sub-hertz frequency offset
        assert!(eq.slip.abs() < 2.0 * std::f64::consts::PI * 0.5, "{}", eq.slip);
    }

    #[test]
    fn infeasible_transfer_does_not_converge() {
        let case = CaseData::ieee9();
        let mut net = reduce_network(&case, None, None).unwrap();
        net.pm[1] += 30.0;
        net.pm[0] -= 30.0;
        let err = solve_sep(&net, &prefault_angles(&case)).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn smib_sep() {
        let net = ReducedNetwork::smib(0.6, 0.2, 3.0);
        let sep = solve_sep(&net, &[0.4]).unwrap();
        assert!((sep[0] - 0.6).abs() < 1e-10);
    }
}
