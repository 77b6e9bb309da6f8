//! Bus admittance matrix and a polar Newton-Raphson power flow.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::case::{BusKind, CaseData};
use crate::error::{Error, Result};

pub const PF_TOLERANCE: f64 = 1e-12;
pub const PF_MAX_ITER: usize = 30;

/// Network admittance matrix over all buses, skipping out-of-service
/// branches and optionally one more branch index (a line trip).
pub fn build_ybus(case: &CaseData, skip_branch: Option<usize>) -> DMatrix<Complex64> {
    let n = case.buses.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (k, br) in case.branches.iter().enumerate() {
        if !br.in_service || Some(k) == skip_branch {
            continue;
        }
        let f = case.bus_index(br.from).expect("validated");
        let t = case.bus_index(br.to).expect("validated");
        let ys = Complex64::new(br.r, br.x).inv();
        let ysh = Complex64::new(0.0, 0.5 * br.b);
        y[(f, f)] += ys + ysh;
        y[(t, t)] += ys + ysh;
        y[(f, t)] -= ys;
        y[(t, f)] -= ys;
    }
    y
}

pub fn bus_voltages(case: &CaseData) -> DVector<Complex64> {
    DVector::from_iterator(
        case.buses.len(),
        case.buses.iter().map(|b| Complex64::from_polar(b.vm, b.va)),
    )
}

/// Net complex power injected into the network at each bus.
pub fn injections(y: &DMatrix<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    let i = y * v;
    DVector::from_iterator(v.len(), v.iter().zip(i.iter()).map(|(v, i)| v * i.conj()))
}

/// Complex generation at each bus: network injection plus local load.
pub fn generation(case: &CaseData) -> DVector<Complex64> {
    let y = build_ybus(case, None);
    let s = injections(&y, &bus_voltages(case));
    DVector::from_iterator(
        s.len(),
        s.iter()
            .zip(&case.buses)
            .map(|(s, b)| s + Complex64::new(b.p_load, b.q_load)),
    )
}

/// Largest active/reactive mismatch of the stored voltages against the
/// injections implied by bus types, machine dispatch and loads.
pub fn mismatch(case: &CaseData) -> f64 {
    let y = build_ybus(case, None);
    let (p_spec, q_spec) = specified_injections(case);
    let s = injections(&y, &bus_voltages(case));
    case.buses
        .iter()
        .enumerate()
        .map(|(i, b)| match b.kind {
            BusKind::Slack => 0.0,
            BusKind::Pv => (s[i].re - p_spec[i]).abs(),
            BusKind::Pq => (s[i].re - p_spec[i]).abs().max((s[i].im - q_spec[i]).abs()),
        })
        .fold(0.0, f64::max)
}

fn specified_injections(case: &CaseData) -> (Vec<f64>, Vec<f64>) {
    let mut p: Vec<f64> = case.buses.iter().map(|b| -b.p_load).collect();
    let q: Vec<f64> = case.buses.iter().map(|b| -b.q_load).collect();
    for m in &case.machines {
        let i = case.bus_index(m.bus).expect("validated");
        p[i] += m.p_m;
    }
    (p, q)
}

/// Solves the power flow in place from a flat start (`vm` kept at its
/// setpoint on slack/PV buses, 1.0 on PQ buses, all angles 0 except the
/// slack reference). The slack machine's `p_m` is set to the solved slack
/// generation.
pub fn solve_power_flow(case: &mut CaseData) -> Result<usize> {
    let n = case.buses.len();
    let y = build_ybus(case, None);
    let (p_spec, q_spec) = specified_injections(case);
    let slack = case
        .buses
        .iter()
        .position(|b| b.kind == BusKind::Slack)
        .expect("validated");

    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.vm })
        .collect();
    let mut va: Vec<f64> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| if i == slack { b.va } else { 0.0 })
        .collect();

    let pv_pq: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusKind::Pq).collect();
    let dim = pv_pq.len() + pq.len();

    for iter in 0..=PF_MAX_ITER {
        let v = DVector::from_iterator(n, (0..n).map(|i| Complex64::from_polar(vm[i], va[i])));
        let current = &y * &v;
        let s: Vec<Complex64> = (0..n).map(|i| v[i] * current[i].conj()).collect();

        let mut f = DVector::zeros(dim);
        for (r, &i) in pv_pq.iter().enumerate() {
            f[r] = s[i].re - p_spec[i];
        }
        for (r, &i) in pq.iter().enumerate() {
            f[pv_pq.len() + r] = s[i].im - q_spec[i];
        }
        let worst = f.amax();
        if !worst.is_finite() {
            break;
        }
        if worst < PF_TOLERANCE {
            for (i, b) in case.buses.iter_mut().enumerate() {
                b.vm = vm[i];
                b.va = va[i];
            }
            let slack_id = case.buses[slack].id;
            let slack_gen = s[slack].re + case.buses[slack].p_load;
            if let Some(m) = case.machines.iter_mut().find(|m| m.bus == slack_id) {
                m.p_m = slack_gen;
            }
            return Ok(iter);
        }
        if iter == PF_MAX_ITER {
            return Err(Error::NonConvergence {
                stage: "power flow",
                iterations: PF_MAX_ITER,
                mismatch: worst,
            });
        }

        // dS/dθ = j diag(V) conj(diag(I) − Y diag(V))
        // dS/d|V| = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
        let j = Complex64::new(0.0, 1.0);
        let ds_dva = DMatrix::from_fn(n, n, |a, b| {
            let diag = if a == b { current[a] } else { Complex64::new(0.0, 0.0) };
            j * v[a] * (diag - y[(a, b)] * v[b]).conj()
        });
        let ds_dvm = DMatrix::from_fn(n, n, |a, b| {
            let unit_b = v[b] / vm[b];
            let mut e = v[a] * (y[(a, b)] * unit_b).conj();
            if a == b {
                e += current[a].conj() * unit_b;
            }
            e
        });
        let mut jac = DMatrix::zeros(dim, dim);
        for (r, &a) in pv_pq.iter().enumerate() {
            for (c, &b) in pv_pq.iter().enumerate() {
                jac[(r, c)] = ds_dva[(a, b)].re;
            }
            for (c, &b) in pq.iter().enumerate() {
                jac[(r, pv_pq.len() + c)] = ds_dvm[(a, b)].re;
            }
        }
        for (r, &a) in pq.iter().enumerate() {
            for (c, &b) in pv_pq.iter().enumerate() {
                jac[(pv_pq.len() + r, c)] = ds_dva[(a, b)].im;
            }
            for (c, &b) in pq.iter().enumerate() {
                jac[(pv_pq.len() + r, pv_pq.len() + c)] = ds_dvm[(a, b)].im;
            }
        }
        let step = jac.lu().solve(&(-f)).ok_or(Error::NonConvergence {
            stage: "power flow (singular Jacobian)",
            iterations: iter,
            mismatch: worst,
        })?;
        for (r, &i) in pv_pq.iter().enumerate() {
            va[i] += step[r];
        }
        for (r, &i) in pq.iter().enumerate() {
            vm[i] += step[pv_pq.len() + r];
            if !(vm[i] > 0.0) {
                return Err(Error::NonConvergence {
                    stage: "power flow (voltage collapse)",
                    iterations: iter,
                    mismatch: worst,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        stage: "power flow",
        iterations: PF_MAX_ITER,
        mismatch: f64::NAN,
    })
}

/// Copy of `case` with new mechanical powers for the listed machines
/// (0-based index → pu) and a re-solved power flow. The slack machine's
/// power is an output of the solve and cannot be assigned.
pub fn redispatch(case: &CaseData, dispatch: &[(usize, f64)]) -> Result<CaseData> {
    let mut out = case.clone();
    let slack_id = case
        .buses
        .iter()
        .find(|b| b.kind == BusKind::Slack)
        .map(|b| b.id)
        .expect("validated");
    for &(k, p) in dispatch {
        let m = out
            .machines
            .get_mut(k)
            .ok_or_else(|| Error::InvalidInput(format!("no machine with index {}", k + 1)))?;
        if m.bus == slack_id {
            return Err(Error::InvalidInput(format!(
                "machine {} sits on the slack bus; its power is solved, not assigned",
                k + 1
            )));
        }
        if !p.is_finite() {
            return Err(Error::NonFinite("redispatch power"));
        }
        m.p_m = p;
    }
    solve_power_flow(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_case_is_solved() {
        let c = CaseData::ieee9();
        assert!(mismatch(&c) < 1e-9, "{}", mismatch(&c));
        let g = generation(&c);
        let slack = c.bus_index(1).unwrap();
        assert!((g[slack].re - c.machines[0].p_m).abs() < 1e-9);
    }

    #[test]
    fn flat_start_reproduces_bundled_solution() {
        let base = CaseData::ieee9();
        let mut c = base.clone();
        solve_power_flow(&mut c).unwrap();
        for (a, b) in c.buses.iter().zip(&base.buses) {
            assert!((a.vm - b.vm).abs() < 1e-10 && (a.va - b.va).abs() < 1e-10);
        }
        assert!((c.machines[0].p_m - base.machines[0].p_m).abs() < 1e-10);
    }

    #[test]
    fn stressed_dispatch_slack_output() {
        let c = redispatch(&CaseData::ieee9(), &[(1, 2.0), (2, 1.0)]).unwrap();
        let p1 = c.machines[0].p_m * c.base_mva;
        assert!((p1 - 22.55).abs() < 0.05, "{p1}");
    }

    #[test]
    fn infeasible_dispatch_diverges() {
        let err = redispatch(&CaseData::ieee9(), &[(1, 100.0)]).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn identity_redispatch() {
        let base = CaseData::ieee9();
        let c = redispatch(&base, &[]).unwrap();
        for (a, b) in c.buses.iter().zip(&base.buses) {
            assert!((a.vm - b.vm).abs() < 1e-10 && (a.va - b.va).abs() < 1e-10);
        }
        for (a, b) in c.machines.iter().zip(&base.machines) {
            assert!((a.p_m - b.p_m).abs() < 1e-10);
        }
    }

    #[test]
    fn slack_cannot_be_assigned() {
        assert!(redispatch(&CaseData::ieee9(), &[(0, 1.0)]).is_err());
    }
}
