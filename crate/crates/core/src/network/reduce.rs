//! Classical-model reduction to generator internal nodes.
//!
//! Loads become constant admittances at their power-flow voltages, each
//! machine an EMF behind `x'd`, and every network bus is Kron-eliminated.
//! The reduced admittance `Y = G + jB` gives
//! `P_ei = E_i² G_ii + Σ_{j≠i} E_iE_j (B_ij sin δ_ij + G_ij cos δ_ij)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::case::CaseData;
use super::powerflow::{build_ybus, bus_voltages, generation};
use crate::error::{Error, Result};

/// Coupling of a machine to a fixed-angle (zero) infinite bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfiniteBusLink {
    pub c: f64,
    pub d: f64,
}

/// Reduced classical model: constants of the swing equations for `m`
/// machines. Matrices are stored row-major with zero diagonals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedNetwork {
    pub m: usize,
    pub omega_s: f64,
    pub e: Vec<f64>,
    /// Self conductance `G_ii` of the reduced admittance.
    pub g: Vec<f64>,
    /// `C_ij = E_iE_j B_ij`.
    pub c: Vec<f64>,
    /// `D_ij = E_iE_j G_ij`.
    pub d: Vec<f64>,
    pub h: Vec<f64>,
    pub damping: Vec<f64>,
    pub pm: Vec<f64>,
    /// Per-machine infinite-bus links; empty for an islanded network.
    #[serde(default)]
    pub infinite: Vec<Option<InfiniteBusLink>>,
}

impl ReducedNetwork {
    #[inline]
    pub fn c_at(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.m + j]
    }

    #[inline]
    pub fn d_at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.m + j]
    }

    pub fn has_infinite_bus(&self) -> bool {
        self.infinite.iter().any(Option::is_some)
    }

    pub fn infinite_link(&self, i: usize) -> Option<InfiniteBusLink> {
        self.infinite.get(i).copied().flatten()
    }

    /// Electrical power of every machine at the given internal angles.
    pub fn electrical_power(&self, angles: &[f64]) -> Vec<f64> {
        (0..self.m).map(|i| self.electrical_power_of(i, angles)).collect()
    }

    pub fn electrical_power_of(&self, i: usize, angles: &[f64]) -> f64 {
        let mut p = self.e[i] * self.e[i] * self.g[i];
        for j in 0..self.m {
            if j != i {
                let (s, c) = (angles[i] - angles[j]).sin_cos();
                p += self.c_at(i, j) * s + self.d_at(i, j) * c;
            }
        }
        if let Some(link) = self.infinite_link(i) {
            let (s, c) = angles[i].sin_cos();
            p += link.c * s + link.d * c;
        }
        p
    }

    /// `max_i |P_mi − P_ei(δ)|`.
    pub fn power_residual(&self, angles: &[f64]) -> f64 {
        self.electrical_power(angles)
            .iter()
            .zip(&self.pm)
            .map(|(pe, pm)| (pm - pe).abs())
            .fold(0.0, f64::max)
    }

    /// The same network seen from a frame rotating at `slip` rad/s: a
    /// steady speed offset `σ` costs each machine `D_i σ / ω_s` of
    /// mechanical power.
    pub fn in_rotating_frame(&self, slip: f64) -> ReducedNetwork {
        let mut out = self.clone();
        for (pm, d) in out.pm.iter_mut().zip(&self.damping) {
            *pm -= d * slip / self.omega_s;
        }
        out
    }

    /// SMIB equivalent of `δ̈ + αδ̇ + β(sin δ − sin δ_s) = 0`: one machine
    /// with `ω_s/2H = 1`, `D/2H = α` and a pure-susceptance link of `β` to
    /// the infinite bus.
    pub fn smib(delta_s: f64, alpha: f64, beta: f64) -> ReducedNetwork {
        let omega_s = 2.0 * std::f64::consts::PI * 60.0;
        let h = 0.5 * omega_s;
        ReducedNetwork {
            m: 1,
            omega_s,
            e: vec![1.0],
            g: vec![0.0],
            c: vec![0.0],
            d: vec![0.0],
            h: vec![h],
            damping: vec![2.0 * h * alpha],
            pm: vec![beta * delta_s.sin()],
            infinite: vec![Some(InfiniteBusLink { c: beta, d: 0.0 })],
        }
    }
}

/// Kron reduction of `y` onto the node indices in `keep`:
/// `Y_red = Y_kk − Y_ke Y_ee⁻¹ Y_ek`. `names` label the nodes for the
/// singular-block diagnostic.
pub fn kron_reduce(
    y: &DMatrix<Complex64>,
    keep: &[usize],
    names: &[String],
) -> Result<DMatrix<Complex64>> {
    let n = y.nrows();
    let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| y[(rows[r], cols[c])])
    };
    let y_kk = pick(keep, keep);
    if elim.is_empty() {
        return Ok(y_kk);
    }
    let y_ke = pick(keep, &elim);
    let y_ee = pick(&elim, &elim);
    let y_ek = pick(&elim, keep);
    let singular = || Error::SingularElimination(elim.iter().map(|&i| names[i].clone()).collect());
    let lu = y_ee.lu();
    let x = lu.solve(&y_ek).ok_or_else(singular)?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(singular());
    }
    // reject numerically rank-deficient blocks that LU let through
    let scale = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = (0..lu.u().nrows())
        .map(|i| lu.u()[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    if pivot < 1e-12 * scale {
        return Err(singular());
    }
    Ok(y_kk - y_ke * x)
}

/// Internal EMFs `E = V + j x'd I_g` from the solved power flow.
pub fn internal_emfs(case: &CaseData) -> Vec<Complex64> {
    let v = bus_voltages(case);
    let s_gen = generation(case);
    case.machines
        .iter()
        .map(|m| {
            let k = case.bus_index(m.bus).expect("validated");
            let current = (s_gen[k] / v[k]).conj();
            v[k] + Complex64::new(0.0, m.xd_prime) * current
        })
        .collect()
}

/// Reduced admittance at the machine internal nodes for the given topology.
/// `grounded_bus` applies a solid fault (the bus is shorted to ground);
/// `tripped_branch` removes one branch.
pub fn reduced_admittance(
    case: &CaseData,
    grounded_bus: Option<u32>,
    tripped_branch: Option<usize>,
) -> Result<DMatrix<Complex64>> {
    let m = case.machines.len();
    let n = case.buses.len();
    let ybus = build_ybus(case, tripped_branch);
    let v = bus_voltages(case);

    let mut y = DMatrix::from_element(m + n, m + n, Complex64::new(0.0, 0.0));
    y.view_mut((m, m), (n, n)).copy_from(&ybus);
    for (k, b) in case.buses.iter().enumerate() {
        let vm2 = v[k].norm_sqr();
        y[(m + k, m + k)] += Complex64::new(b.p_load, -b.q_load) / vm2;
    }
    for (i, mach) in case.machines.iter().enumerate() {
        let k = m + case.bus_index(mach.bus).expect("validated");
        let yg = Complex64::new(0.0, mach.xd_prime).inv();
        y[(i, i)] += yg;
        y[(k, k)] += yg;
        y[(i, k)] -= yg;
        y[(k, i)] -= yg;
    }

    let mut names: Vec<String> = (1..=m).map(|i| format!("E{i}")).collect();
    names.extend(case.buses.iter().map(|b| format!("bus {}", b.id)));

    // a grounded node has zero voltage: drop it before elimination
    let (y, names) = match grounded_bus {
        None => (y, names),
        Some(id) => {
            let k = m + case.bus_index(id).ok_or_else(|| {
                Error::InvalidInput(format!("fault bus {id} is not in the case"))
            })?;
            let y = y.remove_row(k).remove_column(k);
            let mut names = names;
            names.remove(k);
            (y, names)
        }
    };
    let keep: Vec<usize> = (0..m).collect();
    kron_reduce(&y, &keep, &names)
}

/// Builds the reduced network. Mechanical powers are the prefault electrical
/// outputs (the solved generation), so the intact network is balanced
/// exactly at the power-flow internal angles.
pub fn reduce_network(
    case: &CaseData,
    grounded_bus: Option<u32>,
    tripped_branch: Option<usize>,
) -> Result<ReducedNetwork> {
    let emf = internal_emfs(case);
    let prefault = reduced_admittance(case, None, None)?;
    let yred = if grounded_bus.is_none() && tripped_branch.is_none() {
        prefault.clone()
    } else {
        reduced_admittance(case, grounded_bus, tripped_branch)?
    };
    let m = case.machines.len();
    let e: Vec<f64> = emf.iter().map(|z| z.norm()).collect();
    let mut c = vec![0.0; m * m];
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                // the reduced matrix is symmetric up to rounding; average it
                let y = 0.5 * (yred[(i, j)] + yred[(j, i)]);
                c[i * m + j] = e[i] * e[j] * y.im;
                d[i * m + j] = e[i] * e[j] * y.re;
            }
        }
    }
    // P_m = Re(E_i conj(Σ_j Y_ij E_j)) on the intact network
    let pm: Vec<f64> = (0..m)
        .map(|i| {
            let injected: Complex64 = (0..m).map(|j| prefault[(i, j)] * emf[j]).sum();
            (emf[i] * injected.conj()).re
        })
        .collect();
    Ok(ReducedNetwork {
        m,
        omega_s: case.omega_s(),
        e,
        g: (0..m).map(|i| yred[(i, i)].re).collect(),
        c,
        d,
        h: case.machines.iter().map(|x| x.h).collect(),
        damping: case.machines.iter().map(|x| x.d).collect(),
        pm,
        infinite: Vec::new(),
    })
}

/// Internal angles of the solved power flow (the prefault SEP).
pub fn prefault_angles(case: &CaseData) -> Vec<f64> {
    internal_emfs(case).iter().map(|z| z.arg()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefault_balance_at_power_flow_angles() {
        let case = CaseData::ieee9();
        let net = reduce_network(&case, None, None).unwrap();
        let angles = prefault_angles(&case);
        assert!(net.power_residual(&angles) < 1e-6);
        for (pm, mach) in net.pm.iter().zip(&case.machines) {
            assert!((pm - mach.p_m).abs() < 1e-9, "{pm} vs {}", mach.p_m);
        }
    }

    #[test]
    fn coupling_symmetry() {
        let case = CaseData::ieee9();
        for net in [
            reduce_network(&case, None, None).unwrap(),
            reduce_network(&case, Some(7), None).unwrap(),
            reduce_network(&case, None, case.branch_index(5, 7)).unwrap(),
        ] {
            for i in 0..net.m {
                for j in 0..net.m {
                    assert_eq!(net.c_at(i, j), net.c_at(j, i));
                    assert_eq!(net.d_at(i, j), net.d_at(j, i));
                }
            }
        }
    }

    #[test]
    fn fault_starves_output() {
        let case = CaseData::ieee9();
        let net = reduce_network(&case, Some(4), None).unwrap();
        let angles = prefault_angles(&case);
        let pe = net.electrical_power(&angles);
        assert!(net.pm[0] - pe[0] > 0.0);
    }

    #[test]
    fn known_prefault_emfs() {
        // classical 9-bus internal voltages: 1.0566∠2.27°, 1.0502∠19.7°, 1.0170∠13.2°
        let case = CaseData::ieee9();
        let emf = internal_emfs(&case);
        let expected = [(1.0566, 2.27), (1.0502, 19.73), (1.0170, 13.17)];
        for (z, (mag, deg)) in emf.iter().zip(expected) {
            assert!((z.norm() - mag).abs() < 5e-4, "{z}");
            assert!((z.arg().to_degrees() - deg).abs() < 0.05, "{z}");
        }
    }

    #[test]
    fn singular_block_is_reported() {
        let y = DMatrix::from_element(3, 3, Complex64::new(1.0, -1.0));
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        match kron_reduce(&y, &[0], &names) {
            Err(Error::SingularElimination(nodes)) => assert_eq!(nodes, vec!["b", "c"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn smib_equivalent_balances_at_operating_angle() {
        let net = ReducedNetwork::smib(0.5, 0.1, 2.0);
        assert!(net.power_residual(&[0.5]) < 1e-14);
        assert!((net.omega_s / (2.0 * net.h[0]) - 1.0).abs() < 1e-15);
        assert!((net.damping[0] / (2.0 * net.h[0]) - 0.1).abs() < 1e-15);
    }
}
