//! The seven constraint systems, discretized with central differences and a
//! 5-point Laplacian.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use super::{KFields, SystemId};
use crate::error::{Error, Result};
use crate::geometry::jet::Scalar;

/// |k₁| (or |sin k₁|, |cos k₁| for kh) below which the transport equations
/// switch to their multiplied-through limit form.
pub const LIMIT_TOL: f64 = 1e-8;

/// Local unknowns entering a node's equations, in this order.
pub const N_LOCAL: usize = 12;
pub(crate) const K1U: usize = 4;
pub(crate) const K1V: usize = 5;
pub(crate) const K3U: usize = 6;
pub(crate) const K3V: usize = 7;
pub(crate) const K4U: usize = 8;
pub(crate) const K4V: usize = 9;
pub(crate) const LAP1: usize = 10;
pub(crate) const LAP2: usize = 11;

/// Coefficients (α, β, γ) of F = e^{−2(2k₁+k₂)/5}(α + βe^{2k₁} + γe^{2k₂})
/// for the two equations of a z-singular system.
pub fn p_type_coefficients(sys: SystemId) -> Option<[[f64; 3]; 2]> {
    match sys {
        SystemId::Constrab => Some([[6.0, 0.0, -2.0], [8.0, 0.0, -6.0]]),
        SystemId::Cpk2 => Some([[6.0, -2.0, -2.0], [8.0, -1.0, -6.0]]),
        SystemId::Kh3 => Some([[6.0, 2.0, -2.0], [8.0, 1.0, -6.0]]),
        _ => None,
    }
}

/// Right-hand sides of Δk₁ = F₁, Δk₂ = F₂.
pub fn source_terms<S: Scalar>(sys: SystemId, k: &[S; 4]) -> [S; 2] {
    let [k1, k2, k3, k4] = k.clone();
    if let Some(coef) = p_type_coefficients(sys) {
        let pre = (k1.scale(2.0) + k2.clone()).scale(-0.4).exp();
        let x = k1.scale(2.0).exp();
        let y = k2.scale(2.0).exp();
        return coef.map(|[a, b, g]| pre.clone() * (S::real(a) + x.scale(b) + y.scale(g)));
    }
    let c = 2f64.powf(1.0 / 3.0);
    let e = k2.scale(-2.0 / 3.0).exp();
    let q = k3.clone() * k3 + k4.clone() * k4;
    let two_k1 = k1.scale(2.0);
    let e2k2 = k2.scale(2.0).exp();
    match sys {
        SystemId::Constraa => [
            -(e.clone() * two_k1.sinh()).scale(c),
            (e * (two_k1.cosh() - e2k2)).scale(3.0 * c),
        ],
        SystemId::Cpk1 => [
            e.clone() * two_k1.sinh().scale(0.5) * (S::real(-2f64.powf(4.0 / 3.0)) + k2.scale(2.0 / 3.0).exp() * q),
            (e * (two_k1.cosh() - e2k2)).scale(3.0 * c),
        ],
        SystemId::Kh => [
            two_k1.sin().scale(0.5) * (e.scale(2f64.powf(4.0 / 3.0)) + q),
            -(e * (e2k2 + two_k1.cos())).scale(3.0 * c),
        ],
        SystemId::Kh2 => [
            -(two_k1.sinh() * (e.scale(c) + q.scale(0.5))),
            (e * (two_k1.cosh() - e2k2)).scale(3.0 * c),
        ],
        _ => unreachable!("p-type systems handled above"),
    }
}

/// Whether the transport equations at this k₁ need the limit form.
pub fn transport_limit(sys: SystemId, k1: f64) -> bool {
    match sys {
        SystemId::Constraa | SystemId::Cpk1 | SystemId::Kh2 => k1.abs() < LIMIT_TOL,
        SystemId::Kh => k1.sin().abs() < LIMIT_TOL || k1.cos().abs() < LIMIT_TOL,
        _ => false,
    }
}

/// Residuals of the system given the local unknowns: Laplacian equations
/// first, then the two transport equations (4-field systems only).
pub fn local_residual<S: Scalar>(sys: SystemId, x: &[S; N_LOCAL]) -> Vec<S> {
    let k: [S; 4] = std::array::from_fn(|m| x[m].clone());
    let [f1, f2] = source_terms(sys, &k);
    let mut out = vec![x[LAP1].clone() - f1, x[LAP2].clone() - f2];
    if sys.n_fields() == 2 {
        return out;
    }
    let [k1, _, k3, k4] = k;
    let (k1u, k1v) = (x[K1U].clone(), x[K1V].clone());
    let (k3u, k3v, k4u, k4v) = (x[K3U].clone(), x[K3V].clone(), x[K4U].clone(), x[K4V].clone());
    let curl = k4u.clone() - k3v.clone();
    let div = k4v + k3u;
    // k₃∇k₁ paired two ways
    let p = k3.clone() * k1u.clone() + k4.clone() * k1v.clone();
    let m = k3 * k1v - k4 * k1u;
    let k1v0 = k1.value().re;
    if sys == SystemId::Kh {
        let (sn, cs) = (k1.sin(), k1.cos());
        let t1 = if k1v0.cos().abs() < LIMIT_TOL {
            cs * curl + (sn * m).scale(2.0)
        } else {
            curl + (k1.tan() * m).scale(2.0)
        };
        let t2 = if k1v0.sin().abs() < LIMIT_TOL {
            k1.sin() * div + (k1.cos() * p).scale(2.0)
        } else {
            div + (k1.cos() / k1.sin() * p).scale(2.0)
        };
        out.push(t1);
        out.push(t2);
    } else {
        let th = k1.tanh();
        let t1 = curl - (th.clone() * m).scale(2.0);
        let t2 = if k1v0.abs() < LIMIT_TOL {
            th * div + p.scale(2.0)
        } else {
            div + (p / th).scale(2.0)
        };
        out.push(t1);
        out.push(t2);
    }
    out
}

/// Local unknowns at interior node (i, j) from central differences.
pub fn node_locals(k: &KFields, i: usize, j: usize) -> Option<[f64; N_LOCAL]> {
    let jet = k.jet(i, j)?;
    let f = |m: usize, q: usize| jet.k[m][q];
    Some([
        f(0, 0),
        f(1, 0),
        f(2, 0),
        f(3, 0),
        f(0, 1),
        f(0, 2),
        f(2, 1),
        f(2, 2),
        f(3, 1),
        f(3, 2),
        f(0, 3) + f(0, 5),
        f(1, 3) + f(1, 5),
    ])
}

/// Per-node residual vectors; boundary nodes of a Dirichlet grid carry no
/// equations and are marked invalid.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualGrid {
    pub n_eq: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    /// Nodes where the transport limit form was used.
    pub limit_nodes: Vec<usize>,
}

impl ResidualGrid {
    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.n_eq..(node + 1) * self.n_eq]
    }

    /// Largest |residual| and the node where it occurs.
    pub fn max_abs(&self) -> (f64, Option<usize>) {
        let mut best = (0.0, None);
        for (node, ok) in self.valid.iter().enumerate() {
            if !ok {
                continue;
            }
            for x in self.at(node) {
                let a = if x.is_nan() { f64::INFINITY } else { x.abs() };
                if best.1.is_none() || a > best.0 {
                    best = (a, Some(node));
                }
            }
        }
        best
    }
}

fn real_locals(x: &[f64; N_LOCAL]) -> [Complex64; N_LOCAL] {
    x.map(|v| Complex64::new(v, 0.0))
}

pub fn constraint_residual(sys: SystemId, k: &KFields) -> ResidualGrid {
    let g = k.grid;
    let n_eq = sys.n_equations();
    let per_node: Vec<Option<(Vec<f64>, bool)>> = (0..g.len())
        .into_par_iter()
        .map(|node| {
            let (i, j) = (node % g.nu, node / g.nu);
            let x = node_locals(k, i, j)?;
            let r = local_residual(sys, &real_locals(&x));
            Some((r.iter().map(|z| z.re).collect(), transport_limit(sys, x[0])))
        })
        .collect();
    let mut values = Vec::with_capacity(g.len() * n_eq);
    let mut valid = Vec::with_capacity(g.len());
    let mut limit_nodes = Vec::new();
    for (node, r) in per_node.into_iter().enumerate() {
        match r {
            Some((v, lim)) => {
                values.extend(v);
                valid.push(true);
                if lim && sys.n_fields() == 4 {
                    limit_nodes.push(node);
                }
            }
            None => {
                values.extend(std::iter::repeat_n(0.0, n_eq));
                valid.push(false);
            }
        }
    }
    ResidualGrid {
        n_eq,
        values,
        valid,
        limit_nodes,
    }
}

/// A constant solution (k₁, k₂, k₃, k₄) of the system, or the algebraic
/// obstruction to one.
pub fn constant_solution(sys: SystemId) -> Result<[f64; 4]> {
    let fail = |msg: String| Error::NonConvergence {
        iterations: 0,
        residual: f64::NAN,
        diagnostic: Some(format!("no constant solution exists: {msg}")),
    };
    if let Some([[a1, b1, g1], [a2, b2, g2]]) = p_type_coefficients(sys) {
        // α + βX + γY = 0 for both rows, X = e^{2k₁}, Y = e^{2k₂}
        let det = b1 * g2 - b2 * g1;
        let (x, y) = if det.abs() > 1e-14 {
            ((-a1 * g2 + a2 * g1) / det, (-b1 * a2 + b2 * a1) / det)
        } else {
            // β = 0 in both rows: each row fixes Y on its own
            let (y1, y2) = (-a1 / g1, -a2 / g2);
            if (y1 - y2).abs() > 1e-14 {
                return Err(fail(format!(
                    "the two equations force e^(2k2) = {} and e^(2k2) = {}",
                    fmt_ratio(y1),
                    fmt_ratio(y2)
                )));
            }
            return Err(fail("k1 undetermined".into()));
        };
        if x <= 0.0 {
            return Err(fail(format!("elimination gives e^(2k1) = {}", fmt_ratio(x))));
        }
        if y <= 0.0 {
            return Err(fail(format!("elimination gives e^(2k2) = {}", fmt_ratio(y))));
        }
        return Ok([0.5 * x.ln(), 0.5 * y.ln(), 0.0, 0.0]);
    }
    Ok(match sys {
        SystemId::Kh => [FRAC_PI_2, 0.0, 0.0, 0.0],
        _ => [0.0; 4],
    })
}

fn fmt_ratio(x: f64) -> String {
    for d in 1..=6 {
        let n = x * d as f64;
        if (n - n.round()).abs() < 1e-12 {
            return if d == 1 {
                format!("{}", n.round())
            } else {
                format!("{}/{}", n.round(), d)
            };
        }
    }
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfield::{Bc, Grid, ALL_SYSTEMS};
    use std::f64::consts::LN_2;

    #[test]
    fn constant_solutions() {
        let c = constant_solution(SystemId::Cpk2).unwrap();
        assert!((c[0] - 0.5 * LN_2).abs() < 1e-15 && c[1].abs() < 1e-15);
        let e = constant_solution(SystemId::Kh3).unwrap_err().to_string();
        assert!(e.contains("e^(2k1) = -2"), "{e}");
        let e = constant_solution(SystemId::Constrab).unwrap_err().to_string();
        assert!(
            e.contains("no constant solution") && e.contains("3") && e.contains("4/3"),
            "{e}"
        );
        for sys in ALL_SYSTEMS {
            if let Ok(k) = constant_solution(sys) {
                let f = KFields::constant(Grid::unit_periodic(6), Bc::Periodic, k);
                let (m, _) = constraint_residual(sys, &f).max_abs();
                assert!(m < 1e-12, "{sys}: {m}");
            }
        }
    }

    #[test]
    fn zero_state_uses_limit_form() {
        let f = KFields::constant(Grid::unit_periodic(5), Bc::Periodic, [0.0; 4]);
        let r = constraint_residual(SystemId::Constraa, &f);
        assert_eq!(r.limit_nodes.len(), 25);
        assert!(r.values.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn dirichlet_boundary_is_skipped() {
        let f = KFields::constant(Grid::unit_closed(5), Bc::Dirichlet, [1.0, 0.0, 0.0, 0.0]);
        let r = constraint_residual(SystemId::Cpk2, &f);
        assert_eq!(r.valid.iter().filter(|v| **v).count(), 9);
    }

    #[test]
    fn transport_limit_is_continuous() {
        // the limit form is the regular form multiplied by tanh k₁
        let x: [f64; N_LOCAL] = [2e-9, 0.1, 0.3, -0.2, 0.4, 0.1, 0.2, -0.5, 0.3, 0.7, 0.0, 0.0];
        let mut y = x;
        y[0] = 2e-7;
        let a = local_residual(SystemId::Constraa, &real_locals(&x));
        let b = local_residual(SystemId::Constraa, &real_locals(&y));
        let th = y[0].tanh();
        assert!((a[3].re - th * b[3].re).abs() < 1e-6);
    }
}
