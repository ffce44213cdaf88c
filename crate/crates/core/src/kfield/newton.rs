//! Damped Newton iteration on the discretized constraint systems.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constraints::{self, local_residual, node_locals, N_LOCAL};
use super::sparse::{gmres, Csr, Ilu0};
use super::{Bc, KFields, SystemId};
use crate::error::{Error, Result};
use crate::geometry::jet::Dual;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step length; halved until the residual decreases.
    pub damping: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub gmres_rtol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 25,
            damping: 1.0,
            gmres_restart: 50,
            gmres_max_iter: 4000,
            gmres_rtol: 1e-12,
        }
    }
}

/// Minimum step length tried by the backtracking line search.
const MIN_STEP: f64 = 1.0 / 1024.0;
const MIN_NODES: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct NewtonReport {
    pub system: SystemId,
    pub fields: KFields,
    /// Max-norm residual before each iteration and after the last one.
    pub history: Vec<f64>,
    pub steps: Vec<f64>,
    pub gmres_iterations: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Node (i, j) of the largest final residual.
    pub worst_node: Option<(usize, usize)>,
    #[serde(serialize_with = "error_text")]
    pub error: Option<Error>,
}

fn error_text<S: serde::Serializer>(e: &Option<Error>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&e.to_string()),
        None => s.serialize_none(),
    }
}

fn nf(sys: SystemId) -> usize {
    sys.n_fields()
}

/// Flattened unknown vector, node-major with fields interleaved.
pub fn pack(sys: SystemId, k: &KFields) -> Vec<f64> {
    let f = nf(sys);
    let n = k.grid.len();
    let mut x = Vec::with_capacity(n * f);
    for node in 0..n {
        for m in 0..f {
            x.push(k.k[m][node]);
        }
    }
    x
}

pub fn unpack(sys: SystemId, template: &KFields, x: &[f64]) -> KFields {
    let f = nf(sys);
    let mut out = template.clone();
    for node in 0..template.grid.len() {
        for m in 0..f {
            out.k[m][node] = x[node * f + m];
        }
        if f == 2 {
            out.k[2][node] = 0.0;
            out.k[3][node] = 0.0;
        }
    }
    out
}

/// Residual in unknown ordering; Dirichlet boundary rows are zero.
pub fn residual_vector(sys: SystemId, k: &KFields) -> Vec<f64> {
    constraints::constraint_residual(sys, k).values
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter()
        .fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}

/// d(local residual)/d(local unknown), one row per equation.
fn local_jacobian(sys: SystemId, x: &[f64; N_LOCAL]) -> Vec<[f64; N_LOCAL]> {
    let neq = sys.n_equations();
    let mut out = vec![[0.0; N_LOCAL]; neq];
    for batch in 0..N_LOCAL / 4 {
        let locals: [Dual<Complex64>; N_LOCAL] = std::array::from_fn(|q| {
            let v = Complex64::new(x[q], 0.0);
            if q / 4 == batch {
                Dual::variable(v, q % 4)
            } else {
                Dual::constant_of(v)
            }
        });
        let r = local_residual(sys, &locals);
        for (e, re) in r.iter().enumerate() {
            for slot in 0..4 {
                out[e][batch * 4 + slot] = re.d[slot].re;
            }
        }
    }
    out
}

/// Sparse Jacobian of [`residual_vector`] with respect to [`pack`].
pub fn jacobian(sys: SystemId, k: &KFields) -> Csr {
    let g = k.grid;
    let f = nf(sys);
    let neq = sys.n_equations();
    let (hu, hv) = (g.hu, g.hv);
    let rows: Vec<Vec<Vec<(usize, f64)>>> = (0..g.len())
        .into_par_iter()
        .map(|node| {
            let (i, j) = (node % g.nu, node / g.nu);
            let (Some(x), Some([l, r, d, u])) = (node_locals(k, i, j), k.neighbours(i, j)) else {
                return (0..neq).map(|e| vec![(node * f + e, 1.0)]).collect();
            };
            let lj = local_jacobian(sys, &x);
            lj.iter()
                .map(|dr| {
                    let mut row = Vec::with_capacity(24);
                    let mut put = |n: usize, m: usize, v: f64| {
                        if m < f && v != 0.0 {
                            row.push((n * f + m, v));
                        }
                    };
                    for m in 0..4 {
                        put(node, m, dr[m]);
                    }
                    let du = 0.5 / hu;
                    let dv = 0.5 / hv;
                    for (q, m, dir) in [
                        (constraints::K1U, 0, 0),
                        (constraints::K1V, 0, 1),
                        (constraints::K3U, 2, 0),
                        (constraints::K3V, 2, 1),
                        (constraints::K4U, 3, 0),
                        (constraints::K4V, 3, 1),
                    ] {
                        let c = dr[q];
                        if dir == 0 {
                            put(r, m, c * du);
                            put(l, m, -c * du);
                        } else {
                            put(u, m, c * dv);
                            put(d, m, -c * dv);
                        }
                    }
                    for (q, m) in [(constraints::LAP1, 0), (constraints::LAP2, 1)] {
                        let c = dr[q];
                        let (iu, iv) = (1.0 / (hu * hu), 1.0 / (hv * hv));
                        put(l, m, c * iu);
                        put(r, m, c * iu);
                        put(d, m, c * iv);
                        put(u, m, c * iv);
                        put(node, m, -2.0 * c * (iu + iv));
                    }
                    row
                })
                .collect()
        })
        .collect();
    Csr::from_rows(g.len() * neq, rows.into_iter().flatten().collect())
}

/// Central-difference Jacobian, used to check [`jacobian`].
pub fn jacobian_fd(sys: SystemId, k: &KFields, h: f64) -> Vec<Vec<f64>> {
    let x0 = pack(sys, k);
    let n = x0.len();
    let mut cols = Vec::with_capacity(n);
    for c in 0..n {
        let mut xp = x0.clone();
        xp[c] += h;
        let mut xm = x0.clone();
        xm[c] -= h;
        let rp = residual_vector(sys, &unpack(sys, k, &xp));
        let rm = residual_vector(sys, &unpack(sys, k, &xm));
        cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    cols
}

fn singular_at(sys: SystemId, k: &KFields, row: usize, reason: &str) -> Error {
    let node = row / sys.n_equations();
    let eq = row % sys.n_equations();
    let (i, j) = (node % k.grid.nu, node / k.grid.nu);
    let mut reason = format!("equation {} of {sys}: {reason}", eq + 1);
    if sys.n_fields() == 4 && constraints::transport_limit(sys, k.k[0][node]) {
        reason.push_str(&format!(
            "; transport coefficient singular at k1 = {:e} (limit form)",
            k.k[0][node]
        ));
    }
    Error::SingularJacobian { i, j, reason }
}

fn validate(k: &KFields) -> Result<()> {
    k.grid.validate()?;
    if k.grid.nu < MIN_NODES || k.grid.nv < MIN_NODES {
        return Err(Error::InsufficientStencil(format!(
            "grid {}x{} is smaller than {MIN_NODES}x{MIN_NODES}",
            k.grid.nu, k.grid.nv
        )));
    }
    if k.k
        .iter()
        .any(|f| f.len() != k.grid.len() || f.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::DomainViolation { point: vec![] });
    }
    Ok(())
}

fn worst(sys: SystemId, k: &KFields) -> (f64, Option<(usize, usize)>) {
    let (m, node) = constraints::constraint_residual(sys, k).max_abs();
    (m, node.map(|n| (n % k.grid.nu, n / k.grid.nu)))
}

/// Runs the iteration and always returns the history; `error` is set when
/// it failed.
pub fn newton_run(sys: SystemId, k0: &KFields, opts: &NewtonOptions) -> NewtonReport {
    let mut rep = NewtonReport {
        system: sys,
        fields: k0.clone(),
        history: Vec::new(),
        steps: Vec::new(),
        gmres_iterations: Vec::new(),
        iterations: 0,
        converged: false,
        worst_node: None,
        error: None,
    };
    if let Err(e) = validate(k0) {
        rep.error = Some(e);
        return rep;
    }
    let mut x = pack(sys, k0);
    let mut k = unpack(sys, k0, &x);
    let mut res = residual_vector(sys, &k);
    let mut rn = max_abs(&res);
    rep.history.push(rn);
    let fail = |rep: &mut NewtonReport, k: KFields, e: Error| {
        let (_, w) = worst(sys, &k);
        rep.worst_node = w;
        rep.fields = k;
        rep.error = Some(e);
    };
    loop {
        if rn < opts.tol {
            rep.converged = true;
            let (_, w) = worst(sys, &k);
            rep.worst_node = w;
            rep.fields = k;
            return rep;
        }
        if rep.iterations >= opts.max_iter {
            let e = Error::NonConvergence {
                iterations: rep.iterations,
                residual: rn,
                diagnostic: None,
            };
            fail(&mut rep, k, e);
            return rep;
        }
        let jac = jacobian(sys, &k);
        if let Some(row) = jac.zero_row() {
            let e = singular_at(sys, &k, row, "linearization vanishes identically");
            fail(&mut rep, k, e);
            return rep;
        }
        let ilu = match Ilu0::new(&jac) {
            Ok(p) => p,
            Err(row) => {
                let e = singular_at(sys, &k, row, "zero pivot in incomplete factorization");
                fail(&mut rep, k, e);
                return rep;
            }
        };
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let (dx, g) = gmres(
            &jac,
            &rhs,
            &ilu,
            opts.gmres_restart,
            opts.gmres_max_iter,
            opts.gmres_rtol,
        );
        rep.gmres_iterations.push(g.iterations);
        if dx.iter().any(|v| !v.is_finite()) {
            let e = singular_at(sys, &k, 0, "linear solve produced non-finite update");
            fail(&mut rep, k, e);
            return rep;
        }
        let mut lambda = opts.damping;
        let accepted = loop {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect();
            let kt = unpack(sys, k0, &xt);
            let rt = residual_vector(sys, &kt);
            let rtn = max_abs(&rt);
            if rtn < (1.0 - 1e-4 * lambda) * rn {
                break Some((xt, kt, rt, rtn));
            }
            lambda *= 0.5;
            if lambda < MIN_STEP {
                break None;
            }
        };
        rep.iterations += 1;
        match accepted {
            Some((xt, kt, rt, rtn)) => {
                x = xt;
                k = kt;
                res = rt;
                rn = rtn;
                rep.steps.push(lambda);
                rep.history.push(rn);
            }
            None => {
                let e = Error::NonConvergence {
                    iterations: rep.iterations,
                    residual: rn,
                    diagnostic: Some(format!(
                        "line search stalled (linear solve relative residual {:e})",
                        g.relative_residual
                    )),
                };
                fail(&mut rep, k, e);
                return rep;
            }
        }
    }
}

pub fn newton_solve(sys: SystemId, k0: &KFields, opts: &NewtonOptions) -> Result<KFields> {
    let rep = newton_run(sys, k0, opts);
    match rep.error {
        Some(e) => Err(e),
        None => Ok(rep.fields),
    }
}

/// Newton from the constant solution, or the algebraic obstruction.
pub fn solve_constant(sys: SystemId, grid: super::Grid, bc: Bc) -> Result<KFields> {
    let c = constraints::constant_solution(sys)?;
    Ok(KFields::constant(grid, bc, c))
}
