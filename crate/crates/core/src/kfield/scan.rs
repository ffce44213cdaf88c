//! Detection of nodes where solved fields leave the generic branch.

use serde::Serialize;

use super::closed_form::{closed_form_fields, KJet2};
use super::constraints::transport_limit;
use super::{KFields, SystemId};
use crate::catalog::Sign;
use crate::error::Error;

/// Threshold on |b₂|·μ below which b₂ counts as zero.
pub const B2_TOL: f64 = 1e-10;

/// (s, t) sample box checked for r > 0 and nonvanishing denominators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StBox {
    pub s: (f64, f64),
    pub t: (f64, f64),
    pub samples: usize,
}

impl Default for StBox {
    fn default() -> Self {
        StBox {
            s: (0.1, 0.6),
            t: (0.3, 1.0),
            samples: 3,
        }
    }
}

impl StBox {
    fn points(&self) -> Vec<(f64, f64)> {
        let n = self.samples.max(1);
        let lerp = |(a, b): (f64, f64), k: usize| {
            if n == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        };
        (0..n * n).map(|q| (lerp(self.s, q / n), lerp(self.t, q % n))).collect()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DegeneracyReport {
    pub n_nodes: usize,
    pub b2_zero: Vec<usize>,
    pub r_nonpositive: Vec<usize>,
    pub gauge_singular: Vec<usize>,
    pub transport_singular: Vec<usize>,
    pub messages: Vec<String>,
}

impl DegeneracyReport {
    pub fn is_clean(&self) -> bool {
        self.b2_zero.is_empty()
            && self.r_nonpositive.is_empty()
            && self.gauge_singular.is_empty()
            && self.transport_singular.is_empty()
    }
}

/// b₂·μ as a function of k₁ alone (it does not depend on s or t).
fn b2_mu(sys: SystemId, k1: f64, sign: Sign) -> f64 {
    match sys {
        SystemId::Kh => -(2.0 * k1).sin(),
        s if s.z_singular() => sign.value(),
        _ => (2.0 * k1).sinh(),
    }
}

pub fn degeneracy_scan(sys: SystemId, k: &KFields, sign: Sign, st: &StBox) -> DegeneracyReport {
    let n = k.grid.len();
    let mut rep = DegeneracyReport {
        n_nodes: n,
        ..Default::default()
    };
    let pts = st.points();
    for node in 0..n {
        let vals = k.at(node);
        if b2_mu(sys, vals[0], sign).abs() < B2_TOL {
            rep.b2_zero.push(node);
        }
        if sys.n_fields() == 4 && transport_limit(sys, vals[0]) {
            rep.transport_singular.push(node);
        }
        let i = node % k.grid.nu;
        let j = node / k.grid.nu;
        let jet = k.jet(i, j).unwrap_or_else(|| KJet2::constant(vals));
        let mut r_bad = false;
        let mut g_bad = false;
        for &(s, t) in &pts {
            match closed_form_fields(sys, sign, &jet, s, t) {
                Ok((fc, g)) => {
                    r_bad |= !(fc.r > 0.0);
                    g_bad |= !(g.rho.norm() > 0.0) || !g.gamma1.norm().is_finite();
                }
                Err(Error::BranchViolation(_)) => r_bad = true,
                Err(_) => g_bad = true,
            }
        }
        if r_bad {
            rep.r_nonpositive.push(node);
        }
        if g_bad {
            rep.gauge_singular.push(node);
        }
    }
    if n > 0 {
        let describe = |what: &str, v: &[usize]| -> Option<String> {
            match v.len() {
                0 => None,
                m if m == n => Some(format!("degenerate: {what} everywhere")),
                m => Some(format!("degenerate: {what} at {m} of {n} nodes (first node {})", v[0])),
            }
        };
        rep.messages.extend(describe("b2=0", &rep.b2_zero));
        rep.messages.extend(describe("r<=0", &rep.r_nonpositive));
        rep.messages
            .extend(describe("gauge denominator vanishes", &rep.gauge_singular));
        rep.messages
            .extend(describe("transport coefficient singular", &rep.transport_singular));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfield::{constant_solution, Bc, Grid};

    #[test]
    fn zero_constraa_is_degenerate_everywhere() {
        let k = KFields::constant(Grid::unit_periodic(5), Bc::Periodic, [0.0; 4]);
        let rep = degeneracy_scan(SystemId::Constraa, &k, Sign::Plus, &StBox::default());
        assert_eq!(rep.b2_zero.len(), 25);
        assert!(rep.messages.iter().any(|m| m == "degenerate: b2=0 everywhere"));
    }

    #[test]
    fn cpk2_constant_is_clean() {
        let c = constant_solution(SystemId::Cpk2).unwrap();
        let k = KFields::constant(Grid::unit_periodic(5), Bc::Periodic, c);
        let rep = degeneracy_scan(SystemId::Cpk2, &k, Sign::Plus, &StBox::default());
        assert!(rep.is_clean(), "{:?}", rep.messages);
    }

    #[test]
    fn empty_grid() {
        let g = Grid {
            nu: 0,
            nv: 0,
            hu: 1.0,
            hv: 1.0,
            u0: 0.0,
            v0: 0.0,
        };
        let k = KFields::constant(g, Bc::Periodic, [0.0; 4]);
        let rep = degeneracy_scan(SystemId::Kh, &k, Sign::Plus, &StBox::default());
        assert_eq!(rep.n_nodes, 0);
        assert!(rep.is_clean() && rep.messages.is_empty());
    }
}
