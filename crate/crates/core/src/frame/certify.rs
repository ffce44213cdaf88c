//! Geometry checks on a reconstructed point cloud.

use rayon::prelude::*;
use serde::Serialize;

use super::integrate::ReconstructionGrid;
use crate::catalog::verify::{check_jet, summarize};
use crate::catalog::{Tolerances, VerificationReport};
use crate::geometry::{AmbientSpace, CVector, Jet2, SymmetryGenerators};

/// Positions F on a reconstruction grid.
#[derive(Clone, Debug, Serialize)]
pub struct SampledImmersion {
    pub grid: ReconstructionGrid,
    pub ambient: AmbientSpace,
    pub f: Vec<CVector>,
}

// fourth-order central weights on offsets −2..2
const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

impl SampledImmersion {
    fn at(&self, m: [usize; 4], shift: &[(usize, i64)]) -> &CVector {
        let mut q = m;
        for &(a, d) in shift {
            q[a] = (q[a] as i64 + d) as usize;
        }
        &self.f[self.grid.index(q)]
    }

    fn comb(&self, terms: impl Iterator<Item = (f64, [usize; 4])>) -> CVector {
        let mut out = CVector::zeros(self.ambient.complex_dim, self.ambient.signature);
        for (w, m) in terms {
            if w != 0.0 {
                out = out.axpy(w.into(), &self.f[self.grid.index(m)]);
            }
        }
        out
    }

    /// Second-order jet at an interior node from the local quartic fit
    /// (fourth-order central differences); requires a margin of 2 nodes.
    pub fn jet(&self, m: [usize; 4]) -> Option<Jet2> {
        if (0..4).any(|a| m[a] < 2 || m[a] + 2 >= self.grid.count[a]) {
            return None;
        }
        let h = self.grid.step;
        let shifted = |a: usize, d: i64| {
            let mut q = m;
            q[a] = (q[a] as i64 + d) as usize;
            q
        };
        let d1: Vec<CVector> = (0..4)
            .map(|a| self.comb((0..5).map(|o| (D1[o] / h[a], shifted(a, o as i64 - 2)))))
            .collect();
        Some(Jet2::from_parts(self.at(m, &[]).clone(), d1, |a, b| {
            if a == b {
                self.comb((0..5).map(|o| (D2[o] / (h[a] * h[a]), shifted(a, o as i64 - 2))))
            } else {
                self.comb((0..25).map(|q| {
                    let (oa, ob) = (q / 5, q % 5);
                    let mut n = shifted(a, oa as i64 - 2);
                    n[b] = (n[b] as i64 + ob as i64 - 2) as usize;
                    (D1[oa] * D1[ob] / (h[a] * h[b]), n)
                }))
            }
        }))
    }
}

/// Runs the pointwise geometry checks (ω, lift, minimality, canonical shape,
/// r > 0) at interior nodes. Nodes within 2 of the boundary are skipped.
pub fn certify_reconstruction(imm: &SampledImmersion, tol: &Tolerances) -> VerificationReport {
    let gens = SymmetryGenerators::default();
    let lift = imm.ambient.lift_mode();
    let nodes: Vec<[usize; 4]> = (0..imm.grid.len())
        .map(|i| imm.grid.multi(i))
        .filter(|m| (0..4).all(|a| m[a] >= 2 && m[a] + 2 < imm.grid.count[a]))
        .collect();
    let results: Vec<_> = nodes
        .par_iter()
        .map(|&m| check_jet(&imm.jet(m).expect("interior node"), lift, &gens))
        .collect();
    let pts: Vec<Vec<f64>> = nodes.iter().map(|&m| imm.grid.point(m).to_vec()).collect();
    let mut rep = summarize(
        "reconstruction",
        imm.ambient.epsilon,
        imm.grid.count[0],
        &pts,
        &results,
        None,
        tol,
    );
    if nodes.is_empty() {
        rep.errors.push("no interior nodes (need 5 per axis)".into());
        rep.passed = false;
    }
    rep
}
