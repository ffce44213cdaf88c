//! Canonical frames and symmetry checks for the SO(2)⋊S₃ cubic shape.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use std::f64::consts::PI;

use super::fundamental::{CubicTensor, MetricMatrix};
use crate::error::{Error, Result};

/// Relative eigenvalue threshold separating the null space of C.
pub const NULL_TOL: f64 = 1e-8;
/// Shape deviation above which a tensor is rejected.
pub const SHAPE_TOL: f64 = 1e-6;
/// Gram-matrix scale below which C counts as identically zero.
const ZERO_GRAM: f64 = 1e-24;

#[derive(Clone, Debug, Serialize)]
pub struct CanonicalFrame {
    /// Columns are X₁..X₄ in the coordinate basis.
    pub frame: DMatrix<f64>,
    pub r: f64,
    pub shape_residual: f64,
    /// C expressed in the canonical frame.
    pub tensor: CubicTensor,
}

/// Orthonormal (in the standard inner product) eigen-split of the Gram
/// matrix of `t`: (range vectors, null vectors), each as matrix columns.
fn null_split(t: &CubicTensor) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = t.n;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += t.get(i, k, l) * t.get(j, k, l);
            }
        }
        s
    });
    let eig = SymmetricEigen::new(m);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lmax <= ZERO_GRAM {
        return Err(Error::DegenerateCubic);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let range: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] >= NULL_TOL * lmax)
        .collect();
    let null: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] < NULL_TOL * lmax)
        .collect();
    let pick = |idx: &[usize]| DMatrix::from_fn(n, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((pick(&range), pick(&null)))
}

/// Null directions {X : C(X,·,·) = 0} of C, as g-orthonormal columns in the
/// coordinate basis.
pub fn null_directions(g: &MetricMatrix, c: &CubicTensor) -> Result<DMatrix<f64>> {
    let e = g.orthonormal_frame()?;
    let t = c.transform(&e);
    let (_, null) = null_split(&t)?;
    Ok(&e * null)
}

/// Angle in [0, 2π/3) maximizing the binary cubic restricted to span{e1, e2}
/// and its amplitude. Uses f(θ) = α cos 3θ + β sin 3θ + (first harmonic).
fn cubic_phase(t: &CubicTensor, e1: &[f64], e2: &[f64]) -> (f64, f64) {
    let n = t.n;
    let ev = |a: &[f64], b: &[f64], c: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    s += t.get(i, j, k) * a[i] * b[j] * c[k];
                }
            }
        }
        s
    };
    let c111 = ev(e1, e1, e1);
    let c112 = ev(e1, e1, e2);
    let c122 = ev(e1, e2, e2);
    let c222 = ev(e2, e2, e2);
    let alpha = (c111 - 3.0 * c122) / 4.0;
    let beta = (3.0 * c112 - c222) / 4.0;
    let period = 2.0 * PI / 3.0;
    let theta = (beta.atan2(alpha) / 3.0).rem_euclid(period);
    // rem_euclid can return exactly `period` for tiny negative inputs
    let theta = if theta >= period { 0.0 } else { theta };
    (theta, alpha.hypot(beta))
}

/// Finds X₁..X₄ with C in the shape C₁₁₁ = r, C₁₂₂ = −r and zero otherwise.
///
/// Also accepts n = 2 and n = 3 (building blocks), where the null space must
/// have dimension n − 2.
pub fn canonicalize_cubic(g: &MetricMatrix, c: &CubicTensor) -> Result<CanonicalFrame> {
    let n = c.n;
    if !(2..=4).contains(&n) || g.dim() != n {
        return Err(Error::DimensionMismatch { expected: 4, got: c.n });
    }
    let e = g.orthonormal_frame()?;
    let t = c.transform(&e);
    let (range, null) = null_split(&t)?;
    if null.ncols() != n - 2 {
        return Err(Error::WrongSymmetryType {
            reason: format!("null space has dimension {} instead of {}", null.ncols(), n - 2),
        });
    }
    let e1: Vec<f64> = range.column(0).iter().copied().collect();
    let e2: Vec<f64> = range.column(1).iter().copied().collect();
    let (theta, _) = cubic_phase(&t, &e1, &e2);
    let (ct, st) = (theta.cos(), theta.sin());
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        q[(i, 0)] = ct * e1[i] + st * e2[i];
        q[(i, 1)] = -st * e1[i] + ct * e2[i];
        for k in 2..n {
            q[(i, k)] = null[(i, k - 2)];
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, n - 1)] = -q[(i, n - 1)];
        }
    }
    let tensor = t.transform(&q);
    let r = tensor.get(0, 0, 0);
    let shape_residual = tensor.max_abs_diff(&CubicTensor::pattern(n, r));
    if shape_residual > SHAPE_TOL * r.abs().max(1.0) {
        return Err(Error::WrongSymmetryType {
            reason: format!("shape residual {shape_residual:e}"),
        });
    }
    Ok(CanonicalFrame {
        frame: &e * q,
        r,
        shape_residual,
        tensor,
    })
}

/// Generators of SO(2)⋊S₃ acting on a canonical frame.
#[derive(Clone, Debug)]
pub struct SymmetryGenerators {
    pub so2_angle_samples: Vec<f64>,
    pub s3_rotation: DMatrix<f64>,
    pub s3_reflection: DMatrix<f64>,
}

/// Rotation by `phi` in the plane of frame vectors (a, b), embedded in 4×4.
pub fn plane_rotation(a: usize, b: usize, phi: f64) -> DMatrix<f64> {
    let mut q = DMatrix::identity(4, 4);
    q[(a, a)] = phi.cos();
    q[(b, a)] = phi.sin();
    q[(a, b)] = -phi.sin();
    q[(b, b)] = phi.cos();
    q
}

impl Default for SymmetryGenerators {
    fn default() -> Self {
        let mut refl = DMatrix::identity(4, 4);
        refl[(1, 1)] = -1.0;
        refl[(2, 2)] = -1.0;
        SymmetryGenerators {
            so2_angle_samples: (1..8).map(|k| k as f64 * PI / 4.0 + 0.1).collect(),
            s3_rotation: plane_rotation(0, 1, 2.0 * PI / 3.0),
            s3_reflection: refl,
        }
    }
}

impl SymmetryGenerators {
    pub fn matrices(&self) -> Vec<DMatrix<f64>> {
        let mut out = vec![self.s3_rotation.clone(), self.s3_reflection.clone()];
        out.extend(self.so2_angle_samples.iter().map(|&a| plane_rotation(2, 3, a)));
        out
    }
}

/// max_{ijk} |C(γX_i, γX_j, γX_k) − C(X_i, X_j, X_k)| for one frame map γ.
pub fn transform_residual(t: &CubicTensor, gamma: &DMatrix<f64>) -> f64 {
    t.transform(gamma).max_abs_diff(t)
}

/// Largest violation of the symmetry generators after canonicalization.
pub fn symmetry_residual(g: &MetricMatrix, c: &CubicTensor, gens: &SymmetryGenerators) -> Result<f64> {
    let canon = canonicalize_cubic(g, c)?;
    Ok(gens
        .matrices()
        .iter()
        .map(|q| transform_residual(&canon.tensor, q))
        .fold(0.0, f64::max))
}
