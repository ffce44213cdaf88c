//! Moving-frame reconstruction: integrates (F, X₁..X₄) along coordinate lines
//! from frame data and checks path independence of the result.

pub mod certify;
pub mod integrate;
pub mod io;
pub mod source;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::CaseId;
use crate::error::{Error, Result};
use crate::geometry::ambient::real_product;
use crate::geometry::{apply_j, hermitian_product, AmbientSpace, CVector, CubicTensor, Signature};
use crate::kfield::closed_form::SINGULAR_DELTA;
use crate::kfield::GaugeFields;
use crate::structure::{connection_table, ConnectionTable, FrameCoefficients};

pub use certify::{certify_reconstruction, SampledImmersion};
pub use integrate::{
    alignment_map, compatibility_check, integrate_frame, integrate_path, AffineMap, DiscreteImmersion,
    IntegrateOptions, ReconstructionGrid,
};
pub use source::{FixedSource, FrameSource, GenericSource, ImmersionSource};

/// Coordinate directions, in grid order (t, s, u, v).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    T,
    S,
    U,
    V,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::T, Direction::S, Direction::U, Direction::V];

    pub fn axis(self) -> usize {
        self as usize
    }
}

/// Position F and tangent frame X₁..X₄. The complex coordinates carry JXᵢ
/// implicitly as i·Xᵢ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub f: CVector,
    pub x: [CVector; 4],
}

fn unit(n: usize, k: usize, sig: Signature) -> CVector {
    let mut v = CVector::zeros(n, sig);
    v.z[k] = Complex64::new(1.0, 0.0);
    v
}

impl FrameState {
    /// The base frame used when no other initial data is given: F₀ = 0 and
    /// the real standard basis for ε = 0; otherwise F₀ is a unit (timelike
    /// unit for ε = −1) basis vector and the Xᵢ span the complementary
    /// coordinates, which is horizontal and Lagrangian.
    pub fn standard(ambient: &AmbientSpace) -> Result<FrameState> {
        let n = ambient.complex_dim;
        let sig = ambient.signature;
        let bad = || Error::BranchViolation(format!("no standard frame for {ambient:?}"));
        if ambient.epsilon == 0 {
            if n != 4 || sig != Signature::Euclidean {
                return Err(bad());
            }
            return Ok(FrameState {
                f: CVector::zeros(4, sig),
                x: std::array::from_fn(|i| unit(4, i, sig)),
            });
        }
        if n != 5 {
            return Err(bad());
        }
        let mut basis: Vec<CVector> = Vec::with_capacity(5);
        match (ambient.epsilon, sig) {
            (1, Signature::Euclidean) => basis.extend((0..5).map(|k| unit(5, k, sig))),
            (-1, Signature::Timelike(k)) => {
                basis.push(unit(5, k, sig));
                basis.extend((0..5).filter(|&q| q != k).map(|q| unit(5, q, sig)));
            }
            (-1, Signature::NullPair(a, b)) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let ea = unit(5, a, sig);
                let eb = unit(5, b, sig);
                basis.push(ea.scaled(h.into()).axpy((-h).into(), &eb));
                basis.push(ea.scaled(h.into()).axpy(h.into(), &eb));
                basis.extend((0..5).filter(|&q| q != a && q != b).map(|q| unit(5, q, sig)));
            }
            _ => return Err(bad()),
        }
        let f = basis.remove(0);
        Ok(FrameState {
            f,
            x: std::array::from_fn(|i| basis[i].clone()),
        })
    }

    /// Largest violation of the Gram, Lagrangian and lift conditions.
    pub fn invariant_residual(&self, epsilon: i8) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((real_product(&self.x[i], &self.x[j]) - d).abs());
                worst = worst.max(real_product(&self.x[i], &apply_j(&self.x[j])).abs());
            }
        }
        if epsilon != 0 {
            let ff = self.f.signature.product(&self.f.z, &self.f.z);
            worst = worst.max((ff - epsilon as f64).norm());
            for x in &self.x {
                worst = worst.max(x.signature.product(&x.z, &self.f.z).norm());
            }
        }
        if worst.is_nan() {
            f64::INFINITY
        } else {
            worst
        }
    }

    /// Restores the invariants: normalizes F, removes the F component of
    /// each Xᵢ and orthonormalizes the Xᵢ with respect to the Hermitian
    /// product (which also makes them Lagrangian).
    pub fn reproject(&mut self, epsilon: i8) -> Result<()> {
        if epsilon != 0 {
            let ff = hermitian_product(&self.f, &self.f)?.re;
            if ff * epsilon as f64 <= 0.0 {
                return Err(Error::SingularPoint {
                    what: "position has the wrong causal type".into(),
                    magnitude: ff,
                });
            }
            self.f = self.f.scaled((1.0 / ff.abs().sqrt()).into());
            let ff = epsilon as f64;
            for x in self.x.iter_mut() {
                let c = hermitian_product(x, &self.f)? / ff;
                *x = x.axpy(-c, &self.f);
            }
        }
        for i in 0..4 {
            let mut v = self.x[i].clone();
            for j in 0..i {
                let c = hermitian_product(&v, &self.x[j])?;
                v = v.axpy(-c, &self.x[j]);
            }
            let n = hermitian_product(&v, &v)?.re;
            if !(n > 0.0) {
                return Err(Error::DegenerateMetric { det: n });
            }
            // keep Xᵢ close to its old value: real normalization only
            self.x[i] = v.scaled((1.0 / n.sqrt()).into());
        }
        Ok(())
    }

    /// Max coordinate distance between corresponding rows.
    pub fn distance(&self, o: &FrameState) -> f64 {
        let d = |a: &CVector, b: &CVector| a.axpy((-1.0).into(), b).coord_norm();
        (0..4).fold(d(&self.f, &o.f), |m, i| m.max(d(&self.x[i], &o.x[i])))
    }

    fn rows(&self) -> [&CVector; 5] {
        [&self.f, &self.x[0], &self.x[1], &self.x[2], &self.x[3]]
    }

    /// self + h·k, row by row.
    fn axpy(&self, h: f64, k: &FrameState) -> FrameState {
        let h = Complex64::new(h, 0.0);
        FrameState {
            f: self.f.axpy(h, &k.f),
            x: std::array::from_fn(|i| self.x[i].axpy(h, &k.x[i])),
        }
    }
}

/// Frame data at one coordinate point: e[a][i] is the Xᵢ-component of the
/// coordinate field ∂ₐ (a over t, s, u, v), Γ the connection table and c the
/// cubic form in the frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameData {
    pub e: [[f64; 4]; 4],
    pub gamma: ConnectionTable,
    pub c: [[[f64; 4]; 4]; 4],
}

pub fn pattern_array(r: f64) -> [[[f64; 4]; 4]; 4] {
    let t = CubicTensor::pattern(4, r);
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| t.get(i, j, k))))
}

/// Coordinate fields in the frame from the gauge: ∂t = X₄, ∂s = μX₃ and
/// ∂u + i∂v = ρ(X₁ + iX₂ + γ₁μX₃ + γ₂X₄).
pub fn coordinate_frame(g: &GaugeFields) -> Result<[[f64; 4]; 4]> {
    if !(g.rho.norm() > SINGULAR_DELTA) || !(g.mu.abs() > SINGULAR_DELTA) {
        return Err(Error::SingularGauge(format!(
            "|rho| = {:e}, |mu| = {:e}",
            g.rho.norm(),
            g.mu.abs()
        )));
    }
    let mu = g.mu;
    let p = [1.0, 0.0, mu * g.gamma1.re, g.gamma2.re];
    let q = [0.0, 1.0, mu * g.gamma1.im, g.gamma2.im];
    let (rr, ri) = (g.rho.re, g.rho.im);
    let e = [
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, mu, 0.0],
        std::array::from_fn(|i| rr * p[i] - ri * q[i]),
        std::array::from_fn(|i| ri * p[i] + rr * q[i]),
    ];
    if e.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::SingularGauge("non-finite gauge".into()));
    }
    Ok(e)
}

impl FrameData {
    pub fn from_fields(case: &CaseId, fc: &FrameCoefficients, gauge: &GaugeFields) -> Result<FrameData> {
        Ok(FrameData {
            e: coordinate_frame(gauge)?,
            gamma: connection_table(case, fc)?,
            c: pattern_array(fc.r),
        })
    }

    /// Frame components of the coordinate fields must be invertible.
    pub fn frame_fields(&self) -> Option<Matrix4<f64>> {
        Matrix4::from_fn(|a, i| self.e[a][i]).try_inverse()
    }
}

/// A linear map on frame states: row p of the derivative is Σ_q m[p][q]·row q,
/// with rows ordered (F, X₁, .., X₄).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRhs {
    pub m: [[Complex64; 5]; 5],
}

impl FrameRhs {
    /// D along coordinate direction `dir`:
    /// ∂F = Σ eᵢXᵢ, ∂Xⱼ = Σᵢ eᵢ(Σₖ (Γᵢⱼᵏ + iCᵢⱼₖ)Xₖ − ε δᵢⱼ F).
    pub fn from_data(epsilon: i8, d: &FrameData, dir: Direction) -> FrameRhs {
        let z = Complex64::new(0.0, 0.0);
        let mut m = [[z; 5]; 5];
        let e = &d.e[dir.axis()];
        for i in 0..4 {
            m[0][1 + i] = e[i].into();
        }
        for j in 0..4 {
            for i in 0..4 {
                let w = e[i];
                if w == 0.0 {
                    continue;
                }
                for k in 0..4 {
                    m[1 + j][1 + k] += Complex64::new(w * d.gamma[i][j][k], w * d.c[i][j][k]);
                }
                if i == j {
                    m[1 + j][0] -= w * epsilon as f64;
                }
            }
        }
        FrameRhs { m }
    }

    pub fn apply(&self, y: &FrameState) -> FrameState {
        let rows = y.rows();
        let n = y.f.len();
        let sig = y.f.signature;
        let row = |p: usize| -> CVector {
            let mut z = vec![Complex64::new(0.0, 0.0); n];
            for (q, r) in rows.iter().enumerate() {
                let c = self.m[p][q];
                if c != Complex64::new(0.0, 0.0) {
                    for (a, b) in z.iter_mut().zip(&r.z) {
                        *a += c * b;
                    }
                }
            }
            CVector::new(z, sig)
        };
        FrameState {
            f: row(0),
            x: std::array::from_fn(|i| row(1 + i)),
        }
    }
}

/// The derivative of the frame along `direction` in terms of generic-branch
/// coefficients and gauge.
pub fn assemble_rhs(
    case: &CaseId,
    fields: &FrameCoefficients,
    gauge: &GaugeFields,
    direction: Direction,
) -> Result<FrameRhs> {
    let d = FrameData::from_fields(case, fields, gauge)?;
    Ok(FrameRhs::from_data(case.epsilon, &d, direction))
}
