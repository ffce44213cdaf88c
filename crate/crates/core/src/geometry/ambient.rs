use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signature of the Hermitian product on the coordinate space.
///
/// `Timelike(k)` negates the k-th term. `NullPair(a, b)` replaces the terms
/// for slots a, b by `z_a w̄_b + z_b w̄_a`, the light-cone coordinates used by
/// horosphere constructions; it is a linear change of variables of a
/// signature-1 product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    Euclidean,
    Timelike(usize),
    NullPair(usize, usize),
}

impl Signature {
    /// 0 for the Euclidean product, 1 for a Lorentzian one.
    pub fn index(&self) -> u8 {
        match self {
            Signature::Euclidean => 0,
            _ => 1,
        }
    }

    /// Σ z_j w̄_j with the signature applied; lengths must already match.
    pub fn product(&self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        let mut acc: Complex64 = z.iter().zip(w).map(|(a, b)| a * b.conj()).sum();
        match *self {
            Signature::Euclidean => {}
            Signature::Timelike(k) => acc -= 2.0 * z[k] * w[k].conj(),
            Signature::NullPair(a, b) => {
                acc -= z[a] * w[a].conj() + z[b] * w[b].conj();
                acc += z[a] * w[b].conj() + z[b] * w[a].conj();
            }
        }
        acc
    }
}

/// How an immersion sits relative to the curvature model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftMode {
    /// Flat ambient, no lift.
    None,
    /// Horizontal immersion into the unit sphere (ε = +1).
    Sphere,
    /// Horizontal immersion into the anti-de Sitter hyperboloid (ε = −1).
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientSpace {
    pub epsilon: i8,
    pub complex_dim: usize,
    pub signature: Signature,
}

impl AmbientSpace {
    pub fn new(epsilon: i8, complex_dim: usize, signature: Signature) -> Result<Self> {
        let ok = match epsilon {
            0 | 1 => signature == Signature::Euclidean,
            -1 => signature != Signature::Euclidean,
            _ => false,
        };
        let slots_ok = match signature {
            Signature::Euclidean => true,
            Signature::Timelike(k) => k < complex_dim,
            Signature::NullPair(a, b) => a < complex_dim && b < complex_dim && a != b,
        };
        if !ok || !slots_ok {
            return Err(Error::BranchViolation(format!(
                "signature {signature:?} inconsistent with epsilon {epsilon} in dimension {complex_dim}"
            )));
        }
        Ok(AmbientSpace {
            epsilon,
            complex_dim,
            signature,
        })
    }

    pub fn flat(complex_dim: usize) -> Self {
        AmbientSpace {
            epsilon: 0,
            complex_dim,
            signature: Signature::Euclidean,
        }
    }

    pub fn sphere(complex_dim: usize) -> Self {
        AmbientSpace {
            epsilon: 1,
            complex_dim,
            signature: Signature::Euclidean,
        }
    }

    /// Hyperbolic lift target with a single negative slot.
    pub fn hyperbolic(complex_dim: usize, timelike: usize) -> Self {
        AmbientSpace {
            epsilon: -1,
            complex_dim,
            signature: Signature::Timelike(timelike),
        }
    }

    pub fn signature_index(&self) -> u8 {
        self.signature.index()
    }

    pub fn lift_mode(&self) -> LiftMode {
        match self.epsilon {
            0 => LiftMode::None,
            1 => LiftMode::Sphere,
            _ => LiftMode::Hyperbolic,
        }
    }

    pub fn vector(&self, z: Vec<Complex64>) -> Result<CVector> {
        if z.len() != self.complex_dim {
            return Err(Error::DimensionMismatch {
                expected: self.complex_dim,
                got: z.len(),
            });
        }
        Ok(CVector {
            z,
            signature: self.signature,
        })
    }
}

/// A point or tangent vector of the coordinate space, tagged with the
/// signature of its ambient product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVector {
    pub z: Vec<Complex64>,
    pub signature: Signature,
}

impl CVector {
    pub fn new(z: Vec<Complex64>, signature: Signature) -> Self {
        CVector { z, signature }
    }

    pub fn euclidean(z: Vec<Complex64>) -> Self {
        CVector {
            z,
            signature: Signature::Euclidean,
        }
    }

    pub fn zeros(n: usize, signature: Signature) -> Self {
        CVector {
            z: vec![Complex64::new(0.0, 0.0); n],
            signature,
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn scaled(&self, k: Complex64) -> CVector {
        CVector {
            z: self.z.iter().map(|a| a * k).collect(),
            signature: self.signature,
        }
    }

    /// self + k·other, assuming matching lengths.
    pub fn axpy(&self, k: Complex64, other: &CVector) -> CVector {
        CVector {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + k * b).collect(),
            signature: self.signature,
        }
    }

    /// Coordinate-wise Euclidean norm, used for residual magnitudes only.
    pub fn coord_norm(&self) -> f64 {
        self.z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Σ z_j w̄_j under the shared signature.
pub fn hermitian_product(z: &CVector, w: &CVector) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: w.len(),
        });
    }
    if z.signature != w.signature {
        return Err(Error::BranchViolation(format!(
            "signature mismatch: {:?} vs {:?}",
            z.signature, w.signature
        )));
    }
    Ok(z.signature.product(&z.z, &w.z))
}

/// Real inner product Re⟨z, w⟩; callers guarantee matching shapes.
pub fn real_product(z: &CVector, w: &CVector) -> f64 {
    z.signature.product(&z.z, &w.z).re
}

/// ω(z, w) = g(z, Jw).
pub fn kahler_pairing(z: &CVector, w: &CVector) -> f64 {
    real_product(z, &apply_j(w))
}

/// The complex structure: multiplication by i.
pub fn apply_j(v: &CVector) -> CVector {
    CVector {
        z: v.z.iter().map(|a| Complex64::new(-a.im, a.re)).collect(),
        signature: v.signature,
    }
}
