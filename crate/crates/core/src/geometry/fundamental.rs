use nalgebra::DMatrix;
use serde::Serialize;

use super::ambient::{apply_j, hermitian_product, real_product, CVector, LiftMode};
use super::immersion::Jet2;
use crate::error::{Error, Result};

/// Tolerance on the normal residual and Kähler form before a jet is rejected
/// as non-Lagrangian.
pub const NON_LAGRANGIAN_TOL: f64 = 1e-6;
const DET_TOL: f64 = 1e-12;

/// Induced metric in the coordinate basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricMatrix(pub DMatrix<f64>);

impl MetricMatrix {
    pub fn identity(n: usize) -> Self {
        MetricMatrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Columns form a g-orthonormal basis (coordinates of X_a in ∂_i).
    pub fn orthonormal_frame(&self) -> Result<DMatrix<f64>> {
        let det = self.0.determinant();
        let chol = nalgebra::Cholesky::new(self.0.clone()).ok_or(Error::DegenerateMetric { det })?;
        let l = chol.l();
        let linv_t = l.transpose().try_inverse().ok_or(Error::DegenerateMetric { det })?;
        Ok(linv_t)
    }
}

/// Fully symmetric real n×n×n array.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubicTensor {
    pub n: usize,
    pub c: Vec<f64>,
}

impl CubicTensor {
    pub fn zeros(n: usize) -> Self {
        CubicTensor {
            n,
            c: vec![0.0; n * n * n],
        }
    }

    /// Builds a tensor from `f` and averages over index permutations.
    pub fn symmetrized(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut raw = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    raw[(i * n + j) * n + k] = f(i, j, k);
                }
            }
        }
        let at = |i: usize, j: usize, k: usize| raw[(i * n + j) * n + k];
        let mut c = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c[(i * n + j) * n + k] =
                        (at(i, j, k) + at(i, k, j) + at(j, i, k) + at(j, k, i) + at(k, i, j) + at(k, j, i)) / 6.0;
                }
            }
        }
        CubicTensor { n, c }
    }

    /// The canonical shape with C111 = r, C122 = −r and zero elsewhere
    /// (up to symmetry), in dimension `n` ≥ 2.
    pub fn pattern(n: usize, r: f64) -> Self {
        let mut t = CubicTensor::zeros(n);
        t.set_sym(0, 0, 0, r);
        t.set_sym(0, 1, 1, -r);
        t
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    /// Sets all permutations of (i, j, k).
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            self.c[(a * n + b) * n + c] = v;
        }
    }

    /// C(QX_i, QX_j, QX_k) where the columns of `q` express the new basis in
    /// the old one.
    pub fn transform(&self, q: &DMatrix<f64>) -> CubicTensor {
        let n = self.n;
        let m = q.ncols();
        // contract one index at a time
        let mut t1 = vec![0.0; m * n * n];
        for a in 0..m {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for i in 0..n {
                        s += q[(i, a)] * self.get(i, j, k);
                    }
                    t1[(a * n + j) * n + k] = s;
                }
            }
        }
        let mut t2 = vec![0.0; m * m * n];
        for a in 0..m {
            for b in 0..m {
                for k in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += q[(j, b)] * t1[(a * n + j) * n + k];
                    }
                    t2[(a * m + b) * n + k] = s;
                }
            }
        }
        let mut c = vec![0.0; m * m * m];
        for a in 0..m {
            for b in 0..m {
                for cc in 0..m {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += q[(k, cc)] * t2[(a * m + b) * n + k];
                    }
                    c[(a * m + b) * m + cc] = s;
                }
            }
        }
        CubicTensor { n: m, c }
    }

    /// Largest difference between index-permuted entries.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for w in [self.get(i, k, j), self.get(j, i, k), self.get(k, j, i)] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CubicTensor) -> f64 {
        self.c
            .iter()
            .zip(&other.c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Matrix of A_X (as a g-self-adjoint map) in an orthonormal basis:
    /// (A_{X_i})_{jk} = C_ijk.
    pub fn shape_operator(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |j, k| self.get(i, j, k))
    }
}

pub fn induced_metric(jet: &Jet2) -> Result<MetricMatrix> {
    let n = jet.n_params();
    let g = DMatrix::from_fn(n, n, |i, j| real_product(&jet.d1[i], &jet.d1[j]));
    let g = (&g + g.transpose()) * 0.5;
    let det = g.determinant();
    if det.abs() < DET_TOL || !det.is_finite() {
        return Err(Error::DegenerateMetric { det });
    }
    Ok(MetricMatrix(g))
}

/// ω(∂_i, ∂_j) = g(∂_i, J∂_j), explicitly antisymmetrized.
pub fn kahler_form_restriction(jet: &Jet2) -> DMatrix<f64> {
    let n = jet.n_params();
    let w = DMatrix::from_fn(n, n, |i, j| real_product(&jet.d1[i], &apply_j(&jet.d1[j])));
    (&w - w.transpose()) * 0.5
}

/// Deviations of a lift from the unit (pseudo-)sphere and from horizontality:
/// (|⟨F,F⟩ − target|, max_i |Re⟨iF, ∂_iF⟩|).
pub fn lift_residuals(jet: &Jet2, lift: LiftMode) -> (f64, f64) {
    let target = match lift {
        LiftMode::None => return (0.0, 0.0),
        LiftMode::Sphere => 1.0,
        LiftMode::Hyperbolic => -1.0,
    };
    let f = &jet.value;
    let norm = (real_product(f, f) - target).abs();
    let jf = apply_j(f);
    let horiz = jet.d1.iter().map(|d| real_product(&jf, d).abs()).fold(0.0, f64::max);
    (norm, horiz)
}

/// Metric and cubic form C(∂_i, ∂_j, ∂_k) = g(A(∂_i, ∂_j), ∂_k) of a
/// Lagrangian (or horizontal) immersion, from its second-order jet.
pub fn second_fundamental_a(jet: &Jet2, lift: LiftMode) -> Result<(MetricMatrix, CubicTensor)> {
    let g = induced_metric(jet)?;
    let n = jet.n_params();
    let omega = kahler_form_restriction(jet);
    let wmax = omega.amax();
    if wmax > NON_LAGRANGIAN_TOL {
        return Err(Error::NonLagrangian {
            what: "kahler form".into(),
            residual: wmax,
        });
    }
    if lift != LiftMode::None {
        let (norm, horiz) = lift_residuals(jet, lift);
        if norm.max(horiz) > NON_LAGRANGIAN_TOL {
            return Err(Error::NonLagrangian {
                what: "lift".into(),
                residual: norm.max(horiz),
            });
        }
    }
    let ginv =
        g.0.clone()
            .try_inverse()
            .ok_or(Error::DegenerateMetric { det: g.0.determinant() })?;
    let jd1: Vec<CVector> = jet.d1.iter().map(apply_j).collect();
    let f = &jet.value;
    let ff = if lift == LiftMode::None {
        None
    } else {
        Some(hermitian_product(f, f)?)
    };

    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let v = jet.d2(i, j);
            let tan: Vec<f64> = jet.d1.iter().map(|d| real_product(v, d)).collect();
            let nor: Vec<f64> = jd1.iter().map(|d| real_product(v, d)).collect();
            let mut rem = v.clone();
            for k in 0..n {
                let (mut a, mut b) = (0.0, 0.0);
                for l in 0..n {
                    a += ginv[(k, l)] * tan[l];
                    b += ginv[(k, l)] * nor[l];
                }
                rem = rem.axpy((-a).into(), &jet.d1[k]).axpy((-b).into(), &jd1[k]);
            }
            if let Some(ff) = ff {
                let coef = hermitian_product(v, f)? / ff;
                rem = rem.axpy(-coef, f);
            }
            worst = worst.max(rem.coord_norm() / (1.0 + v.coord_norm()));
        }
    }
    if worst > NON_LAGRANGIAN_TOL {
        return Err(Error::NonLagrangian {
            what: "normal component".into(),
            residual: worst,
        });
    }
    let c = CubicTensor::symmetrized(n, |i, j, k| real_product(jet.d2(i, j), &jd1[k]));
    Ok((g, c))
}

/// max_X |tr A_X| over an orthonormal basis.
pub fn minimality_residual(g: &MetricMatrix, c: &CubicTensor) -> Result<f64> {
    let e = g.orthonormal_frame()?;
    let t = c.transform(&e);
    let n = t.n;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let tr: f64 = (0..n).map(|a| t.get(a, a, k)).sum();
        worst = worst.max(tr.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ambient::AmbientSpace;
    use crate::geometry::expr::Expr;
    use crate::geometry::immersion::{evaluate_jet, Immersion, ParamBox};

    fn flat_plane() -> Immersion {
        Immersion::new(
            "plane",
            (0..4).map(Expr::param).collect(),
            ParamBox::new(vec![-1.0; 4], vec![1.0; 4]),
            AmbientSpace::flat(4),
        )
        .unwrap()
    }

    #[test]
    fn flat_plane_is_trivial() {
        let j = evaluate_jet(&flat_plane(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let g = induced_metric(&j).unwrap();
        assert_eq!(g.0, DMatrix::identity(4, 4));
        assert_eq!(kahler_form_restriction(&j).amax(), 0.0);
        let (_, c) = second_fundamental_a(&j, LiftMode::None).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn scaling_scales_metric() {
        let imm = Immersion::new(
            "plane2",
            (0..4).map(|i| 2.0 * Expr::param(i)).collect(),
            ParamBox::new(vec![-1.0; 4], vec![1.0; 4]),
            AmbientSpace::flat(4),
        )
        .unwrap();
        let j = evaluate_jet(&imm, &[0.0; 4]).unwrap();
        assert_eq!(induced_metric(&j).unwrap().0, DMatrix::identity(4, 4) * 4.0);
    }

    #[test]
    fn complex_line_is_not_lagrangian() {
        let p = Expr::param;
        let imm = Immersion::new(
            "cline",
            vec![p(0) + Expr::i() * p(1), p(2), p(3), Expr::c(0.0)],
            ParamBox::new(vec![-1.0; 4], vec![1.0; 4]),
            AmbientSpace::flat(4),
        )
        .unwrap();
        let j = evaluate_jet(&imm, &[0.0; 4]).unwrap();
        let w = kahler_form_restriction(&j);
        assert!((w[(0, 1)].abs() - 1.0).abs() < 1e-15);
        assert!(matches!(
            second_fundamental_a(&j, LiftMode::None),
            Err(Error::NonLagrangian { .. })
        ));
    }

    #[test]
    fn minimality_examples() {
        let g = MetricMatrix::identity(4);
        assert_eq!(minimality_residual(&g, &CubicTensor::zeros(4)).unwrap(), 0.0);
        assert!(minimality_residual(&g, &CubicTensor::pattern(4, 1.7)).unwrap() < 1e-15);
        let mut c = CubicTensor::zeros(4);
        c.set_sym(0, 0, 0, 1.0);
        assert_eq!(minimality_residual(&g, &c).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_metric() {
        let p = Expr::param;
        let imm = Immersion::new(
            "rank1",
            vec![p(0), p(0), Expr::c(0.0), Expr::c(0.0)],
            ParamBox::new(vec![-1.0; 4], vec![1.0; 4]),
            AmbientSpace::flat(4),
        )
        .unwrap();
        let j = evaluate_jet(&imm, &[0.0; 4]).unwrap();
        assert!(matches!(induced_metric(&j), Err(Error::DegenerateMetric { .. })));
    }
}
