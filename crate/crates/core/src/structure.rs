//! Residuals of the frame equations: connection table, derivatives of r,
//! the Gauss system for the reduced coefficients, and the curvature identity.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::catalog::{Branch, CaseId};
use crate::error::{Error, Result};
use crate::geometry::ambient::real_product;
use crate::geometry::{evaluate_jet, second_fundamental_a, Immersion};

/// Reduced connection and shape scalars at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a6: f64,
    pub b1: f64,
    pub b2: f64,
    pub b6: f64,
    pub c6: f64,
    pub d6: f64,
    pub r: f64,
}

impl Add for FrameCoefficients {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(&o, |a, b| a + b)
    }
}

impl Sub for FrameCoefficients {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(&o, |a, b| a - b)
    }
}

impl Mul<f64> for FrameCoefficients {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.zip(&self, |a, _| a * k)
    }
}

impl FrameCoefficients {
    pub fn zip(&self, o: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        FrameCoefficients {
            a1: f(self.a1, o.a1),
            a2: f(self.a2, o.a2),
            a3: f(self.a3, o.a3),
            a6: f(self.a6, o.a6),
            b1: f(self.b1, o.b1),
            b2: f(self.b2, o.b2),
            b6: f(self.b6, o.b6),
            c6: f(self.c6, o.c6),
            d6: f(self.d6, o.d6),
            r: f(self.r, o.r),
        }
    }
}

/// Coefficients plus their derivatives along the frame: `d[i]` holds
/// X_{i+1} applied to every coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub c: FrameCoefficients,
    pub d: [FrameCoefficients; 4],
}

/// Order of [`codazzi_residual`] entries.
pub const CODAZZI_IDS: [&str; 4] = ["Z(r).re", "Z(r).im", "X3(r)", "X4(r)"];

/// Residuals of Z(r) = 3ir(a₁+ib₁) (split), X₃(r) = ra₂ and X₄(r) = ra₃, where
/// Z = X₁ + iX₂.
pub fn codazzi_residual(fs: &FieldSample) -> [f64; 4] {
    let c = &fs.c;
    let [x1, x2, x3, x4] = &fs.d;
    // 3ir(a1 + i b1) = −3r b1 + 3i r a1
    [
        x1.r + 3.0 * c.r * c.b1,
        x2.r - 3.0 * c.r * c.a1,
        x3.r - c.r * c.a2,
        x4.r - c.r * c.a3,
    ]
}

/// Order of [`gauss_system_residual`] entries; complex equations are split
/// into consecutive real and imaginary parts.
pub const GAUSS_IDS: [&str; 21] = [
    "Z(a2-ib2).re",
    "Z(a2-ib2).im",
    "X3(a2+ib2).re",
    "X3(a2+ib2).im",
    "X4(a2+ib2).re",
    "X4(a2+ib2).im",
    "Z(a3).re",
    "Z(a3).im",
    "X3(a3)",
    "X4(a3)",
    "X1(b6)-X2(a6)",
    "X3(a6+ib6).re",
    "X3(a6+ib6).im",
    "X4(a6+ib6).re",
    "X4(a6+ib6).im",
    "X1(b1)-X2(a1)",
    "X1(a1)+X2(b1)",
    "3X3(a1)-X1(b2)",
    "3X3(b1)-X2(b2)",
    "X4(a1+ib1).re",
    "X4(a1+ib1).im",
];

/// Left minus right side of each scalar equation of the Gauss system in the
/// generic frame. Linear in the derivative entries of `fs`.
pub fn gauss_system_residual(fs: &FieldSample, epsilon: f64) -> [f64; 21] {
    let FrameCoefficients {
        a1,
        a2,
        a3,
        a6,
        b1,
        b2,
        b6,
        r,
        ..
    } = fs.c;
    let [x1, x2, x3, x4] = &fs.d;
    // (a2 − i b2)(a6 + i b6)
    let p_re = a2 * a6 + b2 * b6;
    let p_im = a2 * b6 - b2 * a6;
    // (a2 + i b2)^2
    let sq_re = a2 * a2 - b2 * b2;
    let sq_im = 2.0 * a2 * b2;
    let e = epsilon + a3 * a3;
    [
        // Z(a2 − i b2) = a3 (a6 + i b6)
        x1.a2 + x2.b2 - a3 * a6,
        x2.a2 - x1.b2 - a3 * b6,
        // X3(a2 + i b2) = ε + a3² + (a2 + i b2)²
        x3.a2 - (e + sq_re),
        x3.b2 - sq_im,
        // X4(a2 + i b2) = a3 (a2 + i b2)
        x4.a2 - a3 * a2,
        x4.b2 - a3 * b2,
        // Z(a3) = −(a2 − i b2)(a6 + i b6)
        x1.a3 + p_re,
        x2.a3 + p_im,
        x3.a3,
        x4.a3 - e,
        // X1(b6) − X2(a6) = −(a1 a6 + b1 b6)
        x1.b6 - x2.a6 + a1 * a6 + b1 * b6,
        // X3(a6 + i b6) = (5/3) i b2 (a6 + i b6)
        x3.a6 + 5.0 / 3.0 * b2 * b6,
        x3.b6 - 5.0 / 3.0 * b2 * a6,
        // X4(a6 + i b6) = 2 a3 (a6 + i b6)
        x4.a6 - 2.0 * a3 * a6,
        x4.b6 - 2.0 * a3 * b6,
        x1.b1 - x2.a1 - (2.0 * r * r - e - 5.0 / 3.0 * b2 * b2 - a2 * a2 - a1 * a1 - b1 * b1),
        x2.b1 + x1.a1 + 2.0 / 3.0 * a2 * b2,
        3.0 * x3.a1 - x1.b2 - (3.0 * a1 * a2 - 2.0 * b1 * b2),
        3.0 * x3.b1 - x2.b2 - (2.0 * b2 * a1 + 3.0 * b1 * a2),
        // X4(a1 + i b1) = a3 (a1 + i b1) + (b2/3)(a6 + i b6)
        x4.a1 - (a3 * a1 + b2 / 3.0 * a6),
        x4.b1 - (a3 * b1 + b2 / 3.0 * b6),
    ]
}

/// Γ[i][j][k]: coefficient of X_{k+1} in ∇_{X_{i+1}} X_{j+1}.
pub type ConnectionTable = [[[f64; 4]; 4]; 4];

const BRANCH_TOL: f64 = 1e-10;

fn branch_check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::BranchViolation(what.to_string()))
    }
}

fn small(x: f64, scale: f64) -> bool {
    x.abs() <= BRANCH_TOL * scale.max(1.0)
}

/// Connection coefficients in the adapted frame, after checking that the
/// branch flags of `fc` match `case`.
pub fn connection_table(case: &CaseId, fc: &FrameCoefficients) -> Result<ConnectionTable> {
    let eps = case.epsilon as f64;
    let scale = [fc.a1, fc.a2, fc.a3, fc.a6, fc.b1, fc.b2, fc.b6, fc.c6, fc.d6]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    match case.branch {
        Branch::B2zeroA2nonzero(_) => {
            branch_check(small(fc.b2, scale) && small(fc.a3, scale), "b2 and a3 must vanish")?;
            branch_check(!small(fc.a2, scale), "a2 must not vanish")?;
            branch_check(
                small(fc.a6, scale) && small(fc.b6, scale) && small(fc.c6, scale),
                "a6, b6, c6 must vanish",
            )?;
            branch_check(small(fc.d6 - eps / fc.a2, scale), "d6 must equal ε/a2")?;
        }
        Branch::B2zeroA2zero => {
            let all = [fc.a2, fc.a3, fc.b2, fc.a6, fc.b6, fc.c6, fc.d6];
            branch_check(all.iter().all(|x| small(*x, scale)), "only a1, b1 may be nonzero")?;
        }
        Branch::NplusA3zero | Branch::NplusA3nonzero(_) | Branch::GenericZregular | Branch::GenericZsingular(_) => {
            branch_check(!small(fc.b2, scale), "b2 must not vanish")?;
            branch_check(
                small(fc.c6 - fc.a3, scale) && small(fc.d6, scale),
                "c6 = a3 and d6 = 0 required",
            )?;
            let nplus = matches!(case.branch, Branch::NplusA3zero | Branch::NplusA3nonzero(_));
            if nplus {
                branch_check(small(fc.a6, scale) && small(fc.b6, scale), "a6 + i b6 must vanish")?;
            }
            if case.branch == Branch::NplusA3zero {
                branch_check(small(fc.a3, scale), "a3 must vanish")?;
            }
        }
    }
    let FrameCoefficients {
        a1,
        a2,
        a3,
        a6,
        b1,
        b2,
        b6,
        c6,
        d6,
        ..
    } = *fc;
    let mut g = [[[0.0; 4]; 4]; 4];
    g[0][0] = [0.0, a1, a2, a3];
    g[0][1] = [-a1, 0.0, -b2, 0.0];
    g[1][0] = [0.0, b1, b2, 0.0];
    g[1][1] = [-b1, 0.0, a2, a3];
    g[2][0] = [0.0, b2 / 3.0, 0.0, 0.0];
    g[2][1] = [-b2 / 3.0, 0.0, 0.0, 0.0];
    g[0][2] = [-a2, b2, 0.0, a6];
    g[0][3] = [-a3, 0.0, -a6, 0.0];
    g[1][2] = [-b2, -a2, 0.0, b6];
    g[1][3] = [0.0, -a3, -b6, 0.0];
    g[2][2] = [0.0, 0.0, 0.0, c6];
    g[2][3] = [0.0, 0.0, -c6, 0.0];
    g[3][2] = [0.0, 0.0, 0.0, d6];
    g[3][3] = [0.0, 0.0, -d6, 0.0];
    Ok(g)
}

/// Christoffel symbols Γ^k_{ij} of the induced metric at `p`, computed from
/// the exact jet: g(∇_i ∂_j, ∂_l) = Re⟨∂_i∂_j F, ∂_l F⟩.
fn christoffel(imm: &Immersion, p: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let jet = evaluate_jet(imm, p)?;
    let n = jet.n_params();
    let g = DMatrix::from_fn(n, n, |i, j| real_product(&jet.d1[i], &jet.d1[j]));
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric { det: g.determinant() })?;
    // gam[k][(i, j)] = Γ^k_{ij}
    let low: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| real_product(jet.d2(i, j), &jet.d1[l])).collect())
                .collect()
        })
        .collect();
    let gam = (0..n)
        .map(|k| DMatrix::from_fn(n, n, |i, j| (0..n).map(|l| ginv[(k, l)] * low[i][j][l]).sum()))
        .collect();
    Ok((g, gam))
}

/// Max componentwise mismatch of R(∂_i,∂_j)∂_k = ε(∂_i∧∂_j)∂_k + [A_i, A_j]∂_k
/// in coordinates, with the curvature from central differences (step `h`) of
/// the Christoffel symbols.
pub fn curvature_identity_residual(imm: &Immersion, p: &[f64], h: f64) -> Result<f64> {
    let n = imm.n_params;
    let eps = imm.ambient.epsilon as f64;
    for i in 0..n {
        if p[i] - h < imm.domain.lo[i] || p[i] + h > imm.domain.hi[i] {
            return Err(Error::InsufficientStencil(format!(
                "stencil of width {h} leaves the domain along axis {i}"
            )));
        }
    }
    let (g, gam) = christoffel(imm, p)?;
    let jet = evaluate_jet(imm, p)?;
    let (_, c) = second_fundamental_a(&jet, imm.ambient.lift_mode())?;
    let ginv = g.clone().try_inverse().ok_or(Error::DegenerateMetric { det: 0.0 })?;
    // dgam[m][k][(i, j)] = ∂_m Γ^k_{ij}
    let mut dgam = Vec::with_capacity(n);
    for m in 0..n {
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[m] += h;
        pm[m] -= h;
        let (_, gp) = christoffel(imm, &pp)?;
        let (_, gm) = christoffel(imm, &pm)?;
        dgam.push(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    // shape operators (A_i)^l_k = C_{ikm} g^{ml}
    let a: Vec<DMatrix<f64>> = (0..n)
        .map(|i| DMatrix::from_fn(n, n, |l, k| (0..n).map(|m| c.get(i, k, m) * ginv[(m, l)]).sum()))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let comm = &a[i] * &a[j] - &a[j] * &a[i];
            for k in 0..n {
                for l in 0..n {
                    let mut lhs = dgam[i][l][(j, k)] - dgam[j][l][(i, k)];
                    for m in 0..n {
                        lhs += gam[l][(i, m)] * gam[m][(j, k)] - gam[l][(j, m)] * gam[m][(i, k)];
                    }
                    let di = if l == i { 1.0 } else { 0.0 };
                    let dj = if l == j { 1.0 } else { 0.0 };
                    let rhs = eps * (g[(j, k)] * di - g[(i, k)] * dj) + comm[(l, k)];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// [A_{X_i}, A_{X_j}] as a matrix in an orthonormal frame, from the cubic
/// form expressed in that frame.
pub fn shape_commutator(c: &crate::geometry::CubicTensor, i: usize, j: usize) -> DMatrix<f64> {
    let ai = c.shape_operator(i);
    let aj = c.shape_operator(j);
    &ai * &aj - &aj * &ai
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{blocks::default_block, build_immersion, BlockKind, CaseName, SubBranch};
    use crate::geometry::CubicTensor;

    #[test]
    fn codazzi_trivial() {
        let fs = FieldSample {
            c: FrameCoefficients {
                r: 1.0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(codazzi_residual(&fs), [0.0; 4]);
    }

    #[test]
    fn codazzi_is_linear_in_a2() {
        let mut fs = FieldSample::default();
        fs.c.r = 1.7;
        fs.c.a2 = 0.3;
        let base = codazzi_residual(&fs)[2];
        fs.c.a2 += 0.01;
        assert!((codazzi_residual(&fs)[2] - base + 1.7 * 0.01).abs() < 1e-15);
    }

    #[test]
    fn gauss_examples() {
        // a3 = −1/t at t = 2, ε = 0: X4(a3) = 1/t²
        let mut fs = FieldSample::default();
        fs.c.a3 = -0.5;
        fs.d[3].a3 = 0.25;
        assert!(gauss_system_residual(&fs, 0.0)[9].abs() < 1e-15);
        // a3 = tan t at t = π/4, ε = 1
        let t = std::f64::consts::FRAC_PI_4;
        fs.c.a3 = t.tan();
        fs.d[3].a3 = 1.0 / t.cos().powi(2);
        assert!(gauss_system_residual(&fs, 1.0)[9].abs() < 1e-14);
        // zero data is not a solution for ε = 1
        let r = gauss_system_residual(&FieldSample::default(), 1.0);
        assert_eq!(r[2], -1.0);
    }

    #[test]
    fn connection_table_examples() {
        let generic = CaseId {
            epsilon: 0,
            branch: Branch::GenericZregular,
        };
        let fc = FrameCoefficients {
            a1: 0.2,
            a2: 0.4,
            a3: -0.7,
            a6: 0.3,
            b1: -0.1,
            b2: 1.1,
            b6: 0.5,
            c6: -0.7,
            d6: 0.0,
            r: 1.0,
        };
        let g = connection_table(&generic, &fc).unwrap();
        assert_eq!(g[3][2], [0.0; 4]);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert!((g[i][j][k] + g[i][k][j]).abs() < 1e-14);
                }
            }
        }
        let b2zero = CaseId {
            epsilon: 1,
            branch: Branch::B2zeroA2nonzero(SubBranch::Plain),
        };
        let fc = FrameCoefficients {
            a2: 2.0,
            d6: 0.5,
            r: 1.0,
            ..Default::default()
        };
        let g = connection_table(&b2zero, &fc).unwrap();
        assert_eq!(g[3][2], [0.0, 0.0, 0.0, 0.5]);
        let bad = FrameCoefficients { d6: 0.1, ..fc };
        assert!(matches!(
            connection_table(&b2zero, &bad),
            Err(Error::BranchViolation(_))
        ));
    }

    #[test]
    fn shape_commutator_on_pattern() {
        let r = 0.8;
        let m = shape_commutator(&CubicTensor::pattern(4, r), 0, 1);
        // [A1, A2] X1 = 2r² X2
        assert!((m[(1, 0)] - 2.0 * r * r).abs() < 1e-15);
        assert!(m[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn curvature_identity_converges_for_cp1() {
        let b = default_block(BlockKind::LegendrianS5).unwrap();
        let imm = build_immersion(CaseName::Cp1, &b).unwrap();
        let p = imm.domain.center();
        let e1 = curvature_identity_residual(&imm, &p, 1e-2).unwrap();
        let e2 = curvature_identity_residual(&imm, &p, 5e-3).unwrap();
        // second-order stencil: the bound is met one halving below h = 1e-2
        assert!(e2 < 1e-4, "{e2}");
        let ratio = e1 / e2;
        assert!((3.2..4.8).contains(&ratio), "{ratio}");
    }

    #[test]
    fn flat_plane_has_no_curvature() {
        use crate::geometry::{AmbientSpace, Expr, ParamBox};
        let imm = Immersion::new(
            "plane",
            (0..4).map(Expr::param).collect(),
            ParamBox::new(vec![-1.0; 4], vec![1.0; 4]),
            AmbientSpace::flat(4),
        )
        .unwrap();
        assert_eq!(curvature_identity_residual(&imm, &[0.0; 4], 1e-2).unwrap(), 0.0);
        assert!(matches!(
            curvature_identity_residual(&imm, &[1.0, 0.0, 0.0, 0.0], 1e-2),
            Err(Error::InsufficientStencil(_))
        ));
    }
}
