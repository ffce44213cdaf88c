//! Providers of frame data along the reconstruction grid.

use nalgebra::Matrix4;
use num_complex::Complex64;

use super::FrameData;
use crate::catalog::{Branch, CaseId, Sign};
use crate::error::{Error, Result};
use crate::geometry::jet::{seed2, Dual, Dual2, Scalar};
use crate::geometry::{AmbientSpace, Immersion, Signature};
use crate::kfield::{closed_form_fields, Bc, KFields, SystemId};

/// Relative distance from a grid node still accepted as "on" the node.
const NODE_TOL: f64 = 1e-6;

pub trait FrameSource: Sync {
    fn ambient(&self) -> AmbientSpace;
    /// Frame data at (t, s, u, v).
    fn data(&self, p: &[f64; 4]) -> Result<FrameData>;
}

/// The same frame data everywhere; with Γ = 0 and C = 0 this is the flat
/// oracle.
#[derive(Clone, Debug)]
pub struct FixedSource {
    pub data: FrameData,
    pub ambient: AmbientSpace,
}

impl FrameSource for FixedSource {
    fn ambient(&self) -> AmbientSpace {
        self.ambient
    }
    fn data(&self, _p: &[f64; 4]) -> Result<FrameData> {
        Ok(self.data.clone())
    }
}

/// Generic-branch frame data from solved k-fields. The (u, v) coordinates
/// must fall on nodes of the k-grid; k-derivatives there are the solver's
/// central differences.
#[derive(Clone, Debug)]
pub struct GenericSource {
    pub system: SystemId,
    pub sign: Sign,
    pub k: KFields,
}

impl GenericSource {
    pub fn new(system: SystemId, sign: Sign, k: KFields) -> Self {
        GenericSource { system, sign, k }
    }

    pub fn case(&self) -> CaseId {
        CaseId {
            epsilon: self.system.epsilon(),
            branch: if self.system.z_singular() {
                Branch::GenericZsingular(self.sign)
            } else {
                Branch::GenericZregular
            },
        }
    }

    fn node_index(x: f64, x0: f64, h: f64, n: usize, bc: Bc, axis: &str) -> Result<usize> {
        let q = (x - x0) / h;
        let i = q.round();
        if !((q - i).abs() <= NODE_TOL) {
            return Err(Error::InsufficientStencil(format!(
                "{axis} = {x} is not a node of the k-grid"
            )));
        }
        let i = i as i64;
        match bc {
            Bc::Periodic => Ok(i.rem_euclid(n as i64) as usize),
            Bc::Dirichlet if (0..n as i64).contains(&i) => Ok(i as usize),
            Bc::Dirichlet => Err(Error::DomainViolation { point: vec![x] }),
        }
    }

    /// (i, j) of the k-grid node at (u, v).
    pub fn node(&self, u: f64, v: f64) -> Result<(usize, usize)> {
        let g = &self.k.grid;
        if g.nu == 0 || g.nv == 0 {
            return Err(Error::InsufficientStencil("empty k-grid".into()));
        }
        let i = Self::node_index(u, g.u0, g.hu, g.nu, self.k.bc, "u")?;
        let j = Self::node_index(v, g.v0, g.hv, g.nv, self.k.bc, "v")?;
        Ok((i, j))
    }
}

impl FrameSource for GenericSource {
    fn ambient(&self) -> AmbientSpace {
        match self.system.epsilon() {
            0 => AmbientSpace::flat(4),
            1 => AmbientSpace::sphere(5),
            _ => AmbientSpace::hyperbolic(5, 0),
        }
    }

    fn data(&self, p: &[f64; 4]) -> Result<FrameData> {
        let (i, j) = self.node(p[2], p[3])?;
        let jet = self
            .k
            .jet(i, j)
            .ok_or_else(|| Error::InsufficientStencil(format!("no central stencil at node ({i}, {j})")))?;
        let (fc, gauge) = closed_form_fields(self.system, self.sign, &jet, p[1], p[0])?;
        FrameData::from_fields(&self.case(), &fc, &gauge)
    }
}

type D = Dual<Complex64>;

fn sig_dot(sig: Signature, z: &[D], w: &[D]) -> D {
    let term = |a: &D, b: &D| a.clone() * b.conj();
    let mut acc = term(&z[0], &w[0]);
    for k in 1..z.len() {
        acc = acc + term(&z[k], &w[k]);
    }
    match sig {
        Signature::Euclidean => acc,
        Signature::Timelike(k) => acc - term(&z[k], &w[k]).scale(2.0),
        Signature::NullPair(a, b) => {
            acc - term(&z[a], &w[a]) - term(&z[b], &w[b]) + term(&z[a], &w[b]) + term(&z[b], &w[a])
        }
    }
}

/// Frame data read off an explicit immersion in (t, s, u, v): the coordinate
/// fields are Gram–Schmidt orthonormalized with exact first derivatives, and
/// Γ, C are the tangential and J-tangential parts of D_{Xᵢ}Xⱼ.
#[derive(Clone, Debug)]
pub struct ImmersionSource {
    pub imm: Immersion,
}

impl ImmersionSource {
    pub fn new(imm: Immersion) -> Result<Self> {
        if imm.n_params != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: imm.n_params,
            });
        }
        Ok(ImmersionSource { imm })
    }

    /// Second-order jets of the components and the orthonormal frame at p,
    /// each frame vector carrying its coordinate derivatives.
    fn gs_frame(&self, p: &[f64; 4]) -> Result<(Vec<Dual2>, Vec<Vec<D>>)> {
        let args: Vec<Dual2> = (0..4).map(|i| seed2(p[i], i)).collect();
        let vals = self
            .imm
            .components
            .iter()
            .map(|c| c.eval(&args))
            .collect::<Result<Vec<Dual2>>>()?;
        let sig = self.imm.ambient.signature;
        let mut xs: Vec<Vec<D>> = Vec::with_capacity(4);
        for a in 0..4 {
            let mut v: Vec<D> = vals.iter().map(|x| x.d[a].clone()).collect();
            for x in &xs {
                let c = sig_dot(sig, &v, x).re();
                v = v
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a.clone() - c.clone() * b.clone())
                    .collect();
            }
            let n2 = sig_dot(sig, &v, &v).re();
            if !(n2.value().re > 0.0) {
                return Err(Error::DegenerateMetric { det: n2.value().re });
            }
            let n = n2.sqrt();
            v = v.into_iter().map(|a| a / n.clone()).collect();
            xs.push(v);
        }
        Ok((vals, xs))
    }

    /// The orthonormal frame and position at p, as a frame state.
    pub fn state(&self, p: &[f64; 4]) -> Result<super::FrameState> {
        let (_, xs) = self.gs_frame(p)?;
        let sig = self.imm.ambient.signature;
        let vec = |v: &Vec<D>| crate::geometry::CVector::new(v.iter().map(|a| a.v).collect(), sig);
        Ok(super::FrameState {
            f: self.imm.value_unchecked(p)?,
            x: std::array::from_fn(|i| vec(&xs[i])),
        })
    }
}

impl FrameSource for ImmersionSource {
    fn ambient(&self) -> AmbientSpace {
        self.imm.ambient
    }

    fn data(&self, p: &[f64; 4]) -> Result<FrameData> {
        let sig = self.imm.ambient.signature;
        let (vals, xs) = self.gs_frame(p)?;
        let val = |v: &[D]| -> Vec<Complex64> { v.iter().map(|a| a.v).collect() };
        let xv: Vec<Vec<Complex64>> = xs.iter().map(|x| val(x)).collect();
        let e: [[f64; 4]; 4] = std::array::from_fn(|a| {
            let d: Vec<Complex64> = vals.iter().map(|x| x.v.d[a]).collect();
            std::array::from_fn(|i| sig.product(&d, &xv[i]).re)
        });
        let einv = Matrix4::from_fn(|a, i| e[a][i])
            .try_inverse()
            .ok_or(Error::DegenerateMetric { det: 0.0 })?;
        if !(einv.iter().all(|x| x.is_finite())) {
            return Err(Error::DegenerateMetric { det: 0.0 });
        }
        let i_c = Complex64::new(0.0, 1.0);
        let mut gamma = [[[0.0; 4]; 4]; 4];
        let mut c = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                // D_{Xᵢ}Xⱼ = Σₐ (e⁻¹)ᵢₐ ∂ₐXⱼ
                let dx: Vec<Complex64> = xs[j]
                    .iter()
                    .map(|comp| (0..4).map(|a| einv[(i, a)] * comp.d[a]).sum())
                    .collect();
                for k in 0..4 {
                    gamma[i][j][k] = sig.product(&dx, &xv[k]).re;
                    let jx: Vec<Complex64> = xv[k].iter().map(|z| i_c * z).collect();
                    c[i][j][k] = sig.product(&dx, &jx).re;
                }
            }
        }
        Ok(FrameData { e, gamma, c })
    }
}
