use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ambient::{AmbientSpace, CVector};
use super::expr::Expr;
use super::jet::{seed2, Dual2, NPARAM};
use crate::error::{Error, Result};

/// Closed parameter box `lo[i] <= p[i] <= hi[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        ParamBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// Tensor grid with `n` samples per axis (endpoints included), last axis
    /// fastest.
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let axis = |i: usize, k: usize| {
            if n == 1 {
                0.5 * (self.lo[i] + self.hi[i])
            } else {
                self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (n - 1) as f64
            }
        };
        let total = n.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; d];
                for i in (0..d).rev() {
                    p[i] = axis(i, idx % n);
                    idx /= n;
                }
                p
            })
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }
}

/// A parametrized map into a complex coordinate space.
#[derive(Clone, Debug)]
pub struct Immersion {
    pub name: String,
    pub components: Vec<Expr>,
    pub n_params: usize,
    pub domain: ParamBox,
    pub ambient: AmbientSpace,
}

impl Immersion {
    pub fn new(
        name: impl Into<String>,
        components: Vec<Expr>,
        domain: ParamBox,
        ambient: AmbientSpace,
    ) -> Result<Self> {
        if components.len() != ambient.complex_dim {
            return Err(Error::DimensionMismatch {
                expected: ambient.complex_dim,
                got: components.len(),
            });
        }
        let n_params = domain.dim();
        if n_params == 0 || n_params > NPARAM {
            return Err(Error::DimensionMismatch {
                expected: NPARAM,
                got: n_params,
            });
        }
        if let Some(m) = components.iter().filter_map(|c| c.max_param()).max() {
            if m >= n_params {
                return Err(Error::DimensionMismatch {
                    expected: n_params,
                    got: m + 1,
                });
            }
        }
        Ok(Immersion {
            name: name.into(),
            components,
            n_params,
            domain,
            ambient,
        })
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                expected: self.n_params,
                got: p.len(),
            });
        }
        if !self.domain.contains(p) {
            return Err(Error::DomainViolation { point: p.to_vec() });
        }
        Ok(())
    }

    /// Plain value at `p`, without the domain check.
    pub fn value_unchecked(&self, p: &[f64]) -> Result<CVector> {
        let z = self.components.iter().map(|c| c.value(p)).collect::<Result<Vec<_>>>()?;
        Ok(CVector::new(z, self.ambient.signature))
    }

    pub fn value(&self, p: &[f64]) -> Result<CVector> {
        self.check_point(p)?;
        self.value_unchecked(p)
    }
}

/// Value, first and second partial derivatives at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: CVector,
    pub d1: Vec<CVector>,
    /// Upper triangle of the symmetric second-derivative array, row-major.
    d2: Vec<CVector>,
    n: usize,
}

fn tri(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

impl Jet2 {
    /// Builds a jet from a full (possibly asymmetric) Hessian by averaging.
    pub fn from_parts(value: CVector, d1: Vec<CVector>, hess: impl Fn(usize, usize) -> CVector) -> Self {
        let n = d1.len();
        let mut d2 = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                d2.push(hess(i, j));
            }
        }
        Jet2 { value, d1, d2, n }
    }

    pub fn n_params(&self) -> usize {
        self.n
    }

    pub fn d2(&self, i: usize, j: usize) -> &CVector {
        &self.d2[tri(self.n, i, j)]
    }
}

/// Exact second-order jet via nested dual numbers.
pub fn evaluate_jet(imm: &Immersion, point: &[f64]) -> Result<Jet2> {
    imm.check_point(point)?;
    let n = imm.n_params;
    let args: Vec<Dual2> = (0..n).map(|i| seed2(point[i], i)).collect();
    let vals = imm
        .components
        .iter()
        .map(|c| c.eval(&args))
        .collect::<Result<Vec<Dual2>>>()?;
    let sig = imm.ambient.signature;
    let value = CVector::new(vals.iter().map(|x| x.v.v).collect(), sig);
    let d1 = (0..n)
        .map(|i| CVector::new(vals.iter().map(|x| x.v.d[i]).collect(), sig))
        .collect();
    // the two mixed partials agree exactly for the forward-over-forward scheme
    // up to rounding; store the average so the array is symmetric by storage
    Ok(Jet2::from_parts(value, d1, |i, j| {
        CVector::new(vals.iter().map(|x| 0.5 * (x.d[i].d[j] + x.d[j].d[i])).collect(), sig)
    }))
}

/// Central-difference jet with step `h`, used to cross-check exact jets.
pub fn evaluate_jet_fd(imm: &Immersion, point: &[f64], h: f64) -> Result<Jet2> {
    imm.check_point(point)?;
    let n = imm.n_params;
    let sig = imm.ambient.signature;
    let at = |shift: &[(usize, f64)]| -> Result<Vec<Complex64>> {
        let mut p = point.to_vec();
        for &(i, d) in shift {
            p[i] += d;
        }
        Ok(imm.value_unchecked(&p)?.z)
    };
    let f0 = at(&[])?;
    let comb = |parts: Vec<(f64, Vec<Complex64>)>, scale: f64| -> CVector {
        let m = parts[0].1.len();
        let z = (0..m)
            .map(|k| parts.iter().map(|(c, v)| *c * v[k]).sum::<Complex64>() * scale)
            .collect();
        CVector::new(z, sig)
    };
    let mut d1 = Vec::with_capacity(n);
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for i in 0..n {
        let fp = at(&[(i, h)])?;
        let fm = at(&[(i, -h)])?;
        d1.push(comb(vec![(1.0, fp.clone()), (-1.0, fm.clone())], 0.5 / h));
        plus.push(fp);
        minus.push(fm);
    }
    let mut hess = vec![vec![CVector::zeros(0, sig); n]; n];
    for i in 0..n {
        hess[i][i] = comb(
            vec![(1.0, plus[i].clone()), (-2.0, f0.clone()), (1.0, minus[i].clone())],
            1.0 / (h * h),
        );
        for j in (i + 1)..n {
            let pp = at(&[(i, h), (j, h)])?;
            let pm = at(&[(i, h), (j, -h)])?;
            let mp = at(&[(i, -h), (j, h)])?;
            let mm = at(&[(i, -h), (j, -h)])?;
            hess[i][j] = comb(vec![(1.0, pp), (-1.0, pm), (-1.0, mp), (1.0, mm)], 0.25 / (h * h));
        }
    }
    let value = CVector::new(f0, sig);
    Ok(Jet2::from_parts(value, d1, |i, j| hess[i][j].clone()))
}
