//! Closed-form coefficients of the generic branch as functions of (s, t) and
//! the k-fields, and their derivatives along the adapted frame.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SystemId;
use crate::catalog::Sign;
use crate::error::{Error, Result};
use crate::geometry::jet::{Dual, Scalar};
use crate::structure::{FieldSample, FrameCoefficients};

/// Denominators smaller than this are reported as singular.
pub const SINGULAR_DELTA: f64 = 1e-6;

/// k-field values and first partials in u, v, for any scalar type.
#[derive(Clone, Debug)]
pub struct KJet<S> {
    pub k: [S; 4],
    pub ku: [S; 4],
    pub kv: [S; 4],
}

/// Second-order jet of k₁..k₄ at one (u, v): `k[m]` is
/// [value, ∂u, ∂v, ∂uu, ∂uv, ∂vv].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KJet2 {
    pub k: [[f64; 6]; 4],
}

impl KJet2 {
    pub fn constant(vals: [f64; 4]) -> Self {
        KJet2 {
            k: vals.map(|v| [v, 0.0, 0.0, 0.0, 0.0, 0.0]),
        }
    }

    pub fn values(&self) -> [f64; 4] {
        self.k.map(|j| j[0])
    }

    /// First-order jet in plain complex numbers.
    pub fn first_order(&self) -> KJet<Complex64> {
        let c = |x: f64| Complex64::new(x, 0.0);
        KJet {
            k: self.k.map(|j| c(j[0])),
            ku: self.k.map(|j| c(j[1])),
            kv: self.k.map(|j| c(j[2])),
        }
    }
}

/// Closed-form output for one system at one point.
#[derive(Clone, Debug)]
pub struct ClosedForm<S> {
    pub a1: S,
    pub a2: S,
    pub a3: S,
    pub a6: S,
    pub b1: S,
    pub b2: S,
    pub b6: S,
    pub r: S,
    pub mu: S,
    pub rho: S,
    pub gamma1: S,
    pub gamma2: S,
    pub z: S,
    /// (a₆ + ib₆)/(ε + a₃²).
    pub w: S,
    /// The normalizing invariant; equals 1 by construction.
    pub h: S,
    pub eps_tilde: f64,
}

/// Gauge quantities relating the coordinate fields to the frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeFields {
    pub mu: f64,
    pub rho: Complex64,
    pub gamma1: Complex64,
    pub gamma2: Complex64,
    pub z: Complex64,
    pub w: Complex64,
    pub eps_tilde: f64,
    pub h_const: f64,
}

fn re<S: Scalar>(x: &S) -> f64 {
    x.value().re
}

fn nonsingular<S: Scalar>(x: &S, what: &str) -> Result<()> {
    let m = x.value().norm();
    if m < SINGULAR_DELTA || !m.is_finite() {
        return Err(Error::SingularPoint {
            what: what.to_string(),
            magnitude: m,
        });
    }
    Ok(())
}

/// (a₃, μ, |ε + a₃²|) as functions of t.
fn t_profile<S: Scalar>(sys: SystemId, t: &S) -> (S, S, S) {
    let one = S::real(1.0);
    match sys {
        SystemId::Constraa | SystemId::Constrab => {
            let a3 = -t.recip();
            let ea = a3.clone() * a3.clone();
            (a3, t.clone(), ea)
        }
        SystemId::Cpk1 | SystemId::Cpk2 => {
            let a3 = t.tan();
            let ea = one + a3.clone() * a3.clone();
            (a3, t.cos(), ea)
        }
        SystemId::Kh => {
            let a3 = -t.tanh();
            let ea = one - a3.clone() * a3.clone();
            (a3, t.cosh(), ea)
        }
        SystemId::Kh2 | SystemId::Kh3 => {
            let a3 = -t.tanh().recip();
            let ea = a3.clone() * a3.clone() - one;
            (a3, t.sinh(), ea)
        }
    }
}

/// Evaluates the closed-form coefficients. `sign` selects the branch
/// b₂ = ±√(ε + a₃²) of the z-singular systems and is ignored otherwise.
pub fn closed_form<S: Scalar>(sys: SystemId, sign: Sign, s: &S, t: &S, jet: &KJet<S>) -> Result<ClosedForm<S>> {
    let (a3, mu, ea) = t_profile(sys, t);
    nonsingular(&mu, "mu")?;
    if re(&mu) < 0.0 {
        return Err(Error::BranchViolation(format!(
            "{sys}: mu = {:e} < 0 leaves the chart where r > 0",
            re(&mu)
        )));
    }
    nonsingular(&ea, "eps + a3^2")?;
    let eps = S::real(sys.epsilon() as f64);
    let i = S::constant(Complex64::i());
    let [k1, k2, k3, k4] = jet.k.clone();
    let [k1u, k2u, _, _] = jet.ku.clone();
    let [k1v, k2v, _, _] = jet.kv.clone();
    let kk = k3 + i.clone() * k4;
    let denom = eps.clone() + a3.clone() * a3.clone();
    if sys.z_singular() {
        let sg = sign.value();
        let e1 = k1.exp();
        let five3s = s.scale(5.0 / 3.0);
        let mu2 = mu.clone() * mu.clone();
        let a6 = e1.clone() * five3s.cos() / mu2.clone();
        let b6 = (e1 * five3s.sin()).scale(sg) / mu2;
        let a2 = S::real(0.0);
        let b2 = mu.recip().scale(sg);
        let r = k2.exp() / mu.clone();
        let big_e = (k1.scale(2.0) + k2.clone()).scale(0.2).exp();
        let ph = (i.clone() * s.scale(2.0 / 3.0 * sg)).exp();
        let rho = mu.clone() / big_e.clone() / ph.clone();
        let w5 = (k1.clone() + i.clone() * s.scale(5.0 / 3.0 * sg)).exp();
        let dk = ((k2v - k1v.scale(3.0)) - i.clone() * (k2u.clone() - k1u.scale(3.0))).scale(sg);
        let gamma1 = (-(a3.clone() * w5).scale(5.0) + big_e * ph * dk) / mu.scale(5.0);
        let w6 = a6.clone() + i.clone() * b6.clone();
        let gamma2 = -(i.clone() * b2.clone() * w6.clone()) / denom.clone();
        let c = rho.recip();
        let zr = c * (k2u + i.clone() * jet.kv[1].clone()) - gamma2.clone() * a3.clone();
        let a1b1 = -(i.clone() * zr).scale(1.0 / 3.0);
        let w = w6 / denom.clone();
        let rho2 = rho.clone() * rho.clone();
        let h = w.clone() * w.clone() * denom.clone() * denom * rho2.clone() * rho2 * rho.clone() * r.clone();
        let z = mu.clone() * i * b2.clone();
        return Ok(ClosedForm {
            a1: a1b1.re(),
            b1: a1b1.im(),
            a2,
            a3,
            a6,
            b2,
            b6,
            r,
            mu,
            rho,
            gamma1,
            gamma2,
            z,
            w,
            h,
            eps_tilde: 1.0,
        });
    }

    let two = |x: &S| x.scale(2.0);
    let minus_ik1 = s.clone() - i.clone() * k1.clone();
    let (cc, x2, y2, eps_tilde, root, dlr) = match sys {
        SystemId::Kh => {
            let cc = two(s).cosh() + two(&k1).cos();
            let dlr = two(&k1).sin() / cc.clone();
            (cc, -two(s).sinh(), -two(&k1).sin(), -1.0, minus_ik1.cosh(), dlr)
        }
        _ => {
            let cc = two(s).cos() + two(&k1).cosh();
            let dlr = -two(&k1).sinh() / cc.clone();
            (cc, two(s).sin(), two(&k1).sinh(), 1.0, minus_ik1.cos(), dlr)
        }
    };
    nonsingular(&cc, "C")?;
    if re(&cc) < 0.0 {
        return Err(Error::BranchViolation(format!("{sys}: C = {:e} < 0", re(&cc))));
    }
    let a2 = x2 / (mu.clone() * cc.clone());
    let b2 = y2 / (mu.clone() * cc.clone());
    let r = k2.exp() / (mu.clone() * cc.sqrt());
    let z = mu.clone() * (a2.clone() + i.clone() * b2.clone());
    let zz = z.clone() * z.clone() + S::real(eps_tilde);
    nonsingular(&zz, "z^2 + eps_tilde")?;
    let base = (r.clone() * zz.clone() * ea.clone()).recip();
    let rho = base.ln().scale(1.0 / 3.0).exp();
    let w6 = kk.clone() / rho.clone() * ea.sqrt() * root.clone();
    let a6 = w6.re();
    let b6 = w6.im();
    let gamma1 = (-(a3.clone() * kk * root).scale(eps_tilde) + (k1v.clone() - i.clone() * k1u.clone())) / rho.clone();
    let gamma2 = (a2.clone() - i.clone() * b2.clone()) * w6.clone() / denom.clone();
    let c = rho.recip();
    let zr = c * ((k2u + i.clone() * k2v) + dlr * (k1u + i.clone() * k1v))
        - gamma1.clone() * mu.clone() * a2.clone()
        - gamma2.clone() * a3.clone();
    let a1b1 = -(i * zr).scale(1.0 / 3.0);
    let w = w6 / denom;
    let h = rho.clone() * rho.clone() * rho.clone() * r.clone() * zz * ea;
    Ok(ClosedForm {
        a1: a1b1.re(),
        b1: a1b1.im(),
        a2,
        a3,
        a6,
        b2,
        b6,
        r,
        mu,
        rho,
        gamma1,
        gamma2,
        z,
        w,
        h,
        eps_tilde,
    })
}

impl<S: Scalar> ClosedForm<S> {
    pub fn coefficients(&self) -> FrameCoefficients {
        FrameCoefficients {
            a1: re(&self.a1),
            a2: re(&self.a2),
            a3: re(&self.a3),
            a6: re(&self.a6),
            b1: re(&self.b1),
            b2: re(&self.b2),
            b6: re(&self.b6),
            c6: re(&self.a3),
            d6: 0.0,
            r: re(&self.r),
        }
    }

    pub fn gauge(&self) -> GaugeFields {
        GaugeFields {
            mu: re(&self.mu),
            rho: self.rho.value(),
            gamma1: self.gamma1.value(),
            gamma2: self.gamma2.value(),
            z: self.z.value(),
            w: self.w.value(),
            eps_tilde: self.eps_tilde,
            h_const: re(&self.h),
        }
    }
}

/// Frame coefficients and gauge at (s, t) for the k-jet at one (u, v).
pub fn closed_form_fields(
    sys: SystemId,
    sign: Sign,
    jet: &KJet2,
    s: f64,
    t: f64,
) -> Result<(FrameCoefficients, GaugeFields)> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let cf = closed_form(sys, sign, &c(s), &c(t), &jet.first_order())?;
    Ok((cf.coefficients(), cf.gauge()))
}

type D = Dual<Complex64>;

fn dual(v: f64, d: [f64; 4]) -> D {
    Dual {
        v: Complex64::new(v, 0.0),
        d: d.map(|x| Complex64::new(x, 0.0)),
    }
}

/// Coefficients and their X₁..X₄ derivatives. Derivatives in (s, t) are
/// exact; those in (u, v) come from the second-order jet, so FD jets give FD
/// accuracy.
pub fn field_sample(sys: SystemId, sign: Sign, jet: &KJet2, s: f64, t: f64) -> Result<(FieldSample, GaugeFields)> {
    let kj = KJet {
        k: jet.k.map(|j| dual(j[0], [0.0, 0.0, j[1], j[2]])),
        ku: jet.k.map(|j| dual(j[1], [0.0, 0.0, j[3], j[4]])),
        kv: jet.k.map(|j| dual(j[2], [0.0, 0.0, j[4], j[5]])),
    };
    let cf = closed_form(
        sys,
        sign,
        &dual(s, [1.0, 0.0, 0.0, 0.0]),
        &dual(t, [0.0, 1.0, 0.0, 0.0]),
        &kj,
    )?;
    let gauge = cf.gauge();
    let c = gauge.rho.inv();
    let (g1, g2, mu) = (gauge.gamma1, gauge.gamma2, gauge.mu);
    // rows: X_i as combinations of (∂s, ∂t, ∂u, ∂v)
    let rows = [
        [-g1.re, -g2.re, c.re, -c.im],
        [-g1.im, -g2.im, c.im, c.re],
        [1.0 / mu, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ];
    let along = |x: &D, row: &[f64; 4]| -> f64 { (0..4).map(|q| row[q] * x.d[q].re).sum() };
    let d = rows.map(|row| FrameCoefficients {
        a1: along(&cf.a1, &row),
        a2: along(&cf.a2, &row),
        a3: along(&cf.a3, &row),
        a6: along(&cf.a6, &row),
        b1: along(&cf.b1, &row),
        b2: along(&cf.b2, &row),
        b6: along(&cf.b6, &row),
        c6: along(&cf.a3, &row),
        d6: 0.0,
        r: along(&cf.r, &row),
    });
    Ok((
        FieldSample {
            c: cf.coefficients(),
            d,
        },
        gauge,
    ))
}
