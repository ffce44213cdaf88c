//! Forward-mode dual numbers over complex values.
//!
//! `Dual<Complex64>` carries first derivatives with respect to up to four real
//! parameters; nesting (`Dual<Dual<Complex64>>`) yields exact second
//! derivatives. All parameters are real, so `re`, `im` and `conj` commute with
//! differentiation and are supported as ordinary smooth operations.

// product and quotient rules mix operators by design
#![allow(clippy::suspicious_arithmetic_impl)]

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of real parameters tracked by a dual number.
pub const NPARAM: usize = 4;

/// Arithmetic needed to evaluate expression trees and closed-form fields.
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: Complex64) -> Self;
    /// Underlying complex value with all derivative parts dropped.
    fn value(&self) -> Complex64;

    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
    fn re(&self) -> Self;
    fn im(&self) -> Self;
    fn conj(&self) -> Self;

    fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::real(k)
    }

    fn mul_c(&self, c: Complex64) -> Self {
        self.clone() * Self::constant(c)
    }

    fn recip(&self) -> Self {
        Self::real(1.0) / self.clone()
    }

    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = Self::real(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    /// Principal-branch power with a real exponent.
    fn powf(&self, p: f64) -> Self {
        self.ln().scale(p).exp()
    }
}

impl Scalar for Complex64 {
    fn constant(c: Complex64) -> Self {
        c
    }
    fn value(&self) -> Complex64 {
        *self
    }
    fn sin(&self) -> Self {
        Complex64::sin(*self)
    }
    fn cos(&self) -> Self {
        Complex64::cos(*self)
    }
    fn tan(&self) -> Self {
        Complex64::tan(*self)
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        Complex64::sqrt(*self)
    }
    fn sinh(&self) -> Self {
        Complex64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        Complex64::cosh(*self)
    }
    fn tanh(&self) -> Self {
        Complex64::tanh(*self)
    }
    fn re(&self) -> Self {
        Complex64::new(self.re, 0.0)
    }
    fn im(&self) -> Self {
        Complex64::new(self.im, 0.0)
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn powi(&self, n: i32) -> Self {
        Complex64::powi(self, n)
    }
}

/// Value plus partial derivatives with respect to `NPARAM` real parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: [S; NPARAM],
}

impl<S: Scalar> Dual<S> {
    pub fn constant_of(v: S) -> Self {
        let z = S::real(0.0);
        Dual {
            v,
            d: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    /// Independent variable number `idx` with value `v`.
    pub fn variable(v: S, idx: usize) -> Self {
        let mut out = Self::constant_of(v);
        out.d[idx] = S::real(1.0);
        out
    }

    /// Chain rule: `f(self)` given `f` and `f'` evaluated at `self.v`.
    fn chain(&self, f: S, df: S) -> Self {
        Dual {
            v: f,
            d: std::array::from_fn(|i| df.clone() * self.d[i].clone()),
        }
    }

    fn map_linear(&self, op: impl Fn(&S) -> S) -> Self {
        Dual {
            v: op(&self.v),
            d: std::array::from_fn(|i| op(&self.d[i])),
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let [a0, a1, a2, a3] = self.d;
        let [b0, b1, b2, b3] = o.d;
        Dual {
            v: self.v + o.v,
            d: [a0 + b0, a1 + b1, a2 + b2, a3 + b3],
        }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let [a0, a1, a2, a3] = self.d;
        let [b0, b1, b2, b3] = o.d;
        Dual {
            v: self.v - o.v,
            d: [a0 - b0, a1 - b1, a2 - b2, a3 - b3],
        }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map_linear(|x| -x.clone())
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual {
            v: self.v.clone() * o.v.clone(),
            d: std::array::from_fn(|i| self.d[i].clone() * o.v.clone() + self.v.clone() * o.d[i].clone()),
        }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        let q = self.v.clone() * inv.clone();
        Dual {
            v: q.clone(),
            d: std::array::from_fn(|i| (self.d[i].clone() - q.clone() * o.d[i].clone()) * inv.clone()),
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn constant(c: Complex64) -> Self {
        Self::constant_of(S::constant(c))
    }
    fn value(&self) -> Complex64 {
        self.v.value()
    }
    fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn tan(&self) -> Self {
        let t = self.v.tan();
        let dt = S::real(1.0) + t.clone() * t.clone();
        self.chain(t, dt)
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.v.ln(), self.v.recip())
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        let ds = s.scale(2.0).recip();
        self.chain(s, ds)
    }
    fn sinh(&self) -> Self {
        self.chain(self.v.sinh(), self.v.cosh())
    }
    fn cosh(&self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh())
    }
    fn tanh(&self) -> Self {
        let t = self.v.tanh();
        let dt = S::real(1.0) - t.clone() * t.clone();
        self.chain(t, dt)
    }
    fn re(&self) -> Self {
        self.map_linear(|x| x.re())
    }
    fn im(&self) -> Self {
        self.map_linear(|x| x.im())
    }
    fn conj(&self) -> Self {
        self.map_linear(|x| x.conj())
    }
}

/// Second-order jet type: nested duals give exact Hessians.
pub type Dual2 = Dual<Dual<Complex64>>;

/// Seeds a second-order dual for parameter `idx` at real value `x`.
pub fn seed2(x: f64, idx: usize) -> Dual2 {
    let inner = Dual::variable(Complex64::new(x, 0.0), idx);
    let mut out = Dual::constant_of(inner);
    out.d[idx] = Dual::constant_of(Complex64::new(1.0, 0.0));
    out
}

/// Seeds a first-order dual for parameter `idx` at real value `x`.
pub fn seed1(x: f64, idx: usize) -> Dual<Complex64> {
    Dual::variable(Complex64::new(x, 0.0), idx)
}

/// Splits a second-order dual into (value, gradient, Hessian).
pub fn unpack2(x: &Dual2) -> (Complex64, [Complex64; NPARAM], [[Complex64; NPARAM]; NPARAM]) {
    let grad = std::array::from_fn(|i| x.v.d[i]);
    let hess = std::array::from_fn(|i| std::array::from_fn(|j| x.d[i].d[j]));
    (x.v.v, grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn product_rule_second_order() {
        // f = x^2 y at (2, 3): f_x = 12, f_y = 4, f_xx = 6, f_xy = 4, f_yy = 0
        let x = seed2(2.0, 0);
        let y = seed2(3.0, 1);
        let f = x.clone() * x * y;
        let (v, g, h) = unpack2(&f);
        assert_eq!(v, c(12.0));
        assert_eq!(g[0], c(12.0));
        assert_eq!(g[1], c(4.0));
        assert_eq!(h[0][0], c(6.0));
        assert_eq!(h[0][1], c(4.0));
        assert_eq!(h[1][0], c(4.0));
        assert_eq!(h[1][1], c(0.0));
    }

    #[test]
    fn circle_jet() {
        // e^{it} at t = 0: derivative i, second derivative -1
        let t = seed2(0.0, 0);
        let f = (t * Dual2::constant(Complex64::i())).exp();
        let (v, g, h) = unpack2(&f);
        assert!((v - c(1.0)).norm() < 1e-15);
        assert!((g[0] - Complex64::i()).norm() < 1e-15);
        assert!((h[0][0] + c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn elementary_derivatives_match_closed_forms() {
        let x0 = 0.37;
        let x = seed2(x0, 2);
        let checks: Vec<(Dual2, f64, f64)> = vec![
            (x.sin(), x0.cos(), -x0.sin()),
            (x.cos(), -x0.sin(), -x0.cos()),
            (x.tan(), 1.0 / x0.cos().powi(2), 2.0 * x0.tan() / x0.cos().powi(2)),
            (x.ln(), 1.0 / x0, -1.0 / (x0 * x0)),
            (x.sqrt(), 0.5 / x0.sqrt(), -0.25 * x0.powf(-1.5)),
            (x.sinh(), x0.cosh(), x0.sinh()),
            (x.tanh(), 1.0 / x0.cosh().powi(2), -2.0 * x0.tanh() / x0.cosh().powi(2)),
            (x.powi(-3), -3.0 * x0.powi(-4), 12.0 * x0.powi(-5)),
            (
                x.powf(1.0 / 3.0),
                x0.powf(-2.0 / 3.0) / 3.0,
                -2.0 / 9.0 * x0.powf(-5.0 / 3.0),
            ),
        ];
        for (f, d1, d2) in checks {
            let (_, g, h) = unpack2(&f);
            assert!((g[2] - c(d1)).norm() < 1e-12, "{g:?} vs {d1}");
            assert!((h[2][2] - c(d2)).norm() < 1e-12, "{h:?} vs {d2}");
        }
    }

    #[test]
    fn real_part_commutes_with_derivatives() {
        // Re(e^{i x}) = cos x
        let x = seed2(0.8, 1);
        let f = (x * Dual2::constant(Complex64::i())).exp().re();
        let (v, g, h) = unpack2(&f);
        assert!((v - c(0.8f64.cos())).norm() < 1e-15);
        assert!((g[1] - c(-0.8f64.sin())).norm() < 1e-15);
        assert!((h[1][1] - c(-0.8f64.cos())).norm() < 1e-15);
    }
}
