//! Expression trees for closed-form immersions.
//!
//! An [`Expr`] is an immutable, cheaply clonable tree over real parameters.
//! Evaluation is generic over [`Scalar`], so the same tree yields plain values,
//! first-order jets, or exact second-order jets.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::jet::{Dual, Scalar};
use crate::error::{Error, Result};

/// Denominators below this magnitude are reported as singular points.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Re,
    Im,
    Conj,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Re => "re",
            Func::Im => "im",
            Func::Conj => "conj",
        }
    }

    fn apply<S: Scalar>(&self, x: &S) -> Result<S> {
        let guard = |what: &str, m: f64| -> Result<()> {
            if m < SINGULAR_TOL {
                Err(Error::SingularPoint {
                    what: what.to_string(),
                    magnitude: m,
                })
            } else {
                Ok(())
            }
        };
        Ok(match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => {
                guard("cos in tan", x.value().cos().norm())?;
                x.tan()
            }
            Func::Exp => x.exp(),
            Func::Ln => {
                guard("ln argument", x.value().norm())?;
                x.ln()
            }
            Func::Sqrt => {
                guard("sqrt argument", x.value().norm())?;
                x.sqrt()
            }
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => {
                guard("cosh in tanh", x.value().cosh().norm())?;
                x.tanh()
            }
            Func::Re => x.re(),
            Func::Im => x.im(),
            Func::Conj => x.conj(),
        })
    }
}

#[derive(Debug)]
enum Node {
    Const(Complex64),
    Param(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Powi(Expr, i32),
    Func(Func, Expr),
    Potential(Arc<PathPotential>, Vec<Expr>),
}

#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn c(x: f64) -> Expr {
        Expr(Arc::new(Node::Const(Complex64::new(x, 0.0))))
    }

    pub fn complex(z: Complex64) -> Expr {
        Expr(Arc::new(Node::Const(z)))
    }

    pub fn i() -> Expr {
        Expr::complex(Complex64::i())
    }

    pub fn param(i: usize) -> Expr {
        Expr(Arc::new(Node::Param(i)))
    }

    pub fn func(&self, f: Func) -> Expr {
        Expr(Arc::new(Node::Func(f, self.clone())))
    }

    pub fn sin(&self) -> Expr {
        self.func(Func::Sin)
    }
    pub fn cos(&self) -> Expr {
        self.func(Func::Cos)
    }
    pub fn tan(&self) -> Expr {
        self.func(Func::Tan)
    }
    pub fn exp(&self) -> Expr {
        self.func(Func::Exp)
    }
    pub fn ln(&self) -> Expr {
        self.func(Func::Ln)
    }
    pub fn sqrt(&self) -> Expr {
        self.func(Func::Sqrt)
    }
    pub fn sinh(&self) -> Expr {
        self.func(Func::Sinh)
    }
    pub fn cosh(&self) -> Expr {
        self.func(Func::Cosh)
    }
    pub fn tanh(&self) -> Expr {
        self.func(Func::Tanh)
    }
    pub fn re(&self) -> Expr {
        self.func(Func::Re)
    }
    pub fn im(&self) -> Expr {
        self.func(Func::Im)
    }
    pub fn conj(&self) -> Expr {
        self.func(Func::Conj)
    }

    pub fn powi(&self, n: i32) -> Expr {
        Expr(Arc::new(Node::Powi(self.clone(), n)))
    }

    /// e^{i·self}
    pub fn cis(&self) -> Expr {
        (Expr::i() * self.clone()).exp()
    }

    pub fn potential(pot: Arc<PathPotential>, args: Vec<Expr>) -> Expr {
        Expr(Arc::new(Node::Potential(pot, args)))
    }

    /// Largest parameter index referenced, if any.
    pub fn max_param(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Param(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.max_param().max(b.max_param()),
            Node::Neg(a) | Node::Powi(a, _) | Node::Func(_, a) => a.max_param(),
            Node::Potential(_, args) => args.iter().filter_map(|a| a.max_param()).max(),
        }
    }

    /// Replaces every `Param(i)` by `args[i]`.
    pub fn subst(&self, args: &[Expr]) -> Expr {
        let n = match &*self.0 {
            Node::Const(_) => return self.clone(),
            Node::Param(i) => return args[*i].clone(),
            Node::Add(a, b) => Node::Add(a.subst(args), b.subst(args)),
            Node::Sub(a, b) => Node::Sub(a.subst(args), b.subst(args)),
            Node::Mul(a, b) => Node::Mul(a.subst(args), b.subst(args)),
            Node::Div(a, b) => Node::Div(a.subst(args), b.subst(args)),
            Node::Neg(a) => Node::Neg(a.subst(args)),
            Node::Powi(a, k) => Node::Powi(a.subst(args), *k),
            Node::Func(f, a) => Node::Func(*f, a.subst(args)),
            Node::Potential(p, pa) => Node::Potential(p.clone(), pa.iter().map(|a| a.subst(args)).collect()),
        };
        Expr(Arc::new(n))
    }

    /// Symbolic partial derivative with respect to the real parameter `i`.
    /// No simplification is attempted beyond dropping constant branches.
    pub fn diff(&self, i: usize) -> Expr {
        let zero = || Expr::c(0.0);
        match &*self.0 {
            Node::Const(_) => zero(),
            Node::Param(j) => Expr::c(if *j == i { 1.0 } else { 0.0 }),
            _ if !self.depends_on(i) => zero(),
            Node::Add(a, b) => a.diff(i) + b.diff(i),
            Node::Sub(a, b) => a.diff(i) - b.diff(i),
            Node::Mul(a, b) => a.diff(i) * b.clone() + a.clone() * b.diff(i),
            Node::Div(a, b) => (a.diff(i) * b.clone() - a.clone() * b.diff(i)) / b.powi(2),
            Node::Neg(a) => -a.diff(i),
            Node::Powi(a, k) => *k as f64 * a.powi(k - 1) * a.diff(i),
            Node::Func(f, a) => {
                let da = a.diff(i);
                match f {
                    Func::Sin => a.cos() * da,
                    Func::Cos => -(a.sin() * da),
                    Func::Tan => (1.0 + a.tan().powi(2)) * da,
                    Func::Exp => self.clone() * da,
                    Func::Ln => da / a.clone(),
                    Func::Sqrt => da / (2.0 * self.clone()),
                    Func::Sinh => a.cosh() * da,
                    Func::Cosh => a.sinh() * da,
                    Func::Tanh => (1.0 - self.powi(2)) * da,
                    // parameters are real, so these commute with ∂_i
                    Func::Re => da.re(),
                    Func::Im => da.im(),
                    Func::Conj => da.conj(),
                }
            }
            Node::Potential(p, args) => {
                let mut acc = zero();
                for (k, a) in args.iter().enumerate() {
                    if a.depends_on(i) {
                        acc = acc + p.forms[k].subst(args) * a.diff(i);
                    }
                }
                acc
            }
        }
    }

    fn depends_on(&self, i: usize) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Param(j) => *j == i,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.depends_on(i) || b.depends_on(i),
            Node::Neg(a) | Node::Powi(a, _) | Node::Func(_, a) => a.depends_on(i),
            Node::Potential(_, args) => args.iter().any(|a| a.depends_on(i)),
        }
    }

    pub fn eval<S: Scalar + PotentialEval>(&self, args: &[S]) -> Result<S> {
        Ok(match &*self.0 {
            Node::Const(c) => S::constant(*c),
            Node::Param(i) => args.get(*i).cloned().ok_or(Error::DimensionMismatch {
                expected: *i + 1,
                got: args.len(),
            })?,
            Node::Add(a, b) => a.eval(args)? + b.eval(args)?,
            Node::Sub(a, b) => a.eval(args)? - b.eval(args)?,
            Node::Mul(a, b) => a.eval(args)? * b.eval(args)?,
            Node::Div(a, b) => {
                let den = b.eval(args)?;
                let m = den.value().norm();
                if m < SINGULAR_TOL {
                    return Err(Error::SingularPoint {
                        what: "division".into(),
                        magnitude: m,
                    });
                }
                a.eval(args)? / den
            }
            Node::Neg(a) => -a.eval(args)?,
            Node::Powi(a, k) => {
                let x = a.eval(args)?;
                if *k < 0 && x.value().norm() < SINGULAR_TOL {
                    return Err(Error::SingularPoint {
                        what: "negative power".into(),
                        magnitude: x.value().norm(),
                    });
                }
                x.powi(*k)
            }
            Node::Func(f, a) => f.apply(&a.eval(args)?)?,
            Node::Potential(p, pa) => {
                let vals = pa.iter().map(|a| a.eval(args)).collect::<Result<Vec<S>>>()?;
                S::potential(p, &vals)?
            }
        })
    }

    pub fn value(&self, args: &[f64]) -> Result<Complex64> {
        let a: Vec<Complex64> = args.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval(&a)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Node::Const(c) => write!(f, "({}+{}i)", c.re, c.im),
            Node::Param(i) => write!(f, "p{i}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Powi(a, k) => write!(f, "{a}^{k}"),
            Node::Func(g, a) => write!(f, "{}({a})", g.name()),
            Node::Potential(_, args) => {
                write!(f, "potential(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $node:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr(Arc::new(Node::$node(self, o)))
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                Expr(Arc::new(Node::$node(self.clone(), o.clone())))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, o: f64) -> Expr {
                Expr(Arc::new(Node::$node(self, Expr::c(o))))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr(Arc::new(Node::$node(Expr::c(self), o)))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr(Arc::new(Node::Neg(self)))
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr(Arc::new(Node::Neg(self.clone())))
    }
}

/// A scalar function defined as the line integral of a closed 1-form
/// `Σ_i forms[i] dx_i` from `base`, along axis-parallel segments in `order`.
#[derive(Debug)]
pub struct PathPotential {
    pub forms: Vec<Expr>,
    pub base: Vec<f64>,
    pub order: Vec<usize>,
}

/// Gauss–Legendre nodes and weights on [-1, 1], 16 points.
const GL_NODES: [(f64, f64); 8] = [
    (0.0950125098376375, 0.1894506104550686),
    (0.2816035507792589, 0.1826034150449236),
    (0.4580167776572274, 0.1691565193950026),
    (0.6178762444026438, 0.1495959888165768),
    (0.755404408355003, 0.124628971255534),
    (0.8656312023878318, 0.0951585116824926),
    (0.9445750230732326, 0.0622535239386477),
    (0.9894009349916499, 0.0271524594117540),
];

const PANEL: f64 = 0.25;

impl PathPotential {
    pub fn new(forms: Vec<Expr>, base: Vec<f64>) -> Self {
        let order = (0..forms.len()).collect();
        PathPotential { forms, base, order }
    }

    pub fn with_order(&self, order: Vec<usize>) -> Self {
        PathPotential {
            forms: self.forms.clone(),
            base: self.base.clone(),
            order,
        }
    }

    /// The form's components evaluated at `x`.
    pub fn form_at<S: Scalar + PotentialEval>(&self, x: &[S]) -> Result<Vec<S>> {
        self.forms.iter().map(|w| w.eval(x)).collect()
    }

    /// Line integral from the base point to `x` (real coordinates).
    pub fn integrate(&self, x: &[f64]) -> Result<f64> {
        let mut cur = self.base.clone();
        let mut total = 0.0;
        for &axis in &self.order {
            let (a, b) = (cur[axis], x[axis]);
            let len = b - a;
            if len != 0.0 {
                let panels = ((len.abs() / PANEL).ceil() as usize).max(1);
                let h = len / panels as f64;
                for p in 0..panels {
                    let mid = a + (p as f64 + 0.5) * h;
                    for &(node, w) in &GL_NODES {
                        for sgn in [-1.0, 1.0] {
                            let mut pt = cur.clone();
                            pt[axis] = mid + sgn * node * 0.5 * h;
                            let args: Vec<Complex64> = pt.iter().map(|&t| Complex64::new(t, 0.0)).collect();
                            total += w * 0.5 * h * self.forms[axis].eval(&args)?.re;
                        }
                    }
                }
            }
            cur[axis] = b;
        }
        Ok(total)
    }

    /// Difference between the integral along `self.order` and along the
    /// reversed axis order; zero up to quadrature error for closed forms.
    pub fn path_mismatch(&self, x: &[f64]) -> Result<f64> {
        let mut rev = self.order.clone();
        rev.reverse();
        let other = self.with_order(rev);
        Ok((self.integrate(x)? - other.integrate(x)?).abs())
    }

    /// Loop integral around a square of side `h` in the (i, j) plane at `x`,
    /// divided by the enclosed area.
    pub fn curl_density(&self, x: &[f64], i: usize, j: usize, h: f64) -> Result<f64> {
        let corner = |di: f64, dj: f64| {
            let mut p = x.to_vec();
            p[i] += di;
            p[j] += dj;
            p
        };
        let seg = |p: &[f64], axis: usize, len: f64| -> Result<f64> {
            let mut acc = 0.0;
            for &(node, w) in &GL_NODES {
                for sgn in [-1.0, 1.0] {
                    let mut q = p.to_vec();
                    q[axis] += (0.5 + sgn * node * 0.5) * len;
                    let args: Vec<Complex64> = q.iter().map(|&t| Complex64::new(t, 0.0)).collect();
                    acc += w * 0.5 * len * self.forms[axis].eval(&args)?.re;
                }
            }
            Ok(acc)
        };
        let loop_int = seg(&corner(0.0, 0.0), i, h)? + seg(&corner(h, 0.0), j, h)?
            - seg(&corner(0.0, h), i, h)?
            - seg(&corner(0.0, 0.0), j, h)?;
        Ok(loop_int / (h * h))
    }
}

/// Evaluation of a [`PathPotential`] node for a scalar type.
pub trait PotentialEval: Sized {
    fn potential(p: &PathPotential, args: &[Self]) -> Result<Self>;
}

impl PotentialEval for Complex64 {
    fn potential(p: &PathPotential, args: &[Self]) -> Result<Self> {
        let x: Vec<f64> = args.iter().map(|a| a.re).collect();
        Ok(Complex64::new(p.integrate(&x)?, 0.0))
    }
}

impl<S: Scalar + PotentialEval> PotentialEval for Dual<S> {
    fn potential(p: &PathPotential, args: &[Self]) -> Result<Self> {
        let inner: Vec<S> = args.iter().map(|a| a.v.clone()).collect();
        let v = S::potential(p, &inner)?;
        let w = p.form_at(&inner)?;
        let d = std::array::from_fn(|j| {
            let mut acc = S::real(0.0);
            for (wi, a) in w.iter().zip(args) {
                acc = acc + wi.clone() * a.d[j].clone();
            }
            acc
        });
        Ok(Dual { v, d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::jet::{seed2, unpack2, Dual2};

    #[test]
    fn symbolic_diff_matches_jet() {
        let p0 = Expr::param(0);
        let p1 = Expr::param(1);
        let e = (p0.clone() * p1.clone()).sin() / (1.0 + p0.clone().powi(2)) + p1.cis().re() * p0.clone().sqrt()
            - (p1.clone() * 0.3).tanh().ln();
        let x = [0.7, 0.4];
        let args = [seed2(x[0], 0), seed2(x[1], 1)];
        let (_, g, h) = unpack2(&e.eval::<Dual2>(&args).unwrap());
        for i in 0..2 {
            let d = e.diff(i);
            assert!((d.value(&x).unwrap() - g[i]).norm() < 1e-13);
            for j in 0..2 {
                assert!((d.diff(j).value(&x).unwrap() - h[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_jet_is_exact() {
        // f = 3 p0^2 - p0 p1 + 2 p1 + 5
        let p0 = Expr::param(0);
        let p1 = Expr::param(1);
        let f = 3.0 * p0.powi(2) - &p0 * &p1 + 2.0 * p1 + 5.0;
        let args = [seed2(1.5, 0), seed2(-2.0, 1)];
        let (v, g, h) = unpack2(&f.eval::<Dual2>(&args).unwrap());
        assert_eq!(v.re, 3.0 * 2.25 + 3.0 - 4.0 + 5.0);
        assert_eq!(g[0].re, 6.0 * 1.5 + 2.0);
        assert_eq!(g[1].re, -1.5 + 2.0);
        assert_eq!(h[0][0].re, 6.0);
        assert_eq!(h[0][1].re, -1.0);
        assert_eq!(h[1][1].re, 0.0);
    }

    #[test]
    fn division_by_zero_is_singular() {
        let f = Expr::c(1.0) / Expr::param(0);
        assert!(matches!(f.value(&[0.0]), Err(Error::SingularPoint { .. })));
        assert!(f.value(&[1e-3]).is_ok());
    }

    #[test]
    fn substitution_composes() {
        let f = Expr::param(0).sin() * Expr::param(1);
        let g = f.subst(&[Expr::param(3), Expr::c(2.0)]);
        let v = g.value(&[0.0, 0.0, 0.0, 0.5]).unwrap();
        assert!((v.re - 2.0 * 0.5f64.sin()).abs() < 1e-15);
        assert_eq!(g.max_param(), Some(3));
    }

    #[test]
    fn potential_of_exact_form() {
        // ω = d(x^2 y) = 2xy dx + x^2 dy, base (0,0)
        let x = Expr::param(0);
        let y = Expr::param(1);
        let pot = Arc::new(PathPotential::new(
            vec![2.0 * x.clone() * y.clone(), x.powi(2)],
            vec![0.0, 0.0],
        ));
        let f = Expr::potential(pot.clone(), vec![Expr::param(0), Expr::param(1)]);
        let v = f.value(&[1.3, -0.7]).unwrap();
        assert!((v.re - 1.69 * -0.7).abs() < 1e-13);
        assert!(pot.path_mismatch(&[1.3, -0.7]).unwrap() < 1e-13);
        let args = [seed2(1.3, 0), seed2(-0.7, 1)];
        let (_, g, h) = unpack2(&f.eval::<Dual2>(&args).unwrap());
        assert!((g[0].re - 2.0 * 1.3 * -0.7).abs() < 1e-14);
        assert!((g[1].re - 1.69).abs() < 1e-14);
        assert!((h[0][1].re - 2.6).abs() < 1e-14);
        assert!((h[0][0].re + 1.4).abs() < 1e-14);
    }

    #[test]
    fn non_closed_form_is_path_dependent() {
        // ω = -y dx + x dy has curl 2
        let pot = PathPotential::new(vec![-Expr::param(1), Expr::param(0)], vec![0.0, 0.0]);
        let m = pot.path_mismatch(&[1.0, 1.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-12);
        let c = pot.curl_density(&[0.2, 0.3], 0, 1, 1e-2).unwrap();
        assert!((c - 2.0).abs() < 1e-10);
    }
}
