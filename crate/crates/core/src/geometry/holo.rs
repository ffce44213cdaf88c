//! Parser for holomorphic expressions in one complex variable `u`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] integer)?
//! atom   := number | 'u' | 'i' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | exp | ln | sqrt | sinh | cosh | tanh
//! ```
//!
//! Only holomorphic operations are available, so every parsed expression is
//! holomorphic away from its singularities.

use super::expr::{Expr, Func};
use crate::error::{Error, Result};

const MAX_LEN: usize = 4096;
const MAX_DEPTH: usize = 64;
const MAX_EXPONENT: i64 = 64;

/// A parsed holomorphic function of `u`; `expr` reads `u` from parameter 0,
/// which may be bound to a complex value.
#[derive(Clone, Debug)]
pub struct HolomorphicFn {
    pub source: String,
    pub expr: Expr,
}

impl HolomorphicFn {
    pub fn parse(src: &str) -> Result<Self> {
        let expr = parse_holomorphic(src)?;
        Ok(HolomorphicFn {
            source: src.to_string(),
            expr,
        })
    }

    /// Substitutes `u := re + i·im`.
    pub fn compose(&self, re: Expr, im: Expr) -> Expr {
        self.expr.subst(&[re + Expr::i() * im])
    }
}

pub fn parse_holomorphic(src: &str) -> Result<Expr> {
    if src.len() > MAX_LEN {
        return Err(Error::Parse {
            pos: MAX_LEN,
            msg: "input too long".into(),
        });
    }
    let mut p = Parser {
        s: src.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            self.enter()?;
            let e = -self.unary()?;
            self.depth -= 1;
            return Ok(e);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected integer exponent"));
            }
            let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
            let k: i64 = digits
                .parse()
                .ok()
                .filter(|k| *k <= MAX_EXPONENT)
                .ok_or_else(|| self.err("exponent too large"))?;
            let k = if neg { -k } else { k };
            return Ok(base.powi(k as i32));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let s = self.s;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let int = digits(&mut p);
        let mut frac = false;
        if p < s.len() && s[p] == b'.' {
            p += 1;
            frac = digits(&mut p);
        }
        if !int && !frac {
            return Err(self.err("expected number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            }
        }
        self.pos = p;
        let text = std::str::from_utf8(&s[start..p]).unwrap_or("");
        let v: f64 = text.parse().map_err(|_| self.err("bad number"))?;
        if !v.is_finite() {
            return Err(self.err("number out of range"));
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::c(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
                let f = match name {
                    "u" => return Ok(Expr::param(0)),
                    "i" => return Ok(Expr::i()),
                    "pi" => return Ok(Expr::c(std::f64::consts::PI)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "exp" => Func::Exp,
                    "ln" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    "sinh" => Func::Sinh,
                    "cosh" => Func::Cosh,
                    "tanh" => Func::Tanh,
                    _ => {
                        self.pos = start;
                        return Err(self.err(&format!("unknown identifier '{name}'")));
                    }
                };
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(arg.func(f))
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn eval(src: &str, u: Complex64) -> Complex64 {
        parse_holomorphic(src).unwrap().eval(&[u]).unwrap()
    }

    #[test]
    fn basic_expressions() {
        let u = Complex64::new(0.3, -0.8);
        assert!((eval("u^2", u) - u * u).norm() < 1e-15);
        assert!((eval("exp(u)", u) - u.exp()).norm() < 1e-15);
        assert!((eval("2*u - 3 + i", u) - (2.0 * u - 3.0 + Complex64::i())).norm() < 1e-15);
        assert!((eval("-u^2", u) + u * u).norm() < 1e-15);
        assert!((eval("1/(1+u)", u) - 1.0 / (1.0 + u)).norm() < 1e-15);
        assert!((eval("u^-2", u) - u.powi(-2)).norm() < 1e-14);
        assert!((eval("sin(pi*u)/2.5e-1", u) - (std::f64::consts::PI * u).sin() * 4.0).norm() < 1e-13);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "", "u +", "(u", "foo(u)", "u^", "u^x", "conj(u)", "u)", "sin u", "u^99999",
        ] {
            assert!(parse_holomorphic(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = "(".repeat(100) + "u" + &")".repeat(100);
        assert!(parse_holomorphic(&src).is_err());
        let src = "-".repeat(1000) + "u";
        assert!(parse_holomorphic(&src).is_err());
    }
}
