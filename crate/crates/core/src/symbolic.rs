//! Closed-form constants used to write down S-matrix entries.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? digits)?
//! atom   := number | name | func '(' expr ')' | '(' expr ')'
//! func   := sqrt | sin | cos
//! name   := pi | phi | psi | omega | i
//! ```
//!
//! `phi` is the golden ratio, `psi = 2 cos(pi/7)` and `omega = exp(2 pi i/3)`.

use std::fmt;

use rug::ops::Pow;
use rug::{Complex, Float};
use thiserror::Error;

use crate::numeric::Precision;

pub const MAX_INPUT_LEN: usize = 4096;
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("expression is empty")]
    Empty,
    #[error("expression longer than {MAX_INPUT_LEN} bytes")]
    TooLong,
    #[error("expression nested deeper than {MAX_DEPTH} levels")]
    TooDeep,
    #[error("unexpected character {1:?} at offset {0}")]
    UnexpectedChar(usize, char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier {0:?}")]
    UnknownName(String),
    #[error("exponent {0:?} is not a small integer")]
    BadExponent(String),
    #[error("bad number literal {0:?}")]
    BadNumber(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    Phi,
    Psi,
    Omega,
    I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Decimal literal kept verbatim so evaluation can use full precision.
    Number(String),
    Const(Constant),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        if text.len() > MAX_INPUT_LEN {
            return Err(ParseError::TooLong);
        }
        let mut p = Parser { src: text.as_bytes(), pos: 0, depth: 0 };
        p.skip_ws();
        if p.peek().is_none() {
            return Err(ParseError::Empty);
        }
        let e = p.expr()?;
        p.skip_ws();
        match p.peek() {
            None => Ok(e),
            Some(c) => Err(ParseError::UnexpectedChar(p.pos, c as char)),
        }
    }

    pub fn eval(&self, prec: Precision) -> Complex {
        let bits = prec.bits();
        match self {
            Expr::Number(s) => {
                let f = Float::parse(s).map(|v| Float::with_val(bits, v)).unwrap_or_else(|_| Float::new(bits));
                Complex::with_val(bits, f)
            }
            Expr::Const(c) => constant(*c, prec),
            Expr::Neg(e) => -e.eval(prec),
            Expr::Add(a, b) => a.eval(prec) + b.eval(prec),
            Expr::Sub(a, b) => a.eval(prec) - b.eval(prec),
            Expr::Mul(a, b) => a.eval(prec) * b.eval(prec),
            Expr::Div(a, b) => a.eval(prec) / b.eval(prec),
            Expr::Pow(a, k) => a.eval(prec).pow(*k),
            Expr::Call(f, a) => {
                let v = a.eval(prec);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        }
    }
}

fn constant(c: Constant, prec: Precision) -> Complex {
    let bits = prec.bits();
    match c {
        Constant::Pi => Complex::with_val(bits, prec.pi()),
        Constant::Phi => {
            let s5 = Float::with_val(bits, 5u32).sqrt();
            Complex::with_val(bits, (s5 + 1u32) / 2u32)
        }
        Constant::Psi => Complex::with_val(bits, (prec.pi() / 7u32).cos() * 2u32),
        Constant::Omega => {
            let half = Float::with_val(bits, -0.5f64);
            let im = Float::with_val(bits, 3u32).sqrt() / 2u32;
            Complex::with_val(bits, (half, im))
        }
        Constant::I => Complex::with_val(bits, (0, 1)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(s) => write!(f, "{s}"),
            Expr::Const(c) => write!(
                f,
                "{}",
                match c {
                    Constant::Pi => "pi",
                    Constant::Phi => "phi",
                    Constant::Psi => "psi",
                    Constant::Omega => "omega",
                    Constant::I => "i",
                }
            ),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Call(func, a) => write!(
                f,
                "{}({a})",
                match func {
                    Func::Sqrt => "sqrt",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                }
            ),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::TooDeep);
        }
        Ok(())
    }

    fn expect(&mut self, want: u8) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(ParseError::UnexpectedChar(self.pos, c as char)),
            None => Err(ParseError::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let k: i32 = text.parse().map_err(|_| ParseError::BadExponent(text.to_string()))?;
        if k.abs() > 64 {
            return Err(ParseError::BadExponent(text.to_string()));
        }
        Ok(Expr::Pow(Box::new(base), k))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let c = self.peek().ok_or(ParseError::UnexpectedEnd)?;
        match c {
            b'(' => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if text.matches('.').count() > 1 || text == "." {
                    return Err(ParseError::BadNumber(text.to_string()));
                }
                Ok(Expr::Number(text.to_string()))
            }
            b'a'..=b'z' => {
                let start = self.pos;
                while matches!(self.peek(), Some(b'a'..=b'z')) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                let func = match name {
                    "sqrt" => Some(Func::Sqrt),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                if let Some(func) = func {
                    self.expect(b'(')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                let k = match name {
                    "pi" => Constant::Pi,
                    "phi" => Constant::Phi,
                    "psi" => Constant::Psi,
                    "omega" => Constant::Omega,
                    "i" => Constant::I,
                    _ => return Err(ParseError::UnknownName(name.to_string())),
                };
                Ok(Expr::Const(k))
            }
            other => Err(ParseError::UnexpectedChar(self.pos, other as char)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::abs;

    fn close(text: &str, re: f64, im: f64) {
        let v = Expr::parse(text).unwrap().eval(Precision::DEFAULT);
        let want = Complex::with_val(256, (re, im));
        assert!(abs(&(v - want)) < 1e-14, "{text}");
    }

    #[test]
    fn arithmetic_and_precedence() {
        close("1 + 2*3", 7.0, 0.0);
        close("(1 + 2)*3", 9.0, 0.0);
        close("-2^2", -4.0, 0.0);
        close("2^-1", 0.5, 0.0);
        close("1/2/2", 0.25, 0.0);
        close("1 - 2 - 3", -4.0, 0.0);
    }

    #[test]
    fn named_constants() {
        close("phi", 1.618033988749895, 0.0);
        close("psi", 1.8019377358048383, 0.0);
        close("omega", -0.5, 0.8660254037844386);
        close("omega^3", 1.0, 0.0);
        close("i*i", -1.0, 0.0);
        close("2*sin(pi/7)/sqrt(7)", 0.32798527760568175, 0.0);
        close("cos(pi)", -1.0, 0.0);
        close("phi^2 - phi", 1.0, 0.0);
    }

    #[test]
    fn high_precision() {
        let v = Expr::parse("sqrt(2)^2").unwrap().eval(Precision::DEFAULT);
        assert!(abs(&(v - 2u32)) < crate::numeric::pow10(Precision::DEFAULT, -70));
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(Expr::parse(""), Err(ParseError::Empty));
        assert_eq!(Expr::parse("   "), Err(ParseError::Empty));
        assert_eq!(Expr::parse("1 +"), Err(ParseError::UnexpectedEnd));
        assert_eq!(Expr::parse("tau"), Err(ParseError::UnknownName("tau".into())));
        assert!(matches!(Expr::parse("1..2"), Err(ParseError::BadNumber(_))));
        assert!(matches!(Expr::parse("2^x"), Err(ParseError::BadExponent(_))));
        assert!(matches!(Expr::parse("2^999"), Err(ParseError::BadExponent(_))));
        assert!(matches!(Expr::parse("(1"), Err(ParseError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("1)"), Err(ParseError::UnexpectedChar(1, ')'))));
        assert!(matches!(Expr::parse("sqrt 2"), Err(ParseError::UnexpectedChar(_, '2'))));
    }

    #[test]
    fn resource_limits() {
        let deep = format!("{}1{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(Expr::parse(&deep), Err(ParseError::TooDeep));
        let negs = format!("{}1", "-".repeat(100));
        assert_eq!(Expr::parse(&negs), Err(ParseError::TooDeep));
        let long = "1+".repeat(3000) + "1";
        assert_eq!(Expr::parse(&long), Err(ParseError::TooLong));
    }

    #[test]
    fn display_round_trips() {
        for text in ["psi^2 - 1", "-phi/sqrt(2 + phi)", "omega^2/sqrt(3)", "2*sin(pi/7)/sqrt(7)*(1 - psi^2)"] {
            let e = Expr::parse(text).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
        }
    }
}
