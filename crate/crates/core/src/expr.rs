//! Arithmetic expressions over the chart coordinates `u1`, `u2`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'u1' | 'u2' | 'pi' | 'e'
//!        | func '(' expr ')' | '(' expr ')'
//! func  := 'sin' | 'cos' | 'tan' | 'exp' | 'log' | 'sqrt'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u1^2`
//! is `-(u1^2)`. Expressions are evaluated in forward mode, which gives the
//! exact gradient alongside the value.

use std::fmt;

use thiserror::Error;

use crate::geometry::{OneForm, Point2, ScalarField};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{msg} at column {col} in {src:?}")]
pub struct ParseError {
    pub msg: String,
    pub col: usize,
    pub src: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Value and gradient with respect to `(u1, u2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual {
    v: f64,
    d: [f64; 2],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 2] }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Self { v, d: [dv * self.d[0], dv * self.d[1]] }
    }
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    src: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut p = Parser { src, pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { src: src.trim().to_string(), root })
    }

    pub fn eval(&self, p: Point2) -> f64 {
        eval(&self.root, p).v
    }

    pub fn gradient(&self, p: Point2) -> [f64; 2] {
        eval(&self.root, p).d
    }

    pub fn into_scalar_field(self) -> ScalarField {
        let a = self.clone();
        let b = self.clone();
        ScalarField::new(self.src, move |p| a.eval(p)).with_gradient(move |p| b.gradient(p))
    }

    /// 1-form with components `(first, second)`.
    pub fn one_form(first: Expr, second: Expr) -> OneForm {
        let name = format!("({first}) du1 + ({second}) du2");
        OneForm::new(name, move |p| [first.eval(p), second.eval(p)])
    }
}

fn eval(n: &Node, p: Point2) -> Dual {
    match n {
        Node::Num(x) => Dual::constant(*x),
        Node::Var(0) => Dual { v: p.u1, d: [1.0, 0.0] },
        Node::Var(_) => Dual { v: p.u2, d: [0.0, 1.0] },
        Node::Neg(a) => {
            let a = eval(a, p);
            Dual { v: -a.v, d: [-a.d[0], -a.d[1]] }
        }
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, p), eval(b, p));
            let mut d = [0.0; 2];
            let v = match op {
                '+' => {
                    d = [a.d[0] + b.d[0], a.d[1] + b.d[1]];
                    a.v + b.v
                }
                '-' => {
                    d = [a.d[0] - b.d[0], a.d[1] - b.d[1]];
                    a.v - b.v
                }
                '*' => {
                    for i in 0..2 {
                        d[i] = a.d[i] * b.v + a.v * b.d[i];
                    }
                    a.v * b.v
                }
                '/' => {
                    for i in 0..2 {
                        d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
                    }
                    a.v / b.v
                }
                _ => {
                    let v = a.v.powf(b.v);
                    for i in 0..2 {
                        let from_base = if a.d[i] != 0.0 { b.v * a.v.powf(b.v - 1.0) * a.d[i] } else { 0.0 };
                        let from_exp = if b.d[i] != 0.0 { v * a.v.ln() * b.d[i] } else { 0.0 };
                        d[i] = from_base + from_exp;
                    }
                    v
                }
            };
            Dual { v, d }
        }
        Node::Call(f, a) => {
            let a = eval(a, p);
            match f {
                Func::Sin => a.chain(a.v.sin(), a.v.cos()),
                Func::Cos => a.chain(a.v.cos(), -a.v.sin()),
                Func::Tan => {
                    let c = a.v.cos();
                    a.chain(a.v.tan(), 1.0 / (c * c))
                }
                Func::Exp => a.chain(a.v.exp(), a.v.exp()),
                Func::Log => a.chain(a.v.ln(), 1.0 / a.v),
                Func::Sqrt => a.chain(a.v.sqrt(), 0.5 / a.v.sqrt()),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError { msg: msg.into(), col: self.pos + 1, src: self.src.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Bin('+', Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Bin('-', Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Bin('*', Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Bin('/', Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek() else { return Err(self.error("unexpected end of input")) };
        if c == '(' {
            self.pos += 1;
            let inner = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == '.' {
            let rest = &self.src[self.pos..];
            let mut end = 0;
            let bytes = rest.as_bytes();
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let lit = &rest[..end];
            let v = lit.parse::<f64>().map_err(|_| self.error(&format!("bad number {lit:?}")))?;
            self.pos += end;
            return Ok(Node::Num(v));
        }
        if c.is_ascii_alphabetic() {
            let rest = &self.src[self.pos..];
            let end = rest.find(|ch: char| !ch.is_ascii_alphanumeric() && ch != '_').unwrap_or(rest.len());
            let ident = &rest[..end];
            self.pos += end;
            let func = match ident {
                "u1" => return Ok(Node::Var(0)),
                "u2" => return Ok(Node::Var(1)),
                "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                "e" => return Ok(Node::Num(std::f64::consts::E)),
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                "tan" => Func::Tan,
                "exp" => Func::Exp,
                "log" | "ln" => Func::Log,
                "sqrt" => Func::Sqrt,
                _ => {
                    self.pos = start;
                    return Err(self.error(&format!("unknown identifier {ident:?}")));
                }
            };
            if !self.eat('(') {
                return Err(self.error("expected '(' after function name"));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(Node::Call(func, Box::new(arg)));
        }
        Err(self.error(&format!("unexpected character {c:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(src: &str, u1: f64, u2: f64) -> f64 {
        Expr::parse(src).unwrap().eval(Point2::new(u1, u2))
    }

    #[test]
    fn precedence() {
        assert_eq!(at("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(at("-u1^2", 3.0, 0.0), -9.0);
        assert_eq!(at("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(at("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(at("u1 - u2 - 1", 5.0, 2.0), 2.0);
        assert_eq!(at("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(at("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
        assert!((at("log(u2) + exp(0) - sqrt(4) + cos(pi)", 0.0, e_val()) - (-1.0)).abs() < 1e-15);
    }

    fn e_val() -> f64 {
        std::f64::consts::E
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "foo(1)", "sin 1", "(1", "1 2", "u3", "#"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
        let e = Expr::parse("1 + x").unwrap_err();
        assert_eq!(e.col, 5);
    }

    #[test]
    fn named_potentials() {
        let f = Expr::parse("-0.5*(u1^2 + u2^2)").unwrap();
        assert_eq!(f.gradient(Point2::new(0.3, -0.4)), [-0.3, 0.4]);
        let g = Expr::parse("log(u2)").unwrap();
        assert_eq!(g.gradient(Point2::new(1.0, 4.0)), [0.0, 0.25]);
    }

    proptest! {
        #[test]
        fn forward_mode_matches_differences(u1 in -2.0f64..2.0, u2 in 0.5f64..3.0) {
            let e = Expr::parse("sin(u1*u2) + u2^u1 / (1 + u1^2) - exp(-u2)*log(u2)").unwrap();
            let p = Point2::new(u1, u2);
            let h = 1e-6;
            let g = e.gradient(p);
            let d1 = (e.eval(p.shifted(0, h)) - e.eval(p.shifted(0, -h))) / (2.0 * h);
            let d2 = (e.eval(p.shifted(1, h)) - e.eval(p.shifted(1, -h))) / (2.0 * h);
            prop_assert!((g[0] - d1).abs() < 1e-6);
            prop_assert!((g[1] - d2).abs() < 1e-6);
        }
    }
}
