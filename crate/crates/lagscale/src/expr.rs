//! Arithmetic expression trees over named variables.
//!
//! Scenario files describe Lagrangians, actions and charts as expression
//! strings (`"(2 - atan(b/a)) * (adot^2 + bdot^2)"`). Parsed trees evaluate
//! on any [`Scalar`] carrier, so one definition serves plain evaluation,
//! gradients, Hessians and nested tangents alike.
//!
//! Primitives: `+ - * / ^ pow exp log sqrt sin cos tan atan atan2` (with
//! `ln`, `arctan`, `arctan2` accepted as aliases). `^` and `pow` with a
//! literal integer exponent lower to repeated multiplication, which keeps
//! even powers of negative quantities (velocities!) out of the
//! `exp(b·log a)` domain trap.

use crate::autodiff::{Scalar, Smooth};
use crate::error::{Error, Result};
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Input slot index (resolved from a variable name at parse time).
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Integer power, valid for any base.
    PowI(Box<Expr>, i32),
    /// General power `a^b = exp(b·log a)`, positive base only.
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Tan(Box<Expr>),
    Atan(Box<Expr>),
    Atan2(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval_scalar<T: Scalar>(&self, inputs: &[T]) -> T {
        match self {
            Expr::Const(c) => T::from_f64(*c),
            Expr::Var(i) => inputs[*i],
            Expr::Add(a, b) => a.eval_scalar(inputs) + b.eval_scalar(inputs),
            Expr::Sub(a, b) => a.eval_scalar(inputs) - b.eval_scalar(inputs),
            Expr::Mul(a, b) => a.eval_scalar(inputs) * b.eval_scalar(inputs),
            Expr::Div(a, b) => a.eval_scalar(inputs) / b.eval_scalar(inputs),
            Expr::Neg(a) => -a.eval_scalar(inputs),
            Expr::PowI(a, k) => a.eval_scalar(inputs).powi(*k),
            Expr::Pow(a, b) => {
                let base = a.eval_scalar(inputs);
                let exponent = b.eval_scalar(inputs);
                (exponent * base.ln()).exp()
            }
            Expr::Exp(a) => a.eval_scalar(inputs).exp(),
            Expr::Log(a) => a.eval_scalar(inputs).ln(),
            Expr::Sqrt(a) => a.eval_scalar(inputs).sqrt(),
            Expr::Sin(a) => a.eval_scalar(inputs).sin(),
            Expr::Cos(a) => a.eval_scalar(inputs).cos(),
            Expr::Tan(a) => a.eval_scalar(inputs).tan(),
            Expr::Atan(a) => a.eval_scalar(inputs).atan(),
            Expr::Atan2(a, b) => a.eval_scalar(inputs).atan2(b.eval_scalar(inputs)),
        }
    }

    /// Largest variable slot referenced, plus one.
    pub fn min_arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Atan2(a, b) => a.min_arity().max(b.min_arity()),
            Expr::Neg(a)
            | Expr::PowI(a, _)
            | Expr::Exp(a)
            | Expr::Log(a)
            | Expr::Sqrt(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Tan(a)
            | Expr::Atan(a) => a.min_arity(),
        }
    }

    /// Renders the tree back to a parseable string (variable names taken
    /// from `vars` by slot index).
    pub fn render(&self, vars: &[String]) -> String {
        self.render_prec(vars, 0)
    }

    fn render_prec(&self, vars: &[String], parent: u8) -> String {
        let (text, prec) = match self {
            Expr::Const(c) => (format!("{c}"), 4),
            Expr::Var(i) => (vars[*i].clone(), 4),
            Expr::Add(a, b) => (
                format!("{} + {}", a.render_prec(vars, 1), b.render_prec(vars, 1)),
                1,
            ),
            Expr::Sub(a, b) => (
                format!("{} - {}", a.render_prec(vars, 1), b.render_prec(vars, 2)),
                1,
            ),
            Expr::Mul(a, b) => (
                format!("{}*{}", a.render_prec(vars, 2), b.render_prec(vars, 2)),
                2,
            ),
            Expr::Div(a, b) => (
                format!("{}/{}", a.render_prec(vars, 2), b.render_prec(vars, 3)),
                2,
            ),
            Expr::Neg(a) => (format!("-{}", a.render_prec(vars, 3)), 2),
            Expr::PowI(a, k) => (format!("{}^{}", a.render_prec(vars, 4), k), 3),
            Expr::Pow(a, b) => (
                format!(
                    "pow({}, {})",
                    a.render_prec(vars, 0),
                    b.render_prec(vars, 0)
                ),
                4,
            ),
            Expr::Exp(a) => (format!("exp({})", a.render_prec(vars, 0)), 4),
            Expr::Log(a) => (format!("log({})", a.render_prec(vars, 0)), 4),
            Expr::Sqrt(a) => (format!("sqrt({})", a.render_prec(vars, 0)), 4),
            Expr::Sin(a) => (format!("sin({})", a.render_prec(vars, 0)), 4),
            Expr::Cos(a) => (format!("cos({})", a.render_prec(vars, 0)), 4),
            Expr::Tan(a) => (format!("tan({})", a.render_prec(vars, 0)), 4),
            Expr::Atan(a) => (format!("atan({})", a.render_prec(vars, 0)), 4),
            Expr::Atan2(a, b) => (
                format!(
                    "atan2({}, {})",
                    a.render_prec(vars, 0),
                    b.render_prec(vars, 0)
                ),
                4,
            ),
        };
        if prec < parent {
            format!("({text})")
        } else {
            text
        }
    }
}

/// A bundle of expression trees acting as one smooth map: component `k` of
/// the output is `exprs[k]`.
#[derive(Debug, Clone)]
pub struct ExprMap {
    pub exprs: Arc<Vec<Expr>>,
}

impl ExprMap {
    pub fn new(exprs: Vec<Expr>) -> Self {
        Self {
            exprs: Arc::new(exprs),
        }
    }
}

impl Smooth for ExprMap {
    fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
        for (slot, e) in out.iter_mut().zip(self.exprs.iter()) {
            *slot = e.eval_scalar(inputs);
        }
    }
}

impl Smooth for Expr {
    fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
        out[0] = self.eval_scalar(inputs);
    }
}

/// Parses `source` into an expression over the named variables.
pub fn parse(source: &str, vars: &[&str]) -> Result<Expr> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        vars,
    };
    let e = p.expression()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::ExprParse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // Right-associative; integer literals lower to PowI.
            let exponent = self.unary()?;
            return Ok(make_pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expression()?;
                if !self.eat(b')') {
                    return Err(self.error("expected closing parenthesis"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.error("expected a number, variable, function, or parenthesis")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .src
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| self.error("invalid numeric literal"))
    }

    fn identifier(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            return self.function(name);
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(slot) => Ok(Expr::Var(slot)),
            None => {
                self.pos = start;
                Err(self.error(&format!("unknown variable `{name}`")))
            }
        }
    }

    fn function(&mut self, name: &str) -> Result<Expr> {
        let unary = |p: &mut Self, wrap: fn(Box<Expr>) -> Expr| -> Result<Expr> {
            let a = p.expression()?;
            if !p.eat(b')') {
                return Err(p.error("expected closing parenthesis"));
            }
            Ok(wrap(Box::new(a)))
        };
        match name {
            "exp" => unary(self, Expr::Exp),
            "log" | "ln" => unary(self, Expr::Log),
            "sqrt" => unary(self, Expr::Sqrt),
            "sin" => unary(self, Expr::Sin),
            "cos" => unary(self, Expr::Cos),
            "tan" => unary(self, Expr::Tan),
            "atan" | "arctan" => unary(self, Expr::Atan),
            "atan2" | "arctan2" => {
                let a = self.expression()?;
                if !self.eat(b',') {
                    return Err(self.error("atan2 takes two arguments"));
                }
                let b = self.expression()?;
                if !self.eat(b')') {
                    return Err(self.error("expected closing parenthesis"));
                }
                Ok(Expr::Atan2(Box::new(a), Box::new(b)))
            }
            "pow" => {
                let a = self.expression()?;
                if !self.eat(b',') {
                    return Err(self.error("pow takes two arguments"));
                }
                let b = self.expression()?;
                if !self.eat(b')') {
                    return Err(self.error("expected closing parenthesis"));
                }
                Ok(make_pow(a, b))
            }
            _ => Err(self.error(&format!("unknown function `{name}`"))),
        }
    }
}

fn make_pow(base: Expr, exponent: Expr) -> Expr {
    if let Expr::Const(c) = exponent {
        let rounded = libm::round(c);
        if (c - rounded).abs() < 1e-12 && rounded.abs() <= i32::MAX as f64 {
            return Expr::PowI(Box::new(base), rounded as i32);
        }
    }
    if let Expr::Neg(inner) = &exponent {
        if let Expr::Const(c) = **inner {
            let rounded = libm::round(c);
            if (c - rounded).abs() < 1e-12 && rounded.abs() <= i32::MAX as f64 {
                return Expr::PowI(Box::new(base), -(rounded as i32));
            }
        }
    }
    Expr::Pow(Box::new(base), Box::new(exponent))
}

/// Convenience constructors used by the builtin scenarios and tests.
impl Expr {
    pub fn var(slot: usize) -> Expr {
        Expr::Var(slot)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }
}

impl core::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ScalarField;

    #[test]
    fn parses_and_evaluates_arithmetic() {
        let e = parse("(2 - atan(b/a)) * (adot^2 + bdot^2)", &["a", "b", "adot", "bdot"]).unwrap();
        let v = e.eval_scalar(&[1.0, 1.0, 0.1, -0.2]);
        let expected = (2.0 - libm::atan(1.0)) * (0.01 + 0.04);
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn integer_powers_keep_negative_bases_valid() {
        let e = parse("x^2", &["x"]).unwrap();
        assert!(matches!(e, Expr::PowI(_, 2)));
        assert_eq!(e.eval_scalar(&[-3.0]), 9.0);
        let e = parse("pow(x, 3)", &["x"]).unwrap();
        assert_eq!(e.eval_scalar(&[-2.0]), -8.0);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse("-a^2 + 3*a", &["a"]).unwrap();
        // -(a^2) + 3a at a = 2: -4 + 6 = 2
        assert_eq!(e.eval_scalar(&[2.0]), 2.0);
    }

    #[test]
    fn unknown_variable_is_an_error_with_position() {
        let err = parse("a + c", &["a", "b"]).unwrap_err();
        match err {
            Error::ExprParse { position, message } => {
                assert_eq!(position, 4);
                assert!(message.contains('c'));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn render_round_trips_through_the_parser() {
        let vars = ["a", "b", "adot", "bdot"];
        let source = "(2 - atan(b/a))*(adot^2 + bdot^2) - sqrt(a*b)/exp(-b) + atan2(b, a)";
        let e = parse(source, &vars).unwrap();
        let rendered = e.render(&vars.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        let e2 = parse(&rendered, &vars).unwrap();
        for point in [[1.0, 1.0, 0.1, -0.2], [0.3, 2.0, -1.0, 0.5]] {
            let a = e.eval_scalar(&point);
            let b = e2.eval_scalar(&point);
            assert!((a - b).abs() < 1e-15, "{a} vs {b} for {rendered}");
        }
    }

    #[test]
    fn expressions_differentiate_through_scalar_field() {
        let e = parse("exp(x)*sin(z) + x^3", &["x", "z"]).unwrap();
        let f = ScalarField::new(2, e);
        let g = f.gradient(&[0.5, 1.2]).unwrap();
        assert!((g[0] - (libm::exp(0.5) * libm::sin(1.2) + 3.0 * 0.25)).abs() < 1e-14);
        assert!((g[1] - libm::exp(0.5) * libm::cos(1.2)).abs() < 1e-14);
        let h = f.hessian(&[0.5, 1.2]).unwrap();
        assert!((h[(0, 0)] - (libm::exp(0.5) * libm::sin(1.2) + 6.0 * 0.5)).abs() < 1e-13);
        assert!((h[(1, 1)] - (-libm::exp(0.5) * libm::sin(1.2))).abs() < 1e-13);
    }

    #[test]
    fn scientific_notation_literals() {
        let e = parse("1.5e-3 + x", &["x"]).unwrap();
        assert!((e.eval_scalar(&[0.0]) - 1.5e-3).abs() < 1e-18);
    }
}
