//! A small closed-form expression language: rational literals, named
//! variables, arithmetic, integer powers, and the functions exp, ln, sin,
//! cos, sqrt.
//!
//! Submanifold parametrizations are written in this language, both in code
//! and in config files. Evaluation is forward-mode: a [`DualValue`] carries
//! a value together with its partials, so tangent vectors come out exact to
//! floating precision with no finite differencing. The printer is canonical
//! and stable: printing a parsed expression and parsing it back returns the
//! same tree.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::{Polynomial, Rational};

/// A parse failure, with 1-based line and column of the offending token.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

/// An evaluation failure.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// The built-in single-argument functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// A scalar expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// A value with its first partials, one per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct DualValue {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl DualValue {
    /// A constant: zero partials.
    pub fn constant(value: f64, parameters: usize) -> DualValue {
        DualValue {
            value,
            partials: vec![0.0; parameters],
        }
    }

    /// The i-th parameter seeded with unit derivative.
    pub fn parameter(value: f64, i: usize, parameters: usize) -> DualValue {
        let mut partials = vec![0.0; parameters];
        partials[i] = 1.0;
        DualValue { value, partials }
    }

    fn binary(a: &DualValue, b: &DualValue, v: f64, da: f64, db: f64) -> DualValue {
        debug_assert_eq!(a.partials.len(), b.partials.len());
        DualValue {
            value: v,
            partials: a
                .partials
                .iter()
                .zip(&b.partials)
                .map(|(&pa, &pb)| da * pa + db * pb)
                .collect(),
        }
    }

    fn chain(a: &DualValue, v: f64, d: f64) -> DualValue {
        DualValue {
            value: v,
            partials: a.partials.iter().map(|&p| d * p).collect(),
        }
    }
}

impl Expr {
    /// A literal.
    pub fn num(r: Rational) -> Expr {
        Expr::Num(r)
    }

    /// An integer literal.
    pub fn int(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(BigInt::from(n)))
    }

    /// A named variable.
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Integer power of this expression.
    pub fn pow(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    /// Applies a built-in function.
    pub fn call(self, f: Func) -> Expr {
        Expr::Call(f, Box::new(self))
    }

    /// e^(self).
    pub fn exp(self) -> Expr {
        self.call(Func::Exp)
    }

    /// Square root of self.
    pub fn sqrt(self) -> Expr {
        self.call(Func::Sqrt)
    }

    /// Parses an expression. Errors carry the 1-based line and column.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expression()?;
        let trailing = parser.peek();
        if trailing.kind != TokenKind::Eof {
            return Err(parser.error_at(parser.pos, format!("unexpected {}", trailing.kind)));
        }
        Ok(expr)
    }

    /// The set of variable names appearing in the expression.
    pub fn variables(&self) -> std::collections::BTreeSet<&str> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut std::collections::BTreeSet<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) => {
                out.insert(name.as_str());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_variables(out),
        }
    }

    /// Replaces variables by expressions; unmapped variables stay.
    pub fn substitute(&self, map: &[(&str, Expr)]) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(name) => map
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| self.clone()),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.substitute(map)),
                Box::new(b.substitute(map)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.substitute(map)),
                Box::new(b.substitute(map)),
            ),
            Expr::Mul(a, b) => Expr::Mul(
                Box::new(a.substitute(map)),
                Box::new(b.substitute(map)),
            ),
            Expr::Div(a, b) => Expr::Div(
                Box::new(a.substitute(map)),
                Box::new(b.substitute(map)),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(map))),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.substitute(map)), *n),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(map))),
        }
    }

    /// Converts an exact polynomial into an expression over named variables.
    pub fn from_polynomial(p: &Polynomial, names: &[&str]) -> Expr {
        assert_eq!(names.len(), p.variable_count());
        let mut acc: Option<Expr> = None;
        for (m, c) in p.terms() {
            let mut factors: Vec<Expr> = Vec::new();
            if !c.is_one() || m.exponents().iter().all(|&e| e == 0) {
                factors.push(Expr::Num(c.clone()));
            }
            for (j, &e) in m.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(Expr::var(names[j])),
                    _ => factors.push(Expr::var(names[j]).pow(e as i32)),
                }
            }
            let term = factors
                .into_iter()
                .reduce(|a, b| Expr::Mul(Box::new(a), Box::new(b)))
                .expect("nonzero term has at least one factor");
            acc = Some(match acc {
                None => term,
                Some(prev) => Expr::Add(Box::new(prev), Box::new(term)),
            });
        }
        acc.unwrap_or_else(|| Expr::int(0))
    }

    /// Evaluates to a plain value.
    pub fn eval(&self, env: &[(&str, f64)]) -> Result<f64, EvalError> {
        let duals: Vec<(&str, DualValue)> = env
            .iter()
            .map(|&(n, v)| (n, DualValue::constant(v, 0)))
            .collect();
        Ok(self.eval_dual(&duals)?.value)
    }

    /// Evaluates with forward-mode first derivatives.
    pub fn eval_dual(&self, env: &[(&str, DualValue)]) -> Result<DualValue, EvalError> {
        let parameters = env.first().map_or(0, |(_, d)| d.partials.len());
        match self {
            Expr::Num(r) => Ok(DualValue::constant(
                r.to_f64().expect("literal fits in f64"),
                parameters,
            )),
            Expr::Var(name) => env
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
            Expr::Add(a, b) => {
                let (a, b) = (a.eval_dual(env)?, b.eval_dual(env)?);
                Ok(DualValue::binary(&a, &b, a.value + b.value, 1.0, 1.0))
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.eval_dual(env)?, b.eval_dual(env)?);
                Ok(DualValue::binary(&a, &b, a.value - b.value, 1.0, -1.0))
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.eval_dual(env)?, b.eval_dual(env)?);
                Ok(DualValue::binary(
                    &a,
                    &b,
                    a.value * b.value,
                    b.value,
                    a.value,
                ))
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.eval_dual(env)?, b.eval_dual(env)?);
                if b.value == 0.0 {
                    return Err(EvalError::Domain("division by zero".to_string()));
                }
                Ok(DualValue::binary(
                    &a,
                    &b,
                    a.value / b.value,
                    1.0 / b.value,
                    -a.value / (b.value * b.value),
                ))
            }
            Expr::Neg(a) => {
                let a = a.eval_dual(env)?;
                Ok(DualValue::chain(&a, -a.value, -1.0))
            }
            Expr::Pow(a, n) => {
                let a = a.eval_dual(env)?;
                if *n < 0 && a.value == 0.0 {
                    return Err(EvalError::Domain(
                        "zero raised to a negative power".to_string(),
                    ));
                }
                let v = a.value.powi(*n);
                let d = if *n == 0 {
                    0.0
                } else {
                    f64::from(*n) * a.value.powi(*n - 1)
                };
                Ok(DualValue::chain(&a, v, d))
            }
            Expr::Call(f, a) => {
                let a = a.eval_dual(env)?;
                let x = a.value;
                let (v, d) = match f {
                    Func::Exp => (x.exp(), x.exp()),
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(EvalError::Domain(format!("ln of {x}")));
                        }
                        (x.ln(), 1.0 / x)
                    }
                    Func::Sin => (x.sin(), x.cos()),
                    Func::Cos => (x.cos(), -x.sin()),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain(format!("sqrt of {x}")));
                        }
                        if x == 0.0 {
                            if a.partials.iter().any(|&p| p != 0.0) {
                                return Err(EvalError::Domain(
                                    "sqrt has no finite derivative at zero".to_string(),
                                ));
                            }
                            (0.0, 0.0)
                        } else {
                            (x.sqrt(), 0.5 / x.sqrt())
                        }
                    }
                };
                Ok(DualValue::chain(&a, v, d))
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Num(r) if r.is_negative() => 3,
            Expr::Pow(..) => 4,
            Expr::Num(..) | Expr::Var(..) | Expr::Call(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, context: u8) -> fmt::Result {
        let mine = self.precedence();
        if mine < context {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(r) => write!(f, "{}", format_rational(r)),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)
            }
            Expr::Pow(a, n) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Formats a rational so the printed text parses back to the same literal:
/// integers plainly, finite decimals as decimals, everything else as a
/// fraction (which parses back to a division of literals).
fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    // A finite decimal exists iff the denominator is 2^a 5^b.
    let mut d = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let k = twos.max(fives);
    let scale = two.pow(k - twos) * five.pow(k - fives);
    let scaled = (r.numer() * &scale).abs();
    let digits = scaled.to_string();
    let digits = if digits.len() <= k as usize {
        format!("{}{}", "0".repeat(k as usize + 1 - digits.len()), digits)
    } else {
        digits
    };
    let point = digits.len() - k as usize;
    let mut out = String::new();
    if r.is_negative() {
        out.push('-');
    }
    out.push_str(&digits[..point]);
    out.push('.');
    let frac = digits[point..].trim_end_matches('0');
    out.push_str(if frac.is_empty() { "0" } else { frac });
    out
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(_) => write!(f, "number"),
            TokenKind::Ident(name) => write!(f, "`{name}`"),
            TokenKind::Plus => write!(f, "`+`"),
            TokenKind::Minus => write!(f, "`-`"),
            TokenKind::Star => write!(f, "`*`"),
            TokenKind::Slash => write!(f, "`/`"),
            TokenKind::Caret => write!(f, "`^`"),
            TokenKind::LParen => write!(f, "`(`"),
            TokenKind::RParen => write!(f, "`)`"),
            TokenKind::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            advance(&mut chars);
            continue;
        }
        let kind = match c {
            '+' => {
                advance(&mut chars);
                TokenKind::Plus
            }
            '-' => {
                advance(&mut chars);
                TokenKind::Minus
            }
            '*' => {
                advance(&mut chars);
                TokenKind::Star
            }
            '/' => {
                advance(&mut chars);
                TokenKind::Slash
            }
            '^' => {
                advance(&mut chars);
                TokenKind::Caret
            }
            '(' => {
                advance(&mut chars);
                TokenKind::LParen
            }
            ')' => {
                advance(&mut chars);
                TokenKind::RParen
            }
            c if c.is_ascii_digit() => {
                let mut integer = String::new();
                let mut fraction = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        integer.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                if chars.peek() == Some(&'.') {
                    advance(&mut chars);
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() {
                            fraction.push(advance(&mut chars));
                        } else {
                            break;
                        }
                    }
                    if fraction.is_empty() {
                        return Err(ParseError {
                            line: tline,
                            col: tcol,
                            message: "expected digits after decimal point".to_string(),
                        });
                    }
                }
                let digits = format!("{integer}{fraction}");
                let numer: BigInt = digits.parse().expect("lexed digits");
                let denom = BigInt::from(10).pow(fraction.len() as u32);
                TokenKind::Num(Rational::new(numer, denom))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                TokenKind::Ident(name)
            }
            other => {
                return Err(ParseError {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                });
            }
        };
        tokens.push(Token {
            kind,
            line: tline,
            col: tcol,
        });
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        col,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        self.pos += 1;
        t
    }

    fn error_at(&self, pos: usize, message: String) -> ParseError {
        let t = &self.tokens[pos.min(self.tokens.len() - 1)];
        ParseError {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                TokenKind::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                TokenKind::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().kind {
                TokenKind::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                TokenKind::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().kind != TokenKind::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if self.peek().kind == TokenKind::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.pos;
        match self.bump().kind {
            TokenKind::Num(r) if r.is_integer() => {
                let n: i32 = r
                    .to_integer()
                    .to_i32()
                    .ok_or_else(|| self.error_at(at, "exponent too large".to_string()))?;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            other => Err(self.error_at(at, format!("expected integer exponent, found {other}"))),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.pos;
        match self.bump().kind {
            TokenKind::Num(r) => Ok(Expr::Num(r)),
            TokenKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if self.peek().kind != TokenKind::LParen {
                        return Err(self.error_at(
                            at,
                            format!("`{name}` is a function and needs an argument list"),
                        ));
                    }
                    self.bump();
                    let arg = self.expression()?;
                    let close = self.pos;
                    match self.bump().kind {
                        TokenKind::RParen => Ok(Expr::Call(func, Box::new(arg))),
                        other => {
                            Err(self.error_at(close, format!("expected `)`, found {other}")))
                        }
                    }
                } else {
                    Ok(Expr::Var(name))
                }
            }
            TokenKind::LParen => {
                let inner = self.expression()?;
                let close = self.pos;
                match self.bump().kind {
                    TokenKind::RParen => Ok(inner),
                    other => Err(self.error_at(close, format!("expected `)`, found {other}"))),
                }
            }
            other => Err(self.error_at(at, format!("expected an expression, found {other}"))),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;

    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;

    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;

    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;

    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn dual(value: f64, partials: &[f64]) -> DualValue {
        DualValue {
            value,
            partials: partials.to_vec(),
        }
    }

    #[test]
    fn parses_the_degree_three_component() {
        let e = Expr::parse("x*exp(y) + x^2/2").unwrap();
        let expected = Expr::var("x") * Expr::var("y").exp()
            + Expr::var("x").pow(2) / Expr::int(2);
        assert_eq!(e, expected);
    }

    #[test]
    fn incomplete_input_errors_at_the_end() {
        let err = Expr::parse("x + ").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
        let err = Expr::parse("exp(x").unwrap_err();
        assert!(err.message.contains("expected `)`"));
        let err = Expr::parse("x ^ y").unwrap_err();
        assert!(err.message.contains("integer exponent"));
        let err = Expr::parse("x $ y").unwrap_err();
        assert!(err.message.contains("unexpected character"));
        let err = Expr::parse("exp + 1").unwrap_err();
        assert!(err.message.contains("is a function"));
    }

    #[test]
    fn parens_do_not_change_the_tree() {
        assert_eq!(
            Expr::parse("(y^2)/2").unwrap(),
            Expr::parse("y^2/2").unwrap()
        );
        assert_eq!(
            Expr::parse("-x^2").unwrap(),
            Expr::Neg(Box::new(Expr::var("x").pow(2)))
        );
        assert_eq!(
            Expr::parse("2*-3").unwrap(),
            Expr::int(2) * (-Expr::int(3))
        );
        assert_eq!(Expr::parse("x^-2").unwrap(), Expr::var("x").pow(-2));
    }

    #[test]
    fn evaluation_with_partials() {
        let e = Expr::parse("x^2").unwrap();
        let out = e.eval_dual(&[("x", dual(3.0, &[1.0]))]).unwrap();
        assert_eq!(out, dual(9.0, &[6.0]));

        let e = Expr::parse("exp(y)").unwrap();
        let out = e.eval_dual(&[("y", dual(0.0, &[1.0]))]).unwrap();
        assert_eq!(out, dual(1.0, &[1.0]));

        let e = Expr::parse("x*exp(y) + x^2/2").unwrap();
        let out = e
            .eval_dual(&[
                ("x", dual(1.0, &[1.0, 0.0])),
                ("y", dual(0.0, &[0.0, 1.0])),
            ])
            .unwrap();
        assert_eq!(out, dual(1.5, &[2.0, 1.0]));
    }

    #[test]
    fn domain_errors() {
        let env = [("x", dual(-1.0, &[1.0]))];
        assert!(matches!(
            Expr::parse("sqrt(x)").unwrap().eval_dual(&env),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("ln(x + 1)").unwrap().eval_dual(&env),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("1/(x + 1)").unwrap().eval_dual(&env),
            Err(EvalError::Domain(_))
        ));
        assert_eq!(
            Expr::parse("y").unwrap().eval_dual(&env),
            Err(EvalError::UnboundVariable("y".to_string()))
        );
    }

    #[test]
    fn printer_is_canonical_and_stable() {
        for text in [
            "x*exp(y) + x^2/2",
            "-x^2 + (x + 1)*(x - 1)",
            "x/(y*z)",
            "x - (y - z)",
            "(x + 1)^3",
            "0.5*x + 2.25",
            "sqrt(x^2 + 1)",
            "-(x + y)",
            "1/12*x^2",
        ] {
            let parsed = Expr::parse(text).unwrap();
            let printed = parsed.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            assert_eq!(parsed, reparsed, "round trip changed `{text}` → `{printed}`");
            assert_eq!(printed, reparsed.to_string());
        }
        assert_eq!(Expr::parse("(y^2)/2").unwrap().to_string(), "y^2/2");
        assert_eq!(Expr::parse("0.50").unwrap().to_string(), "0.5");
    }

    #[test]
    fn finite_differences_agree() {
        let exprs = [
            "x*exp(y) + x^2/2",
            "sin(x)*cos(y) + sqrt(x^2 + y^2 + 1)",
            "ln(x^2 + 1) - y/(x^2 + 2)",
        ];
        let points = [(0.7, -0.3), (1.2, 0.9), (-0.4, 0.25)];
        for text in exprs {
            let e = Expr::parse(text).unwrap();
            for &(x, y) in &points {
                let out = e
                    .eval_dual(&[
                        ("x", DualValue::parameter(x, 0, 2)),
                        ("y", DualValue::parameter(y, 1, 2)),
                    ])
                    .unwrap();
                let h = 1e-6;
                let fd_x = (e.eval(&[("x", x + h), ("y", y)]).unwrap()
                    - e.eval(&[("x", x - h), ("y", y)]).unwrap())
                    / (2.0 * h);
                let fd_y = (e.eval(&[("x", x), ("y", y + h)]).unwrap()
                    - e.eval(&[("x", x), ("y", y - h)]).unwrap())
                    / (2.0 * h);
                assert!((out.partials[0] - fd_x).abs() <= 1e-6 * fd_x.abs().max(1.0));
                assert!((out.partials[1] - fd_y).abs() <= 1e-6 * fd_y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn polynomial_conversion_and_substitution() {
        let w = [1, 1];
        let p = &(&Polynomial::variable(&w, 0) * &Polynomial::variable(&w, 1)).scale(&rat(1, 2))
            - &Polynomial::variable(&w, 0);
        let e = Expr::from_polynomial(&p, &["a", "b"]);
        let v = e.eval(&[("a", 3.0), ("b", 4.0)]).unwrap();
        assert_eq!(v, p.evaluate(&[3.0, 4.0]));

        let composed = e.substitute(&[("a", Expr::var("t").pow(2))]);
        let v2 = composed.eval(&[("t", 2.0), ("b", 1.0)]).unwrap();
        assert_eq!(v2, p.evaluate(&[4.0, 1.0]));
    }
}
