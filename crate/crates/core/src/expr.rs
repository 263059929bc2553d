//! Coefficient expressions for vector fields.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | atom
//! atom  := number | ident | func '(' args ')' | '(' expr ')'
//! func  := sin | cos | exp | pow
//! ```
//!
//! Identifiers are resolved against a caller-supplied variable table, so the
//! same parser serves base coordinates (`x1..xn`) and fiber dynamics
//! (`x1..xn`, `y1..yn`, `u1..um`).

use std::fmt;

use thiserror::Error;

/// A parse failure, carrying the 1-based column inside the expression text.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    // Only produced by differentiation of `pow` with a non-constant exponent.
    Ln(Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str, vars: &[&str]) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            vars,
        };
        p.skip_ws();
        if p.pos == p.src.len() {
            return Err(p.error("empty expression"));
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error(format!("unexpected '{}'", p.src[p.pos] as char)));
        }
        Ok(e)
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Sin(a) => a.eval(vars).sin(),
            Expr::Cos(a) => a.eval(vars).cos(),
            Expr::Exp(a) => a.eval(vars).exp(),
            Expr::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Expr::Ln(a) => a.eval(vars).ln(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Ln(a) => a.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn is_const(&self) -> bool {
        self.max_var().is_none()
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        let d = match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Sin(a) => mul(cos((**a).clone()), a.derivative(var)),
            Cos(a) => neg(mul(sin((**a).clone()), a.derivative(var))),
            Exp(a) => mul(self.clone(), a.derivative(var)),
            Ln(a) => div(a.derivative(var), (**a).clone()),
            Pow(a, b) => {
                if b.is_const() {
                    let k = b.eval(&[]);
                    mul(
                        mul(Const(k), pow((**a).clone(), Const(k - 1.0))),
                        a.derivative(var),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a' / a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.derivative(var), Ln(a.clone())),
                            div(mul((**b).clone(), a.derivative(var)), (**a).clone()),
                        ),
                    )
                }
            }
        };
        d.simplify()
    }

    /// Constant folding plus the usual additive/multiplicative identities.
    pub fn simplify(self) -> Expr {
        use Expr::*;
        match self {
            Const(_) | Var(_) => self,
            Neg(a) => neg(a.simplify()),
            Add(a, b) => add(a.simplify(), b.simplify()),
            Sub(a, b) => sub(a.simplify(), b.simplify()),
            Mul(a, b) => mul(a.simplify(), b.simplify()),
            Div(a, b) => div(a.simplify(), b.simplify()),
            Sin(a) => sin(a.simplify()),
            Cos(a) => cos(a.simplify()),
            Exp(a) => fold1(a.simplify(), f64::exp, Exp),
            Ln(a) => fold1(a.simplify(), f64::ln, Ln),
            Pow(a, b) => pow(a.simplify(), b.simplify()),
        }
    }
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn fold1(a: Expr, f: fn(f64) -> f64, ctor: fn(Box<Expr>) -> Expr) -> Expr {
    match as_const(&a) {
        Some(c) => Expr::Const(f(c)),
        None => ctor(Box::new(a)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => match b {
            Expr::Neg(nb) => Expr::Sub(Box::new(a), nb),
            b => Expr::Add(Box::new(a), Box::new(b)),
        },
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => match b {
            Expr::Neg(nb) => Expr::Add(Box::new(a), nb),
            b => Expr::Sub(Box::new(a), Box::new(b)),
        },
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x / y),
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn sin(a: Expr) -> Expr {
    fold1(a, f64::sin, Expr::Sin)
}

fn cos(a: Expr) -> Expr {
    fold1(a, f64::cos, Expr::Cos)
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x.powf(y)),
        (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "v{i}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Pow(a, b) => write!(f, "pow({a}, {b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            column: self.pos + 1,
            message: message.into(),
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

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(self.error(format!("expected '{}', found '{}'", c as char, got as char))),
            None => Err(self.error(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Const).map_err(|_| ParseError {
            column: start + 1,
            message: format!("invalid number '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let unknown = |msg: String| ParseError {
            column: start + 1,
            message: msg,
        };
        match name {
            "sin" | "cos" | "exp" => {
                self.expect(b'(')?;
                let a = Box::new(self.expr()?);
                self.expect(b')')?;
                Ok(match name {
                    "sin" => Expr::Sin(a),
                    "cos" => Expr::Cos(a),
                    _ => Expr::Exp(a),
                })
            }
            "pow" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Pow(Box::new(a), Box::new(b)))
            }
            _ => match self.vars.iter().position(|v| *v == name) {
                Some(i) => Ok(Expr::Var(i)),
                None => Err(unknown(format!("unknown identifier '{name}'"))),
            },
        }
    }
}
