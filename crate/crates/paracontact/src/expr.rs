//! Closed-form scalar expressions on a coordinate chart, evaluated with exact
//! first and second partial derivatives.
//!
//! Second-order derivatives come from nesting first-order dual numbers (a
//! value together with a vector of duals, each itself dual), so gradients and
//! Hessians are exact to floating-point rounding. No finite differences are
//! involved anywhere in the evaluation path.

use std::fmt;
use std::rc::Rc;
use thiserror::Error;

/// Supported unary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree. Coordinates are referenced by index into the chart's
/// coordinate list.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Const(f64),
    Coord(usize),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    /// `a ^ n` with a constant integer exponent: repeated multiplication.
    IntPow(Box<Ast>, i32),
    /// `a ^ b` with a non-integer or non-constant exponent: exp(b * log a).
    Pow(Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} is not a function")]
    NotAFunction { name: String, offset: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {op} of {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// A parsed scalar expression over a fixed chart coordinate list.
///
/// Immutable after parsing; evaluation allocates only per-call scratch, so
/// expressions can be shared freely across workers.
#[derive(Clone, Debug)]
pub struct Expression {
    ast: Ast,
    coords: Rc<Vec<String>>,
}

// ---------------------------------------------------------------------------
// Lexer / parser (recursive descent)
//
// expr   := term (('+'|'-') term)*
// term   := factor (('*'|'/') factor)*
// factor := base ('^' factor)?
// base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => return self.lex_number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => return self.lex_ident(start),
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let mut end = self.pos;
        while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
            end += 1;
        }
        // optional exponent
        if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
            let mut e = end + 1;
            if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                e += 1;
            }
            if e < self.src.len() && self.src[e].is_ascii_digit() {
                end = e;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..end]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("invalid number `{text}`"),
        })?;
        self.pos = end;
        Ok((Tok::Num(value), start))
    }

    fn lex_ident(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let mut end = self.pos;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
        {
            end += 1;
        }
        let text = std::str::from_utf8(&self.src[start..end]).unwrap().to_owned();
        self.pos = end;
        Ok((Tok::Ident(text), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: (Tok, usize),
    coords: &'a [String],
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, coords: &'a [String]) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next()?;
        Ok(Parser {
            lexer,
            lookahead,
            coords,
        })
    }

    fn advance(&mut self) -> Result<(Tok, usize), ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let (got, offset) = self.advance()?;
        if got == tok {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset,
                message: format!("expected {what}, found {got:?}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.lookahead.0 {
                Tok::Plus => {
                    self.advance()?;
                    let rhs = self.term()?;
                    lhs = Ast::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.advance()?;
                    let rhs = self.term()?;
                    lhs = Ast::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.lookahead.0 {
                Tok::Star => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    lhs = Ast::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    lhs = Ast::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Ast, ParseError> {
        let base = self.base()?;
        if self.lookahead.0 == Tok::Caret {
            self.advance()?;
            let exp = self.factor()?;
            return Ok(make_pow(base, exp));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Ast, ParseError> {
        let (tok, offset) = self.advance()?;
        match tok {
            Tok::Num(v) => Ok(Ast::Const(v)),
            Tok::Minus => {
                let inner = self.base()?;
                Ok(Ast::Neg(Box::new(inner)))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.lookahead.0 == Tok::LParen {
                    let func = Func::lookup(&name).ok_or(ParseError::NotAFunction {
                        name: name.clone(),
                        offset,
                    })?;
                    self.advance()?; // consume '('
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Ast::Call(func, Box::new(arg)))
                } else if let Some(k) = self.coords.iter().position(|c| c == &name) {
                    Ok(Ast::Coord(k))
                } else if name == "pi" {
                    Ok(Ast::Const(std::f64::consts::PI))
                } else if name == "e" {
                    Ok(Ast::Const(std::f64::consts::E))
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset })
                }
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected a value, found {other:?}"),
            }),
        }
    }
}

/// `a ^ b`: a constant integer exponent becomes repeated multiplication, any
/// other exponent maps to exp(b * log a) which requires a > 0 at evaluation.
fn make_pow(base: Ast, exp: Ast) -> Ast {
    if let Some(v) = const_value(&exp) {
        if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
            return Ast::IntPow(Box::new(base), v as i32);
        }
    }
    Ast::Pow(Box::new(base), Box::new(exp))
}

fn const_value(ast: &Ast) -> Option<f64> {
    match ast {
        Ast::Const(v) => Some(*v),
        Ast::Neg(a) => const_value(a).map(|v| -v),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Numeric tower: f64 and nested duals
// ---------------------------------------------------------------------------

/// Arithmetic shared by plain floats and (nested) dual numbers.
pub trait Num: Clone {
    fn constant(c: f64, like: &Self) -> Self;
    /// Underlying point value, used for domain checks.
    fn primal(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self, EvalError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn log(&self) -> Result<Self, EvalError>;
    fn sqrt(&self) -> Result<Self, EvalError>;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
}

impl Num for f64 {
    fn constant(c: f64, _like: &Self) -> Self {
        c
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self, EvalError> {
        if *o == 0.0 {
            return Err(EvalError::Domain {
                op: "division by zero, denominator",
                value: *o,
            });
        }
        Ok(self / o)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn log(&self) -> Result<Self, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::Domain {
                op: "log",
                value: *self,
            });
        }
        Ok(f64::ln(*self))
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::Domain {
                op: "sqrt",
                value: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
}

/// First-order multi-dual: a value plus one infinitesimal component per
/// chart coordinate. Nesting (`Dual<Dual<f64>>`) yields exact Hessians.
#[derive(Clone, Debug)]
pub struct Dual<T> {
    pub re: T,
    pub eps: Vec<T>,
}

impl<T: Num> Dual<T> {
    /// Apply the chain rule for a scalar function with value `v` and
    /// derivative `dv`, both already evaluated at `self.re`.
    fn chain(&self, v: T, dv: &T) -> Dual<T> {
        Dual {
            re: v,
            eps: self.eps.iter().map(|e| e.mul(dv)).collect(),
        }
    }
}

impl<T: Num> Num for Dual<T> {
    fn constant(c: f64, like: &Self) -> Self {
        Dual {
            re: T::constant(c, &like.re),
            eps: like.eps.iter().map(|e| T::constant(0.0, e)).collect(),
        }
    }
    fn primal(&self) -> f64 {
        self.re.primal()
    }
    fn add(&self, o: &Self) -> Self {
        Dual {
            re: self.re.add(&o.re),
            eps: self
                .eps
                .iter()
                .zip(&o.eps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Dual {
            re: self.re.sub(&o.re),
            eps: self
                .eps
                .iter()
                .zip(&o.eps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }
    fn neg(&self) -> Self {
        Dual {
            re: self.re.neg(),
            eps: self.eps.iter().map(|e| e.neg()).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        Dual {
            re: self.re.mul(&o.re),
            eps: self
                .eps
                .iter()
                .zip(&o.eps)
                .map(|(a, b)| a.mul(&o.re).add(&self.re.mul(b)))
                .collect(),
        }
    }
    fn div(&self, o: &Self) -> Result<Self, EvalError> {
        let q = self.re.div(&o.re)?;
        let mut eps = Vec::with_capacity(self.eps.len());
        for (a, b) in self.eps.iter().zip(&o.eps) {
            // (a' - q b') / b
            eps.push(a.sub(&q.mul(b)).div(&o.re)?);
        }
        Ok(Dual { re: q, eps })
    }
    fn sin(&self) -> Self {
        self.chain(self.re.sin(), &self.re.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.re.cos(), &self.re.sin().neg())
    }
    fn exp(&self) -> Self {
        let v = self.re.exp();
        self.chain(v.clone(), &v)
    }
    fn log(&self) -> Result<Self, EvalError> {
        let v = self.re.log()?;
        let one = T::constant(1.0, &self.re);
        let dv = one.div(&self.re)?;
        Ok(self.chain(v, &dv))
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        let v = self.re.sqrt()?;
        let half = T::constant(0.5, &self.re);
        let dv = half.div(&v)?;
        Ok(self.chain(v, &dv))
    }
    fn sinh(&self) -> Self {
        self.chain(self.re.sinh(), &self.re.cosh())
    }
    fn cosh(&self) -> Self {
        self.chain(self.re.cosh(), &self.re.sinh())
    }
    fn tanh(&self) -> Self {
        let v = self.re.tanh();
        let one = T::constant(1.0, &self.re);
        let dv = one.sub(&v.mul(&v));
        self.chain(v, &dv)
    }
}

/// Exponentiation by squaring, shared by every numeric layer so the primal
/// value is identical whether or not derivatives are being carried.
fn pow_int<T: Num>(base: &T, n: i32) -> Result<T, EvalError> {
    if n == 0 {
        return Ok(T::constant(1.0, base));
    }
    let mut e = n.unsigned_abs();
    let mut acc = T::constant(1.0, base);
    let mut sq = base.clone();
    loop {
        if e & 1 == 1 {
            acc = acc.mul(&sq);
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        sq = sq.mul(&sq);
    }
    if n < 0 {
        let one = T::constant(1.0, base);
        acc = one.div(&acc)?;
    }
    Ok(acc)
}

fn eval_ast<T: Num>(ast: &Ast, vars: &[T], proto: &T) -> Result<T, EvalError> {
    match ast {
        Ast::Const(c) => Ok(T::constant(*c, proto)),
        Ast::Coord(k) => Ok(vars[*k].clone()),
        Ast::Neg(a) => Ok(eval_ast(a, vars, proto)?.neg()),
        Ast::Bin(op, a, b) => {
            let a = eval_ast(a, vars, proto)?;
            let b = eval_ast(b, vars, proto)?;
            match op {
                BinOp::Add => Ok(a.add(&b)),
                BinOp::Sub => Ok(a.sub(&b)),
                BinOp::Mul => Ok(a.mul(&b)),
                BinOp::Div => a.div(&b),
            }
        }
        Ast::IntPow(a, n) => {
            let a = eval_ast(a, vars, proto)?;
            pow_int(&a, *n)
        }
        Ast::Pow(a, b) => {
            let a = eval_ast(a, vars, proto)?;
            let b = eval_ast(b, vars, proto)?;
            Ok(b.mul(&a.log()?).exp())
        }
        Ast::Call(f, a) => {
            let a = eval_ast(a, vars, proto)?;
            Ok(match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.sin().div(&a.cos())?,
                Func::Exp => a.exp(),
                Func::Log => a.log()?,
                Func::Sqrt => a.sqrt()?,
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Tanh => a.tanh(),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Jets
// ---------------------------------------------------------------------------

/// Value, gradient and Hessian of a scalar expression at a point. The Hessian
/// stores only the upper triangle, so it is symmetric by construction.
#[derive(Clone, Debug)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    hess_upper: Vec<f64>,
}

impl Jet2 {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.grad.len();
        // row-major upper triangle: row i starts at i*n - i*(i-1)/2
        self.hess_upper[i * n - (i * i - i) / 2 + (j - i)]
    }
}

impl Expression {
    /// Parse `source` against the declared coordinate names.
    pub fn parse<S: AsRef<str>>(source: &str, coords: &[S]) -> Result<Expression, ParseError> {
        let coords: Vec<String> = coords.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut parser = Parser::new(source, &coords)?;
        let ast = parser.expr()?;
        let (tok, offset) = parser.advance()?;
        if tok != Tok::End {
            return Err(ParseError::Syntax {
                offset,
                message: format!("trailing input starting with {tok:?}"),
            });
        }
        Ok(Expression {
            ast,
            coords: Rc::new(coords),
        })
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Plain value at a point.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        assert_eq!(point.len(), self.coords.len(), "point/chart dim mismatch");
        let v = eval_ast(&self.ast, point, &0.0)?;
        if !v.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(v)
    }

    /// Value and exact gradient.
    pub fn eval_jet1(&self, point: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        let n = self.coords.len();
        assert_eq!(point.len(), n, "point/chart dim mismatch");
        let vars: Vec<Dual<f64>> = (0..n)
            .map(|k| Dual {
                re: point[k],
                eps: (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect(),
            })
            .collect();
        let proto = Dual {
            re: 0.0,
            eps: vec![0.0; n],
        };
        let r = eval_ast(&self.ast, &vars, &proto)?;
        if !r.re.is_finite() || r.eps.iter().any(|e| !e.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok((r.re, r.eps))
    }

    /// Value, exact gradient and exact Hessian via nested duals.
    pub fn eval_jet2(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        let n = self.coords.len();
        assert_eq!(point.len(), n, "point/chart dim mismatch");
        let vars: Vec<Dual<Dual<f64>>> = (0..n)
            .map(|k| Dual {
                re: Dual {
                    re: point[k],
                    eps: (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect(),
                },
                eps: (0..n)
                    .map(|j| Dual {
                        re: if j == k { 1.0 } else { 0.0 },
                        eps: vec![0.0; n],
                    })
                    .collect(),
            })
            .collect();
        let proto = Dual {
            re: Dual {
                re: 0.0,
                eps: vec![0.0; n],
            },
            eps: (0..n)
                .map(|_| Dual {
                    re: 0.0,
                    eps: vec![0.0; n],
                })
                .collect(),
        };
        let r = eval_ast(&self.ast, &vars, &proto)?;
        let value = r.re.re;
        let grad = r.re.eps.clone();
        let mut hess_upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                hess_upper.push(r.eps[j].eps[i]);
            }
        }
        if !value.is_finite()
            || grad.iter().any(|x| !x.is_finite())
            || hess_upper.iter().any(|x| !x.is_finite())
        {
            return Err(EvalError::NonFinite);
        }
        Ok(Jet2 {
            value,
            grad,
            hess_upper,
        })
    }

    // -- construction helpers ------------------------------------------------

    pub fn constant(value: f64, coords: &[String]) -> Expression {
        Expression {
            ast: Ast::Const(value),
            coords: Rc::new(coords.to_vec()),
        }
    }

    pub fn coordinate(index: usize, coords: &[String]) -> Expression {
        assert!(index < coords.len());
        Expression {
            ast: Ast::Coord(index),
            coords: Rc::new(coords.to_vec()),
        }
    }

    fn binary(&self, op: BinOp, other: &Expression) -> Expression {
        assert_eq!(
            *self.coords, *other.coords,
            "expressions belong to different charts"
        );
        Expression {
            ast: simplify(Ast::Bin(
                op,
                Box::new(self.ast.clone()),
                Box::new(other.ast.clone()),
            )),
            coords: self.coords.clone(),
        }
    }

    pub fn add(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Add, other)
    }
    pub fn sub(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Sub, other)
    }
    pub fn mul(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Mul, other)
    }
    pub fn div(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Div, other)
    }
    pub fn neg(&self) -> Expression {
        Expression {
            ast: simplify(Ast::Neg(Box::new(self.ast.clone()))),
            coords: self.coords.clone(),
        }
    }
    pub fn int_pow(&self, n: i32) -> Expression {
        Expression {
            ast: Ast::IntPow(Box::new(self.ast.clone()), n),
            coords: self.coords.clone(),
        }
    }
    pub fn scale(&self, c: f64) -> Expression {
        self.mul(&Expression::constant(c, &self.coords))
    }

    /// Replace every coordinate reference `k` by `subs[k]`. All substitution
    /// expressions must share one target chart; the result lives there.
    pub fn substitute(&self, subs: &[Expression]) -> Expression {
        assert_eq!(subs.len(), self.coords.len());
        let target = subs
            .first()
            .map(|e| e.coords.clone())
            .unwrap_or_else(|| self.coords.clone());
        for s in subs {
            assert_eq!(*s.coords, *target, "substitutions target different charts");
        }
        fn go(ast: &Ast, subs: &[Expression]) -> Ast {
            match ast {
                Ast::Const(c) => Ast::Const(*c),
                Ast::Coord(k) => subs[*k].ast.clone(),
                Ast::Neg(a) => Ast::Neg(Box::new(go(a, subs))),
                Ast::Bin(op, a, b) => {
                    Ast::Bin(*op, Box::new(go(a, subs)), Box::new(go(b, subs)))
                }
                Ast::IntPow(a, n) => Ast::IntPow(Box::new(go(a, subs)), *n),
                Ast::Pow(a, b) => Ast::Pow(Box::new(go(a, subs)), Box::new(go(b, subs))),
                Ast::Call(f, a) => Ast::Call(*f, Box::new(go(a, subs))),
            }
        }
        Expression {
            ast: simplify(go(&self.ast, subs)),
            coords: target,
        }
    }

    /// Re-express over an extended coordinate list, mapping old coordinate `k`
    /// to new coordinate `k + offset`.
    pub fn embed(&self, new_coords: &[String], offset: usize) -> Expression {
        let subs: Vec<Expression> = (0..self.coords.len())
            .map(|k| Expression::coordinate(k + offset, new_coords))
            .collect();
        self.substitute(&subs)
    }

    /// Exact symbolic partial derivative with respect to coordinate `k`.
    pub fn derivative(&self, k: usize) -> Expression {
        Expression {
            ast: simplify(diff(&self.ast, k)),
            coords: self.coords.clone(),
        }
    }

    pub fn is_zero_constant(&self) -> bool {
        matches!(self.ast, Ast::Const(c) if c == 0.0)
    }
}

fn diff(ast: &Ast, k: usize) -> Ast {
    match ast {
        Ast::Const(_) => Ast::Const(0.0),
        Ast::Coord(j) => Ast::Const(if *j == k { 1.0 } else { 0.0 }),
        Ast::Neg(a) => Ast::Neg(Box::new(diff(a, k))),
        Ast::Bin(BinOp::Add, a, b) => {
            Ast::Bin(BinOp::Add, Box::new(diff(a, k)), Box::new(diff(b, k)))
        }
        Ast::Bin(BinOp::Sub, a, b) => {
            Ast::Bin(BinOp::Sub, Box::new(diff(a, k)), Box::new(diff(b, k)))
        }
        Ast::Bin(BinOp::Mul, a, b) => Ast::Bin(
            BinOp::Add,
            Box::new(Ast::Bin(BinOp::Mul, Box::new(diff(a, k)), b.clone())),
            Box::new(Ast::Bin(BinOp::Mul, a.clone(), Box::new(diff(b, k)))),
        ),
        Ast::Bin(BinOp::Div, a, b) => {
            // (a'b - ab') / b^2
            let num = Ast::Bin(
                BinOp::Sub,
                Box::new(Ast::Bin(BinOp::Mul, Box::new(diff(a, k)), b.clone())),
                Box::new(Ast::Bin(BinOp::Mul, a.clone(), Box::new(diff(b, k)))),
            );
            Ast::Bin(
                BinOp::Div,
                Box::new(num),
                Box::new(Ast::IntPow(b.clone(), 2)),
            )
        }
        Ast::IntPow(a, n) => {
            if *n == 0 {
                return Ast::Const(0.0);
            }
            // n * a^(n-1) * a'
            let power = if *n == 1 {
                Ast::Const(1.0)
            } else {
                Ast::IntPow(a.clone(), n - 1)
            };
            Ast::Bin(
                BinOp::Mul,
                Box::new(Ast::Const(*n as f64)),
                Box::new(Ast::Bin(BinOp::Mul, Box::new(power), Box::new(diff(a, k)))),
            )
        }
        Ast::Pow(a, b) => {
            // a^b * (b' log a + b a'/a)
            let t1 = Ast::Bin(
                BinOp::Mul,
                Box::new(diff(b, k)),
                Box::new(Ast::Call(Func::Log, a.clone())),
            );
            let t2 = Ast::Bin(
                BinOp::Div,
                Box::new(Ast::Bin(
                    BinOp::Mul,
                    b.clone(),
                    Box::new(diff(a, k)),
                )),
                a.clone(),
            );
            Ast::Bin(
                BinOp::Mul,
                Box::new(ast.clone()),
                Box::new(Ast::Bin(BinOp::Add, Box::new(t1), Box::new(t2))),
            )
        }
        Ast::Call(f, a) => {
            let da = diff(a, k);
            let df = match f {
                Func::Sin => Ast::Call(Func::Cos, a.clone()),
                Func::Cos => Ast::Neg(Box::new(Ast::Call(Func::Sin, a.clone()))),
                Func::Tan => Ast::Bin(
                    BinOp::Add,
                    Box::new(Ast::Const(1.0)),
                    Box::new(Ast::IntPow(Box::new(Ast::Call(Func::Tan, a.clone())), 2)),
                ),
                Func::Exp => Ast::Call(Func::Exp, a.clone()),
                Func::Log => Ast::Bin(BinOp::Div, Box::new(Ast::Const(1.0)), a.clone()),
                Func::Sqrt => Ast::Bin(
                    BinOp::Div,
                    Box::new(Ast::Const(0.5)),
                    Box::new(Ast::Call(Func::Sqrt, a.clone())),
                ),
                Func::Sinh => Ast::Call(Func::Cosh, a.clone()),
                Func::Cosh => Ast::Call(Func::Sinh, a.clone()),
                Func::Tanh => Ast::Bin(
                    BinOp::Sub,
                    Box::new(Ast::Const(1.0)),
                    Box::new(Ast::IntPow(Box::new(Ast::Call(Func::Tanh, a.clone())), 2)),
                ),
            };
            Ast::Bin(BinOp::Mul, Box::new(df), Box::new(da))
        }
    }
}

/// Peephole cleanup so symbolic derivatives and builders stay readable and
/// small: constant folding for +,-,*,/ with 0 and 1, and nested negation.
fn simplify(ast: Ast) -> Ast {
    match ast {
        Ast::Neg(a) => {
            let a = simplify(*a);
            match a {
                Ast::Const(c) => Ast::Const(-c),
                Ast::Neg(inner) => *inner,
                other => Ast::Neg(Box::new(other)),
            }
        }
        Ast::Bin(op, a, b) => {
            let a = simplify(*a);
            let b = simplify(*b);
            if let (Some(x), Some(y)) = (const_value(&a), const_value(&b)) {
                match op {
                    BinOp::Add => return Ast::Const(x + y),
                    BinOp::Sub => return Ast::Const(x - y),
                    BinOp::Mul => return Ast::Const(x * y),
                    BinOp::Div if y != 0.0 => return Ast::Const(x / y),
                    _ => {}
                }
            }
            match (op, &a, &b) {
                (BinOp::Add, Ast::Const(c), _) if *c == 0.0 => return b,
                (BinOp::Add, _, Ast::Const(c)) if *c == 0.0 => return a,
                (BinOp::Sub, _, Ast::Const(c)) if *c == 0.0 => return a,
                (BinOp::Sub, Ast::Const(c), _) if *c == 0.0 => {
                    return simplify(Ast::Neg(Box::new(b)))
                }
                (BinOp::Mul, Ast::Const(c), _) if *c == 0.0 => return Ast::Const(0.0),
                (BinOp::Mul, _, Ast::Const(c)) if *c == 0.0 => return Ast::Const(0.0),
                (BinOp::Mul, Ast::Const(c), _) if *c == 1.0 => return b,
                (BinOp::Mul, _, Ast::Const(c)) if *c == 1.0 => return a,
                (BinOp::Div, Ast::Const(c), _) if *c == 0.0 => return Ast::Const(0.0),
                (BinOp::Div, _, Ast::Const(c)) if *c == 1.0 => return a,
                _ => {}
            }
            Ast::Bin(op, Box::new(a), Box::new(b))
        }
        Ast::IntPow(a, n) => {
            let a = simplify(*a);
            match n {
                0 => Ast::Const(1.0),
                1 => a,
                _ => match const_value(&a) {
                    Some(c) => Ast::Const(c.powi(n)),
                    None => Ast::IntPow(Box::new(a), n),
                },
            }
        }
        Ast::Pow(a, b) => Ast::Pow(Box::new(simplify(*a)), Box::new(simplify(*b))),
        Ast::Call(f, a) => Ast::Call(f, Box::new(simplify(*a))),
        leaf => leaf,
    }
}

// ---------------------------------------------------------------------------
// Pretty printing (fully parenthesized; re-parses to the same tree)
// ---------------------------------------------------------------------------

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(ast: &Ast, coords: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match ast {
                Ast::Const(c) => {
                    if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                        write!(f, "(-{})", -c)
                    } else {
                        write!(f, "{c}")
                    }
                }
                Ast::Coord(k) => write!(f, "{}", coords[*k]),
                Ast::Neg(a) => {
                    write!(f, "(-")?;
                    go(a, coords, f)?;
                    write!(f, ")")
                }
                Ast::Bin(op, a, b) => {
                    let sym = match op {
                        BinOp::Add => "+",
                        BinOp::Sub => "-",
                        BinOp::Mul => "*",
                        BinOp::Div => "/",
                    };
                    write!(f, "(")?;
                    go(a, coords, f)?;
                    write!(f, " {sym} ")?;
                    go(b, coords, f)?;
                    write!(f, ")")
                }
                Ast::IntPow(a, n) => {
                    write!(f, "(")?;
                    go(a, coords, f)?;
                    if *n < 0 {
                        write!(f, "^(-{})", -(*n as i64))
                    } else {
                        write!(f, "^{n}")
                    }?;
                    write!(f, ")")
                }
                Ast::Pow(a, b) => {
                    write!(f, "(")?;
                    go(a, coords, f)?;
                    write!(f, "^")?;
                    go(b, coords, f)?;
                    write!(f, ")")
                }
                Ast::Call(func, a) => {
                    write!(f, "{}(", func.name())?;
                    go(a, coords, f)?;
                    write!(f, ")")
                }
            }
        }
        go(&self.ast, &self.coords, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn coords3() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    /// Central finite differences, the independent oracle for the AD path.
    pub fn fd_grad(e: &Expression, p: &[f64], h: f64) -> Vec<f64> {
        (0..p.len())
            .map(|k| {
                let mut up = p.to_vec();
                let mut dn = p.to_vec();
                up[k] += h;
                dn[k] -= h;
                (e.eval(&up).unwrap() - e.eval(&dn).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    pub fn fd_hess(e: &Expression, p: &[f64], h: f64) -> Vec<Vec<f64>> {
        let n = p.len();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut pp = p.to_vec();
                let mut pm = p.to_vec();
                let mut mp = p.to_vec();
                let mut mm = p.to_vec();
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                out[i][j] = (e.eval(&pp).unwrap() - e.eval(&pm).unwrap() - e.eval(&mp).unwrap()
                    + e.eval(&mm).unwrap())
                    / (4.0 * h * h);
            }
        }
        out
    }

    #[test]
    fn parse_literal_zero() {
        let e = Expression::parse("0", &coords3()).unwrap();
        assert_eq!(*e.ast(), Ast::Const(0.0));
    }

    #[test]
    fn parse_product_structure() {
        let e = Expression::parse("y*sin(x)", &coords3()).unwrap();
        match e.ast() {
            Ast::Bin(BinOp::Mul, a, b) => {
                assert_eq!(**a, Ast::Coord(1));
                assert!(matches!(**b, Ast::Call(Func::Sin, _)));
            }
            other => panic!("unexpected ast {other:?}"),
        }
    }

    #[test]
    fn exp_at_zero_is_one() {
        let e = Expression::parse("exp(2*z)", &coords3()).unwrap();
        assert_eq!(e.eval(&[0.3, -1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_unknown_identifier_and_function() {
        let err = Expression::parse("w + 1", &coords3()).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { .. }));
        let err = Expression::parse("x(2)", &coords3()).unwrap_err();
        assert!(matches!(err, ParseError::NotAFunction { .. }));
        let err = Expression::parse("frob(2)", &coords3()).unwrap_err();
        assert!(matches!(err, ParseError::NotAFunction { .. }));
    }

    #[test]
    fn syntax_error_carries_offset() {
        let err = Expression::parse("x + * y", &coords3()).unwrap_err();
        match err {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn square_jet() {
        let e = Expression::parse("x^2", &["x"]).unwrap();
        let j = e.eval_jet2(&[3.0]).unwrap();
        assert_eq!(j.value, 9.0);
        assert_eq!(j.grad[0], 6.0);
        assert_eq!(j.hess(0, 0), 2.0);
    }

    #[test]
    fn product_with_sine_jet() {
        let e = Expression::parse("y*sin(x)", &["x", "y"]).unwrap();
        let j = e.eval_jet2(&[0.0, 3.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, vec![3.0, 0.0]);
    }

    #[test]
    fn exp_jet_against_finite_differences() {
        let e = Expression::parse("exp(2*z)", &coords3()).unwrap();
        let p = [0.1, -0.4, 0.7];
        let j = e.eval_jet2(&p).unwrap();
        assert_relative_eq!(j.grad[2], 2.0 * j.value, max_relative = 1e-13);
        assert_relative_eq!(j.hess(2, 2), 4.0 * j.value, max_relative = 1e-13);
        let fd = fd_grad(&e, &p, 1e-5);
        for k in 0..3 {
            assert!((j.grad[k] - fd[k]).abs() <= 1e-6 * (1.0 + j.grad[k].abs()));
        }
    }

    #[test]
    fn ad_matches_finite_differences_on_mixed_expression() {
        let e = Expression::parse(
            "sin(x)*exp(y/2) + sqrt(1 + z^2) - tanh(x*y) + log(2 + cos(z))",
            &coords3(),
        )
        .unwrap();
        let pts = [[0.3, -0.9, 1.2], [1.1, 0.4, -0.5], [-0.7, 0.2, 0.9]];
        for p in pts {
            let j = e.eval_jet2(&p).unwrap();
            let fd = fd_grad(&e, &p, 1e-5);
            for k in 0..3 {
                assert!(
                    (j.grad[k] - fd[k]).abs() <= 1e-6 * (1.0 + j.grad[k].abs()),
                    "grad mismatch at {k}"
                );
            }
            let fdh = fd_hess(&e, &p, 1e-4);
            for i in 0..3 {
                for k in 0..3 {
                    assert!(
                        (j.hess(i, k) - fdh[i][k]).abs() <= 1e-4 * (1.0 + j.hess(i, k).abs()),
                        "hess mismatch at ({i},{k})"
                    );
                }
            }
        }
    }

    #[test]
    fn non_integer_power_requires_positive_base() {
        let e = Expression::parse("x^0.5", &["x"]).unwrap();
        assert!(e.eval(&[4.0]).is_ok());
        assert!(matches!(
            e.eval(&[-4.0]),
            Err(EvalError::Domain { op: "log", .. })
        ));
    }

    #[test]
    fn integer_power_allows_negative_base() {
        let e = Expression::parse("x^3", &["x"]).unwrap();
        assert_eq!(e.eval(&[-2.0]).unwrap(), -8.0);
        let e = Expression::parse("x^-2", &["x"]).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = Expression::parse("1/x", &["x"]).unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn log_domain_error() {
        let e = Expression::parse("log(x)", &["x"]).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn symbolic_derivative_matches_jet() {
        let e = Expression::parse("sin(x*y) + x^3/(2 + cos(z))", &coords3()).unwrap();
        let p = [0.7, -0.3, 1.1];
        let (_, grad) = e.eval_jet1(&p).unwrap();
        for k in 0..3 {
            let d = e.derivative(k);
            assert_relative_eq!(d.eval(&p).unwrap(), grad[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn substitution_composes() {
        let coords = coords3();
        let e = Expression::parse("x^2 + y", &coords).unwrap();
        // x -> u + v, y -> u*v, z -> 0 over a new chart (u, v)
        let new: Vec<String> = vec!["u".into(), "v".into()];
        let subs = vec![
            Expression::parse("u + v", &new).unwrap(),
            Expression::parse("u*v", &new).unwrap(),
            Expression::constant(0.0, &new),
        ];
        let s = e.substitute(&subs);
        let u = 0.8;
        let v = -0.6;
        assert_relative_eq!(
            s.eval(&[u, v]).unwrap(),
            (u + v) * (u + v) + u * v,
            max_relative = 1e-14
        );
    }

    #[test]
    fn round_trip_display_parse() {
        let coords = coords3();
        let sources = [
            "sin(x)*exp(y/2) + sqrt(1 + z^2)",
            "-x + y*z^3 - 2/(1 + x^2)",
            "tan(x/4) + tanh(y)*cosh(z) + pi",
        ];
        for src in sources {
            let e = Expression::parse(src, &coords).unwrap();
            let printed = e.to_string();
            let back = Expression::parse(&printed, &coords).unwrap();
            for i in 0..20 {
                let t = i as f64 * 0.13 - 1.0;
                let p = [t, 0.5 - t * 0.2, 0.3 + t * 0.1];
                assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
            }
        }
    }

    #[test]
    fn hessian_is_structurally_symmetric() {
        let e = Expression::parse("exp(x*y)*sin(z)", &coords3()).unwrap();
        let j = e.eval_jet2(&[0.4, 0.6, 0.9]).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(j.hess(i, k), j.hess(k, i));
            }
        }
    }
}
