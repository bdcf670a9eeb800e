//! Scalar expressions in `u`, `v` or `t`, evaluated over jets.
//!
//! Grammar, loosest binding first: `+ -`, `* /`, unary `-`, `^` (right
//! associative). Atoms are numbers, the declared variables, `pi`, and the
//! calls `sin`, `cos`, `exp`, `sqrt`.

use std::fmt;

use thiserror::Error;

use crate::jet::{Jet, Jet1, Jet2, JetError};

/// Exponents within this distance of an integer use repeated multiplication.
pub const INTEGER_EXPONENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    U,
    V,
    T,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::V => "v",
            Var::T => "t",
        }
    }
}

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSet {
    /// `u`, `v`
    Surface,
    /// `t`
    Curve,
}

impl VarSet {
    fn lookup(self, name: &str) -> Option<Var> {
        match (self, name) {
            (VarSet::Surface, "u") => Some(Var::U),
            (VarSet::Surface, "v") => Some(Var::V),
            (VarSet::Curve, "t") => Some(Var::T),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("in `{expr}`: {source}")]
    Jet {
        expr: String,
        #[source]
        source: JetError,
    },
    #[error("exponent of `{expr}` must be constant")]
    NonConstantExponent { expr: String },
    #[error("variable `{}` is not bound in this context", .0.name())]
    UnboundVariable(Var),
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let tok = lx.next_token()?;
            let done = tok.0 == Tok::End;
            out.push(tok);
            if done {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => self.number()?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while matches!(lx.peek(), Some(b'0'..=b'9')) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something else: not an exponent.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Tok::Num(x)),
            _ => Err(ParseError::Syntax {
                offset: start,
                message: format!("number `{text}` is not a finite value"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Pratt parser

const BP_ADD: u8 = 10;
const BP_MUL: u8 = 20;
const BP_NEG: u8 = 30;
const BP_POW: u8 = 40;

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: VarSet,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Tok::Op('+') => (BinOp::Add, BP_ADD, BP_ADD + 1),
                Tok::Op('-') => (BinOp::Sub, BP_ADD, BP_ADD + 1),
                Tok::Op('*') => (BinOp::Mul, BP_MUL, BP_MUL + 1),
                Tok::Op('/') => (BinOp::Div, BP_MUL, BP_MUL + 1),
                Tok::Op('^') => (BinOp::Pow, BP_POW, BP_POW - 1),
                Tok::End | Tok::RParen => break,
                other => {
                    let msg = format!("expected an operator, found {}", describe(other));
                    return self.syntax(msg);
                }
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::Op('-') => {
                // a signed literal, unless it is the base of a power
                if let Tok::Num(x) = *self.peek() {
                    if !matches!(self.toks.get(self.pos + 1), Some((Tok::Op('^'), _))) {
                        self.bump();
                        return Ok(Expr::Num(-x));
                    }
                }
                Ok(Expr::Neg(Box::new(self.expr(BP_NEG)?)))
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { name, offset });
                    };
                    self.bump();
                    let arg = self.expr(0)?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Expr::Num(std::f64::consts::PI))
                } else if let Some(var) = self.vars.lookup(&name) {
                    Ok(Expr::Var(var))
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset })
                }
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected an operand, found {}", describe(&other)),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            let msg = format!("expected `)`, found {}", describe(self.peek()));
            self.syntax(msg)
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses `text`, accepting only the variables of `vars`.
pub fn parse(text: &str, vars: VarSet) -> Result<Expr, ParseError> {
    let toks = Lexer::tokenize(text)?;
    let mut p = Parser { toks, pos: 0, vars };
    if *p.peek() == Tok::End {
        return p.syntax("empty expression");
    }
    let e = p.expr(0)?;
    match p.peek() {
        Tok::End => Ok(e),
        other => {
            let msg = format!("unexpected {}", describe(other));
            p.syntax(msg)
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Jets bound to the variables during evaluation.
pub struct Bindings<'a, J> {
    pub u: Option<&'a J>,
    pub v: Option<&'a J>,
    pub t: Option<&'a J>,
}

impl<'a, J> Bindings<'a, J> {
    fn get(&self, var: Var) -> Option<&'a J> {
        match var {
            Var::U => self.u,
            Var::V => self.v,
            Var::T => self.t,
        }
    }

    fn any(&self) -> Option<&'a J> {
        self.u.or(self.v).or(self.t)
    }
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(x)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// True when no variable occurs in the tree.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Plain floating-point evaluation; `vals` is indexed by [`Var`] as `[u, v, t]`.
    pub fn eval_scalar(&self, vals: [f64; 3]) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Var(v) => match v {
                Var::U => vals[0],
                Var::V => vals[1],
                Var::T => vals[2],
            },
            Expr::Neg(a) => -a.eval_scalar(vals),
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval_scalar(vals), b.eval_scalar(vals));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => match integer_exponent(y) {
                        Some(n) => x.powi(n as i32),
                        None => x.powf(y),
                    },
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_scalar(vals);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    /// Evaluates over arbitrary jets bound to the variables.
    pub fn eval_with<J: Jet>(&self, b: &Bindings<'_, J>) -> Result<J, EvalError> {
        let shape = b.any().expect("at least one variable must be bound");
        self.eval_rec(b, shape)
    }

    fn eval_rec<J: Jet>(&self, b: &Bindings<'_, J>, shape: &J) -> Result<J, EvalError> {
        let wrap = |e: &Expr| {
            let expr = e.to_string();
            move |source| EvalError::Jet { expr, source }
        };
        Ok(match self {
            Expr::Num(x) => shape.constant_like(*x),
            Expr::Var(v) => b.get(*v).ok_or(EvalError::UnboundVariable(*v))?.clone(),
            Expr::Neg(a) => a.eval_rec(b, shape)?.scale(-1.0),
            Expr::Binary(op, lhs, rhs) => {
                if *op == BinOp::Pow {
                    if !rhs.is_constant() {
                        return Err(EvalError::NonConstantExponent {
                            expr: self.to_string(),
                        });
                    }
                    let base = lhs.eval_rec(b, shape)?;
                    let r = rhs.eval_scalar([0.0; 3]);
                    return match integer_exponent(r) {
                        Some(n) => base.powi(n).map_err(wrap(self)),
                        None => base.powf(r).map_err(wrap(self)),
                    };
                }
                let x = lhs.eval_rec(b, shape)?;
                let y = rhs.eval_rec(b, shape)?;
                match op {
                    BinOp::Add => x.add_jet(&y),
                    BinOp::Sub => x.sub_jet(&y),
                    BinOp::Mul => x.mul_jet(&y),
                    BinOp::Div => x.div_jet(&y).map_err(wrap(self))?,
                    BinOp::Pow => unreachable!(),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_rec(b, shape)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt().map_err(wrap(self))?,
                }
            }
        })
    }

    /// Jet in `(u, v)` at `base`.
    pub fn eval_jet2(&self, base: [f64; 2], order: usize) -> Result<Jet2, EvalError> {
        let u = Jet2::var_u(base, order);
        let v = Jet2::var_v(base, order);
        self.eval_with(&Bindings {
            u: Some(&u),
            v: Some(&v),
            t: None,
        })
    }

    /// Jet in `t` at `t0`.
    pub fn eval_jet1(&self, t0: f64, order: usize) -> Result<Jet1, EvalError> {
        let t = Jet1::var(t0, order);
        self.eval_with(&Bindings {
            u: None,
            v: None,
            t: Some(&t),
        })
    }
}

fn integer_exponent(r: f64) -> Option<i64> {
    let n = r.round();
    ((r - n).abs() <= INTEGER_EXPONENT_TOL && n.abs() < 1e9).then_some(n as i64)
}

impl fmt::Display for Expr {
    /// Fully parenthesized form; parsing it back yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) if x.is_sign_negative() => write!(f, "({x:?})"),
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
