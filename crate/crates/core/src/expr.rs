//! Expression trees for transformation components.
//!
//! Expressions are plain data so catalog entries can be printed, exported and
//! parsed back. The text form is parenthesized prefix notation:
//!
//! ```text
//! (* (pow x (+ (param k) 1)) (/ u 4))
//! ```
//!
//! Exponents must be free of variables; they may reference parameters and
//! constants only.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numjet::{c, ci, integer_exponent, near_branch_cut, CScalar, Scalar};

pub type Params = BTreeMap<String, CScalar>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    T,
    U,
    V,
    W,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::T, Var::U, Var::V, Var::W];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
            Var::W => "w",
        }
    }

    fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(CScalar),
    Param(String),
    Var(Var),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Ln(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

/// Variable bindings for one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Env<S> {
    slots: [Option<S>; 5],
}

impl<S: Copy> Env<S> {
    pub fn new() -> Self {
        Env { slots: [None; 5] }
    }

    pub fn with(mut self, var: Var, value: S) -> Self {
        self.slots[var.index()] = Some(value);
        self
    }

    pub fn get(&self, var: Var) -> Option<S> {
        self.slots[var.index()]
    }
}

impl<S: Copy> Default for Env<S> {
    fn default() -> Self {
        Env::new()
    }
}

pub fn x() -> Expr {
    Expr::Var(Var::X)
}
pub fn t() -> Expr {
    Expr::Var(Var::T)
}
pub fn u() -> Expr {
    Expr::Var(Var::U)
}
pub fn v() -> Expr {
    Expr::Var(Var::V)
}
pub fn w() -> Expr {
    Expr::Var(Var::W)
}
pub fn num(re: f64) -> Expr {
    Expr::Const(c(re))
}
pub fn cnum(re: f64, im: f64) -> Expr {
    Expr::Const(ci(re, im))
}
pub fn param(name: &str) -> Expr {
    Expr::Param(name.to_string())
}

impl Expr {
    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Pow(Box::new(self), Box::new(exponent))
    }
    pub fn powf(self, exponent: f64) -> Expr {
        self.pow(num(exponent))
    }
    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }
    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }
    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Var(_) => vec![],
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => vec![a, b],
            Expr::Ln(a) | Expr::Exp(a) | Expr::Sqrt(a) => vec![a],
        }
    }

    pub fn contains_var(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            _ => self.children().into_iter().any(|e| e.contains_var(var)),
        }
    }

    /// Replaces every occurrence of `from` with `to`.
    pub fn rename_var(&self, from: Var, to: Var) -> Expr {
        let r = |e: &Expr| Box::new(e.rename_var(from, to));
        match self {
            Expr::Var(v) if *v == from => Expr::Var(to),
            Expr::Const(_) | Expr::Param(_) | Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => Expr::Add(r(a), r(b)),
            Expr::Sub(a, b) => Expr::Sub(r(a), r(b)),
            Expr::Mul(a, b) => Expr::Mul(r(a), r(b)),
            Expr::Div(a, b) => Expr::Div(r(a), r(b)),
            Expr::Pow(a, b) => Expr::Pow(r(a), b.clone()),
            Expr::Ln(a) => Expr::Ln(r(a)),
            Expr::Exp(a) => Expr::Exp(r(a)),
            Expr::Sqrt(a) => Expr::Sqrt(r(a)),
        }
    }

    pub fn has_vars(&self) -> bool {
        Var::ALL.iter().any(|v| self.contains_var(*v))
    }

    /// Names of all parameters referenced anywhere in the tree.
    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        if let Expr::Param(p) = self {
            out.push(p.clone());
        }
        for ch in self.children() {
            ch.collect_params(out);
        }
    }

    /// Checks the structural invariant that exponents are variable-free.
    pub fn validate(&self) -> Result<()> {
        if let Expr::Pow(_, e) = self {
            if e.has_vars() {
                return Err(Error::Unsupported(format!(
                    "exponent `{e}` depends on a variable"
                )));
            }
        }
        self.children().into_iter().try_for_each(Expr::validate)
    }

    /// Structural test for `self = α·var + β` with α, β free of `var`.
    pub fn is_affine_in(&self, var: Var) -> bool {
        self.degree_in(var).is_some_and(|d| d <= 1)
    }

    fn degree_in(&self, var: Var) -> Option<u32> {
        match self {
            Expr::Const(_) | Expr::Param(_) => Some(0),
            Expr::Var(v) => Some(u32::from(*v == var)),
            Expr::Add(a, b) | Expr::Sub(a, b) => Some(a.degree_in(var)?.max(b.degree_in(var)?)),
            Expr::Mul(a, b) => Some(a.degree_in(var)? + b.degree_in(var)?),
            Expr::Div(a, b) => {
                if b.contains_var(var) {
                    None
                } else {
                    a.degree_in(var)
                }
            }
            Expr::Pow(a, _) | Expr::Ln(a) | Expr::Exp(a) | Expr::Sqrt(a) => {
                if a.contains_var(var) {
                    None
                } else {
                    Some(0)
                }
            }
        }
    }

    /// Evaluates a variable-free expression.
    pub fn eval_const(&self, params: &Params) -> Result<CScalar> {
        let mut warnings = 0;
        self.eval::<CScalar>(&Env::new(), params, &mut warnings)
    }

    /// Evaluates over any [`Scalar`]; `warnings` is bumped for every
    /// non-integer power, log or square root taken at a point on the
    /// principal branch cut.
    pub fn eval<S: Scalar>(&self, env: &Env<S>, params: &Params, warnings: &mut u32) -> Result<S> {
        let out = match self {
            Expr::Const(z) => S::from_const(*z),
            Expr::Param(p) => S::from_const(
                *params
                    .get(p)
                    .ok_or_else(|| Error::UnboundParam(p.clone()))?,
            ),
            Expr::Var(var) => env
                .get(*var)
                .ok_or_else(|| Error::Domain(format!("variable `{var}` is not available here")))?,
            Expr::Add(a, b) => a.eval(env, params, warnings)? + b.eval(env, params, warnings)?,
            Expr::Sub(a, b) => a.eval(env, params, warnings)? - b.eval(env, params, warnings)?,
            Expr::Mul(a, b) => a.eval(env, params, warnings)? * b.eval(env, params, warnings)?,
            Expr::Div(a, b) => {
                let num = a.eval(env, params, warnings)?;
                let den = b.eval(env, params, warnings)?;
                num.try_div(&den).map_err(|e| context(e, self))?
            }
            Expr::Pow(a, e) => {
                let exponent = e.eval_const(params)?;
                let base = a.eval(env, params, warnings)?;
                if integer_exponent(exponent).is_none() && near_branch_cut(base.value()) {
                    *warnings += 1;
                }
                base.powc(exponent).map_err(|e| context(e, self))?
            }
            Expr::Ln(a) => {
                let arg = a.eval(env, params, warnings)?;
                if near_branch_cut(arg.value()) {
                    *warnings += 1;
                }
                arg.ln().map_err(|e| context(e, self))?
            }
            Expr::Exp(a) => a.eval(env, params, warnings)?.exp(),
            Expr::Sqrt(a) => {
                let arg = a.eval(env, params, warnings)?;
                if near_branch_cut(arg.value()) {
                    *warnings += 1;
                }
                arg.sqrt().map_err(|e| context(e, self))?
            }
        };
        if !out.all_finite() {
            return Err(Error::NonFinite(format!("`{self}`")));
        }
        Ok(out)
    }
}

fn context(err: Error, at: &Expr) -> Error {
    match err {
        Error::Singularity(m) => Error::Singularity(format!("{m} in `{at}`")),
        other => other,
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$variant(Box::new(self), Box::new(num(rhs)))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(num(self)), Box::new(rhs))
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
        num(-1.0) * self
    }
}

fn write_scalar(f: &mut fmt::Formatter<'_>, z: CScalar) -> fmt::Result {
    if z.im == 0.0 {
        write!(f, "{}", z.re)
    } else {
        write!(f, "(c {} {})", z.re, z.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(z) => write_scalar(f, *z),
            Expr::Param(p) => write!(f, "(param {p})"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Add(a, b) => write!(f, "(+ {a} {b})"),
            Expr::Sub(a, b) => write!(f, "(- {a} {b})"),
            Expr::Mul(a, b) => write!(f, "(* {a} {b})"),
            Expr::Div(a, b) => write!(f, "(/ {a} {b})"),
            Expr::Pow(a, b) => write!(f, "(pow {a} {b})"),
            Expr::Ln(a) => write!(f, "(ln {a})"),
            Expr::Exp(a) => write!(f, "(exp {a})"),
            Expr::Sqrt(a) => write!(f, "(sqrt {a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(s: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices() {
        let delim = ch == '(' || ch == ')' || ch.is_whitespace();
        if delim {
            if let Some(st) = start.take() {
                out.push(Token::Atom(&s[st..i]));
            }
            match ch {
                '(' => out.push(Token::Open),
                ')' => out.push(Token::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push(Token::Atom(&s[st..]));
    }
    out
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<Token<'a>> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        Ok(tok)
    }

    fn atom(&mut self) -> Result<&'a str> {
        match self.next()? {
            Token::Atom(a) => Ok(a),
            other => Err(Error::Parse(format!("expected atom, found {other:?}"))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let a = self.atom()?;
        a.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number `{a}`")))
    }

    fn close(&mut self) -> Result<()> {
        match self.next()? {
            Token::Close => Ok(()),
            other => Err(Error::Parse(format!("expected `)`, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        match self.next()? {
            Token::Atom(a) => {
                if let Some(var) = Var::from_name(a) {
                    Ok(Expr::Var(var))
                } else {
                    a.parse::<f64>()
                        .map(num)
                        .map_err(|_| Error::Parse(format!("unknown atom `{a}`")))
                }
            }
            Token::Close => Err(Error::Parse("unexpected `)`".into())),
            Token::Open => {
                let head = self.atom()?;
                let out = match head {
                    "c" => {
                        let re = self.number()?;
                        let im = self.number()?;
                        cnum(re, im)
                    }
                    "param" => param(self.atom()?),
                    "+" | "-" | "*" | "/" | "pow" => {
                        let a = Box::new(self.expr()?);
                        let b = Box::new(self.expr()?);
                        match head {
                            "+" => Expr::Add(a, b),
                            "-" => Expr::Sub(a, b),
                            "*" => Expr::Mul(a, b),
                            "/" => Expr::Div(a, b),
                            _ => Expr::Pow(a, b),
                        }
                    }
                    "ln" => self.expr()?.ln(),
                    "exp" => self.expr()?.exp(),
                    "sqrt" => self.expr()?.sqrt(),
                    other => return Err(Error::Parse(format!("unknown operator `{other}`"))),
                };
                self.close()?;
                Ok(out)
            }
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expr> {
        let mut p = Parser {
            tokens: tokenize(s),
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse("trailing input".into()));
        }
        Ok(e)
    }
}
