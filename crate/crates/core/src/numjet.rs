//! Second-order jets over complex scalars.
//!
//! A [`Jet`] carries the value of a quantity together with its raw partial
//! derivatives in the independents `x`, `t` and the dependent slot `w`.
//! Only `∂x, ∂t, ∂w, ∂xx, ∂xw, ∂ww` are tracked: every transformation
//! component handled by this crate is at most first order in `t`, so the
//! set is closed under the ring operations and the elementary functions.
//!
//! Coefficients are raw partials, not Taylor coefficients: the jet of `x²`
//! has `dxx == 2`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CScalar = Complex64;

/// Distance from `±π` (in argument) below which a point counts as sitting on
/// the principal branch cut.
pub const BRANCH_CUT_ARG_TOL: f64 = 1e-9;

/// Largest integer exponent evaluated by repeated multiplication.
const MAX_INT_EXPONENT: f64 = 1024.0;

#[inline]
pub fn c(re: f64) -> CScalar {
    Complex64::new(re, 0.0)
}

#[inline]
pub fn ci(re: f64, im: f64) -> CScalar {
    Complex64::new(re, im)
}

/// `true` if `z` lies on (or within [`BRANCH_CUT_ARG_TOL`] of) the negative
/// real axis, where the principal `Log` jumps.
pub fn near_branch_cut(z: CScalar) -> bool {
    z != c(0.0) && PI - z.arg().abs() < BRANCH_CUT_ARG_TOL
}

/// Returns the exponent as an `i32` if it is a (small) real integer.
pub fn integer_exponent(e: CScalar) -> Option<i32> {
    if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= MAX_INT_EXPONENT {
        Some(e.re as i32)
    } else {
        None
    }
}

fn is_finite(z: CScalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Which coordinate a seeded jet represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    X,
    T,
    W,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: CScalar,
    pub dx: CScalar,
    pub dt: CScalar,
    pub dw: CScalar,
    pub dxx: CScalar,
    pub dxw: CScalar,
    pub dww: CScalar,
}

impl Jet {
    pub fn constant(v: CScalar) -> Self {
        let z = c(0.0);
        Jet {
            v,
            dx: z,
            dt: z,
            dw: z,
            dxx: z,
            dxw: z,
            dww: z,
        }
    }

    pub fn seed(value: CScalar, role: Seed) -> Self {
        let mut j = Jet::constant(value);
        match role {
            Seed::X => j.dx = c(1.0),
            Seed::T => j.dt = c(1.0),
            Seed::W => j.dw = c(1.0),
            Seed::Constant => {}
        }
        j
    }

    pub fn coefficients(&self) -> [CScalar; 7] {
        [
            self.v, self.dx, self.dt, self.dw, self.dxx, self.dxw, self.dww,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients().iter().all(|z| is_finite(*z))
    }

    /// Second-order chain rule for `f(self)` given `f, f', f''` at the value.
    fn compose(&self, f0: CScalar, f1: CScalar, f2: CScalar) -> Jet {
        Jet {
            v: f0,
            dx: f1 * self.dx,
            dt: f1 * self.dt,
            dw: f1 * self.dw,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxw: f2 * self.dx * self.dw + f1 * self.dxw,
            dww: f2 * self.dw * self.dw + f1 * self.dww,
        }
    }

    pub fn scale(&self, k: CScalar) -> Jet {
        Jet {
            v: self.v * k,
            dx: self.dx * k,
            dt: self.dt * k,
            dw: self.dw * k,
            dxx: self.dxx * k,
            dxw: self.dxw * k,
            dww: self.dww * k,
        }
    }

    pub fn recip(&self) -> Result<Jet> {
        if self.v == c(0.0) {
            return Err(Error::Singularity(
                "division by a jet whose value is zero".into(),
            ));
        }
        let r = self.v.inv();
        Ok(self.compose(r, -r * r, c(2.0) * r * r * r))
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet> {
        Ok(*self * rhs.recip()?)
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut acc = Jet::constant(c(1.0));
        let mut base = *self;
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            k >>= 1;
            if k > 0 {
                base = base * base;
            }
        }
        Ok(acc)
    }

    /// `self^e` on the principal branch. Integer exponents go through
    /// [`Jet::powi`] so no branch is involved.
    pub fn powc(&self, e: CScalar) -> Result<Jet> {
        if let Some(n) = integer_exponent(e) {
            return self.powi(n);
        }
        if self.v == c(0.0) {
            return Err(Error::Singularity(format!(
                "zero raised to non-integer power {e}"
            )));
        }
        let f0 = scalar_powc(self.v, e);
        let inv = self.v.inv();
        let f1 = e * f0 * inv;
        let f2 = e * (e - c(1.0)) * f0 * inv * inv;
        Ok(self.compose(f0, f1, f2))
    }

    pub fn ln(&self) -> Result<Jet> {
        if self.v == c(0.0) {
            return Err(Error::Singularity("logarithm of zero".into()));
        }
        let inv = self.v.inv();
        Ok(self.compose(scalar_ln(self.v), inv, -inv * inv))
    }

    pub fn exp(&self) -> Jet {
        let f = self.v.exp();
        self.compose(f, f, f)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if self.v == c(0.0) {
            return Err(Error::Singularity("square root at zero".into()));
        }
        let f0 = scalar_sqrt(self.v);
        let f1 = (c(2.0) * f0).inv();
        let f2 = -f1 / (c(2.0) * self.v);
        Ok(self.compose(f0, f1, f2))
    }
}

/// Principal power with a fast exact path for positive real bases and real
/// exponents.
pub fn scalar_powc(z: CScalar, e: CScalar) -> CScalar {
    if z.im == 0.0 && z.re > 0.0 && e.im == 0.0 {
        c(z.re.powf(e.re))
    } else {
        z.powc(e)
    }
}

pub fn scalar_ln(z: CScalar) -> CScalar {
    if z.im == 0.0 && z.re > 0.0 {
        c(z.re.ln())
    } else {
        z.ln()
    }
}

pub fn scalar_sqrt(z: CScalar) -> CScalar {
    if z.im == 0.0 && z.re >= 0.0 {
        c(z.re.sqrt())
    } else {
        z.sqrt()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, b: Jet) -> Jet {
        Jet {
            v: self.v + b.v,
            dx: self.dx + b.dx,
            dt: self.dt + b.dt,
            dw: self.dw + b.dw,
            dxx: self.dxx + b.dxx,
            dxw: self.dxw + b.dxw,
            dww: self.dww + b.dww,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, b: Jet) -> Jet {
        Jet {
            v: self.v - b.v,
            dx: self.dx - b.dx,
            dt: self.dt - b.dt,
            dw: self.dw - b.dw,
            dxx: self.dxx - b.dxx,
            dxw: self.dxw - b.dxw,
            dww: self.dww - b.dww,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, b: Jet) -> Jet {
        let a = self;
        Jet {
            v: a.v * b.v,
            dx: a.dx * b.v + a.v * b.dx,
            dt: a.dt * b.v + a.v * b.dt,
            dw: a.dw * b.v + a.v * b.dw,
            dxx: a.dxx * b.v + c(2.0) * a.dx * b.dx + a.v * b.dxx,
            dxw: a.dxw * b.v + a.dx * b.dw + a.dw * b.dx + a.v * b.dxw,
            dww: a.dww * b.v + c(2.0) * a.dw * b.dw + a.v * b.dww,
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(c(-1.0))
    }
}

/// The operations the expression evaluator needs, implemented both for plain
/// complex values and for jets.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_const(v: CScalar) -> Self;
    fn value(&self) -> CScalar;
    fn try_div(&self, rhs: &Self) -> Result<Self>;
    fn powc(&self, e: CScalar) -> Result<Self>;
    fn ln(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Result<Self>;
    fn all_finite(&self) -> bool;
}

impl Scalar for Jet {
    fn from_const(v: CScalar) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> CScalar {
        self.v
    }
    fn try_div(&self, rhs: &Self) -> Result<Self> {
        Jet::try_div(self, rhs)
    }
    fn powc(&self, e: CScalar) -> Result<Self> {
        Jet::powc(self, e)
    }
    fn ln(&self) -> Result<Self> {
        Jet::ln(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn sqrt(&self) -> Result<Self> {
        Jet::sqrt(self)
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for CScalar {
    fn from_const(v: CScalar) -> Self {
        v
    }
    fn value(&self) -> CScalar {
        *self
    }
    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == c(0.0) {
            return Err(Error::Singularity("division by zero".into()));
        }
        Ok(self / rhs)
    }
    fn powc(&self, e: CScalar) -> Result<Self> {
        cpow(*self, e)
    }
    fn ln(&self) -> Result<Self> {
        if *self == c(0.0) {
            return Err(Error::Singularity("logarithm of zero".into()));
        }
        Ok(scalar_ln(*self))
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn sqrt(&self) -> Result<Self> {
        Ok(scalar_sqrt(*self))
    }
    fn all_finite(&self) -> bool {
        is_finite(*self)
    }
}

/// Complex power with the same conventions as [`Jet::powc`]: integer
/// exponents by repeated multiplication, principal branch otherwise.
pub fn cpow(z: CScalar, e: CScalar) -> Result<CScalar> {
    if let Some(n) = integer_exponent(e) {
        if n < 0 && z == c(0.0) {
            return Err(Error::Singularity(format!("zero raised to power {n}")));
        }
        return Ok(if n < 0 {
            z.powu(n.unsigned_abs()).inv()
        } else {
            z.powu(n as u32)
        });
    }
    if z == c(0.0) {
        return Err(Error::Singularity(format!("zero raised to power {e}")));
    }
    Ok(scalar_powc(z, e))
}
