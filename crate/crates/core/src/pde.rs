//! Parametric residual operators.
//!
//! Three shapes cover every equation handled by the catalog:
//!
//! * [`ScalarUPde`]: `u_t = κ(uⁿu_x)_x + (λuⁿ/x + σx + τuⁿ)u_x`
//! * [`ScalarVPde`]: `v_t = A(v_x/x^p)^m v_xx + B(v_x/x^p)^q + C₀`
//! * [`PotentialSystem`]: `v_x = x^p u`, `v_t = flux(x,u)u_x + source(u)`
//!
//! Residuals are always `lhs − rhs` with `rhs` computed by the same routine
//! that [`complete_scalar`] and [`complete_system`] use, so a completed point
//! has a residual of exactly zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::numjet::{c, cpow, scalar_ln, CScalar};

pub fn fmt_c(z: CScalar) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn zero() -> CScalar {
    c(0.0)
}

/// `coef · base^e`, skipping the power entirely when the coefficient is zero.
fn coef_pow(coef: CScalar, base: CScalar, e: CScalar) -> Result<CScalar> {
    if coef == zero() {
        Ok(zero())
    } else {
        Ok(coef * cpow(base, e)?)
    }
}

/// Weight `x^p` with `p ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    One,
    X,
}

impl Weight {
    pub fn p(self) -> u8 {
        match self {
            Weight::One => 0,
            Weight::X => 1,
        }
    }

    fn factor(self, x: CScalar) -> Result<CScalar> {
        match self {
            Weight::One => Ok(c(1.0)),
            Weight::X if x == zero() => Err(Error::Singularity("x = 0 in x-weighted term".into())),
            Weight::X => Ok(x),
        }
    }
}

/// Jet of a scalar dependent variable `w` (playing `u` or `v`) at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJetPoint {
    pub x: CScalar,
    pub t: CScalar,
    pub w: CScalar,
    pub w_x: CScalar,
    pub w_t: CScalar,
    pub w_xx: CScalar,
}

impl ScalarJetPoint {
    pub fn fields(&self) -> [(&'static str, CScalar); 6] {
        [
            ("x", self.x),
            ("t", self.t),
            ("w", self.w),
            ("w_x", self.w_x),
            ("w_t", self.w_t),
            ("w_xx", self.w_xx),
        ]
    }
}

/// First-order jet of the pair `(u, v)` at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemJetPoint {
    pub x: CScalar,
    pub t: CScalar,
    pub u: CScalar,
    pub u_x: CScalar,
    pub u_t: CScalar,
    pub v: CScalar,
    pub v_x: CScalar,
    pub v_t: CScalar,
}

impl SystemJetPoint {
    pub fn fields(&self) -> [(&'static str, CScalar); 8] {
        [
            ("x", self.x),
            ("t", self.t),
            ("u", self.u),
            ("u_x", self.u_x),
            ("u_t", self.u_t),
            ("v", self.v),
            ("v_x", self.v_x),
            ("v_t", self.v_t),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarUPde {
    pub n: CScalar,
    pub kappa: CScalar,
    pub lam: CScalar,
    pub sigma: CScalar,
    pub tau: CScalar,
}

impl ScalarUPde {
    pub fn new(n: CScalar, kappa: CScalar, lam: CScalar, sigma: CScalar, tau: CScalar) -> Self {
        ScalarUPde {
            n,
            kappa,
            lam,
            sigma,
            tau,
        }
    }

    /// `u_t = (uⁿu_x)_x + (μ/x)uⁿu_x`.
    pub fn porous_medium(n: CScalar, mu: CScalar) -> Self {
        Self::new(n, c(1.0), mu, zero(), zero())
    }

    /// Porous medium equation with an extra linear drift `σ x u_x`.
    pub fn with_drift(n: CScalar, lam: CScalar, sigma: CScalar) -> Self {
        Self::new(n, c(1.0), lam, sigma, zero())
    }

    /// `u_t = (uⁿu_x)_x + 2((n+1)/n) uⁿu_x`, the groundwater (Boussinesq) form.
    pub fn boussinesq(n: CScalar) -> Result<Self> {
        if n == zero() {
            return Err(Error::Constraint(
                "Boussinesq coefficient 2(n+1)/n requires n ≠ 0".into(),
            ));
        }
        Ok(Self::new(
            n,
            c(1.0),
            zero(),
            zero(),
            c(2.0) * (n + c(1.0)) / n,
        ))
    }

    /// Individual right-hand-side terms: diffusion (two pieces), radial,
    /// drift, convection.
    pub fn terms(&self, pt: &ScalarJetPoint) -> Result<[CScalar; 5]> {
        let ScalarJetPoint {
            x,
            w: u,
            w_x: ux,
            w_xx: uxx,
            ..
        } = *pt;
        let un = coef_pow(c(1.0), u, self.n)?;
        let d1 = coef_pow(self.kappa * self.n, u, self.n - c(1.0))? * ux * ux;
        let d2 = self.kappa * un * uxx;
        let radial = if self.lam == zero() {
            zero()
        } else {
            if x == zero() {
                return Err(Error::Singularity("x = 0 in λuⁿu_x/x".into()));
            }
            self.lam * un / x * ux
        };
        let drift = self.sigma * x * ux;
        let convect = self.tau * un * ux;
        Ok([d1, d2, radial, drift, convect])
    }

    pub fn rhs(&self, pt: &ScalarJetPoint) -> Result<CScalar> {
        Ok(self.terms(pt)?.iter().sum())
    }

    pub fn residual(&self, pt: &ScalarJetPoint) -> Result<CScalar> {
        Ok(pt.w_t - self.rhs(pt)?)
    }

    /// Sum of absolute values of all terms, including `|u_t|`.
    pub fn scale(&self, pt: &ScalarJetPoint) -> Result<f64> {
        Ok(pt.w_t.norm() + self.terms(pt)?.iter().map(|z| z.norm()).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarVPde {
    pub a: CScalar,
    pub m: CScalar,
    pub b: CScalar,
    pub q: CScalar,
    pub c0: CScalar,
    pub p: Weight,
}

impl ScalarVPde {
    pub fn new(a: CScalar, m: CScalar, b: CScalar, q: CScalar, c0: CScalar, p: Weight) -> Self {
        ScalarVPde { a, m, b, q, c0, p }
    }

    /// `v_t = v_x^m v_xx`.
    pub fn power_flux(m: CScalar) -> Self {
        Self::new(c(1.0), m, zero(), zero(), zero(), Weight::One)
    }

    pub fn heat() -> Self {
        Self::power_flux(zero())
    }

    pub fn terms(&self, pt: &ScalarJetPoint) -> Result<[CScalar; 3]> {
        let ratio = pt.w_x / self.p.factor(pt.x)?;
        let diff = coef_pow(self.a, ratio, self.m)? * pt.w_xx;
        let src = coef_pow(self.b, ratio, self.q)?;
        Ok([diff, src, self.c0])
    }

    pub fn rhs(&self, pt: &ScalarJetPoint) -> Result<CScalar> {
        Ok(self.terms(pt)?.iter().sum())
    }

    pub fn residual(&self, pt: &ScalarJetPoint) -> Result<CScalar> {
        Ok(pt.w_t - self.rhs(pt)?)
    }

    pub fn scale(&self, pt: &ScalarJetPoint) -> Result<f64> {
        Ok(pt.w_t.norm() + self.terms(pt)?.iter().map(|z| z.norm()).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxForm {
    /// `a · x^p · u^m`
    Power { a: CScalar, m: CScalar },
    /// `c / (u − 1)`
    Reciprocal { c: CScalar },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceForm {
    /// `b · u^q`
    Power {
        b: CScalar,
        q: CScalar,
    },
    /// `b · ln u` (principal branch)
    Log {
        b: CScalar,
    },
    Const(CScalar),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSystem {
    pub p: Weight,
    pub flux: FluxForm,
    pub source: SourceForm,
}

impl PotentialSystem {
    pub fn new(p: Weight, flux: FluxForm, source: SourceForm) -> Result<Self> {
        if matches!(flux, FluxForm::Reciprocal { .. }) && p != Weight::One {
            return Err(Error::Constraint(
                "reciprocal flux is only defined for the unweighted system".into(),
            ));
        }
        Ok(PotentialSystem { p, flux, source })
    }

    /// Potential form of the porous medium equation for `n ≠ −1`:
    /// `v_x = xu`, `v_t = xuⁿu_x + ((μ−1)/(n+1))u^{n+1}`.
    pub fn porous_potential(n: CScalar, mu: CScalar) -> Result<Self> {
        if n == c(-1.0) {
            return Err(Error::Constraint(
                "power-law potential system requires n ≠ −1 (use the logarithmic form)".into(),
            ));
        }
        Self::new(
            Weight::X,
            FluxForm::Power { a: c(1.0), m: n },
            SourceForm::Power {
                b: (mu - c(1.0)) / (n + c(1.0)),
                q: n + c(1.0),
            },
        )
    }

    /// Potential form for `n = −1`: `v_x = xu`, `v_t = (x/u)u_x + (μ−1)ln u`.
    pub fn log_potential(mu: CScalar) -> Self {
        PotentialSystem {
            p: Weight::X,
            flux: FluxForm::Power {
                a: c(1.0),
                m: c(-1.0),
            },
            source: SourceForm::Log { b: mu - c(1.0) },
        }
    }

    pub fn flux_value(&self, x: CScalar, u: CScalar) -> Result<CScalar> {
        match self.flux {
            FluxForm::Power { a, m } => Ok(coef_pow(a, u, m)? * self.p.factor(x)?),
            FluxForm::Reciprocal { c: k } => {
                if u == c(1.0) {
                    return Err(Error::Singularity(
                        "u = 1 in reciprocal flux c/(u−1)".into(),
                    ));
                }
                Ok(k / (u - c(1.0)))
            }
        }
    }

    pub fn source_value(&self, u: CScalar) -> Result<CScalar> {
        match self.source {
            SourceForm::Power { b, q } => coef_pow(b, u, q),
            SourceForm::Log { b } => {
                if b == zero() {
                    Ok(zero())
                } else if u == zero() {
                    Err(Error::Singularity("ln u at u = 0".into()))
                } else {
                    Ok(b * scalar_ln(u))
                }
            }
            SourceForm::Const(k) => Ok(k),
            SourceForm::None => Ok(zero()),
        }
    }

    /// `(x^p u, flux·u_x + source)`: the values the two equations assign to
    /// `v_x` and `v_t`.
    pub fn rhs(&self, x: CScalar, u: CScalar, u_x: CScalar) -> Result<(CScalar, CScalar)> {
        let vx = self.p.factor(x)? * u;
        let vt = self.flux_value(x, u)? * u_x + self.source_value(u)?;
        Ok((vx, vt))
    }

    pub fn residuals(&self, pt: &SystemJetPoint) -> Result<(CScalar, CScalar)> {
        let (vx, vt) = self.rhs(pt.x, pt.u, pt.u_x)?;
        Ok((pt.v_x - vx, pt.v_t - vt))
    }

    pub fn scales(&self, pt: &SystemJetPoint) -> Result<(f64, f64)> {
        let s1 = pt.v_x.norm() + (self.p.factor(pt.x)? * pt.u).norm();
        let s2 = pt.v_t.norm()
            + (self.flux_value(pt.x, pt.u)? * pt.u_x).norm()
            + self.source_value(pt.u)?.norm();
        Ok((s1, s2))
    }
}

/// Any of the three equation shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equation {
    ScalarU(ScalarUPde),
    ScalarV(ScalarVPde),
    System(PotentialSystem),
}

impl Equation {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Equation::ScalarU(_) => "scalar-u",
            Equation::ScalarV(_) => "scalar-v",
            Equation::System(_) => "system",
        }
    }

    pub fn scalar_rhs(&self, pt: &ScalarJetPoint) -> Result<CScalar> {
        match self {
            Equation::ScalarU(e) => e.rhs(pt),
            Equation::ScalarV(e) => e.rhs(pt),
            Equation::System(_) => Err(Error::Unsupported(
                "scalar evaluation of a potential system".into(),
            )),
        }
    }

    pub fn scalar_residual(&self, pt: &ScalarJetPoint) -> Result<CScalar> {
        Ok(pt.w_t - self.scalar_rhs(pt)?)
    }

    pub fn scalar_scale(&self, pt: &ScalarJetPoint) -> Result<f64> {
        match self {
            Equation::ScalarU(e) => e.scale(pt),
            Equation::ScalarV(e) => e.scale(pt),
            Equation::System(_) => Err(Error::Unsupported(
                "scalar evaluation of a potential system".into(),
            )),
        }
    }

    pub fn as_system(&self) -> Result<&PotentialSystem> {
        match self {
            Equation::System(s) => Ok(s),
            _ => Err(Error::Unsupported(
                "equation is not a potential system".into(),
            )),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Equation::ScalarU(e) => write!(
                f,
                "u_t = {}(u^{} u_x)_x + ({}u^{}/x + {}x + {}u^{})u_x",
                fmt_c(e.kappa),
                fmt_c(e.n),
                fmt_c(e.lam),
                fmt_c(e.n),
                fmt_c(e.sigma),
                fmt_c(e.tau),
                fmt_c(e.n)
            ),
            Equation::ScalarV(e) => {
                let r = if e.p == Weight::X { "(v_x/x)" } else { "v_x" };
                write!(
                    f,
                    "v_t = {}{r}^{} v_xx + {}{r}^{} + {}",
                    fmt_c(e.a),
                    fmt_c(e.m),
                    fmt_c(e.b),
                    fmt_c(e.q),
                    fmt_c(e.c0)
                )
            }
            Equation::System(s) => {
                let xp = if s.p == Weight::X { "x" } else { "" };
                write!(f, "v_x = {xp}u, v_t = ")?;
                match s.flux {
                    FluxForm::Power { a, m } => write!(f, "{}{xp}u^{} u_x", fmt_c(a), fmt_c(m))?,
                    FluxForm::Reciprocal { c: k } => write!(f, "{}/(u-1) u_x", fmt_c(k))?,
                }
                match s.source {
                    SourceForm::Power { b, q } => write!(f, " + {}u^{}", fmt_c(b), fmt_c(q)),
                    SourceForm::Log { b } => write!(f, " + {} ln u", fmt_c(b)),
                    SourceForm::Const(k) => write!(f, " + {}", fmt_c(k)),
                    SourceForm::None => Ok(()),
                }
            }
        }
    }
}

/// Sets `w_t` to the equation's right-hand side so the residual vanishes.
pub fn complete_scalar(eq: &Equation, pt: &ScalarJetPoint) -> Result<ScalarJetPoint> {
    Ok(ScalarJetPoint {
        w_t: eq.scalar_rhs(pt)?,
        ..*pt
    })
}

/// Sets `v_x` and `v_t` from the system; `u_t` is left as supplied.
pub fn complete_system(sys: &PotentialSystem, pt: &SystemJetPoint) -> Result<SystemJetPoint> {
    let (v_x, v_t) = sys.rhs(pt.x, pt.u, pt.u_x)?;
    Ok(SystemJetPoint { v_x, v_t, ..*pt })
}
