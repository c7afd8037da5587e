//! Point transformations as expression data, and the jet pushforward that
//! carries solution jets from unprimed to primed variables.
//!
//! Scalar transforms act on `(x, t, w)` with `w` standing for `u` or `v`;
//! system transforms act on `(x, t, u, v)` in the restricted form
//! `x' = P(x,t,v)`, `t' = Q(t)`, `u' = R(x,t,u,v)`, `v' = S(x,t,v)`.

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Params, Var};
use crate::numjet::{c, CScalar, Jet, Seed};
use crate::pde::{ScalarJetPoint, SystemJetPoint};

/// Witness threshold for the non-degeneracy and potentiality predicates.
pub const TOL_ND: f64 = 1e-9;

/// Domain restriction `|expr| ≥ min_abs`, checked before every application.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub expr: Expr,
    pub min_abs: f64,
    pub note: String,
}

impl Guard {
    pub fn new(expr: Expr, min_abs: f64, note: &str) -> Self {
        Guard {
            expr,
            min_abs,
            note: note.to_string(),
        }
    }
}

/// Coordinates `(x, t, u, v)`. Scalar transforms read and write only the slot
/// of their dependent variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: CScalar,
    pub t: CScalar,
    pub u: CScalar,
    pub v: CScalar,
}

impl Point {
    pub fn new(x: CScalar, t: CScalar, u: CScalar, v: CScalar) -> Self {
        Point { x, t, u, v }
    }

    pub fn scalar(x: f64, t: f64, u: f64) -> Self {
        Point::new(c(x), c(t), c(u), c(0.0))
    }

    pub fn get(&self, var: Var) -> CScalar {
        match var {
            Var::X => self.x,
            Var::T => self.t,
            Var::U | Var::W => self.u,
            Var::V => self.v,
        }
    }

    fn env(&self) -> Env<CScalar> {
        Env::new()
            .with(Var::X, self.x)
            .with(Var::T, self.t)
            .with(Var::U, self.u)
            .with(Var::V, self.v)
    }

    /// Largest coordinate-wise relative distance.
    pub fn rel_distance(&self, other: &Point) -> f64 {
        [
            (self.x, other.x),
            (self.t, other.t),
            (self.u, other.u),
            (self.v, other.v),
        ]
        .iter()
        .map(|(a, b)| (a - b).norm() / (b.norm() + f64::EPSILON))
        .fold(0.0, f64::max)
    }
}

/// A value together with the number of branch-cut visits seen computing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub branch_warnings: u32,
}

fn check_guards(guards: &[Guard], env: &Env<CScalar>, params: &Params) -> Result<()> {
    for g in guards {
        let val = g.expr.eval(env, params, &mut 0)?;
        if val.norm() < g.min_abs {
            return Err(Error::Domain(format!(
                "{} (|{}| = {:.3e} < {})",
                g.note,
                g.expr,
                val.norm(),
                g.min_abs
            )));
        }
    }
    Ok(())
}

fn only_t(e: &Expr) -> bool {
    [Var::X, Var::U, Var::V, Var::W]
        .iter()
        .all(|v| !e.contains_var(*v))
}

fn nonzero(z: CScalar, what: &str) -> Result<CScalar> {
    if z == c(0.0) {
        Err(Error::Degenerate(format!("{what} = 0")))
    } else {
        Ok(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTransform {
    pub p: Expr,
    pub q: Expr,
    pub w: Expr,
    /// `U` or `V`; the generic `w` in the component expressions is renamed to it.
    pub dependent: Var,
    pub params: Params,
    pub guards: Vec<Guard>,
}

impl ScalarTransform {
    pub fn new(p: Expr, q: Expr, w: Expr, dependent: Var) -> Result<Self> {
        if !matches!(dependent, Var::U | Var::V) {
            return Err(Error::Unsupported(format!(
                "dependent variable must be u or v, got {dependent}"
            )));
        }
        let other = if dependent == Var::U { Var::V } else { Var::U };
        let p = p.rename_var(Var::W, dependent);
        let w = w.rename_var(Var::W, dependent);
        for e in [&p, &q, &w] {
            e.validate()?;
            if e.contains_var(other) {
                return Err(Error::Unsupported(format!(
                    "scalar transform in {dependent} references {other}"
                )));
            }
        }
        if !only_t(&q) {
            return Err(Error::Unsupported(format!(
                "Q = `{q}` must depend on t only"
            )));
        }
        Ok(ScalarTransform {
            p,
            q,
            w,
            dependent,
            params: Params::new(),
            guards: Vec::new(),
        })
    }

    pub fn identity(dependent: Var) -> Self {
        let dep = Expr::Var(dependent);
        ScalarTransform::new(crate::expr::x(), crate::expr::t(), dep, dependent)
            .expect("identity transform is well formed")
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    /// `true` when `x'` depends on the dependent variable (integrated-form
    /// maps such as hodographs).
    pub fn p_depends_on_w(&self) -> bool {
        self.p.contains_var(self.dependent)
    }

    fn jet_env(&self, x: CScalar, t: CScalar, w: CScalar) -> Env<Jet> {
        Env::new()
            .with(Var::X, Jet::seed(x, Seed::X))
            .with(Var::T, Jet::seed(t, Seed::T))
            .with(self.dependent, Jet::seed(w, Seed::W))
    }

    /// Jets of `(P, Q, W)` at a base point.
    pub fn component_jets(&self, x: CScalar, t: CScalar, w: CScalar) -> Result<Flagged<[Jet; 3]>> {
        let env = self.jet_env(x, t, w);
        let mut warn = 0;
        let pj = self.p.eval(&env, &self.params, &mut warn)?;
        let qj = self.q.eval(&env, &self.params, &mut warn)?;
        let wj = self.w.eval(&env, &self.params, &mut warn)?;
        Ok(Flagged {
            value: [pj, qj, wj],
            branch_warnings: warn,
        })
    }

    /// Transports a jet of `w(x,t)` to the jet of `w'(x',t')`.
    pub fn pushforward(&self, pt: &ScalarJetPoint) -> Result<Flagged<ScalarJetPoint>> {
        let jets = self.component_jets(pt.x, pt.t, pt.w)?;
        let [pj, qj, wj] = jets.value;
        let wx = pt.w_x;
        let q_t = nonzero(qj.dt, "Q_t")?;
        let dxp = nonzero(pj.dx + pj.dw * wx, "D_x P")?;
        let dxw = wj.dx + wj.dw * wx;
        let second = |j: &Jet| j.dxx + c(2.0) * j.dxw * wx + j.dww * wx * wx + j.dw * pt.w_xx;
        let wpx = dxw / dxp;
        let wpxx = (second(&wj) * dxp - dxw * second(&pj)) / (dxp * dxp * dxp);
        let wpt = (wj.dt + wj.dw * pt.w_t - wpx * (pj.dt + pj.dw * pt.w_t)) / q_t;
        let out = ScalarJetPoint {
            x: pj.v,
            t: qj.v,
            w: wj.v,
            w_x: wpx,
            w_t: wpt,
            w_xx: wpxx,
        };
        if out
            .fields()
            .iter()
            .any(|(_, z)| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("scalar pushforward".into()));
        }
        Ok(Flagged {
            value: out,
            branch_warnings: jets.branch_warnings,
        })
    }

    pub fn apply(&self, pt: &Point) -> Result<Flagged<Point>> {
        let env = pt.env();
        check_guards(&self.guards, &env, &self.params)?;
        let mut warn = 0;
        let xp = self.p.eval(&env, &self.params, &mut warn)?;
        let tp = self.q.eval(&env, &self.params, &mut warn)?;
        let wp = self.w.eval(&env, &self.params, &mut warn)?;
        let mut out = Point {
            x: xp,
            t: tp,
            ..*pt
        };
        match self.dependent {
            Var::U => out.u = wp,
            _ => out.v = wp,
        }
        Ok(Flagged {
            value: out,
            branch_warnings: warn,
        })
    }

    /// Solves `W(x, t, w) = wprime` for `w`, for `W` affine in `w`.
    pub fn invert_dependent(&self, x: CScalar, t: CScalar, wprime: CScalar) -> Result<CScalar> {
        if !self.w.is_affine_in(self.dependent) {
            return Err(Error::Unsupported(format!(
                "`{}` is not affine in {}",
                self.w, self.dependent
            )));
        }
        let at = |w: CScalar| {
            let env = Env::new()
                .with(Var::X, x)
                .with(Var::T, t)
                .with(self.dependent, w);
            self.w.eval(&env, &self.params, &mut 0)
        };
        let beta = at(c(0.0))?;
        let alpha = at(c(1.0))? - beta;
        let alpha = nonzero(alpha, "leading coefficient of W in the dependent variable")?;
        Ok((wprime - beta) / alpha)
    }

    /// Extends a `(x,t,u)` map to the potential system with `v' = v`.
    pub fn lift_to_system(&self) -> Result<SystemTransform> {
        if self.dependent != Var::U || self.p_depends_on_w() {
            return Err(Error::Unsupported(
                "only maps with x' = P(x,t) and dependent u lift to the potential system".into(),
            ));
        }
        let mut lifted = SystemTransform::new(
            self.p.clone(),
            self.q.clone(),
            self.w.clone(),
            crate::expr::v(),
        )?;
        lifted.params = self.params.clone();
        lifted.guards = self.guards.clone();
        Ok(lifted)
    }
}

/// Outcome of the non-degeneracy and potentiality predicates at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nondegeneracy {
    pub nondegenerate: bool,
    pub potential: bool,
    /// `Q_t R_u (P_x S_v − P_v S_x)`
    pub jacobian: CScalar,
    /// `|P_v|² + |R_v|²`
    pub potential_witness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemTransform {
    pub p: Expr,
    pub q: Expr,
    pub r: Expr,
    pub s: Expr,
    pub params: Params,
    pub guards: Vec<Guard>,
}

/// First partials of one component in all four coordinates.
#[derive(Debug, Clone, Copy)]
struct Partials {
    val: CScalar,
    x: CScalar,
    t: CScalar,
    u: CScalar,
    v: CScalar,
}

impl SystemTransform {
    pub fn new(p: Expr, q: Expr, r: Expr, s: Expr) -> Result<Self> {
        for e in [&p, &q, &r, &s] {
            e.validate()?;
            if e.contains_var(Var::W) {
                return Err(Error::Unsupported(
                    "system transforms use u and v, not w".into(),
                ));
            }
        }
        if p.contains_var(Var::U) || s.contains_var(Var::U) {
            return Err(Error::Unsupported("P and S must not depend on u".into()));
        }
        if !only_t(&q) {
            return Err(Error::Unsupported(format!(
                "Q = `{q}` must depend on t only"
            )));
        }
        Ok(SystemTransform {
            p,
            q,
            r,
            s,
            params: Params::new(),
            guards: Vec::new(),
        })
    }

    pub fn identity() -> Self {
        use crate::expr::{t, u, v, x};
        SystemTransform::new(x(), t(), u(), v()).expect("identity transform is well formed")
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    fn jet_wrt(&self, e: &Expr, pt: &Point, slot: Var, warn: &mut u32) -> Result<Jet> {
        let (u, v) = match slot {
            Var::U => (Jet::seed(pt.u, Seed::W), Jet::constant(pt.v)),
            _ => (Jet::constant(pt.u), Jet::seed(pt.v, Seed::W)),
        };
        let env = Env::new()
            .with(Var::X, Jet::seed(pt.x, Seed::X))
            .with(Var::T, Jet::seed(pt.t, Seed::T))
            .with(Var::U, u)
            .with(Var::V, v);
        e.eval(&env, &self.params, warn)
    }

    fn partials(&self, e: &Expr, pt: &Point, warn: &mut u32) -> Result<Partials> {
        let jv = self.jet_wrt(e, pt, Var::V, warn)?;
        let du = if e.contains_var(Var::U) {
            self.jet_wrt(e, pt, Var::U, warn)?.dw
        } else {
            c(0.0)
        };
        Ok(Partials {
            val: jv.v,
            x: jv.dx,
            t: jv.dt,
            u: du,
            v: jv.dw,
        })
    }

    fn all_partials(&self, pt: &Point) -> Result<Flagged<[Partials; 4]>> {
        let mut warn = 0;
        let out = [
            self.partials(&self.p, pt, &mut warn)?,
            self.partials(&self.q, pt, &mut warn)?,
            self.partials(&self.r, pt, &mut warn)?,
            self.partials(&self.s, pt, &mut warn)?,
        ];
        Ok(Flagged {
            value: out,
            branch_warnings: warn,
        })
    }

    pub fn pushforward(&self, pt: &SystemJetPoint) -> Result<Flagged<SystemJetPoint>> {
        let base = Point::new(pt.x, pt.t, pt.u, pt.v);
        let parts = self.all_partials(&base)?;
        let [p, q, r, s] = parts.value;
        let q_t = nonzero(q.t, "Q_t")?;
        let dxp = nonzero(p.x + p.v * pt.v_x, "D_x P")?;
        let dtp = p.t + p.v * pt.v_t;
        let vpx = (s.x + s.v * pt.v_x) / dxp;
        let upx = (r.x + r.u * pt.u_x + r.v * pt.v_x) / dxp;
        let vpt = (s.t + s.v * pt.v_t - vpx * dtp) / q_t;
        let upt = (r.t + r.u * pt.u_t + r.v * pt.v_t - upx * dtp) / q_t;
        let out = SystemJetPoint {
            x: p.val,
            t: q.val,
            u: r.val,
            u_x: upx,
            u_t: upt,
            v: s.val,
            v_x: vpx,
            v_t: vpt,
        };
        if out
            .fields()
            .iter()
            .any(|(_, z)| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("system pushforward".into()));
        }
        Ok(Flagged {
            value: out,
            branch_warnings: parts.branch_warnings,
        })
    }

    pub fn apply(&self, pt: &Point) -> Result<Flagged<Point>> {
        let env = pt.env();
        check_guards(&self.guards, &env, &self.params)?;
        let mut warn = 0;
        let out = Point {
            x: self.p.eval(&env, &self.params, &mut warn)?,
            t: self.q.eval(&env, &self.params, &mut warn)?,
            u: self.r.eval(&env, &self.params, &mut warn)?,
            v: self.s.eval(&env, &self.params, &mut warn)?,
        };
        Ok(Flagged {
            value: out,
            branch_warnings: warn,
        })
    }

    pub fn check_nondegeneracy(&self, pt: &Point) -> Result<Nondegeneracy> {
        let [p, q, r, s] = self.all_partials(pt)?.value;
        let jacobian = q.t * r.u * (p.x * s.v - p.v * s.x);
        let potential_witness = p.v.norm_sqr() + r.v.norm_sqr();
        Ok(Nondegeneracy {
            nondegenerate: jacobian.norm() > TOL_ND,
            potential: potential_witness > TOL_ND,
            jacobian,
            potential_witness,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Scalar(ScalarTransform),
    System(SystemTransform),
}

impl Transform {
    pub fn apply(&self, pt: &Point) -> Result<Flagged<Point>> {
        match self {
            Transform::Scalar(s) => s.apply(pt),
            Transform::System(s) => s.apply(pt),
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Transform::Scalar(s) => &s.params,
            Transform::System(s) => &s.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut Params {
        match self {
            Transform::Scalar(s) => &mut s.params,
            Transform::System(s) => &mut s.params,
        }
    }

    /// Component expressions labelled by the primed coordinate they define.
    pub fn components(&self) -> Vec<(&'static str, &Expr)> {
        match self {
            Transform::Scalar(s) => {
                let dep = if s.dependent == Var::U { "u'" } else { "v'" };
                vec![("x'", &s.p), ("t'", &s.q), (dep, &s.w)]
            }
            Transform::System(s) => vec![("x'", &s.p), ("t'", &s.q), ("u'", &s.r), ("v'", &s.s)],
        }
    }

    pub fn guards(&self) -> &[Guard] {
        match self {
            Transform::Scalar(s) => &s.guards,
            Transform::System(s) => &s.guards,
        }
    }

    /// Checks the domain guards at `pt` without applying the map.
    pub fn admits(&self, pt: &Point) -> Result<()> {
        check_guards(self.guards(), &pt.env(), self.params())
    }
}

/// Applies `tr` `n` times, tagging any failure with the step where it happened.
pub fn iterate_point(tr: &Transform, pt: &Point, n: u32) -> Result<Flagged<Point>> {
    let mut cur = *pt;
    let mut warnings = 0;
    for step in 1..=n {
        let next = tr.apply(&cur).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("step {step}: {m}")),
            Error::Singularity(m) => Error::Singularity(format!("step {step}: {m}")),
            other => other,
        })?;
        warnings += next.branch_warnings;
        cur = next.value;
    }
    Ok(Flagged {
        value: cur,
        branch_warnings: warnings,
    })
}
