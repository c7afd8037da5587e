//! Inventory of every transformation claim handled by the verifier.
//!
//! Each [`CatalogEntry`] bundles a transformation with the equation whose
//! solutions it takes (the *unprimed* equation) and the equation those
//! solutions are mapped onto (the *primed* one), plus parameter constraints,
//! a default parameter sweep and any claimed cyclic orders.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{num, param, t, u, v, x, Env, Expr, Params, Var};
use crate::numjet::{c, ci, CScalar, Jet, Seed};
use crate::pde::{
    fmt_c, Equation, FluxForm, PotentialSystem, ScalarJetPoint, ScalarUPde, ScalarVPde, SourceForm,
    Weight,
};
use crate::transform::{Guard, ScalarTransform, SystemTransform, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    ScalarU,
    ScalarV,
    System,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::ScalarU => "scalar-u",
            CaseKind::ScalarV => "scalar-v",
            CaseKind::System => "system",
        }
    }
}

/// Per-variable real sampling intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingDomain {
    pub x: (f64, f64),
    pub t: (f64, f64),
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl Default for SamplingDomain {
    fn default() -> Self {
        SamplingDomain {
            x: (0.7, 1.6),
            t: (0.5, 2.0),
            u: (0.5, 2.0),
            v: (0.5, 2.0),
        }
    }
}

/// The `steps_per_unit · N`-fold iterate of a transformation in closed form,
/// with `N` bound as the parameter `"N"`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormIterate {
    pub transform: Transform,
    pub steps_per_unit: u32,
}

impl ClosedFormIterate {
    pub fn bound(&self, params: &Params, n: u32) -> Transform {
        let mut tr = self.transform.clone();
        let p = tr.params_mut();
        p.clone_from(params);
        p.insert("N".into(), c(n as f64));
        tr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicClaim {
    pub binding: Params,
    pub order: u32,
}

/// A catalog entry with all parameters bound.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationCase {
    pub id: String,
    pub params: Params,
    pub kind: CaseKind,
    pub transform: Transform,
    pub unprimed: Equation,
    pub primed: Equation,
    pub domain: SamplingDomain,
    pub cyclic_order: Option<u32>,
    pub closed_form: Option<ClosedFormIterate>,
    pub anchor: &'static str,
}

impl VerificationCase {
    /// `name=value` pairs, comma separated, in parameter-name order.
    pub fn param_label(&self) -> String {
        param_label(&self.params)
    }

    /// Whether the polynomial point-transformation relation applies: scalar
    /// `u` equations with `x' = P(x, t)`.
    pub fn relation_applicable(&self) -> bool {
        match &self.transform {
            Transform::Scalar(s) => self.kind == CaseKind::ScalarU && !s.p_depends_on_w(),
            Transform::System(_) => false,
        }
    }
}

pub fn param_label(params: &Params) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_c(*v)))
        .collect::<Vec<_>>()
        .join(",")
}

struct Built {
    transform: Transform,
    unprimed: Equation,
    primed: Equation,
}

pub struct CatalogEntry {
    pub id: &'static str,
    pub kind: CaseKind,
    pub anchor: &'static str,
    pub free_params: &'static [&'static str],
    pub constraints: &'static [&'static str],
    sweep: fn() -> Vec<Params>,
    cyclic: fn() -> Vec<CyclicClaim>,
    closed_form: Option<fn() -> ClosedFormIterate>,
    build: fn(&Params) -> Result<Built>,
}

impl CatalogEntry {
    pub fn default_sweep(&self) -> Vec<Params> {
        (self.sweep)()
    }

    pub fn cyclic_claims(&self) -> Vec<CyclicClaim> {
        (self.cyclic)()
    }

    /// Sweep bindings plus any cyclic bindings not already in the sweep.
    pub fn all_bindings(&self) -> Vec<Params> {
        let mut out = self.default_sweep();
        for claim in self.cyclic_claims() {
            if !out.contains(&claim.binding) {
                out.push(claim.binding);
            }
        }
        out
    }

    pub fn instantiate(&self, params: &Params) -> Result<VerificationCase> {
        for name in self.free_params {
            if !params.contains_key(*name) {
                return Err(Error::Constraint(format!(
                    "{} requires parameter `{name}` (free parameters: {})",
                    self.id,
                    self.free_params.join(", ")
                )));
            }
        }
        if let Some(extra) = params
            .keys()
            .find(|k| !self.free_params.contains(&k.as_str()))
        {
            return Err(Error::Constraint(format!(
                "{} has no parameter `{extra}`",
                self.id
            )));
        }
        let built = (self.build)(params)?;
        let mut transform = built.transform;
        *transform.params_mut() = params.clone();
        let cyclic_order = self
            .cyclic_claims()
            .into_iter()
            .find(|cl| &cl.binding == params)
            .map(|cl| cl.order);
        Ok(VerificationCase {
            id: self.id.to_string(),
            params: params.clone(),
            kind: self.kind,
            transform,
            unprimed: built.unprimed,
            primed: built.primed,
            domain: SamplingDomain::default(),
            cyclic_order,
            closed_form: self.closed_form.map(|f| f()),
            anchor: self.anchor,
        })
    }
}

pub fn bind(pairs: &[(&str, CScalar)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn get(p: &Params, name: &str) -> Result<CScalar> {
    p.get(name)
        .copied()
        .ok_or_else(|| Error::Constraint(format!("missing parameter `{name}`")))
}

fn require(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Constraint(msg.to_string()))
    }
}

fn is(z: CScalar, re: f64) -> bool {
    z == c(re)
}

fn none() -> Vec<CyclicClaim> {
    Vec::new()
}

fn single() -> Vec<Params> {
    vec![Params::new()]
}

const N_SWEEP: [f64; 4] = [-3.0, -2.0, 1.0, 2.0];

fn n_sweep_excluding(excluded: &[f64]) -> Vec<Params> {
    N_SWEEP
        .iter()
        .filter(|n| !excluded.contains(n))
        .map(|n| bind(&[("n", c(*n))]))
        .collect()
}

fn eps_values() -> [CScalar; 3] {
    [c(1.0), c(-1.0), ci(0.0, 1.0)]
}

fn k_sweep() -> Vec<Params> {
    [1.0, 2.0, -2.0]
        .iter()
        .map(|k| bind(&[("k", c(*k))]))
        .collect()
}

fn eps_sweep() -> Vec<Params> {
    eps_values().iter().map(|e| bind(&[("eps", *e)])).collect()
}

fn scalar(p: Expr, q: Expr, w: Expr, dep: Var) -> Result<Transform> {
    Ok(Transform::Scalar(ScalarTransform::new(p, q, w, dep)?))
}

fn system(p: Expr, q: Expr, r: Expr, s: Expr) -> Result<Transform> {
    Ok(Transform::System(SystemTransform::new(p, q, r, s)?))
}

fn su(e: ScalarUPde) -> Equation {
    Equation::ScalarU(e)
}

fn sv(e: ScalarVPde) -> Equation {
    Equation::ScalarV(e)
}

/// `λ = (3n + 4 − (n+2)μ) / (nμ + n + 2)`: the radial coefficient of the
/// target equation reached by the power-law stretching map.
pub fn lambda_of_mu(n: CScalar, mu: CScalar) -> Result<CScalar> {
    let den = n * mu + n + c(2.0);
    if den == c(0.0) {
        return Err(Error::Constraint(
            "λ is undefined for μ = −(n+2)/n (μn + n + 2 = 0)".into(),
        ));
    }
    Ok((c(3.0) * n + c(4.0) - (n + c(2.0)) * mu) / den)
}

/// Unprimed coefficients obtained from a primed equation by the scaling
/// `x' = c₁x, t' = c₃t, u' = c₅u`.
pub fn scaling_parameter_map(
    c1: CScalar,
    c3: CScalar,
    c5: CScalar,
    pde: &ScalarUPde,
) -> Result<ScalarUPde> {
    require(c1 * c3 * c5 != c(0.0), "scaling requires c1·c3·c5 ≠ 0")?;
    let c5n = crate::numjet::cpow(c5, pde.n)?;
    let diff = c3 / (c1 * c1) * c5n;
    Ok(ScalarUPde {
        n: pde.n,
        kappa: pde.kappa * diff,
        lam: pde.lam * diff,
        sigma: pde.sigma * c3,
        tau: pde.tau * c3 / c1 * c5n,
    })
}

fn critical_mu(n: CScalar) -> CScalar {
    (c(3.0) * n + c(4.0)) / (n + c(2.0))
}

/// `(3.17)`-type primed system coefficients `(λ₁, λ₂)`.
fn case3_lambdas(n: CScalar) -> (CScalar, CScalar) {
    let np1 = n + c(1.0);
    (n * n / (c(4.0) * np1 * np1), -n / (c(2.0) * np1 * np1))
}

fn radial_log() -> Equation {
    su(ScalarUPde::porous_medium(c(-1.0), c(1.0)))
}

fn log_diffusion() -> Equation {
    su(ScalarUPde::porous_medium(c(-1.0), c(0.0)))
}

fn n_excluding(p: &Params, excluded: &[f64], msg: &str) -> Result<CScalar> {
    let n = get(p, "n")?;
    require(!excluded.iter().any(|e| is(n, *e)), msg)?;
    Ok(n)
}

// ---------------------------------------------------------------------------
// builders

fn build_scale(p: &Params) -> Result<Built> {
    let (c1, c3, c5, n) = (get(p, "c1")?, get(p, "c3")?, get(p, "c5")?, get(p, "n")?);
    let primed = ScalarUPde::new(n, c(1.0), c(0.7), c(0.3), c(0.4));
    let unprimed = scaling_parameter_map(c1, c3, c5, &primed)?;
    Ok(Built {
        transform: scalar(
            param("c1") * x(),
            param("c3") * t(),
            param("c5") * u(),
            Var::U,
        )?,
        unprimed: su(unprimed),
        primed: su(primed),
    })
}

fn porous_self(p: &Params) -> Result<(Equation, Equation)> {
    let n = n_excluding(p, &[0.0], "requires n ≠ 0")?;
    let eq = su(ScalarUPde::porous_medium(n, get(p, "mu")?));
    Ok((eq, eq))
}

fn build_g1(p: &Params) -> Result<Built> {
    let (unprimed, primed) = porous_self(p)?;
    Ok(Built {
        transform: scalar(x(), t() + param("eps"), u(), Var::U)?,
        unprimed,
        primed,
    })
}

fn build_g2(p: &Params) -> Result<Built> {
    let (unprimed, primed) = porous_self(p)?;
    Ok(Built {
        transform: scalar(
            param("eps").exp() * x(),
            (2.0 * param("eps")).exp() * t(),
            u(),
            Var::U,
        )?,
        unprimed,
        primed,
    })
}

fn build_g3(p: &Params) -> Result<Built> {
    let (unprimed, primed) = porous_self(p)?;
    Ok(Built {
        transform: scalar(
            x(),
            (param("n") * param("eps")).exp() * t(),
            (-param("eps")).exp() * u(),
            Var::U,
        )?,
        unprimed,
        primed,
    })
}

fn g_sweep() -> Vec<Params> {
    let mut out = Vec::new();
    for n in N_SWEEP {
        for e in eps_values() {
            out.push(bind(&[("n", c(n)), ("mu", c(0.5)), ("eps", e)]));
        }
    }
    out
}

fn t210_transform() -> Result<Transform> {
    let k = || param("k");
    scalar(
        x().pow(k() + 1.0),
        t(),
        x().pow(-2.0 * k()) * u() / (k() + 1.0).pow(num(2.0)),
        Var::U,
    )
}

fn build_t210(p: &Params) -> Result<Built> {
    let k = get(p, "k")?;
    require(!is(k, -1.0), "requires k ≠ −1")?;
    Ok(Built {
        transform: t210_transform()?,
        unprimed: radial_log(),
        primed: radial_log(),
    })
}

fn t210_closed_form() -> ClosedFormIterate {
    let kp1 = || param("k") + 1.0;
    let power = || kp1().pow(param("N"));
    let tr = scalar(
        x().pow(power()),
        t(),
        kp1().pow(-2.0 * param("N")) * x().pow(-2.0 * power() + 2.0) * u(),
        Var::U,
    )
    .expect("closed-form iterate is well formed");
    ClosedFormIterate {
        transform: tr,
        steps_per_unit: 1,
    }
}

fn t210_cyclic() -> Vec<CyclicClaim> {
    vec![
        CyclicClaim {
            binding: bind(&[("k", c(-2.0))]),
            order: 2,
        },
        // k + 1 = i gives x' = x^i
        CyclicClaim {
            binding: bind(&[("k", ci(-1.0, 1.0))]),
            order: 4,
        },
    ]
}

fn nonzero_k(p: &Params) -> Result<()> {
    require(!is(get(p, "k")?, 0.0), "requires k ≠ 0")
}

fn build_t213(p: &Params) -> Result<Built> {
    nonzero_k(p)?;
    let k = || param("k");
    Ok(Built {
        transform: scalar(
            k() * x().ln(),
            t(),
            u() * x().powf(2.0) / k().pow(num(2.0)),
            Var::U,
        )?,
        unprimed: radial_log(),
        primed: log_diffusion(),
    })
}

fn build_t214(p: &Params) -> Result<Built> {
    nonzero_k(p)?;
    let k = || param("k");
    Ok(Built {
        transform: scalar(
            x().pow(k()) / t().sqrt(),
            t().ln(),
            u() * x().pow(2.0 * (1.0 - k())) / k().pow(num(2.0)),
            Var::U,
        )?,
        unprimed: radial_log(),
        primed: su(ScalarUPde::with_drift(c(-1.0), c(1.0), c(0.5))),
    })
}

fn build_t215(p: &Params) -> Result<Built> {
    nonzero_k(p)?;
    let k = || param("k");
    Ok(Built {
        transform: scalar(
            k() * x().ln() / t().sqrt(),
            t().ln(),
            u() * x().powf(2.0) / k().pow(num(2.0)),
            Var::U,
        )?,
        unprimed: radial_log(),
        primed: su(ScalarUPde::with_drift(c(-1.0), c(0.0), c(0.5))),
    })
}

fn build_t216(_: &Params) -> Result<Built> {
    Ok(Built {
        transform: scalar(
            x().exp() / t().sqrt(),
            t().ln(),
            u() * (-2.0 * x()).exp(),
            Var::U,
        )?,
        unprimed: log_diffusion(),
        primed: su(ScalarUPde::with_drift(c(-1.0), c(1.0), c(0.5))),
    })
}

fn build_t217(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[-2.0, -1.0, 0.0], "requires n ≠ −2, −1, 0")?;
    let np = || param("n");
    let a = || (2.0 * np() + 2.0) / (np() + 2.0);
    let inner = || x().pow(a()) + param("C");
    let eq = su(ScalarUPde::porous_medium(n, critical_mu(n)));
    Ok(Built {
        transform: scalar(
            inner().pow(1.0 / a()),
            t(),
            u() * x().pow(2.0 / (np() + 2.0)) * inner().pow(-1.0 / (np() + 1.0)),
            Var::U,
        )?,
        unprimed: eq,
        primed: eq,
    })
}

fn stretch_exponent() -> Expr {
    (param("mu") * param("n") + param("n") + 2.0) / (2.0 * param("n") + 2.0)
}

fn stretch_p() -> Expr {
    (1.0 / stretch_exponent()) * x().pow(stretch_exponent())
}

fn stretch_w() -> Expr {
    x().pow((param("mu") - 1.0) / (param("n") + 1.0)) * u()
}

fn stretch_params(p: &Params) -> Result<(CScalar, CScalar, CScalar)> {
    let n = n_excluding(p, &[-1.0], "requires n ≠ −1")?;
    let mu = get(p, "mu")?;
    require(n * mu + n + c(2.0) != c(0.0), "requires μn + n + 2 ≠ 0")?;
    Ok((n, mu, lambda_of_mu(n, mu)?))
}

fn build_t218(p: &Params) -> Result<Built> {
    let (n, mu, lam) = stretch_params(p)?;
    Ok(Built {
        transform: scalar(stretch_p(), t(), stretch_w(), Var::U)?,
        unprimed: su(ScalarUPde::porous_medium(n, mu)),
        primed: su(ScalarUPde::porous_medium(n, lam)),
    })
}

fn build_t222(p: &Params) -> Result<Built> {
    let (n, mu, lam) = stretch_params(p)?;
    Ok(Built {
        transform: scalar(stretch_p() / t().sqrt(), t().ln(), stretch_w(), Var::U)?,
        unprimed: su(ScalarUPde::porous_medium(n, mu)),
        primed: su(ScalarUPde::with_drift(n, lam, c(0.5))),
    })
}

fn stretch_sweep() -> Vec<Params> {
    let mut out = Vec::new();
    for n in N_SWEEP {
        for mu in [0.0, 0.5, 3.0] {
            if n * mu + n + 2.0 != 0.0 {
                out.push(bind(&[("n", c(n)), ("mu", c(mu))]));
            }
        }
    }
    out
}

fn build_t218s(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[0.0], "requires n ≠ 0")?;
    let eq = su(ScalarUPde::porous_medium(n, -(c(3.0) * n + c(4.0)) / n));
    Ok(Built {
        transform: scalar(1.0 / x(), t(), x().pow(-4.0 / param("n")) * u(), Var::U)?,
        unprimed: eq,
        primed: eq,
    })
}

fn t218s_cyclic() -> Vec<CyclicClaim> {
    n_sweep_excluding(&[])
        .into_iter()
        .map(|binding| CyclicClaim { binding, order: 2 })
        .collect()
}

fn build_t218d(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[-2.0, -1.0], "requires n ≠ −2, −1")?;
    let np = || param("n");
    Ok(Built {
        transform: scalar(
            (np() + 2.0) / (2.0 * np() + 2.0) * x().pow((2.0 * np() + 2.0) / (np() + 2.0)),
            t(),
            x().pow(2.0 / (np() + 2.0)) * u(),
            Var::U,
        )?,
        unprimed: su(ScalarUPde::porous_medium(n, critical_mu(n))),
        primed: su(ScalarUPde::porous_medium(n, c(0.0))),
    })
}

fn build_t220(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[0.0], "requires n ≠ 0")?;
    Ok(Built {
        transform: scalar(x().ln(), t(), x().pow(-2.0 / param("n")) * u(), Var::U)?,
        unprimed: su(ScalarUPde::porous_medium(n, -(n + c(2.0)) / n)),
        primed: su(ScalarUPde::boussinesq(n)?),
    })
}

fn self_dual_system() -> Result<Equation> {
    Ok(Equation::System(PotentialSystem::porous_potential(
        c(-2.0),
        c(-0.5),
    )?))
}

fn build_s37(_: &Params) -> Result<Built> {
    let e = || param("eps");
    let d = || 1.0 - e() * v();
    let tr = SystemTransform::new(
        x() / d().pow(num(2.0)),
        t(),
        u() * d().pow(num(3.0)) / (2.0 * e() * x().pow(num(2.0)) * u() + d()),
        v() / d(),
    )?
    .with_guard(Guard::new(d(), 0.1, "requires |1 − εv| ≥ 0.1"))
    .with_guard(Guard::new(
        2.0 * e() * x().pow(num(2.0)) * u() + d(),
        0.1,
        "requires |2εx²u + 1 − εv| ≥ 0.1",
    ));
    let eq = self_dual_system()?;
    Ok(Built {
        transform: Transform::System(tr),
        unprimed: eq,
        primed: eq,
    })
}

fn build_t312(p: &Params) -> Result<Built> {
    let eps = get(p, "eps")?;
    require(!is(eps, 0.0), "requires ε ≠ 0")?;
    let e = || param("eps");
    let primed = PotentialSystem::new(
        Weight::X,
        FluxForm::Power { a: eps, m: c(-1.0) },
        SourceForm::Const(c(2.0) * (eps - c(1.0))),
    )?;
    Ok(Built {
        transform: system(
            (t() + v() / 2.0).exp(),
            t(),
            4.0 * e() * (-(v() + 2.0 * t())).exp() / (u() * x().pow(num(2.0))),
            2.0 * (e() * x().ln() - t()),
        )?,
        unprimed: Equation::System(PotentialSystem::log_potential(c(1.0))),
        primed: Equation::System(primed),
    })
}

fn t312_closed_form() -> ClosedFormIterate {
    let en = || param("eps").pow(param("N"));
    let tr = system(
        x().pow(en()),
        t(),
        u() * x().pow(2.0 * (1.0 - en())),
        en() * v() + 2.0 * (en() - 1.0) * t(),
    )
    .expect("closed-form iterate is well formed");
    ClosedFormIterate {
        transform: tr,
        steps_per_unit: 2,
    }
}

fn t312_cyclic() -> Vec<CyclicClaim> {
    vec![
        CyclicClaim {
            binding: bind(&[("eps", c(1.0))]),
            order: 2,
        },
        CyclicClaim {
            binding: bind(&[("eps", c(-1.0))]),
            order: 4,
        },
        CyclicClaim {
            binding: bind(&[("eps", ci(0.0, 1.0))]),
            order: 8,
        },
    ]
}

fn build_t315(_: &Params) -> Result<Built> {
    let den = || 2.0 * x().pow(num(2.0)) * u() - v();
    let tr = SystemTransform::new(
        -x() / v().pow(num(2.0)),
        t(),
        u() * v().pow(num(3.0)) / den(),
        1.0 / v(),
    )?
    .with_guard(Guard::new(v(), 0.1, "requires |v| ≥ 0.1"))
    .with_guard(Guard::new(den(), 0.1, "requires |2x²u − v| ≥ 0.1"));
    let eq = self_dual_system()?;
    Ok(Built {
        transform: Transform::System(tr),
        unprimed: eq,
        primed: eq,
    })
}

fn t315_cyclic() -> Vec<CyclicClaim> {
    vec![CyclicClaim {
        binding: Params::new(),
        order: 2,
    }]
}

fn case3_p() -> Expr {
    v().pow(param("n") / (2.0 * param("n") + 2.0))
}

fn case3_s() -> Expr {
    let np = || param("n");
    np() * (np() + 2.0) / (4.0 * (np() + 1.0).pow(num(2.0)))
        * x().pow((2.0 * np() + 2.0) / (np() + 2.0))
}

fn build_t316(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[-2.0, -1.0, 0.0], "requires n ≠ −2, −1, 0")?;
    let (l1, l2) = case3_lambdas(n);
    let np = || param("n");
    Ok(Built {
        transform: system(
            case3_p(),
            t(),
            x().pow(-2.0 / (np() + 2.0)) * v().pow(1.0 / (np() + 1.0)) / u(),
            case3_s(),
        )?,
        unprimed: Equation::System(PotentialSystem::porous_potential(n, critical_mu(n))?),
        primed: Equation::System(PotentialSystem::new(
            Weight::X,
            FluxForm::Power {
                a: l1,
                m: -(n + c(2.0)),
            },
            SourceForm::Power {
                b: l2,
                q: -(n + c(1.0)),
            },
        )?),
    })
}

fn build_i312v(_: &Params) -> Result<Built> {
    let eq = sv(ScalarVPde::new(
        c(1.0),
        c(-1.0),
        c(0.0),
        c(0.0),
        c(-1.0),
        Weight::X,
    ));
    Ok(Built {
        transform: scalar((t() + v() / 2.0).exp(), t(), 2.0 * (x().ln() - t()), Var::V)?,
        unprimed: eq,
        primed: eq,
    })
}

fn build_i315v(_: &Params) -> Result<Built> {
    let eq = sv(ScalarVPde::new(
        c(1.0),
        c(-2.0),
        c(0.5),
        c(-1.0),
        c(0.0),
        Weight::X,
    ));
    let tr = ScalarTransform::new(-x() / v().pow(num(2.0)), t(), 1.0 / v(), Var::V)?
        .with_guard(Guard::new(v(), 0.1, "requires |v| ≥ 0.1"));
    Ok(Built {
        transform: Transform::Scalar(tr),
        unprimed: eq,
        primed: eq,
    })
}

fn integrated_critical(n: CScalar) -> ScalarVPde {
    ScalarVPde::new(c(1.0), n, -n / (n + c(2.0)), n + c(1.0), c(0.0), Weight::X)
}

fn build_i316v(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[-2.0, -1.0, 0.0], "requires n ≠ −2, −1, 0")?;
    let (l1, l2) = case3_lambdas(n);
    Ok(Built {
        transform: scalar(case3_p(), t(), case3_s(), Var::V)?,
        unprimed: sv(integrated_critical(n)),
        primed: sv(ScalarVPde::new(
            l1,
            -(n + c(2.0)),
            l2 - l1,
            -(n + c(1.0)),
            c(0.0),
            Weight::X,
        )),
    })
}

fn build_t43(p: &Params) -> Result<Built> {
    let cc = get(p, "c")?;
    require(!is(cc, 0.0), "requires c ≠ 0")?;
    Ok(Built {
        transform: system(
            v() + 2.0 * t(),
            t(),
            param("c") / (u() * x().pow(num(2.0))) + 1.0,
            v() + 2.0 * t() + param("c") * x().ln(),
        )?,
        unprimed: Equation::System(PotentialSystem::log_potential(c(1.0))),
        primed: Equation::System(PotentialSystem::new(
            Weight::One,
            FluxForm::Reciprocal { c: cc },
            SourceForm::None,
        )?),
    })
}

fn hodograph_s() -> Expr {
    let np = || param("n");
    (np() + 2.0) / (2.0 * np() + 2.0) * x().pow((2.0 * np() + 2.0) / (np() + 2.0))
}

fn build_t44(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[-2.0, -1.0], "requires n ≠ −2, −1")?;
    Ok(Built {
        transform: system(
            v(),
            t(),
            x().pow(-2.0 / (param("n") + 2.0)) / u(),
            hodograph_s(),
        )?,
        unprimed: Equation::System(PotentialSystem::porous_potential(n, critical_mu(n))?),
        primed: Equation::System(PotentialSystem::new(
            Weight::One,
            FluxForm::Power {
                a: c(1.0),
                m: -(n + c(2.0)),
            },
            SourceForm::None,
        )?),
    })
}

fn build_i44v(p: &Params) -> Result<Built> {
    let n = n_excluding(p, &[-2.0, -1.0], "requires n ≠ −2, −1")?;
    Ok(Built {
        transform: scalar(v(), t(), hodograph_s(), Var::V)?,
        unprimed: sv(integrated_critical(n)),
        primed: sv(ScalarVPde::power_flux(-(n + c(2.0)))),
    })
}

fn build_h4(_: &Params) -> Result<Built> {
    Ok(Built {
        transform: scalar(v(), t(), x(), Var::V)?,
        unprimed: sv(ScalarVPde::heat()),
        primed: sv(ScalarVPde::power_flux(c(-2.0))),
    })
}

fn build_hgen(p: &Params) -> Result<Built> {
    let m = get(p, "m")?;
    Ok(Built {
        transform: scalar(v(), t(), x(), Var::V)?,
        unprimed: sv(ScalarVPde::power_flux(m)),
        primed: sv(ScalarVPde::power_flux(c(-2.0) - m)),
    })
}

// ---------------------------------------------------------------------------
// the inventory

fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            id: "SCALE",
            kind: CaseKind::ScalarU,
            anchor: "linear scalings of x, t, u rescale the diffusivity and drift coefficients and can be factored out",
            free_params: &["c1", "c3", "c5", "n"],
            constraints: &["c1·c3·c5 ≠ 0", "shifts c2 = c6 = 0"],
            sweep: || {
                let mut out = Vec::new();
                for n in [2.0, -3.0] {
                    for (a, b, d) in [(2.0, 3.0, 0.5), (0.5, 1.5, 2.0)] {
                        out.push(bind(&[("c1", c(a)), ("c3", c(b)), ("c5", c(d)), ("n", c(n))]));
                    }
                }
                out
            },
            cyclic: none,
            closed_form: None,
            build: build_scale,
        },
        CatalogEntry {
            id: "G1",
            kind: CaseKind::ScalarU,
            anchor: "time translation, finite form of the generator (0, 1, 0)",
            free_params: &["eps", "mu", "n"],
            constraints: &["n ≠ 0"],
            sweep: g_sweep,
            cyclic: none,
            closed_form: None,
            build: build_g1,
        },
        CatalogEntry {
            id: "G2",
            kind: CaseKind::ScalarU,
            anchor: "parabolic scaling, finite form of the generator (x, 2t, 0)",
            free_params: &["eps", "mu", "n"],
            constraints: &["n ≠ 0"],
            sweep: g_sweep,
            cyclic: none,
            closed_form: None,
            build: build_g2,
        },
        CatalogEntry {
            id: "G3",
            kind: CaseKind::ScalarU,
            anchor: "amplitude scaling, finite form of the generator (0, nt, −u)",
            free_params: &["eps", "mu", "n"],
            constraints: &["n ≠ 0"],
            sweep: g_sweep,
            cyclic: none,
            closed_form: None,
            build: build_g3,
        },
        CatalogEntry {
            id: "H4",
            kind: CaseKind::ScalarV,
            anchor: "hodograph exchange x' = v, v' = x between the heat equation and v_t = v_x^-2 v_xx",
            free_params: &[],
            constraints: &[],
            sweep: single,
            cyclic: none,
            closed_form: None,
            build: build_h4,
        },
        CatalogEntry {
            id: "HGEN",
            kind: CaseKind::ScalarV,
            anchor: "general hodograph: v_t = F(v_x) v_xx and v_t = v_x^-2 F(1/v_x) v_xx with F = v_x^m",
            free_params: &["m"],
            constraints: &[],
            sweep: || [-3.0, -1.0, 1.0, 2.0].iter().map(|m| bind(&[("m", c(*m))])).collect(),
            cyclic: none,
            closed_form: None,
            build: build_hgen,
        },
        CatalogEntry {
            id: "I3.12v",
            kind: CaseKind::ScalarV,
            anchor: "integrated n = −1, μ = 1 equation v_t = (x/v_x) v_xx − 1 is invariant under x' = e^(t+v/2), v' = 2(ln x − t)",
            free_params: &[],
            constraints: &[],
            sweep: single,
            cyclic: none,
            closed_form: None,
            build: build_i312v,
        },
        CatalogEntry {
            id: "I3.15v",
            kind: CaseKind::ScalarV,
            anchor: "integrated n = −2, μ = −1/2 equation is invariant under x' = −x/v², v' = 1/v",
            free_params: &[],
            constraints: &["v ≠ 0"],
            sweep: single,
            cyclic: none,
            closed_form: None,
            build: build_i315v,
        },
        CatalogEntry {
            id: "I3.16v",
            kind: CaseKind::ScalarV,
            anchor: "integrated form of the critical-μ equation mapped onto the integrated λ₁, λ₂ equation",
            free_params: &["n"],
            constraints: &["n ≠ −2, −1, 0"],
            sweep: || n_sweep_excluding(&[-2.0]),
            cyclic: none,
            closed_form: None,
            build: build_i316v,
        },
        CatalogEntry {
            id: "I4.4v",
            kind: CaseKind::ScalarV,
            anchor: "integrated critical-μ equation mapped onto v_t = v_x^-(n+2) v_xx by x' = v",
            free_params: &["n"],
            constraints: &["n ≠ −2, −1"],
            sweep: || n_sweep_excluding(&[-2.0]),
            cyclic: none,
            closed_form: None,
            build: build_i44v,
        },
        CatalogEntry {
            id: "S3.7",
            kind: CaseKind::System,
            anchor: "one-parameter potential symmetry group of the n = −2, μ = −1/2 potential system",
            free_params: &["eps"],
            constraints: &["|1 − εv| ≥ 0.1", "|2εx²u + 1 − εv| ≥ 0.1"],
            sweep: eps_sweep,
            cyclic: none,
            closed_form: None,
            build: build_s37,
        },
        CatalogEntry {
            id: "T2.10",
            kind: CaseKind::ScalarU,
            anchor: "power-law self-map of the n = −1, μ = 1 equation; cyclic of order N when (k+1)^N = 1",
            free_params: &["k"],
            constraints: &["k ≠ −1"],
            sweep: k_sweep,
            cyclic: t210_cyclic,
            closed_form: Some(t210_closed_form),
            build: build_t210,
        },
        CatalogEntry {
            id: "T2.13",
            kind: CaseKind::ScalarU,
            anchor: "logarithmic map linking the n = −1, μ = 1 equation with u_t = (u_x/u)_x",
            free_params: &["k"],
            constraints: &["k ≠ 0"],
            sweep: k_sweep,
            cyclic: none,
            closed_form: None,
            build: build_t213,
        },
        CatalogEntry {
            id: "T2.14",
            kind: CaseKind::ScalarU,
            anchor: "similarity-variable map x' = x^k/√t, t' = ln t onto the drifted log-diffusion equation with radial term",
            free_params: &["k"],
            constraints: &["k ≠ 0"],
            sweep: k_sweep,
            cyclic: none,
            closed_form: None,
            build: build_t214,
        },
        CatalogEntry {
            id: "T2.15",
            kind: CaseKind::ScalarU,
            anchor: "similarity-variable map x' = k ln x/√t, t' = ln t onto the drifted log-diffusion equation",
            free_params: &["k"],
            constraints: &["k ≠ 0"],
            sweep: k_sweep,
            cyclic: none,
            closed_form: None,
            build: build_t215,
        },
        CatalogEntry {
            id: "T2.16",
            kind: CaseKind::ScalarU,
            anchor: "exponential similarity map from u_t = (u_x/u)_x onto the drifted log-diffusion equation",
            free_params: &[],
            constraints: &[],
            sweep: single,
            cyclic: none,
            closed_form: None,
            build: build_t216,
        },
        CatalogEntry {
            id: "T2.17",
            kind: CaseKind::ScalarU,
            anchor: "finite form of the extra symmetry at μ = (3n+4)/(n+2)",
            free_params: &["C", "n"],
            constraints: &["n ≠ −2, −1, 0"],
            sweep: || {
                let mut out = Vec::new();
                for n in [-3.0, 1.0, 2.0] {
                    for cc in [0.0, 1.0] {
                        out.push(bind(&[("C", c(cc)), ("n", c(n))]));
                    }
                }
                out
            },
            cyclic: none,
            closed_form: None,
            build: build_t217,
        },
        CatalogEntry {
            id: "T2.18",
            kind: CaseKind::ScalarU,
            anchor: "power-law stretching x' ∝ x^((μn+n+2)/(2n+2)) changes the radial coefficient μ into λ(μ)",
            free_params: &["mu", "n"],
            constraints: &["n ≠ −1", "μn + n + 2 ≠ 0"],
            sweep: stretch_sweep,
            cyclic: none,
            closed_form: None,
            build: build_t218,
        },
        CatalogEntry {
            id: "T2.18d",
            kind: CaseKind::ScalarU,
            anchor: "at μ = (3n+4)/(n+2) the stretching reaches the plain nonlinear diffusion equation (λ = 0)",
            free_params: &["n"],
            constraints: &["n ≠ −2, −1"],
            sweep: || n_sweep_excluding(&[-2.0]),
            cyclic: none,
            closed_form: None,
            build: build_t218d,
        },
        CatalogEntry {
            id: "T2.18s",
            kind: CaseKind::ScalarU,
            anchor: "inversion x' = 1/x, u' = x^(-4/n) u is a self-map at the fixed point λ = μ = −(3n+4)/n; cyclic of order 2",
            free_params: &["n"],
            constraints: &["n ≠ 0"],
            sweep: || n_sweep_excluding(&[]),
            cyclic: t218s_cyclic,
            closed_form: None,
            build: build_t218s,
        },
        CatalogEntry {
            id: "T2.20",
            kind: CaseKind::ScalarU,
            anchor: "logarithmic map onto the groundwater (Boussinesq) equation at μ = −(n+2)/n",
            free_params: &["n"],
            constraints: &["n ≠ 0"],
            sweep: || n_sweep_excluding(&[]),
            cyclic: none,
            closed_form: None,
            build: build_t220,
        },
        CatalogEntry {
            id: "T2.22",
            kind: CaseKind::ScalarU,
            anchor: "stretching combined with similarity variables x'/√t, ln t onto the drifted λ(μ) equation",
            free_params: &["mu", "n"],
            constraints: &["n ≠ −1", "μn + n + 2 ≠ 0"],
            sweep: stretch_sweep,
            cyclic: none,
            closed_form: None,
            build: build_t222,
        },
        CatalogEntry {
            id: "T3.12",
            kind: CaseKind::System,
            anchor: "potential transformation of the n = −1, μ = 1 system; cyclic of order 2N when ε^N = 1",
            free_params: &["eps"],
            constraints: &["ε ≠ 0"],
            sweep: eps_sweep,
            cyclic: t312_cyclic,
            closed_form: Some(t312_closed_form),
            build: build_t312,
        },
        CatalogEntry {
            id: "T3.15",
            kind: CaseKind::System,
            anchor: "discrete potential self-map of the n = −2, μ = −1/2 system; cyclic of order 2",
            free_params: &[],
            constraints: &["v ≠ 0", "2x²u − v ≠ 0"],
            sweep: single,
            cyclic: t315_cyclic,
            closed_form: None,
            build: build_t315,
        },
        CatalogEntry {
            id: "T3.16",
            kind: CaseKind::System,
            anchor: "potential transformation of the critical-μ system onto the λ₁, λ₂ potential system",
            free_params: &["n"],
            constraints: &["n ≠ −2, −1, 0"],
            sweep: || n_sweep_excluding(&[-2.0]),
            cyclic: none,
            closed_form: None,
            build: build_t316,
        },
        CatalogEntry {
            id: "T4.3",
            kind: CaseKind::System,
            anchor: "potential map from the n = −1, μ = 1 system onto the unweighted system with flux c/(u'−1)",
            free_params: &["c"],
            constraints: &["c ≠ 0"],
            sweep: || [1.0, 2.0].iter().map(|k| bind(&[("c", c(*k))])).collect(),
            cyclic: none,
            closed_form: None,
            build: build_t43,
        },
        CatalogEntry {
            id: "T4.4",
            kind: CaseKind::System,
            anchor: "hodograph-type potential map from the critical-μ system onto the unweighted system with flux u'^-(n+2)",
            free_params: &["n"],
            constraints: &["n ≠ −2, −1"],
            sweep: || n_sweep_excluding(&[-2.0]),
            cyclic: none,
            closed_form: None,
            build: build_t44,
        },
    ]
}

pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDescriptor {
    pub id: &'static str,
    pub kind: CaseKind,
    pub anchor: &'static str,
    pub free_params: Vec<&'static str>,
}

impl Catalog {
    pub fn new() -> Self {
        let mut entries = entries();
        entries.sort_by(|a, b| a.id.cmp(b.id));
        Catalog { entries }
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn list_cases(&self) -> Vec<CaseDescriptor> {
        self.entries
            .iter()
            .map(|e| CaseDescriptor {
                id: e.id,
                kind: e.kind,
                anchor: e.anchor,
                free_params: e.free_params.to_vec(),
            })
            .collect()
    }

    pub fn entry(&self, id: &str) -> Result<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id).ok_or_else(|| {
            let suggestion = self
                .entries
                .iter()
                .map(|e| {
                    (
                        strsim::levenshtein(&id.to_lowercase(), &e.id.to_lowercase()),
                        e.id,
                    )
                })
                .min()
                .filter(|(d, _)| *d <= 3)
                .map(|(_, s)| s.to_string());
            Error::UnknownCase {
                id: id.to_string(),
                suggestion,
            }
        })
    }

    pub fn instantiate_case(&self, id: &str, params: &Params) -> Result<VerificationCase> {
        self.entry(id)?.instantiate(params)
    }

    /// Machine-readable inventory: every entry with its serialized
    /// expressions, equations, constraints and default sweep.
    pub fn export(&self) -> Result<Value> {
        let mut out = Vec::new();
        for e in &self.entries {
            let sweep = e.all_bindings();
            let case = e.instantiate(&sweep[0])?;
            let components: serde_json::Map<String, Value> = case
                .transform
                .components()
                .into_iter()
                .map(|(k, ex)| (k.to_string(), Value::String(ex.to_string())))
                .collect();
            out.push(json!({
                "id": e.id,
                "kind": e.kind.name(),
                "anchor": e.anchor,
                "free_params": e.free_params,
                "constraints": e.constraints,
                "transform": components,
                "guards": case.transform.guards().iter().map(|g| json!({
                    "expr": g.expr.to_string(), "min_abs": g.min_abs, "note": g.note,
                })).collect::<Vec<_>>(),
                "example_binding": param_label(&case.params),
                "unprimed": case.unprimed.to_string(),
                "primed": case.primed.to_string(),
                "sweep": sweep.iter().map(param_label).collect::<Vec<_>>(),
                "cyclic": e.cyclic_claims().iter().map(|cl| json!({
                    "binding": param_label(&cl.binding), "order": cl.order,
                })).collect::<Vec<_>>(),
                "closed_form_iterate": e.closed_form.map(|f| {
                    let cf = f();
                    json!({
                        "steps_per_unit": cf.steps_per_unit,
                        "transform": cf.transform.components().into_iter()
                            .map(|(k, ex)| (k.to_string(), Value::String(ex.to_string())))
                            .collect::<serde_json::Map<_, _>>(),
                    })
                }),
            }));
        }
        Ok(
            json!({ "entries": out, "solutions": solutions().iter().map(|s| json!({
            "id": s.id, "expr": s.expr.to_string(), "satisfies": s.satisfies.to_string(),
        })).collect::<Vec<_>>() }),
        )
    }
}

// ---------------------------------------------------------------------------
// closed-form solutions

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    pub id: &'static str,
    /// Expression in `x` and `t`.
    pub expr: Expr,
    pub satisfies: Equation,
    pub requires_positive_x: bool,
    pub requires_positive_t: bool,
}

impl ClosedFormSolution {
    pub fn new(id: &'static str, expr: Expr, satisfies: Equation) -> Self {
        ClosedFormSolution {
            id,
            expr,
            satisfies,
            requires_positive_x: false,
            requires_positive_t: false,
        }
    }

    /// Value and jets at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> Result<ScalarJetPoint> {
        if self.requires_positive_x && x <= 0.0 {
            return Err(Error::Domain(format!("{} requires x > 0", self.id)));
        }
        if self.requires_positive_t && t <= 0.0 {
            return Err(Error::Domain(format!("{} requires t > 0", self.id)));
        }
        let env = Env::new()
            .with(Var::X, Jet::seed(c(x), Seed::X))
            .with(Var::T, Jet::seed(c(t), Seed::T));
        let j = self.expr.eval(&env, &Params::new(), &mut 0)?;
        Ok(ScalarJetPoint {
            x: c(x),
            t: c(t),
            w: j.v,
            w_x: j.dx,
            w_t: j.dt,
            w_xx: j.dxx,
        })
    }

    pub fn value_at(&self, x: CScalar, t: CScalar) -> Result<CScalar> {
        let env = Env::new().with(Var::X, x).with(Var::T, t);
        self.expr.eval(&env, &Params::new(), &mut 0)
    }
}

pub fn solutions() -> Vec<ClosedFormSolution> {
    let s1 = ClosedFormSolution {
        requires_positive_t: true,
        ..ClosedFormSolution::new(
            "S1",
            2.0 * t() / (x().pow(num(2.0)) + 4.0 * t().pow(num(2.0))),
            log_diffusion(),
        )
    };
    let s2 = ClosedFormSolution {
        requires_positive_t: true,
        requires_positive_x: true,
        ..ClosedFormSolution::new(
            "S2",
            2.0 * t() / (x().pow(num(2.0)) * (x().ln().pow(num(2.0)) + 4.0 * t().pow(num(2.0)))),
            radial_log(),
        )
    };
    let s3 = ClosedFormSolution::new(
        "S3",
        x().pow(num(2.0)) / 2.0,
        sv(ScalarVPde::new(
            c(1.0),
            c(-1.0),
            c(0.0),
            c(0.0),
            c(-1.0),
            Weight::X,
        )),
    );
    vec![s1, s2, s3]
}

pub fn solution(id: &str) -> Result<ClosedFormSolution> {
    solutions()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownCase {
            id: id.to_string(),
            suggestion: None,
        })
}

pub fn solution_eval(id: &str, x: f64, t: f64) -> Result<ScalarJetPoint> {
    solution(id)?.eval(x, t)
}
