//! Claim checking: equivalence by jet pushforward, cyclic orders, solution
//! mapping, the point-transformation relation and non-degeneracy, plus
//! suite aggregation and report output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{
    param_label, solution, CaseKind, Catalog, ClosedFormSolution, SamplingDomain, VerificationCase,
};
use crate::error::{Error, Result};
use crate::expr::Params;
use crate::numjet::{c, ci, CScalar};
use crate::pde::{complete_scalar, complete_system, ScalarJetPoint, SystemJetPoint};
use crate::transform::{iterate_point, Point, ScalarTransform, Transform, TOL_ND};

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_CYCLIC_TOL: f64 = 1e-10;
pub const DEFAULT_SOLUTION_TOL: f64 = 1e-9;
pub const SOLUTION_RESIDUAL_TOL: f64 = 1e-11;
/// Residual a tampered control must exceed to count as a genuine failure.
pub const NEGATIVE_CONTROL_FLOOR: f64 = 1e-2;
/// Samples used by closed-form iterate checks.
pub const CLOSED_FORM_SAMPLES: usize = 50;
const MAX_FAILURES: usize = 10;
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Real,
    ComplexPerturbed,
}

impl SampleMode {
    pub fn name(self) -> &'static str {
        match self {
            SampleMode::Real => "real",
            SampleMode::ComplexPerturbed => "complex-perturbed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(SampleMode::Real),
            "complex-perturbed" | "complex" => Ok(SampleMode::ComplexPerturbed),
            other => Err(Error::Configuration(format!(
                "unknown mode `{other}` (expected real or complex-perturbed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub seed: u64,
    pub count: usize,
    /// Overrides the case's own sampling domain when set.
    pub ranges: Option<SamplingDomain>,
    /// Magnitude band for free derivatives; the sign is drawn separately.
    pub free_band: (f64, f64),
    pub mode: SampleMode,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: DEFAULT_SEED,
            count: DEFAULT_SAMPLES,
            ranges: None,
            free_band: (0.5, 2.0),
            mode: SampleMode::Real,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(key: &str) -> u64 {
    key.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Independent random substream for `key` under `seed`.
pub fn substream(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(fnv1a(key))))
}

struct Sampler {
    rng: ChaCha8Rng,
    domain: SamplingDomain,
    band: (f64, f64),
    mode: SampleMode,
}

impl Sampler {
    fn new(cfg: &SamplingConfig, domain: SamplingDomain, key: &str) -> Self {
        Sampler {
            rng: substream(cfg.seed, key),
            domain: cfg.ranges.unwrap_or(domain),
            band: cfg.free_band,
            mode: cfg.mode,
        }
    }

    fn uniform(&mut self, (a, b): (f64, f64)) -> CScalar {
        c(if a == b {
            a
        } else {
            self.rng.random_range(a..=b)
        })
    }

    fn free(&mut self) -> CScalar {
        let mag = self.rng.random_range(self.band.0..=self.band.1);
        c(if self.rng.random_bool(0.5) { mag } else { -mag })
    }

    fn free_first(&mut self) -> CScalar {
        let base = self.free();
        match self.mode {
            SampleMode::Real => base,
            SampleMode::ComplexPerturbed => {
                let im = if self.rng.random_bool(0.5) { 0.1 } else { -0.1 };
                base + ci(0.0, im)
            }
        }
    }

    fn point(&mut self) -> Point {
        let d = self.domain;
        let x = self.uniform(d.x);
        let t = self.uniform(d.t);
        let u = self.uniform(d.u);
        let v = self.uniform(d.v);
        Point::new(x, t, u, v)
    }

    /// Draws base points until `accept` succeeds.
    fn admissible(&mut self, accept: impl Fn(&Point) -> bool) -> Result<Point> {
        for _ in 0..MAX_REJECTIONS {
            let p = self.point();
            if accept(&p) {
                return Ok(p);
            }
        }
        Err(Error::Configuration(
            "sampling domain incompatible with transformation domain".into(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub point: BTreeMap<String, [f64; 2]>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub case_id: String,
    pub params: BTreeMap<String, [f64; 2]>,
    pub samples: usize,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub branch_warnings: u32,
    pub failures: Vec<FailureRecord>,
    #[serde(skip)]
    pub elapsed: f64,
    #[serde(skip)]
    pub anchor: String,
    /// Evaluation and domain errors met while sampling.
    #[serde(skip)]
    pub errors: Vec<String>,
}

impl CheckReport {
    pub fn param_label(&self) -> String {
        self.params
            .iter()
            .map(|(k, [re, im])| format!("{k}={}", crate::pde::fmt_c(ci(*re, *im))))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn text_line(&self) -> String {
        let mut line = format!(
            "{} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.case_id
        );
        let label = self.param_label();
        if !label.is_empty() {
            let _ = write!(line, " {label}");
        }
        let _ = write!(line, " max_rel={:.1e}", self.max_rel_residual);
        if self.branch_warnings > 0 {
            let _ = write!(line, " branch_warnings={}", self.branch_warnings);
        }
        if let Some(err) = self.errors.first() {
            let _ = write!(line, " error=\"{err}\"");
        }
        if !self.anchor.is_empty() {
            let _ = write!(line, " (anchor: \"{}\")", self.anchor);
        }
        line
    }
}

fn pair(z: CScalar) -> [f64; 2] {
    [z.re, z.im]
}

fn params_json(p: &Params) -> BTreeMap<String, [f64; 2]> {
    p.iter().map(|(k, v)| (k.clone(), pair(*v))).collect()
}

fn point_json<'a>(
    fields: impl IntoIterator<Item = (&'a str, CScalar)>,
) -> BTreeMap<String, [f64; 2]> {
    fields
        .into_iter()
        .map(|(k, v)| (k.to_string(), pair(v)))
        .collect()
}

struct Acc {
    report: CheckReport,
    start: Instant,
}

impl Acc {
    fn new(case_id: String, params: &Params, tolerance: f64, anchor: &str) -> Self {
        Acc {
            report: CheckReport {
                case_id,
                params: params_json(params),
                samples: 0,
                max_abs_residual: 0.0,
                max_rel_residual: 0.0,
                tolerance,
                pass: true,
                branch_warnings: 0,
                failures: Vec::new(),
                elapsed: 0.0,
                anchor: anchor.to_string(),
                errors: Vec::new(),
            },
            start: Instant::now(),
        }
    }

    fn record(&mut self, point: BTreeMap<String, [f64; 2]>, abs: f64, rel: f64) {
        let r = &mut self.report;
        r.samples += 1;
        let (abs, rel) = if rel.is_nan() {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (abs, rel)
        };
        r.max_abs_residual = r.max_abs_residual.max(abs);
        r.max_rel_residual = r.max_rel_residual.max(rel);
        if rel > r.tolerance && r.failures.len() < MAX_FAILURES {
            r.failures.push(FailureRecord {
                point,
                residual: rel,
            });
        }
    }

    fn error(&mut self, point: BTreeMap<String, [f64; 2]>, err: &Error) {
        self.report.errors.push(err.to_string());
        self.record(point, f64::INFINITY, f64::INFINITY);
    }

    fn finish(mut self) -> CheckReport {
        let r = &mut self.report;
        r.pass = r.errors.is_empty() && r.samples > 0 && r.max_rel_residual <= r.tolerance;
        r.elapsed = self.start.elapsed().as_secs_f64();
        self.report
    }
}

fn rel(abs: f64, scale: f64) -> f64 {
    abs / (scale + f64::EPSILON)
}

fn dep_name(kind: CaseKind) -> &'static str {
    if kind == CaseKind::ScalarV {
        "v"
    } else {
        "u"
    }
}

fn scalar_point_json(kind: CaseKind, pt: &ScalarJetPoint) -> BTreeMap<String, [f64; 2]> {
    let d = dep_name(kind);
    point_json([
        ("x", pt.x),
        ("t", pt.t),
        (d, pt.w),
        (&*format!("{d}_x"), pt.w_x),
        (&*format!("{d}_t"), pt.w_t),
        (&*format!("{d}_xx"), pt.w_xx),
    ])
}

fn scalar_transform(case: &VerificationCase) -> Result<&ScalarTransform> {
    match &case.transform {
        Transform::Scalar(s) => Ok(s),
        Transform::System(_) => Err(Error::Unsupported(format!(
            "{} is a system transformation",
            case.id
        ))),
    }
}

fn check_key(case: &VerificationCase, check: &str) -> String {
    format!("{}/{check}|{}", case.id, case.param_label())
}

/// Relative primed residual at one unprimed jet (completed here).
fn scalar_sample(
    case: &VerificationCase,
    tr: &ScalarTransform,
    raw: &ScalarJetPoint,
) -> Result<(f64, f64, u32, ScalarJetPoint)> {
    let pt = complete_scalar(&case.unprimed, raw)?;
    debug_assert_eq!(case.unprimed.scalar_residual(&pt)?, c(0.0));
    let pushed = tr.pushforward(&pt)?;
    let res = case.primed.scalar_residual(&pushed.value)?.norm();
    let scale = case.primed.scalar_scale(&pushed.value)?;
    Ok((res, rel(res, scale), pushed.branch_warnings, pt))
}

fn system_sample(
    case: &VerificationCase,
    raw: &SystemJetPoint,
) -> Result<(f64, f64, u32, SystemJetPoint)> {
    let Transform::System(tr) = &case.transform else {
        return Err(Error::Unsupported(format!(
            "{} is not a system case",
            case.id
        )));
    };
    let pt = complete_system(case.unprimed.as_system()?, raw)?;
    let pushed = tr.pushforward(&pt)?;
    let primed = case.primed.as_system()?;
    let (r1, r2) = primed.residuals(&pushed.value)?;
    let (s1, s2) = primed.scales(&pushed.value)?;
    let abs = r1.norm().max(r2.norm());
    let relv = rel(r1.norm(), s1).max(rel(r2.norm(), s2));
    Ok((abs, relv, pushed.branch_warnings, pt))
}

/// Pushes random on-equation jets of the unprimed equation forward and
/// measures the primed residual.
pub fn check_equivalence(case: &VerificationCase, cfg: &SamplingConfig) -> CheckReport {
    check_equivalence_tol(case, cfg, DEFAULT_TOL)
}

pub fn check_equivalence_tol(
    case: &VerificationCase,
    cfg: &SamplingConfig,
    tol: f64,
) -> CheckReport {
    let mut acc = Acc::new(
        format!("{}/equivalence", case.id),
        &case.params,
        tol,
        case.anchor,
    );
    let mut sm = Sampler::new(cfg, case.domain, &check_key(case, "equivalence"));
    for _ in 0..cfg.count {
        let base = match sm.admissible(|p| admits_scalar_or_system(case, p)) {
            Ok(p) => p,
            Err(e) => {
                acc.error(BTreeMap::new(), &e);
                break;
            }
        };
        match case.kind {
            CaseKind::ScalarU | CaseKind::ScalarV => {
                let raw = ScalarJetPoint {
                    x: base.x,
                    t: base.t,
                    w: if case.kind == CaseKind::ScalarV {
                        base.v
                    } else {
                        base.u
                    },
                    w_x: sm.free_first(),
                    w_t: c(0.0),
                    w_xx: sm.free(),
                };
                let out = scalar_transform(case).and_then(|tr| scalar_sample(case, tr, &raw));
                match out {
                    Ok((abs, r, warn, pt)) => {
                        acc.report.branch_warnings += warn;
                        acc.record(scalar_point_json(case.kind, &pt), abs, r);
                    }
                    Err(e) => acc.error(scalar_point_json(case.kind, &raw), &e),
                }
            }
            CaseKind::System => {
                let raw = SystemJetPoint {
                    x: base.x,
                    t: base.t,
                    u: base.u,
                    u_x: sm.free_first(),
                    u_t: sm.free(),
                    v: base.v,
                    v_x: c(0.0),
                    v_t: c(0.0),
                };
                match system_sample(case, &raw) {
                    Ok((abs, r, warn, pt)) => {
                        acc.report.branch_warnings += warn;
                        acc.record(point_json(pt.fields()), abs, r);
                    }
                    Err(e) => acc.error(point_json(raw.fields()), &e),
                }
            }
        }
    }
    acc.finish()
}

fn admits_scalar_or_system(case: &VerificationCase, p: &Point) -> bool {
    let p = match case.kind {
        // scalar-v maps read the dependent value from `v`
        CaseKind::ScalarV => Point::new(p.x, p.t, p.v, p.v),
        _ => *p,
    };
    case.transform.admits(&p).is_ok()
}

/// Replays a single equivalence sample. `at` holds `x`, `t`, the dependent
/// value and its free derivatives; time derivatives fixed by the unprimed
/// equation are recomputed.
pub fn replay(
    case: &VerificationCase,
    at: &BTreeMap<String, CScalar>,
    tol: f64,
) -> Result<CheckReport> {
    let get = |k: &str| -> Result<CScalar> {
        at.get(k)
            .copied()
            .ok_or_else(|| Error::Parse(format!("--at is missing `{k}`")))
    };
    let mut acc = Acc::new(
        format!("{}/equivalence", case.id),
        &case.params,
        tol,
        case.anchor,
    );
    match case.kind {
        CaseKind::ScalarU | CaseKind::ScalarV => {
            let d = dep_name(case.kind);
            let pick =
                |name: &str| get(&format!("{d}{name}")).or_else(|_| get(&format!("w{name}")));
            let raw = ScalarJetPoint {
                x: get("x")?,
                t: get("t")?,
                w: pick("")?,
                w_x: pick("_x")?,
                w_t: c(0.0),
                w_xx: pick("_xx")?,
            };
            match scalar_sample(case, scalar_transform(case)?, &raw) {
                Ok((abs, r, warn, pt)) => {
                    acc.report.branch_warnings += warn;
                    acc.record(scalar_point_json(case.kind, &pt), abs, r);
                }
                Err(e) => acc.error(scalar_point_json(case.kind, &raw), &e),
            }
        }
        CaseKind::System => {
            let raw = SystemJetPoint {
                x: get("x")?,
                t: get("t")?,
                u: get("u")?,
                u_x: get("u_x")?,
                u_t: get("u_t").unwrap_or(c(1.0)),
                v: get("v")?,
                v_x: c(0.0),
                v_t: c(0.0),
            };
            match system_sample(case, &raw) {
                Ok((abs, r, warn, pt)) => {
                    acc.report.branch_warnings += warn;
                    acc.record(point_json(pt.fields()), abs, r);
                }
                Err(e) => acc.error(point_json(raw.fields()), &e),
            }
        }
    }
    Ok(acc.finish())
}

fn base_point(case: &VerificationCase, p: Point) -> Point {
    match case.kind {
        CaseKind::ScalarV => Point::new(p.x, p.t, p.v, p.v),
        _ => p,
    }
}

fn coords_json(p: &Point) -> BTreeMap<String, [f64; 2]> {
    point_json([("x", p.x), ("t", p.t), ("u", p.u), ("v", p.v)])
}

/// Applies the transformation `order` times and measures the distance to
/// the starting point. Iterations that leave the domain or touch a branch
/// cut fall back to the closed-form iterate when one exists (flagged).
pub fn check_cyclic(
    case: &VerificationCase,
    order: u32,
    cfg: &SamplingConfig,
    tol: f64,
) -> CheckReport {
    let mut acc = Acc::new(
        format!("{}/cyclic", case.id),
        &case.params,
        tol,
        case.anchor,
    );
    let mut sm = Sampler::new(cfg, case.domain, &check_key(case, "cyclic"));
    for _ in 0..cfg.count {
        let start = match sm.admissible(|p| case.transform.admits(&base_point(case, *p)).is_ok()) {
            Ok(p) => base_point(case, p),
            Err(e) => {
                acc.error(BTreeMap::new(), &e);
                break;
            }
        };
        let iterated = iterate_point(&case.transform, &start, order);
        let end = match (&iterated, &case.closed_form) {
            (Ok(f), _) if f.branch_warnings == 0 => Ok(f.value),
            (_, Some(cf)) if order.is_multiple_of(cf.steps_per_unit) => {
                acc.report.branch_warnings += 1;
                cf.bound(&case.params, order / cf.steps_per_unit)
                    .apply(&start)
                    .map(|f| f.value)
            }
            (Ok(f), _) => {
                acc.report.branch_warnings += f.branch_warnings;
                Ok(f.value)
            }
            (Err(e), _) => Err(e.clone()),
        };
        match end {
            Ok(end) => {
                let d = end.rel_distance(&start);
                acc.record(coords_json(&start), d, d);
            }
            Err(e) => acc.error(coords_json(&start), &e),
        }
    }
    acc.finish()
}

/// Compares the closed-form `steps·N`-fold iterate with pointwise iteration
/// for `N = 1..=max_n`.
pub fn check_closed_form(
    case: &VerificationCase,
    max_n: u32,
    cfg: &SamplingConfig,
    tol: f64,
) -> Result<CheckReport> {
    let cf = case.closed_form.as_ref().ok_or_else(|| {
        Error::Unsupported(format!("{} declares no closed-form iterate", case.id))
    })?;
    let mut acc = Acc::new(
        format!("{}/closed-form", case.id),
        &case.params,
        tol,
        case.anchor,
    );
    let mut sm = Sampler::new(cfg, case.domain, &check_key(case, "closed-form"));
    for _ in 0..cfg.count {
        let start = match sm.admissible(|p| case.transform.admits(&base_point(case, *p)).is_ok()) {
            Ok(p) => base_point(case, p),
            Err(e) => {
                acc.error(BTreeMap::new(), &e);
                break;
            }
        };
        let mut worst = 0.0f64;
        let mut warn = 0;
        let mut failed = None;
        for n in 1..=max_n {
            let direct = cf.bound(&case.params, n).apply(&start);
            let stepped = iterate_point(&case.transform, &start, cf.steps_per_unit * n);
            match (direct, stepped) {
                (Ok(a), Ok(b)) => {
                    warn += a.branch_warnings + b.branch_warnings;
                    worst = worst.max(b.value.rel_distance(&a.value));
                }
                (Err(e), _) | (_, Err(e)) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        acc.report.branch_warnings += warn;
        match failed {
            Some(e) => acc.error(coords_json(&start), &e),
            None => acc.record(coords_json(&start), worst, worst),
        }
    }
    Ok(acc.finish())
}

/// Rectangular `nx × nt` grid including the end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x: (f64, f64),
    pub t: (f64, f64),
    pub nx: usize,
    pub nt: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let lin = |(a, b): (f64, f64), n: usize, i: usize| {
            if n <= 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.nt);
        for i in 0..self.nx {
            for j in 0..self.nt {
                out.push((lin(self.x, self.nx, i), lin(self.t, self.nt, j)));
            }
        }
        out
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            x: (1.2, 3.0),
            t: (0.5, 2.0),
            nx: 20,
            nt: 20,
        }
    }
}

/// Residual of a closed-form solution's own equation on a grid.
pub fn check_solution_residual(sol: &ClosedFormSolution, grid: &Grid, tol: f64) -> CheckReport {
    let mut acc = Acc::new(format!("{}/solution", sol.id), &Params::new(), tol, "");
    for (x, t) in grid.points() {
        let at = point_json([("x", c(x)), ("t", c(t))]);
        let out = sol.eval(x, t).and_then(|pt| {
            let res = sol.satisfies.scalar_residual(&pt)?.norm();
            Ok((res, rel(res, sol.satisfies.scalar_scale(&pt)?)))
        });
        match out {
            Ok((abs, r)) => acc.record(at, abs, r),
            Err(e) => acc.error(at, &e),
        }
    }
    acc.finish()
}

/// Checks that the transformation carries `unprimed` onto `primed`: the
/// pushed jets satisfy the primed equation, and inverting the dependent
/// component of `primed(P, Q)` gives back `unprimed`.
pub fn check_solution_map(
    case: &VerificationCase,
    unprimed: &ClosedFormSolution,
    primed: &ClosedFormSolution,
    grid: &Grid,
    tol: f64,
) -> Result<CheckReport> {
    let tr = scalar_transform(case)?;
    let mut acc = Acc::new(
        format!("{}/solution-map", case.id),
        &case.params,
        tol,
        case.anchor,
    );
    for (x, t) in grid.points() {
        let at = point_json([("x", c(x)), ("t", c(t))]);
        let out = (|| -> Result<(f64, f64, u32)> {
            let jets = unprimed.eval(x, t)?;
            let pushed = tr.pushforward(&jets)?;
            let res = case.primed.scalar_residual(&pushed.value)?.norm();
            let r_a = rel(res, case.primed.scalar_scale(&pushed.value)?);
            let image = tr.apply(&Point::scalar(x, t, jets.w.re))?;
            let target = primed.value_at(image.value.x, image.value.t)?;
            let back = tr.invert_dependent(c(x), c(t), target)?;
            let diff = (back - jets.w).norm();
            let r_b = rel(diff, jets.w.norm());
            Ok((
                res.max(diff),
                r_a.max(r_b),
                pushed.branch_warnings + image.branch_warnings,
            ))
        })();
        match out {
            Ok((abs, r, warn)) => {
                acc.report.branch_warnings += warn;
                acc.record(at, abs, r);
            }
            Err(e) => acc.error(at, &e),
        }
    }
    Ok(acc.finish())
}

pub fn check_solution_map_ids(
    case: &VerificationCase,
    unprimed: &str,
    primed: &str,
    grid: &Grid,
    tol: f64,
) -> Result<CheckReport> {
    check_solution_map(case, &solution(unprimed)?, &solution(primed)?, grid, tol)
}

/// Evaluates both sides of
/// `P_x R_u H = P_x Q_t H' + P_t R_x + P_t R_u u_x − P_x R_t`
/// at jets whose derivatives are all free.
pub fn check_theorem_relation(
    case: &VerificationCase,
    cfg: &SamplingConfig,
    tol: f64,
) -> Result<CheckReport> {
    if !case.relation_applicable() {
        return Err(Error::Unsupported(format!(
            "{}: the relation needs a scalar u transformation with x' independent of u",
            case.id
        )));
    }
    let tr = scalar_transform(case)?;
    let mut acc = Acc::new(
        format!("{}/relation", case.id),
        &case.params,
        tol,
        case.anchor,
    );
    let mut sm = Sampler::new(cfg, case.domain, &check_key(case, "relation"));
    for _ in 0..cfg.count {
        let base = match sm.admissible(|p| case.transform.admits(p).is_ok()) {
            Ok(p) => p,
            Err(e) => {
                acc.error(BTreeMap::new(), &e);
                break;
            }
        };
        let pt = ScalarJetPoint {
            x: base.x,
            t: base.t,
            w: base.u,
            w_x: sm.free_first(),
            w_t: sm.free(),
            w_xx: sm.free(),
        };
        let out = (|| -> Result<(f64, f64, u32)> {
            let h = case.unprimed.scalar_rhs(&pt)?;
            let pushed = tr.pushforward(&pt)?;
            let h_p = case.primed.scalar_rhs(&pushed.value)?;
            let jets = tr.component_jets(pt.x, pt.t, pt.w)?;
            let [p, q, r] = jets.value;
            let lhs = p.dx * r.dw * h;
            let terms = [
                p.dx * q.dt * h_p,
                p.dt * r.dx,
                p.dt * r.dw * pt.w_x,
                -(p.dx * r.dt),
            ];
            let rhs: CScalar = terms.iter().sum();
            let abs = (lhs - rhs).norm();
            let scale = lhs.norm() + terms.iter().map(|z| z.norm()).sum::<f64>();
            Ok((
                abs,
                rel(abs, scale),
                pushed.branch_warnings + jets.branch_warnings,
            ))
        })();
        match out {
            Ok((abs, r, warn)) => {
                acc.report.branch_warnings += warn;
                acc.record(scalar_point_json(case.kind, &pt), abs, r);
            }
            Err(e) => acc.error(scalar_point_json(case.kind, &pt), &e),
        }
    }
    Ok(acc.finish())
}

/// Samples the Jacobian witness and the potentiality flag. The residual is
/// `TOL_ND / |witness|`, raised to at least `2` when the potentiality flag
/// differs from `expect_potential`; the tolerance is `1`.
pub fn check_nondegeneracy(
    case: &VerificationCase,
    cfg: &SamplingConfig,
    expect_potential: bool,
) -> Result<CheckReport> {
    let sys = match &case.transform {
        Transform::System(s) => s.clone(),
        Transform::Scalar(s) => s.lift_to_system()?,
    };
    let mut acc = Acc::new(
        format!("{}/nondegeneracy", case.id),
        &case.params,
        1.0,
        case.anchor,
    );
    let mut sm = Sampler::new(cfg, case.domain, &check_key(case, "nondegeneracy"));
    for _ in 0..cfg.count {
        let p = match sm.admissible(|p| case.transform.admits(&base_point(case, *p)).is_ok()) {
            Ok(p) => p,
            Err(e) => {
                acc.error(BTreeMap::new(), &e);
                break;
            }
        };
        match sys.check_nondegeneracy(&p) {
            Ok(nd) => {
                let mut r = TOL_ND / nd.jacobian.norm();
                if nd.potential != expect_potential {
                    r = r.max(2.0);
                }
                acc.record(coords_json(&p), nd.jacobian.norm(), r);
            }
            Err(e) => acc.error(coords_json(&p), &e),
        }
    }
    Ok(acc.finish())
}

// ---------------------------------------------------------------------------
// suite

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub cyclic_tol: f64,
    /// Restricts the run to these catalog ids.
    pub cases: Option<Vec<String>>,
    pub mode: SampleMode,
    pub workers: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            cyclic_tol: DEFAULT_CYCLIC_TOL,
            cases: None,
            mode: SampleMode::Real,
            workers: None,
        }
    }
}

impl SuiteConfig {
    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SuiteConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigLine {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::ConfigLine {
                    line,
                    msg: e.to_string(),
                })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Configuration(format!("invalid {what} `{value}`"));
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "samples" => {
                self.samples = value.parse().map_err(|_| bad("sample count"))?;
                if self.samples == 0 {
                    return Err(bad("sample count"));
                }
            }
            "tol" => self.tol = parse_positive(value).ok_or_else(|| bad("tolerance"))?,
            "cyclic_tol" => {
                self.cyclic_tol = parse_positive(value).ok_or_else(|| bad("tolerance"))?
            }
            "cases" => {
                let ids: Vec<String> = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                self.cases = if ids.is_empty() || value == "all" { None } else { Some(ids) };
            }
            "mode" => self.mode = SampleMode::parse(value)?,
            "workers" => {
                let w: usize = value.parse().map_err(|_| bad("worker count"))?;
                self.workers = if w == 0 { None } else { Some(w) };
            }
            other => {
                return Err(Error::Configuration(format!(
                    "unknown key `{other}` (expected seed, samples, tol, cyclic_tol, cases, mode, workers)"
                )))
            }
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "tol = {:e}", self.tol);
        let _ = writeln!(s, "cyclic_tol = {:e}", self.cyclic_tol);
        let cases = self
            .cases
            .as_ref()
            .map_or("all".to_string(), |c| c.join(", "));
        let _ = writeln!(s, "cases = {cases}");
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "workers = {}", self.workers.unwrap_or(0));
        s
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            count: self.samples,
            mode: self.mode,
            ..SamplingConfig::default()
        }
    }
}

fn parse_positive(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| *v > 0.0 && v.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub master_seed: u64,
    pub cases: Vec<CheckReport>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn from_reports(master_seed: u64, mut cases: Vec<CheckReport>) -> Self {
        cases.sort_by(|a, b| {
            (a.case_id.as_str(), a.param_label()).cmp(&(b.case_id.as_str(), b.param_label()))
        });
        let pass = cases.iter().all(|c| c.pass);
        SuiteReport {
            master_seed,
            cases,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.cases {
            let _ = writeln!(s, "{}", c.text_line());
        }
        let failed = self.cases.iter().filter(|c| !c.pass).count();
        let _ = writeln!(
            s,
            "{} {} checks, {failed} failed (seed {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.cases.len(),
            self.master_seed
        );
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        reports_csv(&self.cases)
    }
}

pub fn reports_csv(reports: &[CheckReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "case_id",
        "params",
        "samples",
        "max_abs_residual",
        "max_rel_residual",
        "tolerance",
        "pass",
        "branch_warnings",
        "failures",
    ])
    .map_err(io)?;
    for r in reports {
        w.write_record([
            r.case_id.clone(),
            r.param_label(),
            r.samples.to_string(),
            format!("{:e}", r.max_abs_residual),
            format!("{:e}", r.max_rel_residual),
            format!("{:e}", r.tolerance),
            r.pass.to_string(),
            r.branch_warnings.to_string(),
            r.failures.len().to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Clone)]
enum Job {
    Equivalence(VerificationCase),
    Cyclic(VerificationCase, u32),
    ClosedForm(VerificationCase),
    Relation(VerificationCase),
    Nondegeneracy(VerificationCase, bool),
    SolutionMap(VerificationCase, &'static str, &'static str),
    Solution(&'static str),
}

fn run_job(job: &Job, cfg: &SuiteConfig) -> CheckReport {
    let s = cfg.sampling();
    let fallback = |id: String, case: Option<&VerificationCase>, e: Error| {
        let params = case.map(|c| c.params.clone()).unwrap_or_default();
        let mut acc = Acc::new(id, &params, cfg.tol, case.map_or("", |c| c.anchor));
        acc.error(BTreeMap::new(), &e);
        acc.finish()
    };
    match job {
        Job::Equivalence(case) => check_equivalence_tol(case, &s, cfg.tol),
        Job::Cyclic(case, order) => check_cyclic(case, *order, &s, cfg.cyclic_tol),
        Job::ClosedForm(case) => {
            let s = SamplingConfig {
                count: CLOSED_FORM_SAMPLES.min(cfg.samples),
                ..s
            };
            check_closed_form(case, 3, &s, cfg.cyclic_tol)
                .unwrap_or_else(|e| fallback(format!("{}/closed-form", case.id), Some(case), e))
        }
        Job::Relation(case) => check_theorem_relation(case, &s, cfg.tol)
            .unwrap_or_else(|e| fallback(format!("{}/relation", case.id), Some(case), e)),
        Job::Nondegeneracy(case, expect) => check_nondegeneracy(case, &s, *expect)
            .unwrap_or_else(|e| fallback(format!("{}/nondegeneracy", case.id), Some(case), e)),
        Job::SolutionMap(case, a, b) => check_solution_map_ids(
            case,
            a,
            b,
            &Grid::default(),
            DEFAULT_SOLUTION_TOL.max(cfg.tol),
        )
        .unwrap_or_else(|e| fallback(format!("{}/solution-map", case.id), Some(case), e)),
        Job::Solution(id) => match solution(id) {
            Ok(sol) => {
                let grid = if *id == "S1" {
                    Grid {
                        x: (-2.0, 2.0),
                        ..Grid::default()
                    }
                } else {
                    Grid::default()
                };
                check_solution_residual(&sol, &grid, SOLUTION_RESIDUAL_TOL)
            }
            Err(e) => fallback(format!("{id}/solution"), None, e),
        },
    }
}

fn suite_jobs(catalog: &Catalog, cfg: &SuiteConfig) -> Result<(Vec<Job>, Vec<CheckReport>)> {
    let selected: Option<Vec<&str>> = cfg
        .cases
        .as_ref()
        .map(|v| v.iter().map(|s| s.as_str()).collect());
    if let Some(ids) = &selected {
        for id in ids {
            if solution(id).is_err() {
                catalog.entry(id)?;
            }
        }
    }
    let wanted = |id: &str| selected.as_ref().is_none_or(|ids| ids.contains(&id));
    let mut jobs = Vec::new();
    let mut failed = Vec::new();
    for entry in catalog.entries().iter().filter(|e| wanted(e.id)) {
        for binding in entry.all_bindings() {
            let case = match entry.instantiate(&binding) {
                Ok(c) => c,
                Err(e) => {
                    let mut acc = Acc::new(
                        format!("{}/equivalence", entry.id),
                        &binding,
                        cfg.tol,
                        entry.anchor,
                    );
                    acc.error(BTreeMap::new(), &e);
                    failed.push(acc.finish());
                    continue;
                }
            };
            jobs.push(Job::Equivalence(case.clone()));
            if let Some(order) = case.cyclic_order {
                jobs.push(Job::Cyclic(case.clone(), order));
            }
            if case.closed_form.is_some() {
                jobs.push(Job::ClosedForm(case.clone()));
            }
            if case.relation_applicable() {
                jobs.push(Job::Relation(case.clone()));
            }
            match case.kind {
                CaseKind::System => jobs.push(Job::Nondegeneracy(case.clone(), true)),
                CaseKind::ScalarU => jobs.push(Job::Nondegeneracy(case.clone(), false)),
                CaseKind::ScalarV => {}
            }
            if case.id == "T2.13" && case.params.get("k") == Some(&c(1.0)) {
                jobs.push(Job::SolutionMap(case, "S2", "S1"));
            }
        }
    }
    for id in ["S1", "S2", "S3"] {
        if selected.as_ref().is_none_or(|ids| ids.contains(&id)) {
            jobs.push(Job::Solution(id));
        }
    }
    Ok((jobs, failed))
}

/// Runs every applicable check over the selected catalog entries and their
/// default sweeps. Output is independent of the worker count.
pub fn run_suite(catalog: &Catalog, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let (jobs, mut reports) = suite_jobs(catalog, cfg)?;
    let run = || jobs.par_iter().map(|j| run_job(j, cfg)).collect::<Vec<_>>();
    let done = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Configuration(e.to_string()))?
            .install(run),
        None => run(),
    };
    reports.extend(done);
    Ok(SuiteReport::from_reports(cfg.seed, reports))
}

/// Formats a bound parameter map the way reports print it.
pub fn describe_params(p: &Params) -> String {
    param_label(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::bind;

    fn case(id: &str, p: &[(&str, CScalar)]) -> VerificationCase {
        Catalog::new().instantiate_case(id, &bind(p)).unwrap()
    }

    #[test]
    fn substreams_differ_by_key_and_repeat_by_seed() {
        let a: u64 = substream(1, "a").random();
        let b: u64 = substream(1, "b").random();
        let a2: u64 = substream(1, "a").random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn equivalence_log_map() {
        let r = check_equivalence(&case("T2.13", &[("k", c(1.0))]), &SamplingConfig::default());
        assert!(r.pass, "{r:?}");
        assert_eq!(r.samples, DEFAULT_SAMPLES);
    }

    #[test]
    fn equivalence_boussinesq() {
        let r = check_equivalence(
            &case("T2.20", &[("n", c(-2.0))]),
            &SamplingConfig::default(),
        );
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn complex_mode_passes() {
        let cfg = SamplingConfig {
            mode: SampleMode::ComplexPerturbed,
            count: 30,
            ..SamplingConfig::default()
        };
        for (id, p) in [("T2.10", ("k", c(2.0))), ("T3.12", ("eps", c(-1.0)))] {
            let r = check_equivalence(&case(id, &[p]), &cfg);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn cyclic_orders() {
        let cfg = SamplingConfig::default();
        let r = check_cyclic(
            &case("T2.10", &[("k", c(-2.0))]),
            2,
            &cfg,
            DEFAULT_CYCLIC_TOL,
        );
        assert!(r.pass, "{r:?}");
        let r = check_cyclic(
            &case("T3.12", &[("eps", ci(0.0, 1.0))]),
            8,
            &cfg,
            DEFAULT_CYCLIC_TOL,
        );
        assert!(r.pass, "{r:?}");
        let r = check_cyclic(
            &case("T2.10", &[("k", c(-2.0))]),
            3,
            &cfg,
            DEFAULT_CYCLIC_TOL,
        );
        assert!(!r.pass);
    }

    #[test]
    fn relation_and_its_inapplicability() {
        let cfg = SamplingConfig::default();
        let r =
            check_theorem_relation(&case("T2.13", &[("k", c(1.0))]), &cfg, DEFAULT_TOL).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(check_theorem_relation(&case("H4", &[]), &cfg, DEFAULT_TOL).is_err());
    }

    #[test]
    fn solution_map_log() {
        let r = check_solution_map_ids(
            &case("T2.13", &[("k", c(1.0))]),
            "S2",
            "S1",
            &Grid::default(),
            1e-9,
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.samples, 400);
    }

    #[test]
    fn nondegeneracy_flags() {
        let cfg = SamplingConfig {
            count: 20,
            ..SamplingConfig::default()
        };
        let r = check_nondegeneracy(&case("T3.15", &[]), &cfg, true).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_nondegeneracy(&case("T2.16", &[]), &cfg, false).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_nondegeneracy(&case("T2.16", &[]), &cfg, true).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn replay_matches_sample() {
        let cs = case("T2.14", &[("k", c(2.0))]);
        let r = check_equivalence(
            &cs,
            &SamplingConfig {
                count: 1,
                ..SamplingConfig::default()
            },
        );
        let mut at = BTreeMap::new();
        for (k, v) in [
            ("x", 1.1),
            ("t", 0.9),
            ("u", 1.3),
            ("u_x", -0.7),
            ("u_xx", 1.9),
        ] {
            at.insert(k.to_string(), c(v));
        }
        let one = replay(&cs, &at, DEFAULT_TOL).unwrap();
        assert!(r.pass && one.pass);
        at.remove("u_x");
        assert!(replay(&cs, &at, DEFAULT_TOL).is_err());
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = SuiteConfig {
            seed: 7,
            samples: 12,
            tol: 1e-9,
            cases: Some(vec!["T2.10".into(), "H4".into()]),
            mode: SampleMode::ComplexPerturbed,
            workers: Some(3),
            ..SuiteConfig::default()
        };
        assert_eq!(SuiteConfig::parse(&cfg.to_config_string()).unwrap(), cfg);
        assert_eq!(
            SuiteConfig::parse(&SuiteConfig::default().to_config_string()).unwrap(),
            SuiteConfig::default()
        );
        match SuiteConfig::parse("seed = 1\n# c\n\nbogus = 2\n") {
            Err(Error::ConfigLine { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            SuiteConfig::parse("samples 3"),
            Err(Error::ConfigLine { line: 1, .. })
        ));
        assert!(SuiteConfig::parse("tol = -1").is_err());
    }

    #[test]
    fn suite_subset_only_contains_selection() {
        let cfg = SuiteConfig {
            samples: 10,
            cases: Some(vec!["T2.10".into()]),
            ..SuiteConfig::default()
        };
        let rep = run_suite(&Catalog::new(), &cfg).unwrap();
        assert!(rep.pass);
        assert!(rep.cases.iter().all(|c| c.case_id.starts_with("T2.10/")));
        let eq = rep
            .cases
            .iter()
            .filter(|c| c.case_id == "T2.10/equivalence")
            .count();
        assert_eq!(eq, 4);
        let bad = SuiteConfig {
            cases: Some(vec!["T9.99".into()]),
            ..cfg
        };
        assert!(matches!(
            run_suite(&Catalog::new(), &bad),
            Err(Error::UnknownCase { .. })
        ));
    }

    #[test]
    fn text_line_format() {
        let r = check_equivalence(
            &case("T2.13", &[("k", c(1.0))]),
            &SamplingConfig {
                count: 5,
                ..SamplingConfig::default()
            },
        );
        let line = r.text_line();
        assert!(
            line.starts_with("PASS T2.13/equivalence k=1 max_rel="),
            "{line}"
        );
        assert!(line.contains("(anchor: \""));
    }
}
