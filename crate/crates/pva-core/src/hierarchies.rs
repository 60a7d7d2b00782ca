//! Constructors for the shipped hierarchies and their golden checks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Zero};

use crate::diffalg::{Coefficient, Exponent, Expression, Monomial, VectorExpr};
use crate::diffop::{DiffOp, MatrixDiffOp};
use crate::error::{Error, Result};
use crate::lenard::{
    flows_commute, lenard_extend_with, pairwise_brackets_vanish, HierarchyRecord, LenardOptions, Mode, SolverPlan,
    Step, Verification,
};
use crate::pva::{CheckFailure, CheckReport};
use crate::syntax::{parse_vector, SessionConfig};
use crate::varcalc::{exactify, functional_is_zero, integrate_total, is_closed, variational_derivative, LocalFunctional};

const GOLDEN: &str = include_str!("../fixtures/golden.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HierarchyName {
    Kdv,
    DispersionlessKdv,
    LinearKdv,
    Hd,
    Cnw,
    CnwHd,
    Nls,
    Pkdv,
    Kn,
}

impl HierarchyName {
    pub const ALL: [HierarchyName; 9] = [
        HierarchyName::Kdv,
        HierarchyName::DispersionlessKdv,
        HierarchyName::LinearKdv,
        HierarchyName::Hd,
        HierarchyName::Cnw,
        HierarchyName::CnwHd,
        HierarchyName::Nls,
        HierarchyName::Pkdv,
        HierarchyName::Kn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HierarchyName::Kdv => "kdv",
            HierarchyName::DispersionlessKdv => "dispersionless_kdv",
            HierarchyName::LinearKdv => "linear_kdv",
            HierarchyName::Hd => "hd",
            HierarchyName::Cnw => "cnw",
            HierarchyName::CnwHd => "cnw_hd",
            HierarchyName::Nls => "nls",
            HierarchyName::Pkdv => "pkdv",
            HierarchyName::Kn => "kn",
        }
    }

    /// Names of the coefficients the hierarchy depends on.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            HierarchyName::Kdv | HierarchyName::Cnw | HierarchyName::Pkdv => &["c"],
            HierarchyName::Hd | HierarchyName::CnwHd => &["alpha", "beta"],
            _ => &[],
        }
    }

    pub fn default_depth(self) -> u32 {
        match self {
            HierarchyName::Kdv | HierarchyName::Cnw | HierarchyName::Nls => 4,
            HierarchyName::DispersionlessKdv => 8,
            HierarchyName::LinearKdv => 9,
            HierarchyName::Hd | HierarchyName::Pkdv => 3,
            HierarchyName::CnwHd | HierarchyName::Kn => 2,
        }
    }

    pub fn ell(self) -> usize {
        match self {
            HierarchyName::Cnw | HierarchyName::CnwHd | HierarchyName::Nls => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for HierarchyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HierarchyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        HierarchyName::ALL
            .into_iter()
            .find(|n| n.as_str() == norm)
            .ok_or_else(|| Error::Unsupported(format!("unknown hierarchy `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchySpec {
    pub name: HierarchyName,
    /// Bindings for every parameter of the hierarchy; symbolic by default.
    pub params: BTreeMap<String, Coefficient>,
    /// Last index generated.
    pub depth: u32,
}

impl HierarchySpec {
    pub fn new(name: HierarchyName) -> Self {
        let params = name.param_names().iter().map(|p| (p.to_string(), Coefficient::param(p))).collect();
        HierarchySpec { name, params, depth: name.default_depth() }
    }

    pub fn depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    pub fn bind(mut self, param: &str, value: Coefficient) -> Result<Self> {
        match self.params.get_mut(param) {
            Some(slot) => *slot = value,
            None => {
                return Err(Error::Precondition(format!(
                    "{} takes parameters {:?}, not `{param}`",
                    self.name,
                    self.name.param_names()
                )))
            }
        }
        Ok(self)
    }

    fn p(&self, name: &str) -> Expression {
        Expression::constant(self.params[name].clone())
    }
}

fn u(n: u32) -> Expression {
    Expression::gen(0, n)
}

fn v(n: u32) -> Expression {
    Expression::gen(1, n)
}

fn pow(var: usize, order: u32, p: i64, q: i64) -> Expression {
    Expression::gen_pow(var, order, p, q)
}

fn vec1(e: Expression) -> VectorExpr {
    VectorExpr(vec![e])
}

/// H = u′ + 2u∂ + c∂³.
fn virasoro(c: Expression) -> MatrixDiffOp {
    MatrixDiffOp::scalar(DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2)), (3, c)]))
}

pub fn generate(spec: &HierarchySpec) -> Result<HierarchyRecord> {
    if spec.depth < 1 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    if let Some(k) = spec.params.keys().find(|k| !spec.name.param_names().contains(&k.as_str())) {
        return Err(Error::Precondition(format!("{} has no parameter `{k}`", spec.name)));
    }
    let n = spec.depth;
    let ham = LenardOptions::default();
    let mut rec = match spec.name {
        HierarchyName::Nls => nls(n)?,
        _ => {
            let (h, k, plan, seeds, opts) = wiring(spec, ham)?;
            let mut rec = lenard_extend_with(&h, &k, &plan, &seeds, n, &opts)?;
            rec.verification.extra.extend(extra_checks(spec, &rec));
            rec
        }
    };
    rec.name = spec.name.as_str().into();
    rec.params = spec.params.iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
    Ok(rec)
}

type Wiring = (MatrixDiffOp, MatrixDiffOp, SolverPlan, Vec<VectorExpr>, LenardOptions);

/// (H, K), solver plan, seeds and options for the Lenard-driven hierarchies.
pub fn wiring(spec: &HierarchySpec, ham: LenardOptions) -> Result<Wiring> {
    let d = |k| DiffOp::d(k);
    let sym = LenardOptions { mode: Mode::Symplectic, ..ham.clone() };
    Ok(match spec.name {
        HierarchyName::Kdv => (
            virasoro(spec.p("c")),
            MatrixDiffOp::scalar(d(1)),
            SolverPlan::ComponentwiseDerivative,
            vec![vec1(Expression::one())],
            ham,
        ),
        HierarchyName::DispersionlessKdv => (
            virasoro(Expression::zero()),
            MatrixDiffOp::scalar(d(1)),
            SolverPlan::ComponentwiseDerivative,
            vec![vec1(Expression::one())],
            ham,
        ),
        HierarchyName::LinearKdv => (
            MatrixDiffOp::scalar(d(3)),
            MatrixDiffOp::scalar(d(1)),
            SolverPlan::ComponentwiseDerivative,
            vec![vec1(u(0))],
            LenardOptions { first_index: 1, ..ham },
        ),
        HierarchyName::Hd => {
            let h = DiffOp::from_terms([(1, spec.p("alpha")), (3, spec.p("beta"))]);
            let plan = SolverPlan::ConjugatedChain(vec![pow(0, 0, 1, 2).scale_int(2), pow(0, 0, 1, 2)]);
            (MatrixDiffOp::scalar(h), plan.operator(1)?, plan, vec![vec1(pow(0, 0, -1, 2))], ham)
        }
        HierarchyName::Cnw => {
            let h = MatrixDiffOp::from_rows(vec![
                vec![DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2)), (3, spec.p("c"))]), DiffOp::term(v(0), 1)],
                vec![DiffOp::from_terms([(0, v(1)), (1, v(0))]), DiffOp::zero()],
            ])?;
            let plan = SolverPlan::CnwStructured;
            let seeds = vec![
                VectorExpr(vec![Expression::zero(), Expression::one()]),
                VectorExpr(vec![Expression::one(), Expression::zero()]),
            ];
            (h, plan.operator(2)?, plan, seeds, ham)
        }
        HierarchyName::CnwHd => {
            let h = MatrixDiffOp::diagonal(vec![
                DiffOp::from_terms([(1, spec.p("alpha")), (3, spec.p("beta"))]),
                DiffOp::term(spec.p("alpha"), 1),
            ]);
            let plan = SolverPlan::CnwHdStructured;
            let seeds = vec![
                VectorExpr(vec![Expression::zero(), Expression::one()]),
                VectorExpr(vec![pow(1, 0, -1, 1), -&(&u(0) * &pow(1, 0, -2, 1))]),
            ];
            (h, plan.operator(2)?, plan, seeds, ham)
        }
        HierarchyName::Pkdv => {
            let t = DiffOp::from_terms([(0, u(2)), (1, u(1).scale_int(2)), (3, spec.p("c"))]);
            (
                MatrixDiffOp::scalar(t),
                MatrixDiffOp::scalar(d(1)),
                SolverPlan::ComponentwiseDerivative,
                vec![vec1(Expression::one())],
                sym,
            )
        }
        HierarchyName::Kn => {
            let w = DiffOp::mul_by(pow(0, 1, -1, 1));
            let t = d(1).compose(&w).compose(&d(1)).compose(&w).compose(&d(1));
            let plan = SolverPlan::ConjugatedChain(vec![pow(0, 1, -1, 1), pow(0, 1, -1, 1)]);
            (MatrixDiffOp::scalar(t), plan.operator(1)?, plan, vec![vec1(u(1))], sym)
        }
        HierarchyName::Nls => return Err(Error::Unsupported("nls has a dedicated recursion".into())),
    })
}

fn extra_checks(spec: &HierarchySpec, rec: &HierarchyRecord) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    if spec.name == HierarchyName::Hd {
        let ok = rec.steps.iter().all(|s| {
            s.element.is_zero() || s.element.homogeneous_degree() == Some(Exponent::new(-2 * s.n as i64 - 1, 2))
        });
        out.insert("degree_law".into(), ok);
        if !(spec.params["alpha"].is_zero() && spec.params["beta"].is_zero()) {
            out.insert("nonvanishing".into(), rec.steps.iter().all(|s| !s.element.is_zero()));
        }
    }
    out
}

fn is_polynomial(e: &Expression) -> bool {
    e.terms().all(|(m, _)| m.factors().iter().all(|(_, p)| p.is_integer() && *p >= Exponent::zero()))
}

fn integrate_exact(y: &Expression) -> Result<Expression> {
    let (g, c) = integrate_total(y)?;
    if !c.is_zero() {
        return Err(Error::NotExact(format!("{y} has constant part {c}")));
    }
    Ok(g)
}

/// J = [[0, −1], [1, 0]].
pub fn nls_j() -> MatrixDiffOp {
    MatrixDiffOp::from_rows(vec![
        vec![DiffOp::zero(), DiffOp::mul_by(Expression::int(-1))],
        vec![DiffOp::identity(), DiffOp::zero()],
    ])
    .expect("2x2")
}

/// The (f_n, g_n) recursion from (f₀, g₀) = (0, 1/4), zero integration constants.
fn nls(depth: u32) -> Result<HierarchyRecord> {
    let (uu, vv) = (u(0), v(0));
    let mut fs = vec![Expression::zero()];
    let mut gs = vec![Expression::ratio(1, 4)];
    let mut divisible = true;
    for n in 0..=depth as usize {
        let at = |e: Error| Error::AtStep { step: n as u32 + 1, source: Box::new(e) };
        let a = (&fs[n] + &gs[n].total_derivative()).div(&uu).map_err(at)?;
        let b = fs[n].div(&vv).map_err(at)?;
        divisible &= is_polynomial(&a) && is_polynomial(&b);
        let f_next = &(&vv * &a.total_derivative()) + &(&(&uu * &vv).scale_int(4) * &gs[n]);
        let dg = -&(&(&uu * &b.total_derivative()) + &(&vv * &a.total_derivative()));
        gs.push(integrate_exact(&dg).map_err(at)?);
        fs.push(f_next);
    }
    let big_f = |n: usize| -> Result<VectorExpr> {
        Ok(VectorExpr(vec![fs[n].div(&vv)?, (&fs[n] + &gs[n].total_derivative()).div(&uu)?]))
    };
    let j = nls_j();
    let mut steps = Vec::new();
    for n in 0..=depth as usize {
        let f = big_f(n)?;
        let flow = j.apply(&big_f(n + 1)?)?;
        let (density, density_error) = match exactify(&f) {
            Ok(h) => (Some(h), None),
            Err(e) => (None, Some(e.to_string())),
        };
        steps.push(Step { n: n as u32, element: f.clone(), form: f, density, density_error, flow });
    }
    let mut v = Verification { recursion: true, densities: true, ..Default::default() };
    v.closed_flags = steps.iter().map(|s| is_closed(&s.form).closed).collect();
    let mut hamiltonian = true;
    for (s, next) in steps.iter().zip(steps.iter().skip(1)) {
        // P^n = J F^{n+1}
        v.recursion &= j.apply(&next.element).map(|x| x == s.flow).unwrap_or(false);
    }
    for s in &steps {
        if let Some(d) = &s.density {
            v.densities &= variational_derivative(d, 2) == s.form;
        }
        hamiltonian &= s.density.is_some();
    }
    let dens: Vec<LocalFunctional> = steps.iter().filter_map(|s| s.density.clone().map(LocalFunctional)).collect();
    v.involution_h = Some(pairwise_brackets_vanish(&j, &dens));
    v.flows_commute = Some(flows_commute(steps.iter().take(4).map(|s| &s.flow)));
    v.extra.insert("divisibility".into(), divisible);
    v.extra.insert("densities_exist".into(), hamiltonian);
    Ok(HierarchyRecord {
        name: String::new(),
        params: BTreeMap::new(),
        mode: Mode::Hamiltonian,
        ell: 2,
        steps,
        verification: v,
    })
}

/// Rank of the coefficient matrix of `es` over the monomial basis.
pub fn expression_rank(es: &[Expression]) -> usize {
    let basis: Vec<Monomial> = {
        let mut b: Vec<Monomial> = es.iter().flat_map(|e| e.terms().map(|(m, _)| m.clone())).collect();
        b.sort();
        b.dedup();
        b
    };
    let mut rows: Vec<Vec<Coefficient>> =
        es.iter().map(|e| basis.iter().map(|m| e.coefficient_of(m)).collect()).collect();
    let mut rank = 0;
    for col in 0..basis.len() {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(rank, p);
        let inv = rows[rank][col].inv().expect("nonzero");
        let pivot: Vec<Coefficient> = rows[rank].iter().map(|c| c * &inv).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x = &*x - &(&f * y);
                }
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Element,
    Flow,
    Density,
}

#[derive(Clone, Debug)]
struct GoldenEntry {
    kind: Kind,
    n: u32,
    value: VectorExpr,
}

fn golden_entries(name: HierarchyName) -> Result<Vec<GoldenEntry>> {
    let cfg = SessionConfig::default();
    let mut section = None;
    let mut out = Vec::new();
    for (lineno, raw) in GOLDEN.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(s) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = Some(s.parse::<HierarchyName>()?);
            continue;
        }
        if section != Some(name) {
            continue;
        }
        let bad = || Error::Parse { pos: lineno, msg: format!("bad fixture line `{line}`") };
        let (head, body) = line.split_once('=').ok_or_else(bad)?;
        let mut head = head.split_whitespace();
        let kind = match head.next() {
            Some("F") => Kind::Element,
            Some("P") => Kind::Flow,
            Some("h") => Kind::Density,
            _ => return Err(bad()),
        };
        let n = head.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        out.push(GoldenEntry { kind, n, value: parse_vector(body, &cfg)? });
    }
    Ok(out)
}

fn double_factorial(n: i64) -> BigRational {
    // (−1)!! = 1, (−3)!! = −1
    match n {
        -1 | 0 => BigRational::one(),
        -3 => -BigRational::one(),
        _ => BigRational::from_integer((1..=n).rev().step_by(2).map(BigInt::from).product()),
    }
}

fn factorial(n: i64) -> BigRational {
    BigRational::from_integer((1..=n).map(BigInt::from).product())
}

/// Closed forms known for whole families, as (kind, n, value).
fn closed_forms(spec: &HierarchySpec) -> Vec<GoldenEntry> {
    let mut out = Vec::new();
    let c = |r: BigRational| Coefficient::from_rational(r);
    let upow = |p: i64, q: i64| pow(0, 0, p, q);
    match spec.name {
        HierarchyName::DispersionlessKdv => {
            for n in 0..=spec.depth as i64 {
                let f = upow(n, 1).scale(&c(double_factorial(2 * n - 1) / factorial(n)));
                let h = upow(n + 1, 1).scale(&c(double_factorial(2 * n - 1) / factorial(n + 1)));
                out.push(GoldenEntry { kind: Kind::Element, n: n as u32, value: vec1(f) });
                out.push(GoldenEntry { kind: Kind::Density, n: n as u32, value: vec1(h) });
            }
        }
        HierarchyName::LinearKdv => {
            for n in 0..spec.depth {
                let sign = if n % 2 == 0 { 1 } else { -1 };
                let h = (&u(n) * &u(n)).scale(&Coefficient::from_ratio(sign, 2));
                out.push(GoldenEntry { kind: Kind::Element, n: n + 1, value: vec1(u(2 * n)) });
                out.push(GoldenEntry { kind: Kind::Density, n: n + 1, value: vec1(h) });
            }
        }
        HierarchyName::Hd
            if spec.params["alpha"] == Coefficient::one() && spec.params["beta"] == Coefficient::zero() =>
        {
            for n in 0..=spec.depth as i64 {
                let two_n = BigRational::from_integer(BigInt::from(2).pow(n as u32));
                let df = double_factorial(2 * n);
                let f = upow(-2 * n - 1, 2).scale(&c(double_factorial(2 * n - 1) / (two_n.clone() * df.clone())));
                let h = upow(-2 * n + 1, 2).scale(&c(-double_factorial(2 * n - 3) * BigRational::from_integer(2.into()) / (two_n * df)));
                out.push(GoldenEntry { kind: Kind::Element, n: n as u32, value: vec1(f) });
                out.push(GoldenEntry { kind: Kind::Density, n: n as u32, value: vec1(h) });
            }
        }
        HierarchyName::CnwHd if spec.params["alpha"] == Coefficient::zero() => {
            for n in 3..=spec.depth {
                out.push(GoldenEntry { kind: Kind::Element, n, value: VectorExpr::zeros(2) });
            }
        }
        _ => {}
    }
    out
}

fn failure(n: u32, kind: &str, text: String) -> CheckFailure {
    CheckFailure { triple: vec![n as usize], kind: kind.into(), residual_text: text, residual: None }
}

/// Compares a generated record against the shipped golden values and closed forms.
pub fn golden_verify(spec: &HierarchySpec) -> CheckReport {
    let mut failures = Vec::new();
    let rec = match generate(spec) {
        Ok(r) => r,
        Err(e) => {
            failures.push(failure(0, "generate", e.to_string()));
            return CheckReport { passed: false, failures };
        }
    };
    let names = SessionConfig::default().var_names(spec.name.ell());
    let subst: BTreeMap<String, Coefficient> = spec.params.clone();
    let mut entries = closed_forms(spec);
    match golden_entries(spec.name) {
        Ok(g) => entries.extend(g.into_iter().map(|mut e| {
            e.value = e.value.map(|x| x.map_coefficients(|c| c.substitute(&subst)));
            e
        })),
        Err(e) => failures.push(failure(0, "fixture", e.to_string())),
    }
    for e in &entries {
        let Some(step) = rec.step(e.n) else { continue };
        let (kind, ok, got) = match e.kind {
            Kind::Element => ("F", step.element == e.value, names.vector(&step.element)),
            Kind::Flow => ("P", step.flow == e.value, names.vector(&step.flow)),
            Kind::Density => match &step.density {
                Some(h) => ("h", functional_is_zero(&(h - &e.value[0])).equal, names.expression(h)),
                None => ("h", false, format!("none ({})", step.density_error.clone().unwrap_or_default())),
            },
        };
        if !ok {
            failures.push(failure(e.n, kind, format!("expected {}, got {got}", names.vector(&e.value))));
        }
    }
    let v = &rec.verification;
    let flags: [(&str, bool); 6] = [
        ("recursion", v.recursion),
        ("densities", v.densities),
        ("orthogonality", v.orthogonality != Some(false)),
        ("involution", v.involution_h != Some(false) && v.involution_k != Some(false)),
        ("flows_commute", v.flows_commute != Some(false)),
        ("closedness", v.closed_flags.iter().all(|&b| b)),
    ];
    for (name, ok) in flags.into_iter().chain(v.extra.iter().map(|(k, b)| (k.as_str(), *b))) {
        if !ok {
            failures.push(failure(0, name, "verification flag failed".into()));
        }
    }
    let dens: Vec<Expression> = rec.steps.iter().filter_map(|s| s.density.clone()).filter(|h| !h.is_zero()).collect();
    if expression_rank(&dens) != dens.len() {
        failures.push(failure(0, "independence", format!("{} densities of rank {}", dens.len(), expression_rank(&dens))));
    }
    CheckReport { passed: failures.is_empty(), failures }
}
