//! Lenard scheme: structured solvers for K X = Y, sequence extension,
//! the order-one generating-series recursion, and sequence verification.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::diffalg::{Exponent, Expression, VarNames, VectorExpr};
use crate::diffop::{DiffOp, MatrixDiffOp};
use crate::error::{Error, Result};
use crate::pva::{evolutionary_commutator, functional_bracket};
use crate::varcalc::{exactify, functional_is_zero, integrate_total, is_closed, variational_derivative, LocalFunctional};

/// How to invert K one ∂ at a time.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverPlan {
    /// K = diag(∂, …, ∂).
    ComponentwiseDerivative,
    /// K = m_0 ∘ ∂ ∘ m_1 ∘ ∂ ∘ … ∘ m_r on every component, each m_k a single term.
    ConjugatedChain(Vec<Expression>),
    /// K = diag(∂, ∂) for two variables.
    CnwStructured,
    /// K = [[u′ + 2u∂, v∂], [v′ + v∂, 0]].
    CnwHdStructured,
}

impl SolverPlan {
    /// The operator this plan inverts, on `ell` components.
    pub fn operator(&self, ell: usize) -> Result<MatrixDiffOp> {
        match self {
            SolverPlan::ComponentwiseDerivative => Ok(MatrixDiffOp::diagonal(vec![DiffOp::d(1); ell])),
            SolverPlan::ConjugatedChain(ms) => {
                let Some((first, rest)) = ms.split_first() else {
                    return Err(Error::PlanMismatch("empty chain".into()));
                };
                for m in ms {
                    if m.as_term().is_none() {
                        return Err(Error::NonmonomialDivisor(format!("{m}")));
                    }
                }
                let mut op = DiffOp::mul_by(first.clone());
                for m in rest {
                    op = op.compose(&DiffOp::d(1)).compose(&DiffOp::mul_by(m.clone()));
                }
                Ok(MatrixDiffOp::diagonal(vec![op; ell]))
            }
            SolverPlan::CnwStructured => {
                if ell != 2 {
                    return Err(Error::SizeMismatch { expected: 2, got: ell });
                }
                Ok(MatrixDiffOp::diagonal(vec![DiffOp::d(1); 2]))
            }
            SolverPlan::CnwHdStructured => {
                if ell != 2 {
                    return Err(Error::SizeMismatch { expected: 2, got: ell });
                }
                let (u, v) = (Expression::gen(0, 0), Expression::gen(1, 0));
                MatrixDiffOp::from_rows(vec![
                    vec![DiffOp::from_terms([(0, u.total_derivative()), (1, u.scale_int(2))]), DiffOp::term(v.clone(), 1)],
                    vec![DiffOp::from_terms([(0, v.total_derivative()), (1, v)]), DiffOp::zero()],
                ])
            }
        }
    }

    /// Checks that the plan composes out to `k`.
    pub fn validate(&self, k: &MatrixDiffOp) -> Result<()> {
        let op = self.operator(k.size())?;
        if op != *k {
            return Err(Error::PlanMismatch(format!("plan gives {op}, K is {k}")));
        }
        Ok(())
    }
}

/// ∂⁻¹ with zero integration constant.
fn integrate_exact(y: &Expression) -> Result<Expression> {
    let (g, c) = integrate_total(y)?;
    if !c.is_zero() {
        return Err(Error::NotExact(format!("{y} has constant part {c}")));
    }
    Ok(g)
}

/// Solves K X = Y for the operator described by `plan`, integration constants zero.
pub fn solve_k(plan: &SolverPlan, y: &VectorExpr) -> Result<VectorExpr> {
    let x = match plan {
        SolverPlan::ComponentwiseDerivative | SolverPlan::CnwStructured => {
            VectorExpr(y.iter().map(integrate_exact).collect::<Result<_>>()?)
        }
        SolverPlan::ConjugatedChain(ms) => {
            let (last, init) = ms.split_last().ok_or_else(|| Error::PlanMismatch("empty chain".into()))?;
            let mut out = Vec::with_capacity(y.len());
            for yi in y.iter() {
                let mut z = yi.clone();
                for m in init {
                    z = integrate_exact(&z.div(m)?)?;
                }
                out.push(z.div(last)?);
            }
            VectorExpr(out)
        }
        SolverPlan::CnwHdStructured => {
            if y.len() != 2 {
                return Err(Error::SizeMismatch { expected: 2, got: y.len() });
            }
            let (u, v) = (Expression::gen(0, 0), Expression::gen(1, 0));
            let vinv = v.inverse()?;
            // (K X)_2 = ∂(v X_1)
            let x1 = &integrate_exact(&y[1])? * &vinv;
            let kx1 = DiffOp::from_terms([(0, u.total_derivative()), (1, u.scale_int(2))]).apply(&x1);
            // (K X)_1 = (u′ + 2u∂) X_1 + v ∂X_2
            let x2 = integrate_exact(&(&(&y[0] - &kx1) * &vinv))?;
            VectorExpr(vec![x1, x2])
        }
    };
    let k = plan.operator(y.len())?;
    if k.apply(&x)? != *y {
        return Err(Error::NotExact(format!("{y} is not in the image of {k}")));
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// K F^{n+1} = H F^n, flow_n = H F^n, h_n from F^n.
    #[default]
    Hamiltonian,
    /// S P^{n+1} = T P^n with (H, K) = (T, S); flow_n = P^n, h_n from S P^n.
    Symplectic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub n: u32,
    /// The (H,K)-sequence element: F^n, or P^n in symplectic mode.
    pub element: VectorExpr,
    /// The 1-form δh_n/δu.
    pub form: VectorExpr,
    pub density: Option<Expression>,
    /// Why no density is attached (e.g. a logarithm would be needed).
    pub density_error: Option<String>,
    pub flow: VectorExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verification {
    /// K x_{n+1} = H x_n for consecutive steps.
    pub recursion: bool,
    pub orthogonality: Option<bool>,
    pub orthogonality_failures: Vec<(u32, u32)>,
    pub involution_h: Option<bool>,
    pub involution_k: Option<bool>,
    pub closed_flags: Vec<bool>,
    /// δh_n/δu equals the stored 1-form wherever h_n is present.
    pub densities: bool,
    /// Pairwise commutators of the first four flows vanish.
    pub flows_commute: Option<bool>,
    /// Hierarchy-specific checks by name.
    pub extra: BTreeMap<String, bool>,
}

impl Verification {
    pub fn all_passed(&self) -> bool {
        self.recursion
            && self.densities
            && self.orthogonality != Some(false)
            && self.involution_h != Some(false)
            && self.involution_k != Some(false)
            && self.flows_commute != Some(false)
            && self.closed_flags.iter().all(|&b| b)
            && self.extra.values().all(|&b| b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyRecord {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub mode: Mode,
    pub ell: usize,
    pub steps: Vec<Step>,
    pub verification: Verification,
}

impl HierarchyRecord {
    pub fn step(&self, n: u32) -> Option<&Step> {
        self.steps.iter().find(|s| s.n == n)
    }

    pub fn view(&self, names: &VarNames) -> RecordView {
        RecordView {
            name: self.name.clone(),
            params: self.params.clone(),
            mode: self.mode,
            steps: self
                .steps
                .iter()
                .map(|s| StepView {
                    n: s.n,
                    f: s.form.iter().map(|e| names.expression(e)).collect(),
                    h: s.density.as_ref().map(|e| names.expression(e)),
                    h_error: s.density_error.clone(),
                    flow: s.flow.iter().map(|e| names.expression(e)).collect(),
                })
                .collect(),
            verification: self.verification.clone(),
        }
    }
}

/// Rendered form of a record, the JSON schema of hierarchy output.
#[derive(Clone, Debug, Serialize)]
pub struct RecordView {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub mode: Mode,
    pub steps: Vec<StepView>,
    pub verification: Verification,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepView {
    pub n: u32,
    #[serde(rename = "F")]
    pub f: Vec<String>,
    pub h: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_error: Option<String>,
    pub flow: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct LenardOptions {
    /// Index of the first seed.
    pub first_index: u32,
    pub mode: Mode,
    /// Project each new element to its expected Δ-degree when gradings exist.
    pub project_degrees: bool,
}

impl Default for LenardOptions {
    fn default() -> Self {
        LenardOptions { first_index: 0, mode: Mode::Hamiltonian, project_degrees: true }
    }
}

fn density_for(form: &VectorExpr) -> (Option<Expression>, Option<String>) {
    if !is_closed(form).closed {
        return (None, Some("not closed".into()));
    }
    match exactify(form) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn make_step(n: u32, x: VectorExpr, h: &MatrixDiffOp, k: &MatrixDiffOp, mode: Mode) -> Result<Step> {
    let (form, flow) = match mode {
        Mode::Hamiltonian => {
            let flow = h.apply(&x)?;
            (x.clone(), flow)
        }
        Mode::Symplectic => (k.apply(&x)?, x.clone()),
    };
    let (density, density_error) = density_for(&form);
    Ok(Step { n, element: x, form, density, density_error, flow })
}

fn project(x: VectorExpr, deg: Exponent) -> VectorExpr {
    x.map(|e| e.degree_components().remove(&deg).unwrap_or_default())
}

/// Extends `seeds` (indices `first_index, first_index+1, …`) to the index `last`
/// by x_{n+1} = solve_K(H x_n), then verifies the whole record.
pub fn lenard_extend_with(
    h: &MatrixDiffOp,
    k: &MatrixDiffOp,
    plan: &SolverPlan,
    seeds: &[VectorExpr],
    last: u32,
    opts: &LenardOptions,
) -> Result<HierarchyRecord> {
    plan.validate(k)?;
    if h.size() != k.size() {
        return Err(Error::SizeMismatch { expected: k.size(), got: h.size() });
    }
    let ell = k.size();
    let grading = if opts.project_degrees { h.degree().zip(k.degree()) } else { None };
    let mut steps = Vec::new();
    let mut n = opts.first_index;
    for s in seeds {
        if s.len() != ell {
            return Err(Error::SizeMismatch { expected: ell, got: s.len() });
        }
        if n > last {
            break;
        }
        steps.push(make_step(n, s.clone(), h, k, opts.mode)?);
        n += 1;
    }
    while n <= last {
        let prev = &steps.last().ok_or_else(|| Error::Precondition("no seeds".into()))?.element;
        let at = |e: Error| Error::AtStep { step: n, source: Box::new(e) };
        let y = h.apply(prev).map_err(at)?;
        let mut x = solve_k(plan, &y).map_err(at)?;
        if let (Some((dh, dk)), Some(d)) = (grading, prev.homogeneous_degree()) {
            x = project(x, d + dh - dk);
        }
        steps.push(make_step(n, x, h, k, opts.mode).map_err(at)?);
        n += 1;
    }
    let mut rec = HierarchyRecord {
        name: String::new(),
        params: BTreeMap::new(),
        mode: opts.mode,
        ell,
        steps,
        verification: Verification::default(),
    };
    rec.verification = verify_sequence(h, k, &rec);
    Ok(rec)
}

/// Extends an (H,K)-sequence from index 0 to `last` in Hamiltonian mode.
pub fn lenard_extend(
    h: &MatrixDiffOp,
    k: &MatrixDiffOp,
    plan: &SolverPlan,
    seeds: &[VectorExpr],
    last: u32,
) -> Result<HierarchyRecord> {
    lenard_extend_with(h, k, plan, seeds, last, &LenardOptions::default())
}

/// F^1, …, F^N from the generating-series recursion for K = ∂(k) + 2k∂, ℓ = 1:
/// ∂(k F⁰ F^{n+1}) = ½ Σ_{m=0}^{n} F^{n−m} H F^m − ½ Σ_{m=1}^{n} ∂(k F^{n+1−m} F^m).
/// Returns F^0, …, F^N.
pub fn recursion_order1(k: &Expression, h: &MatrixDiffOp, f0: &Expression, last: u32) -> Result<Vec<Expression>> {
    if h.size() != 1 {
        return Err(Error::SizeMismatch { expected: 1, got: h.size() });
    }
    if !h.is_skew_adjoint() {
        return Err(Error::Precondition("H is not skew-adjoint".into()));
    }
    let kop = DiffOp::from_terms([(0, k.total_derivative()), (1, k.scale_int(2))]);
    if !kop.apply(f0).is_zero() {
        return Err(Error::Precondition(format!("K F⁰ ≠ 0 for F⁰ = {f0}")));
    }
    let lead = k * f0;
    if lead.as_term().is_none() {
        return Err(Error::NonmonomialDivisor(format!("{lead}")));
    }
    let hop = h.get(0, 0);
    let half = Expression::ratio(1, 2);
    let mut fs = vec![f0.clone()];
    let mut hf = vec![hop.apply(f0)];
    for n in 0..last as usize {
        let mut rhs = Expression::zero();
        for m in 0..=n {
            rhs += &fs[n - m] * &hf[m];
        }
        rhs = &rhs * &half;
        let mut tail = Expression::zero();
        for m in 1..=n {
            tail += &(k * &fs[n + 1 - m]) * &fs[m];
        }
        rhs -= (&tail * &half).total_derivative();
        let step = (n + 1) as u32;
        let at = |e: Error| Error::AtStep { step, source: Box::new(e) };
        let g = integrate_exact(&rhs).map_err(at)?;
        let next = g.div(&lead).map_err(at)?;
        hf.push(hop.apply(&next));
        fs.push(next);
    }
    Ok(fs)
}

fn pairing_zero(a: &VectorExpr, b: &VectorExpr) -> bool {
    functional_is_zero(&a.dot(b)).equal
}

/// Recomputes every verification flag of `rec` against (H, K).
pub fn verify_sequence(h: &MatrixDiffOp, k: &MatrixDiffOp, rec: &HierarchyRecord) -> Verification {
    let steps = &rec.steps;
    let mut v = Verification { recursion: true, densities: true, ..Default::default() };
    for w in steps.windows(2) {
        let ok = w[1].n == w[0].n + 1
            && matches!((k.apply(&w[1].element), h.apply(&w[0].element)), (Ok(a), Ok(b)) if a == b);
        v.recursion &= ok;
    }
    let hx: Vec<Option<VectorExpr>> = steps.iter().map(|s| h.apply(&s.element).ok()).collect();
    let kx: Vec<Option<VectorExpr>> = steps.iter().map(|s| k.apply(&s.element).ok()).collect();
    let mut failures = Vec::new();
    for sa in steps {
        for (b, sb) in steps.iter().enumerate() {
            let ok = match (&hx[b], &kx[b]) {
                (Some(hb), Some(kb)) => pairing_zero(&sa.element, hb) && pairing_zero(&sa.element, kb),
                _ => false,
            };
            if !ok {
                failures.push((sa.n, sb.n));
            }
        }
    }
    v.orthogonality = Some(failures.is_empty());
    v.orthogonality_failures = failures;
    v.closed_flags = steps.iter().map(|s| is_closed(&s.form).closed).collect();
    for s in steps {
        if let Some(d) = &s.density {
            v.densities &= variational_derivative(d, rec.ell) == s.form;
        }
    }
    let dens: Vec<LocalFunctional> =
        steps.iter().filter_map(|s| s.density.clone().map(LocalFunctional)).collect();
    match rec.mode {
        Mode::Hamiltonian => {
            v.involution_h = Some(pairwise_brackets_vanish(h, &dens));
            v.involution_k = Some(pairwise_brackets_vanish(k, &dens));
        }
        Mode::Symplectic => {
            // ∫ δh_m/δu · P^n = 0: every density is conserved by every flow.
            let ok = steps.iter().filter(|s| s.density.is_some()).all(|sm| {
                steps.iter().all(|sn| pairing_zero(&sm.form, &sn.flow))
            });
            v.involution_h = Some(ok);
        }
    }
    v.flows_commute = Some(flows_commute(steps.iter().take(4).map(|s| &s.flow)));
    v
}

pub(crate) fn pairwise_brackets_vanish(op: &MatrixDiffOp, dens: &[LocalFunctional]) -> bool {
    for (a, fa) in dens.iter().enumerate() {
        for fb in &dens[a + 1..] {
            if !functional_is_zero(&functional_bracket(op, fa, fb).0).equal {
                return false;
            }
        }
    }
    true
}

pub(crate) fn flows_commute<'a>(flows: impl Iterator<Item = &'a VectorExpr>) -> bool {
    let flows: Vec<&VectorExpr> = flows.collect();
    for (a, p) in flows.iter().enumerate() {
        for q in &flows[a + 1..] {
            match evolutionary_commutator(p, q) {
                Ok(c) if c.is_zero() => {}
                _ => return false,
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u32) -> Expression {
        Expression::gen(0, n)
    }

    fn kdv_h() -> MatrixDiffOp {
        MatrixDiffOp::scalar(DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2)), (3, Expression::param("c"))]))
    }

    #[test]
    fn derivative_plan() {
        let x = solve_k(&SolverPlan::ComponentwiseDerivative, &VectorExpr(vec![&u(0) * &u(1)])).unwrap();
        assert_eq!(x[0], &Expression::ratio(1, 2) * &(&u(0) * &u(0)));
        let bad = solve_k(&SolverPlan::ComponentwiseDerivative, &VectorExpr(vec![u(0)]));
        assert!(matches!(bad, Err(Error::NotExact(_))));
    }

    #[test]
    fn plan_mismatch_is_reported() {
        let plan = SolverPlan::ConjugatedChain(vec![Expression::gen_pow(0, 0, 1, 2).scale_int(2), Expression::gen_pow(0, 0, 1, 2)]);
        let k = MatrixDiffOp::scalar(DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2))]));
        assert!(plan.validate(&k).is_ok());
        assert!(matches!(plan.validate(&MatrixDiffOp::scalar(DiffOp::d(1))), Err(Error::PlanMismatch(_))));
    }

    #[test]
    fn kdv_sequence_and_order1_recursion_agree() {
        let k = MatrixDiffOp::scalar(DiffOp::d(1));
        let rec = lenard_extend(&kdv_h(), &k, &SolverPlan::ComponentwiseDerivative, &[VectorExpr(vec![Expression::one()])], 4)
            .unwrap();
        assert!(rec.verification.all_passed(), "{:?}", rec.verification);
        let fs = recursion_order1(&Expression::ratio(1, 2), &kdv_h(), &Expression::one(), 4).unwrap();
        for (s, f) in rec.steps.iter().zip(&fs) {
            assert_eq!(&s.element[0], f);
        }
    }

    #[test]
    fn corrupted_record_fails_orthogonality() {
        let k = MatrixDiffOp::scalar(DiffOp::d(1));
        let mut rec =
            lenard_extend(&kdv_h(), &k, &SolverPlan::ComponentwiseDerivative, &[VectorExpr(vec![Expression::one()])], 3)
                .unwrap();
        let s = &mut rec.steps[2];
        s.element = VectorExpr(vec![&s.element[0] + &u(1)]);
        let v = verify_sequence(&kdv_h(), &k, &rec);
        assert_eq!(v.orthogonality, Some(false));
        assert!(v.orthogonality_failures.contains(&(0, 2)));
        assert!(!v.recursion);
    }

    #[test]
    fn empty_record_passes() {
        let k = MatrixDiffOp::scalar(DiffOp::d(1));
        let rec = HierarchyRecord {
            name: String::new(),
            params: BTreeMap::new(),
            mode: Mode::Hamiltonian,
            ell: 1,
            steps: vec![],
            verification: Verification::default(),
        };
        assert!(verify_sequence(&kdv_h(), &k, &rec).all_passed());
    }

    #[test]
    fn order1_precondition() {
        let err = recursion_order1(&Expression::ratio(1, 2), &kdv_h(), &u(0), 2);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
