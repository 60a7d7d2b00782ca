use serde::Serialize;

use super::lambda::{BiLambdaPoly, LambdaPoly};
use crate::diffalg::{Coefficient, Expression, VarNames, VectorExpr};
use crate::diffop::{DiffOp, MatrixDiffOp};
use crate::error::{Error, Result};
use crate::varcalc::frechet;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckFailure {
    /// 1-based generator indices; empty for the skew-adjointness test.
    pub triple: Vec<usize>,
    pub kind: String,
    pub residual_text: String,
    #[serde(skip)]
    pub residual: Option<BiLambdaPoly>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub failures: Vec<CheckFailure>,
}

impl CheckReport {
    fn from_failures(failures: Vec<CheckFailure>) -> Self {
        CheckReport { passed: failures.is_empty(), failures }
    }
}

fn skew_failure(h: &MatrixDiffOp, names: &VarNames) -> Option<CheckFailure> {
    let defect = h.adjoint().add(h).expect("same size");
    (!defect.is_zero()).then(|| CheckFailure {
        triple: vec![],
        kind: "skew-adjointness".into(),
        residual_text: format!("H* + H = {}", defect.render(names)),
        residual: None,
    })
}

/// Largest jet order of each variable occurring in the coefficients of `h`.
fn coefficient_orders(h: &MatrixDiffOp) -> Vec<Option<u32>> {
    let ell = h.size();
    let mut out = vec![None; ell];
    for (_, _, op) in h.entries() {
        for (_, a) in op.terms() {
            for (v, slot) in out.iter_mut().enumerate() {
                *slot = (*slot).max(a.max_order_of(v));
            }
        }
    }
    out
}

fn partial_symbol(op: &DiffOp, var: usize, order: u32) -> LambdaPoly {
    op.partial(var, order).symbol()
}

/// Jacobi residual (LHS − RHS) for the generator triple (i, j, k), 0-based.
pub fn jacobi_residual(h: &MatrixDiffOp, i: usize, j: usize, k: usize) -> BiLambdaPoly {
    let ell = h.size();
    let orders = coefficient_orders(h);
    let mut res = BiLambdaPoly::zero();
    for hh in 0..ell {
        let Some(top) = orders[hh] else {
            continue;
        };
        let h_hi = h.get(hh, i).symbol();
        let h_hj = h.get(hh, j).symbol();
        let mut sh_hi = h_hi.clone();
        let mut sh_hj = h_hj.clone();
        for n in 0..=top {
            if n > 0 {
                sh_hi = sh_hi.shift(1, 1);
                sh_hj = sh_hj.shift(1, 1);
            }
            // ∂H_kj(μ)/∂u_h^(n) (λ+∂)^n H_hi(λ)
            let a = partial_symbol(h.get(k, j), hh, n);
            if !a.is_zero() && !sh_hi.is_zero() {
                res.add_assign(&a.in_mu().mul(&sh_hi.in_lambda()));
            }
            // − ∂H_ki(λ)/∂u_h^(n) (μ+∂)^n H_hj(μ)
            let b = partial_symbol(h.get(k, i), hh, n);
            if !b.is_zero() && !sh_hj.is_zero() {
                res.sub_assign(&b.in_lambda().mul(&sh_hj.in_mu()));
            }
            // − H_kh(λ+μ+∂) (−λ−μ−∂)^n ∂H_ji(λ)/∂u_h^(n)
            let c = partial_symbol(h.get(j, i), hh, n);
            let op = h.get(k, hh);
            if !c.is_zero() && !op.is_zero() {
                let mut z = c.in_lambda().shift(1, 1, n);
                if n % 2 == 1 {
                    z = z.neg();
                }
                res.sub_assign(&z.apply_op(op, 1, 1));
            }
        }
    }
    res
}

/// Skew-adjointness plus the Jacobi identity on all generator triples.
pub fn check_pva(h: &MatrixDiffOp) -> CheckReport {
    let names = VarNames::standard(h.size());
    let mut failures: Vec<CheckFailure> = skew_failure(h, &names).into_iter().collect();
    let ell = h.size();
    for i in 0..ell {
        for j in 0..ell {
            for k in 0..ell {
                let r = jacobi_residual(h, i, j, k);
                if !r.is_zero() {
                    failures.push(CheckFailure {
                        triple: vec![i + 1, j + 1, k + 1],
                        kind: "jacobi".into(),
                        residual_text: r.render(&names),
                        residual: Some(r),
                    });
                }
            }
        }
    }
    CheckReport::from_failures(failures)
}

fn fresh_names(hs: &[MatrixDiffOp]) -> Vec<String> {
    let mut taken = std::collections::BTreeSet::new();
    for h in hs {
        for (_, _, op) in h.entries() {
            for (_, a) in op.terms() {
                for (_, c) in a.terms() {
                    taken.extend(c.params());
                }
            }
        }
    }
    let mut prefix = "t".to_string();
    while taken.iter().any(|p| p.starts_with(&format!("{prefix}_"))) {
        prefix.push('t');
    }
    (1..=hs.len()).map(|n| format!("{prefix}_{n}")).collect()
}

/// Hamiltonian check of Σ t_n H_n with fresh symbolic t_n.
pub fn check_compatible(hs: &[MatrixDiffOp]) -> Result<CheckReport> {
    let Some(first) = hs.first() else {
        return Ok(CheckReport::from_failures(vec![]));
    };
    for h in hs {
        if h.size() != first.size() {
            return Err(Error::SizeMismatch { expected: first.size(), got: h.size() });
        }
    }
    let bad: Vec<usize> = hs
        .iter()
        .enumerate()
        .filter(|(_, h)| !check_pva(h).passed)
        .map(|(n, _)| n + 1)
        .collect();
    if !bad.is_empty() {
        return Err(Error::IndividualFailure(bad));
    }
    let names = fresh_names(hs);
    let mut sum = MatrixDiffOp::zero(first.size());
    for (h, t) in hs.iter().zip(&names) {
        sum = sum.add(&h.scale(&Coefficient::param(t)))?;
    }
    Ok(check_pva(&sum))
}

/// Closedness residual of a skew-adjoint operator for the triple (i, j, k), 0-based.
pub fn symplectic_residual(s: &MatrixDiffOp, i: usize, j: usize, k: usize) -> BiLambdaPoly {
    let orders = coefficient_orders(s);
    let mut res = BiLambdaPoly::zero();
    let max_n = orders.iter().flatten().copied().max();
    let Some(top) = max_n else {
        return res;
    };
    for n in 0..=top {
        // ∂S_ki(μ)/∂u_j^(n) λ^n
        let a = partial_symbol(s.get(k, i), j, n);
        if !a.is_zero() {
            res.add_assign(&a.in_mu().mul(&LambdaPoly::monomial(n, Expression::one()).in_lambda()));
        }
        // − ∂S_kj(λ)/∂u_i^(n) μ^n
        let b = partial_symbol(s.get(k, j), i, n);
        if !b.is_zero() {
            res.sub_assign(&b.in_lambda().mul(&LambdaPoly::monomial(n, Expression::one()).in_mu()));
        }
        // (−λ−μ−∂)^n ∂S_ij(λ)/∂u_k^(n)
        let c = partial_symbol(s.get(i, j), k, n);
        if !c.is_zero() {
            let z = c.in_lambda().shift(1, 1, n);
            if n % 2 == 0 {
                res.add_assign(&z);
            } else {
                res.sub_assign(&z);
            }
        }
    }
    res
}

pub fn check_symplectic(s: &MatrixDiffOp) -> CheckReport {
    let names = VarNames::standard(s.size());
    let mut failures: Vec<CheckFailure> = skew_failure(s, &names).into_iter().collect();
    let ell = s.size();
    for i in 0..ell {
        for j in 0..ell {
            for k in 0..ell {
                let r = symplectic_residual(s, i, j, k);
                if !r.is_zero() {
                    failures.push(CheckFailure {
                        triple: vec![i + 1, j + 1, k + 1],
                        kind: "closedness".into(),
                        residual_text: r.render(&names),
                        residual: Some(r),
                    });
                }
            }
        }
    }
    CheckReport::from_failures(failures)
}

/// S_F = D_F − D_F*.
pub fn two_form_from_potential(f: &VectorExpr) -> MatrixDiffOp {
    let d = frechet(f, false);
    d.sub(&d.adjoint()).expect("same size")
}

/// LHS − RHS of the operator form of the Jacobi identity evaluated at F, G:
/// H D_G H F + H D*_{HF} G − H D_F H G + H D*_F H G − D_{HG} H F + D_{HF} H G.
pub fn jacobi_operator_residual(h: &MatrixDiffOp, f: &VectorExpr, g: &VectorExpr) -> Result<VectorExpr> {
    let hf = h.apply(f)?;
    let hg = h.apply(g)?;
    let t1 = h.apply(&frechet(g, false).apply(&hf)?)?;
    let t2 = h.apply(&frechet(&hf, true).apply(g)?)?;
    let t3 = h.apply(&frechet(f, false).apply(&hg)?)?;
    let t4 = h.apply(&frechet(f, true).apply(&hg)?)?;
    let r1 = frechet(&hg, false).apply(&hf)?;
    let r2 = frechet(&hf, false).apply(&hg)?;
    Ok(t1.add(&t2).sub(&t3).add(&t4).sub(&r1).add(&r2))
}
