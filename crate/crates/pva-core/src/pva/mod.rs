//! λ-brackets defined by matrix differential operators, the Beltrami
//! bracket, brackets of local functionals, and structure checks.

mod checks;
mod lambda;

pub use checks::{
    check_compatible, check_pva, check_symplectic, jacobi_operator_residual, jacobi_residual,
    symplectic_residual, two_form_from_potential, CheckFailure, CheckReport,
};
pub use lambda::{BiLambdaPoly, LambdaPoly};

use crate::diffalg::{Expression, VectorExpr};
use crate::diffop::MatrixDiffOp;
use crate::error::Result;
use crate::varcalc::{frechet, variational_derivative, LocalFunctional};

/// A_i = Σ_m (−λ−∂)^m ∂f/∂u_i^(m).
fn left_factors(f: &Expression, ell: usize) -> Vec<LambdaPoly> {
    (0..ell)
        .map(|i| {
            let mut a = LambdaPoly::zero();
            if let Some(top) = f.max_order_of(i) {
                for m in 0..=top {
                    let p = f.partial_derivative(i, m);
                    if p.is_zero() {
                        continue;
                    }
                    let t = LambdaPoly::constant(p).shift(1, m);
                    a.add_assign(&if m % 2 == 0 { t } else { t.neg() });
                }
            }
            a
        })
        .collect()
}

/// Σ_{j,n} ∂g/∂u_j^(n) (λ+∂)^n B_j.
fn right_contract(g: &Expression, b: &[LambdaPoly]) -> LambdaPoly {
    let mut out = LambdaPoly::zero();
    for (j, bj) in b.iter().enumerate() {
        if bj.is_zero() {
            continue;
        }
        let Some(top) = g.max_order_of(j) else {
            continue;
        };
        let mut shifted = bj.clone();
        for n in 0..=top {
            if n > 0 {
                shifted = shifted.shift(1, 1);
            }
            let p = g.partial_derivative(j, n);
            if !p.is_zero() {
                out.add_assign(&shifted.mul_expr(&p));
            }
        }
    }
    out
}

/// {f_λ g}_H with {u_i λ u_j} = H_ji(λ), all ∂ acting to the right.
pub fn lambda_bracket(h: &MatrixDiffOp, f: &Expression, g: &Expression) -> LambdaPoly {
    let ell = h.size();
    let a = left_factors(f, ell);
    let b: Vec<LambdaPoly> = (0..ell)
        .map(|j| {
            let mut bj = LambdaPoly::zero();
            for (i, ai) in a.iter().enumerate() {
                let op = h.get(j, i);
                if !ai.is_zero() && !op.is_zero() {
                    bj.add_assign(&ai.apply_op(op));
                }
            }
            bj
        })
        .collect();
    right_contract(g, &b)
}

/// The Beltrami bracket {u_i λ u_j}_B = δ_ij.
pub fn beltrami_bracket(f: &Expression, g: &Expression) -> LambdaPoly {
    let ell = f.max_var().max(g.max_var()).map_or(0, |v| v + 1);
    right_contract(g, &left_factors(f, ell))
}

/// {f_λ ·} applied to every coefficient of a polynomial in μ; the result is in (λ, μ).
pub fn bracket_into_mu(
    br: impl Fn(&Expression, &Expression) -> LambdaPoly,
    f: &Expression,
    p_mu: &LambdaPoly,
) -> BiLambdaPoly {
    let mut out = BiLambdaPoly::zero();
    for (d, c) in p_mu.coeffs() {
        for (e, x) in br(f, c).coeffs() {
            out.insert(e, d, x.clone());
        }
    }
    out
}

/// {f_μ ·} applied to every coefficient of a polynomial in λ; the result is in (λ, μ).
pub fn bracket_mu_into_lambda(
    br: impl Fn(&Expression, &Expression) -> LambdaPoly,
    f: &Expression,
    p_lambda: &LambdaPoly,
) -> BiLambdaPoly {
    let mut out = BiLambdaPoly::zero();
    for (d, c) in p_lambda.coeffs() {
        for (e, x) in br(f, c).coeffs() {
            out.insert(d, e, x.clone());
        }
    }
    out
}

/// {{f_λ g}_{λ+μ} h}: Σ_d λ^d {p_d ν h}|_{ν=λ+μ}.
pub fn bracket_nested_left(
    br: impl Fn(&Expression, &Expression) -> LambdaPoly,
    p_lambda: &LambdaPoly,
    h: &Expression,
) -> BiLambdaPoly {
    let mut out = BiLambdaPoly::zero();
    for (d, c) in p_lambda.coeffs() {
        let inner = br(c, h).at_sum();
        for ((a, b), x) in inner.coeffs() {
            out.insert(a + d, b, x.clone());
        }
    }
    out
}

/// Representative of {∫f, ∫g}_H = ∫ Σ δg/δu_j · H_ji(∂) δf/δu_i.
pub fn functional_bracket(h: &MatrixDiffOp, f: &LocalFunctional, g: &LocalFunctional) -> LocalFunctional {
    let ell = h.size();
    let df = variational_derivative(&f.0, ell);
    let dg = variational_derivative(&g.0, ell);
    let df = VectorExpr(df.0.into_iter().take(ell).collect());
    let dg = VectorExpr(dg.0.into_iter().take(ell).collect());
    let hf = h.apply(&df).expect("sizes agree");
    LocalFunctional(dg.dot(&hf))
}

/// H(∂) δh/δu.
pub fn hamiltonian_vector_field(h: &MatrixDiffOp, density: &LocalFunctional) -> VectorExpr {
    let ell = h.size();
    let d = variational_derivative(&density.0, ell);
    h.apply(&VectorExpr(d.0.into_iter().take(ell).collect())).expect("sizes agree")
}

/// [P, Q] = D_Q(∂)P − D_P(∂)Q.
pub fn evolutionary_commutator(p: &VectorExpr, q: &VectorExpr) -> Result<VectorExpr> {
    let dq = frechet(q, false).apply(p)?;
    let dp = frechet(p, false).apply(q)?;
    Ok(dq.sub(&dp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::DiffOp;

    fn u(n: u32) -> Expression {
        Expression::gen(0, n)
    }

    fn virasoro() -> MatrixDiffOp {
        MatrixDiffOp::scalar(DiffOp::from_terms([
            (0, u(1)),
            (1, u(0).scale_int(2)),
            (3, Expression::param("c")),
        ]))
    }

    #[test]
    fn generator_brackets() {
        let gfz = MatrixDiffOp::scalar(DiffOp::d(1));
        assert_eq!(lambda_bracket(&gfz, &u(0), &u(0)), LambdaPoly::monomial(1, Expression::one()));
        let vir = lambda_bracket(&virasoro(), &u(0), &u(0));
        assert_eq!(vir, virasoro().get(0, 0).symbol());
        assert_eq!(lambda_bracket(&gfz, &u(1), &u(1)), LambdaPoly::monomial(3, Expression::int(-1)));
    }

    #[test]
    fn beltrami_examples() {
        assert_eq!(beltrami_bracket(&u(0), &u(0)), LambdaPoly::constant(Expression::one()));
        let f = &Expression::ratio(1, 2) * &u(0).pow(3.into()).unwrap();
        assert_eq!(beltrami_bracket(&f, &u(0)).at_zero(), &Expression::ratio(3, 2) * &(&u(0) * &u(0)));
    }

    #[test]
    fn heisenberg_bracket() {
        let (p, q, z) = (Expression::gen(0, 0), Expression::gen(1, 0), Expression::gen(2, 0));
        let h = MatrixDiffOp::from_rows(vec![
            vec![DiffOp::zero(), DiffOp::mul_by(-&z), DiffOp::zero()],
            vec![DiffOp::mul_by(z.clone()), DiffOp::zero(), DiffOp::zero()],
            vec![DiffOp::zero(), DiffOp::zero(), DiffOp::zero()],
        ])
        .unwrap();
        let r = functional_bracket(&h, &p.into(), &q.into());
        assert_eq!(r.0, z);
    }

    #[test]
    fn kdv_vector_fields() {
        let c = Expression::param("c");
        let h2 = &(&Expression::ratio(1, 2) * &u(0).pow(3.into()).unwrap())
            + &(&(&Expression::ratio(1, 2) * &c) * &(&u(0) * &u(2)));
        let flow = hamiltonian_vector_field(&MatrixDiffOp::scalar(DiffOp::d(1)), &h2.clone().into());
        assert_eq!(flow[0], &(&u(0) * &u(1)).scale_int(3) + &(&c * &u(3)));
        let higher = hamiltonian_vector_field(&virasoro(), &h2.into());
        let want = &(&(&Expression::ratio(15, 2) * &(&u(0) * &u(0))) * &u(1))
            + &(&(&(&c * &u(1)) * &u(2)).scale_int(10)
                + &(&(&(&c * &u(0)) * &u(3)).scale_int(5) + &(&(&c * &c) * &u(5))));
        assert_eq!(higher[0], want);
        let q = VectorExpr(vec![flow[0].clone()]);
        assert!(evolutionary_commutator(&VectorExpr(vec![u(1)]), &q).unwrap().is_zero());
    }
}
