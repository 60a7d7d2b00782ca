//! Strategies and identity suites shared by the property tests and the
//! acceptance run. Every suite is seeded and runs `CASES` cases.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use pva_core::diffalg::{Coefficient, Exponent, Expression, Generator, Monomial, VectorExpr};
use pva_core::diffop::{DiffOp, MatrixDiffOp};
use pva_core::pva::{
    beltrami_bracket, bracket_into_mu, bracket_mu_into_lambda, bracket_nested_left, functional_bracket,
    jacobi_operator_residual, lambda_bracket, LambdaPoly,
};
use pva_core::varcalc::{exactify, functional_is_zero, integrate_total, is_closed, variational_derivative};
use pva_core::LocalFunctional;

pub const CASES: u32 = 200;
pub const SEED: u64 = 0x5eed_2009;
const MAX_ORDER: u32 = 4;

pub fn config() -> Config {
    Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(SEED),
        failure_persistence: None,
        max_shrink_iters: 256,
        ..Config::default()
    }
}

fn factor(ell: usize, order: u32, exps: &'static [(i64, i64)]) -> impl Strategy<Value = (Generator, Exponent)> {
    (0..ell, 0..=order, prop::sample::select(exps))
        .prop_map(|(v, n, (p, q))| (Generator::new(v, n), Exponent::new(p, q)))
}

fn sum_of_terms(
    ell: usize,
    order: u32,
    exps: &'static [(i64, i64)],
    max_terms: usize,
    max_factors: usize,
) -> BoxedStrategy<Expression> {
    let coeff = prop::sample::select(&[-3i64, -2, -1, 1, 2, 3][..]);
    let term = (coeff, prop::collection::vec(factor(ell, order, exps), 0..=max_factors))
        .prop_map(|(c, fs)| Expression::term(Coefficient::from_int(c), Monomial::from_factors(fs)));
    prop::collection::vec(term, 1..=max_terms).prop_map(|ts| ts.into_iter().sum()).boxed()
}

/// Differential polynomials in `ell` variables, jet order ≤ 4.
pub fn poly(ell: usize) -> BoxedStrategy<Expression> {
    sum_of_terms(ell, MAX_ORDER, &[(1, 1), (2, 1)], 3, 3)
}

/// Elements with rational and negative exponents.
pub fn elem(ell: usize) -> BoxedStrategy<Expression> {
    sum_of_terms(ell, MAX_ORDER, &[(1, 1), (2, 1), (-1, 1), (1, 2), (-1, 2), (-2, 1)], 3, 3)
}

/// Smaller elements for the bracket identities, whose cost grows fast with jet order.
pub fn light(ell: usize) -> BoxedStrategy<Expression> {
    sum_of_terms(ell, 2, &[(1, 1), (2, 1), (-1, 1), (1, 2)], 2, 2)
}

pub fn light_poly(ell: usize) -> BoxedStrategy<Expression> {
    sum_of_terms(ell, 2, &[(1, 1), (2, 1)], 2, 2)
}

pub fn vector(ell: usize, s: fn(usize) -> BoxedStrategy<Expression>) -> BoxedStrategy<VectorExpr> {
    prop::collection::vec(s(ell), ell).prop_map(VectorExpr).boxed()
}

fn small_poly(ell: usize) -> BoxedStrategy<Expression> {
    sum_of_terms(ell, 2, &[(1, 1)], 2, 2)
}

pub fn diffop(ell: usize) -> BoxedStrategy<DiffOp> {
    prop::collection::vec((0u32..=3, small_poly(ell)), 0..=2).prop_map(DiffOp::from_terms).boxed()
}

pub fn matrix(ell: usize) -> BoxedStrategy<MatrixDiffOp> {
    prop::collection::vec(prop::collection::vec(diffop(ell), ell), ell)
        .prop_map(|rows| MatrixDiffOp::from_rows(rows).expect("square"))
        .boxed()
}

fn with_ell<T: std::fmt::Debug + 'static>(f: fn(usize) -> BoxedStrategy<T>) -> BoxedStrategy<(usize, T)> {
    (1usize..=3).prop_flat_map(move |ell| f(ell).prop_map(move |x| (ell, x))).boxed()
}

fn eq<T: PartialEq + std::fmt::Debug>(a: T, b: T) -> Result<(), TestCaseError> {
    prop_assert_eq!(a, b);
    Ok(())
}

fn lambda(p: &LambdaPoly) -> LambdaPoly {
    p.shift_degree(1)
}

/// Σ_d p_d (λ+∂)^d h.
fn right_apply(p: &LambdaPoly, h: &Expression) -> LambdaPoly {
    let mut out = LambdaPoly::zero();
    for (d, c) in p.coeffs() {
        out.add_assign(&LambdaPoly::constant(h.clone()).shift(1, d).mul_expr(c));
    }
    out
}

type Br<'a> = Box<dyn Fn(&Expression, &Expression) -> LambdaPoly + 'a>;

fn sesquilinear(br: &Br, f: &Expression, g: &Expression) -> Result<(), TestCaseError> {
    let p = br(f, g);
    eq(br(&f.total_derivative(), g), lambda(&p).neg())?;
    eq(br(f, &g.total_derivative()), p.shift(1, 1))
}

fn leibniz(br: &Br, f: &Expression, g: &Expression, h: &Expression) -> Result<(), TestCaseError> {
    // {f_λ gh} = {f_λ g}h + {f_λ h}g
    let left = br(f, &(g * h));
    eq(left, br(f, g).mul_expr(h).add(&br(f, h).mul_expr(g)))?;
    // {fh_λ g} = {f_{λ+∂} g}→h + {h_{λ+∂} g}→f
    let right = br(&(f * h), g);
    eq(right, right_apply(&br(f, g), h).add(&right_apply(&br(h, g), f)))
}

pub type Suite = (&'static str, fn() -> Result<(), String>);

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(config());
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn comm_frac() -> Result<(), String> {
    run((with_ell(elem), 0usize..3, 0u32..=MAX_ORDER), |((ell, f), var, n)| {
        let var = var % ell;
        let lhs = &f.total_derivative().partial_derivative(var, n) - &f.partial_derivative(var, n).total_derivative();
        let rhs = if n == 0 { Expression::zero() } else { f.partial_derivative(var, n - 1) };
        eq(lhs, rhs)
    })
}

pub fn sesquilinearity() -> Result<(), String> {
    run(
        (1usize..=3).prop_flat_map(|ell| (matrix(ell), light(ell), light(ell))),
        |(h, f, g)| {
            let lam: Br = Box::new(|a, b| lambda_bracket(&h, a, b));
            let bel: Br = Box::new(|a, b| beltrami_bracket(a, b));
            sesquilinear(&lam, &f, &g)?;
            sesquilinear(&bel, &f, &g)
        },
    )
}

pub fn leibniz_rules() -> Result<(), String> {
    run(
        (1usize..=3).prop_flat_map(|ell| (matrix(ell), light_poly(ell), light_poly(ell), light(ell))),
        |(h, f, g, k)| {
            let lam: Br = Box::new(|a, b| lambda_bracket(&h, a, b));
            let bel: Br = Box::new(|a, b| beltrami_bracket(a, b));
            leibniz(&lam, &f, &g, &k)?;
            leibniz(&bel, &f, &g, &k)
        },
    )
}

pub fn skew_commutativity() -> Result<(), String> {
    run(
        (1usize..=2).prop_flat_map(|ell| (matrix(ell), light_poly(ell), light_poly(ell))),
        |(a, f, g)| {
            let h = a.sub(&a.adjoint()).expect("square");
            eq(lambda_bracket(&h, &f, &g), lambda_bracket(&h, &g, &f).flip().neg())?;
            // H = ∂² is symmetric, so skew-commutativity holds only where the bracket vanishes
            let sym = MatrixDiffOp::diagonal(vec![DiffOp::d(2); h.size()]);
            let p = lambda_bracket(&sym, &f, &g);
            prop_assert_eq!(p.is_zero(), p == lambda_bracket(&sym, &g, &f).flip().neg());
            Ok(())
        },
    )
}

pub fn vder_kills_derivatives() -> Result<(), String> {
    run(with_ell(elem), |(ell, f)| eq(variational_derivative(&f.total_derivative(), ell), VectorExpr::zeros(ell.max(1))))
}

pub fn exact_is_closed() -> Result<(), String> {
    run(with_ell(elem), |(ell, h)| {
        prop_assert!(is_closed(&variational_derivative(&h, ell)).closed);
        Ok(())
    })
}

pub fn integrate_round_trip() -> Result<(), String> {
    run(with_ell(elem), |(_, g)| {
        let dg = g.total_derivative();
        let (back, c) = integrate_total(&dg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(c.is_zero());
        eq(back.total_derivative(), dg)
    })
}

pub fn exactify_round_trip() -> Result<(), String> {
    run(with_ell(elem), |(ell, h)| {
        let f = variational_derivative(&h, ell);
        let back = exactify(&f).map_err(|e| TestCaseError::fail(format!("{e} for {h}")))?;
        eq(variational_derivative(&back, f.len()), f.clone())?;
        // Ker δ/δu = ∂V + constants
        let diff = &back - &h;
        let diff = &diff - &Expression::constant(diff.constant_term());
        prop_assert!(functional_is_zero(&diff).equal);
        Ok(())
    })
}

pub fn adjoint_laws() -> Result<(), String> {
    run((1usize..=2).prop_flat_map(|ell| (matrix(ell), matrix(ell))), |(a, b)| {
        eq(a.adjoint().adjoint(), a.clone())?;
        let ab = a.compose(&b).expect("square");
        eq(ab.adjoint(), b.adjoint().compose(&a.adjoint()).expect("square"))
    })
}

pub fn integration_by_parts() -> Result<(), String> {
    run(
        (1usize..=3).prop_flat_map(|ell| (matrix(ell), vector(ell, elem), vector(ell, elem))),
        |(a, f, g)| {
            let lhs = f.dot(&a.apply(&g).expect("size"));
            let rhs = a.adjoint().apply(&f).expect("size").dot(&g);
            prop_assert!(functional_is_zero(&(&lhs - &rhs)).equal, "A = {a}, F = {f}, G = {g}, diff = {}", &lhs - &rhs);
            Ok(())
        },
    )
}

pub fn beltrami_identities() -> Result<(), String> {
    run(
        (1usize..=3).prop_flat_map(|ell| (0..ell, light_poly(ell), light_poly(ell))),
        |(i, f, g)| {
            let b = |x: &Expression, y: &Expression| beltrami_bracket(x, y);
            let ui = Expression::gen(i, 0);
            let lhs = bracket_into_mu(b, &ui, &b(&f, &g)).sub(&bracket_mu_into_lambda(b, &f, &b(&ui, &g)));
            eq(lhs, bracket_nested_left(b, &b(&ui, &f), &g))?;
            let lhs = bracket_into_mu(b, &f, &b(&g, &ui)).add(&bracket_mu_into_lambda(b, &g, &b(&f, &ui)));
            eq(lhs, bracket_nested_left(b, &b(&f, &g), &ui))
        },
    )
}

pub fn kdv_operator() -> MatrixDiffOp {
    let u = |n| Expression::gen(0, n);
    MatrixDiffOp::scalar(DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2)), (3, Expression::param("c"))]))
}

pub fn jacobi_forms_agree() -> Result<(), String> {
    let h = kdv_operator();
    run((vector(1, poly), vector(1, poly)), move |(f, g)| {
        prop_assert!(jacobi_operator_residual(&h, &f, &g).expect("size").is_zero());
        Ok(())
    })
}

pub fn functional_bracket_skew() -> Result<(), String> {
    run((1usize..=2).prop_flat_map(|ell| (matrix(ell), light_poly(ell), light_poly(ell))), |(a, f, g)| {
        let h = a.sub(&a.adjoint()).expect("square");
        let (f, g) = (LocalFunctional(f), LocalFunctional(g));
        let s = &functional_bracket(&h, &f, &g).0 + &functional_bracket(&h, &g, &f).0;
        prop_assert!(functional_is_zero(&s).equal);
        Ok(())
    })
}

pub const SUITES: &[Suite] = &[
    ("comm_frac", comm_frac),
    ("sesquilinearity", sesquilinearity),
    ("leibniz_rules", leibniz_rules),
    ("skew_commutativity", skew_commutativity),
    ("vder_kills_derivatives", vder_kills_derivatives),
    ("exact_is_closed", exact_is_closed),
    ("integrate_round_trip", integrate_round_trip),
    ("exactify_round_trip", exactify_round_trip),
    ("adjoint_laws", adjoint_laws),
    ("integration_by_parts", integration_by_parts),
    ("beltrami_identities", beltrami_identities),
    ("jacobi_forms_agree", jacobi_forms_agree),
    ("functional_bracket_skew", functional_bracket_skew),
];
