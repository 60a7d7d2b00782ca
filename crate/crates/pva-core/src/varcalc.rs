//! Variational calculus: variational and Euler derivatives, Fréchet
//! derivatives, closedness, and the two exactness algorithms.

use num::{BigRational, One};
use serde::Serialize;

use crate::diffalg::{binomial, exp_to_big, Coefficient, Exponent, Expression, Generator, VectorExpr};
use crate::diffop::{DiffOp, MatrixDiffOp};
use crate::error::{Error, Result};

/// An expression taken modulo total derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFunctional(pub Expression);

impl LocalFunctional {
    pub fn new(e: Expression) -> Self {
        LocalFunctional(e)
    }

    pub fn representative(&self) -> &Expression {
        &self.0
    }
}

impl From<Expression> for LocalFunctional {
    fn from(e: Expression) -> Self {
        LocalFunctional(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosednessReport {
    pub closed: bool,
    pub defect: MatrixDiffOp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionalEquality {
    pub equal: bool,
    /// The difference was certified to lie in ∂V (not only in a normal extension).
    pub strict: bool,
}

fn ell_of(f: &Expression) -> usize {
    f.max_var().map_or(0, |v| v + 1)
}

/// δf/δu_i = Σ_n (−∂)^n ∂f/∂u_i^(n).
pub fn variational_derivative_i(f: &Expression, var: usize) -> Expression {
    let Some(top) = f.max_order_of(var) else {
        return Expression::zero();
    };
    // Horner: p_0 − ∂(p_1 − ∂(p_2 − …))
    let mut acc = Expression::zero();
    for n in (0..=top).rev() {
        acc = &f.partial_derivative(var, n) - &acc.total_derivative();
    }
    acc
}

/// δf/δu as a vector of length `ell` (at least the number of variables in `f`).
pub fn variational_derivative(f: &Expression, ell: usize) -> VectorExpr {
    let ell = ell.max(ell_of(f));
    VectorExpr((0..ell).map(|i| variational_derivative_i(f, i)).collect())
}

/// E_i^(m) f = Σ_n C(n,m) (−1)^n ∂^(n−m) ∂f/∂u_i^(n).
pub fn euler_operator(f: &Expression, var: usize, m: u32) -> Expression {
    let Some(top) = f.max_order_of(var) else {
        return Expression::zero();
    };
    let mut out = Expression::zero();
    for n in m..=top {
        let p = f.partial_derivative(var, n);
        if p.is_zero() {
            continue;
        }
        let sign: BigRational = if n % 2 == 0 { BigRational::one() } else { -BigRational::one() };
        out += p.derivative_n(n - m).scale_rational(&(binomial(n, m) * sign));
    }
    out
}

/// D_F with (D_F)_ij = Σ_n ∂F_i/∂u_j^(n) ∂^n, or its adjoint.
pub fn frechet(f: &VectorExpr, adjoint: bool) -> MatrixDiffOp {
    let ell = f.len();
    let mut d = MatrixDiffOp::zero(ell);
    for i in 0..ell {
        for j in 0..ell {
            let Some(top) = f[i].max_order_of(j) else {
                continue;
            };
            let op = DiffOp::from_terms((0..=top).map(|n| (n, f[i].partial_derivative(j, n))));
            d.set(i, j, op);
        }
    }
    if adjoint {
        d.adjoint()
    } else {
        d
    }
}

pub fn is_closed(f: &VectorExpr) -> ClosednessReport {
    let d = frechet(f, false);
    let defect = d.sub(&d.adjoint()).expect("same size");
    ClosednessReport { closed: defect.is_zero(), defect }
}

/// Termwise power-rule preimage of ∂/∂u_i^(n).
pub fn antiderivative(f: &Expression, g: Generator) -> Result<Expression> {
    if let Some(top) = f.diff_order() {
        if top > g {
            return Err(Error::OrderViolation(format!("{f} depends on a generator above the integration variable")));
        }
    }
    let one = Exponent::one();
    let mut out = Expression::zero();
    for (m, c) in f.terms() {
        let e = m.exponent(g);
        if e == -one {
            return Err(Error::LogRequired(format!("{}", Expression::term(c.clone(), m.clone()))));
        }
        let k = e + one;
        let nm = m.times_power(g, one);
        out.add_term(nm, c.scale_rational(&exp_to_big(k.recip())));
    }
    Ok(out)
}

/// Finds `g` and a constant with `f = ∂g + const`.
pub fn integrate_total(f: &Expression) -> Result<(Expression, Coefficient)> {
    let ell = ell_of(f);
    if !variational_derivative(f, ell).is_zero() {
        return Err(Error::NotExact(format!("{f}")));
    }
    let mut rest = f.clone();
    let mut g = Expression::zero();
    while let Some(top) = rest.diff_order() {
        if top.order == 0 {
            return Err(Error::NotExact(format!("{f}")));
        }
        let p = rest.partial(top);
        let step = antiderivative(&p, Generator::new(top.var, top.order - 1))?;
        rest -= step.total_derivative();
        g += step;
        if rest.diff_order().is_some_and(|t| t >= top) {
            return Err(Error::NotExact(format!("{f}")));
        }
    }
    Ok((g, rest.constant_term()))
}

/// The filtration triple (n, i, j) of a vector: (n, i) is the top generator of
/// all components and j the last component depending on it.
fn triple(f: &VectorExpr) -> Option<(Generator, usize)> {
    let top = f.iter().filter_map(Expression::diff_order).max()?;
    let j = (0..f.len()).rev().find(|&j| f[j].depends_on(top))?;
    Some((top, j))
}

/// Descending-triple algorithm; `f` is assumed closed.
pub fn exactify_inductive(f: &VectorExpr) -> Result<Expression> {
    let ell = f.len();
    let mut rest = f.clone();
    let mut out = Expression::zero();
    let mut last: Option<(Generator, usize)> = None;
    while !rest.is_zero() {
        let Some((top, j)) = triple(&rest) else {
            // Only constants are left; a constant c_j is δ(c_j u_j)/δu.
            for (k, e) in rest.iter().enumerate() {
                out += e * &Expression::gen(k, 0);
            }
            break;
        };
        if let Some(prev) = last {
            if (top, j) >= prev {
                return Err(Error::NotClosed("exactness recursion did not descend".into()));
            }
        }
        last = Some((top, j));
        let (n, i) = (top.order, top.var);
        let p = rest[j].partial(top);
        let piece = if n % 2 == 0 {
            let m = n / 2;
            let inner = antiderivative(&p, Generator::new(j, m))?;
            let outer = antiderivative(&inner, Generator::new(i, m))?;
            if m % 2 == 0 { outer } else { -outer }
        } else {
            if j >= i {
                return Err(Error::NotClosed(format!("odd top order with j = {} ≥ i = {}", j + 1, i + 1)));
            }
            let inner = antiderivative(&p, Generator::new(i, (n - 1) / 2))?;
            let outer = antiderivative(&inner, Generator::new(j, n.div_ceil(2)))?;
            if n.div_ceil(2) % 2 == 0 { outer } else { -outer }
        };
        rest = rest.sub(&variational_derivative(&piece, ell));
        out += piece;
    }
    Ok(out)
}

/// Δ-shortcut f = Δ⁻¹(u·F); `None` when a Δ-component of F has degree −1
/// (so u·F has a degree-0 part) or the candidate does not reproduce F.
pub fn exactify_shortcut(f: &VectorExpr) -> Option<Expression> {
    let ell = f.len();
    let minus_one = -Exponent::one();
    if f.iter().any(|e| e.degree_components().keys().any(|d| *d == minus_one)) {
        return None;
    }
    let uf: Expression = (0..ell).map(|i| &Expression::gen(i, 0) * &f[i]).sum();
    let cand = uf.delta_inverse()?;
    (variational_derivative(&cand, ell) == *f).then_some(cand)
}

/// Finds `f` with δf/δu = F for closed `F`.
pub fn exactify(f: &VectorExpr) -> Result<Expression> {
    if f.is_zero() {
        return Ok(Expression::zero());
    }
    let report = is_closed(f);
    if !report.closed {
        return Err(Error::NotClosed(format!("{f}")));
    }
    if let Some(cand) = exactify_shortcut(f) {
        return Ok(cand);
    }
    let cand = exactify_inductive(f)?;
    if variational_derivative(&cand, f.len()) != *f {
        return Err(Error::NotClosed(format!("{f}")));
    }
    Ok(cand)
}

/// Equality of local functionals: δ(a−b)/δu = 0 and no constant term.
pub fn functional_equal(a: &LocalFunctional, b: &LocalFunctional) -> FunctionalEquality {
    let diff = &a.0 - &b.0;
    functional_is_zero(&diff)
}

pub fn functional_is_zero(diff: &Expression) -> FunctionalEquality {
    if diff.is_zero() {
        return FunctionalEquality { equal: true, strict: true };
    }
    let ell = ell_of(diff);
    if !variational_derivative(diff, ell).is_zero() {
        return FunctionalEquality { equal: false, strict: false };
    }
    // With negative exponents a constant can itself be exact, e.g. 1 = ∂(u/u') + u u''/u'^2.
    match integrate_total(diff) {
        Ok((_, c)) => {
            let ok = c.is_zero();
            FunctionalEquality { equal: ok, strict: ok }
        }
        Err(_) => FunctionalEquality { equal: diff.constant_term().is_zero(), strict: false },
    }
}
