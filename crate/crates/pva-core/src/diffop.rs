//! Matrix differential operators with expression coefficients.
//!
//! Every entry is stored left-normalized as Σ_k a_k ∂^k, so equality of
//! representations is equality of operators.

use std::collections::BTreeMap;
use std::fmt;

use crate::diffalg::{binomial, Coefficient, Exponent, Expression, VarNames, VectorExpr};
use crate::error::{Error, Result};
use crate::pva::LambdaPoly;

/// Scalar operator Σ_k a_k ∂^k.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct DiffOp {
    terms: BTreeMap<u32, Expression>,
}

impl DiffOp {
    pub fn zero() -> Self {
        DiffOp::default()
    }

    pub fn identity() -> Self {
        DiffOp::mul_by(Expression::one())
    }

    /// Multiplication by `a`.
    pub fn mul_by(a: Expression) -> Self {
        DiffOp::term(a, 0)
    }

    /// `∂^k`.
    pub fn d(k: u32) -> Self {
        DiffOp::term(Expression::one(), k)
    }

    /// `a ∂^k`.
    pub fn term(a: Expression, k: u32) -> Self {
        let mut op = DiffOp::zero();
        op.add_term(k, a);
        op
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (u32, Expression)>) -> Self {
        let mut op = DiffOp::zero();
        for (k, a) in iter {
            op.add_term(k, a);
        }
        op
    }

    fn add_term(&mut self, k: u32, a: Expression) {
        if a.is_zero() {
            return;
        }
        let slot = self.terms.entry(k).or_default();
        *slot += a;
        if slot.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (u32, &Expression)> {
        self.terms.iter().map(|(k, a)| (*k, a))
    }

    pub fn coeff(&self, k: u32) -> Expression {
        self.terms.get(&k).cloned().unwrap_or_default()
    }

    pub fn order(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn apply(&self, f: &Expression) -> Expression {
        let Some(top) = self.order() else {
            return Expression::zero();
        };
        let mut out = Expression::zero();
        let mut der = f.clone();
        for k in 0..=top {
            if der.is_zero() {
                break;
            }
            if let Some(a) = self.terms.get(&k) {
                out += a * &der;
            }
            if k < top {
                der = der.total_derivative();
            }
        }
        out
    }

    pub fn add(&self, o: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (k, a) in &o.terms {
            out.add_term(*k, a.clone());
        }
        out
    }

    pub fn sub(&self, o: &DiffOp) -> DiffOp {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(k, a)| (*k, -a)).collect() }
    }

    /// `e ∘ self` (left multiplication of every coefficient).
    pub fn left_mul(&self, e: &Expression) -> DiffOp {
        DiffOp::from_terms(self.terms.iter().map(|(k, a)| (*k, e * a)))
    }

    pub fn scale(&self, c: &Coefficient) -> DiffOp {
        DiffOp::from_terms(self.terms.iter().map(|(k, a)| (*k, a.scale(c))))
    }

    /// `self ∘ o`, commuting ∂ past coefficients by Leibniz.
    pub fn compose(&self, o: &DiffOp) -> DiffOp {
        let mut out = DiffOp::zero();
        let top = self.order().unwrap_or(0);
        for (m, b) in &o.terms {
            let mut chain = vec![b.clone()];
            for r in 1..=top as usize {
                let next = chain[r - 1].total_derivative();
                chain.push(next);
            }
            for (k, a) in &self.terms {
                for r in 0..=*k {
                    let der = &chain[r as usize];
                    if der.is_zero() {
                        break;
                    }
                    out.add_term(k - r + m, (a * der).scale_rational(&binomial(*k, r)));
                }
            }
        }
        out
    }

    /// Formal adjoint Σ_n (−∂)^n ∘ a_n.
    pub fn adjoint(&self) -> DiffOp {
        let mut out = DiffOp::zero();
        for (n, a) in &self.terms {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            let mut der = a.clone();
            for r in 0..=*n {
                // ∂^n ∘ a = Σ_r C(n,r) (∂^r a) ∂^(n−r)
                if der.is_zero() {
                    break;
                }
                out.add_term(n - r, der.scale_rational(&(binomial(*n, r) * num::BigRational::from_integer(sign.into()))));
                if r < *n {
                    der = der.total_derivative();
                }
            }
        }
        out
    }

    pub fn symbol(&self) -> LambdaPoly {
        LambdaPoly::from_coeffs(self.terms.iter().map(|(k, a)| (*k, a.clone())))
    }

    /// ∂/∂u_i^(n) applied to each coefficient.
    pub fn partial(&self, var: usize, order: u32) -> DiffOp {
        DiffOp::from_terms(self.terms.iter().map(|(k, a)| (*k, a.partial_derivative(var, order))))
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> DiffOp {
        DiffOp::from_terms(self.terms.iter().map(|(k, a)| (*k, f(a))))
    }

    pub fn render(&self, names: &VarNames) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(k, a)| {
                let s = names.expression(a);
                let dk = match k {
                    0 => return s,
                    1 => "d".to_string(),
                    k => format!("d^{k}"),
                };
                if s == "1" {
                    dk
                } else if a.len() == 1 {
                    format!("{s}*{dk}")
                } else {
                    format!("({s})*{dk}")
                }
            })
            .collect();
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            match (i, p.strip_prefix('-')) {
                (0, _) => out.push_str(p),
                (_, Some(rest)) => {
                    out.push_str(" - ");
                    out.push_str(rest);
                }
                (_, None) => {
                    out.push_str(" + ");
                    out.push_str(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ell = self.terms.values().filter_map(|e| e.max_var()).max().map_or(1, |v| v + 1);
        write!(f, "{}", self.render(&VarNames::standard(ell)))
    }
}

/// ℓ×ℓ matrix of scalar operators, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatrixDiffOp {
    size: usize,
    entries: Vec<DiffOp>,
}

/// Entrywise λ-symbols.
pub type SymbolMatrix = Vec<Vec<LambdaPoly>>;

impl MatrixDiffOp {
    pub fn zero(size: usize) -> Self {
        MatrixDiffOp { size, entries: vec![DiffOp::zero(); size * size] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = MatrixDiffOp::zero(size);
        for i in 0..size {
            m.set(i, i, DiffOp::identity());
        }
        m
    }

    pub fn scalar(op: DiffOp) -> Self {
        MatrixDiffOp { size: 1, entries: vec![op] }
    }

    pub fn diagonal(ops: Vec<DiffOp>) -> Self {
        let mut m = MatrixDiffOp::zero(ops.len());
        for (i, op) in ops.into_iter().enumerate() {
            m.set(i, i, op);
        }
        m
    }

    /// Builds from rows; all rows must have length equal to the row count.
    pub fn from_rows(rows: Vec<Vec<DiffOp>>) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for r in rows {
            if r.len() != size {
                return Err(Error::SizeMismatch { expected: size, got: r.len() });
            }
            entries.extend(r);
        }
        Ok(MatrixDiffOp { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &DiffOp {
        &self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, op: DiffOp) {
        self.entries[i * self.size + j] = op;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(DiffOp::is_zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &DiffOp)> {
        self.entries.iter().enumerate().map(move |(k, op)| (k / self.size, k % self.size, op))
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.size {
            return Err(Error::SizeMismatch { expected: self.size, got: n });
        }
        Ok(())
    }

    pub fn apply(&self, p: &VectorExpr) -> Result<VectorExpr> {
        self.check(p.len())?;
        let out = (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j).apply(&p[j])).sum())
            .collect();
        Ok(VectorExpr(out))
    }

    pub fn compose(&self, o: &MatrixDiffOp) -> Result<MatrixDiffOp> {
        self.check(o.size)?;
        let n = self.size;
        let mut out = MatrixDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = DiffOp::zero();
                for l in 0..n {
                    let (a, b) = (self.get(i, l), o.get(l, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.compose(b));
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> MatrixDiffOp {
        let n = self.size;
        let mut out = MatrixDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i).adjoint());
            }
        }
        out
    }

    pub fn add(&self, o: &MatrixDiffOp) -> Result<MatrixDiffOp> {
        self.check(o.size)?;
        Ok(MatrixDiffOp {
            size: self.size,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, o: &MatrixDiffOp) -> Result<MatrixDiffOp> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> MatrixDiffOp {
        self.map(|op| op.neg())
    }

    pub fn scale(&self, c: &Coefficient) -> MatrixDiffOp {
        self.map(|op| op.scale(c))
    }

    pub fn map(&self, f: impl Fn(&DiffOp) -> DiffOp) -> MatrixDiffOp {
        MatrixDiffOp { size: self.size, entries: self.entries.iter().map(f).collect() }
    }

    pub fn symbol(&self) -> SymbolMatrix {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j).symbol()).collect())
            .collect()
    }

    /// Highest derivative order occurring in any coefficient.
    pub fn max_coefficient_order(&self) -> Option<u32> {
        let mut best = None;
        for op in &self.entries {
            for (_, a) in op.terms() {
                if let Some(g) = a.diff_order() {
                    let m = (0..=g.var).filter_map(|v| a.max_order_of(v)).max();
                    best = best.max(m);
                }
            }
        }
        best
    }

    /// Common Δ-degree of all coefficients, if they share one.
    pub fn degree(&self) -> Option<Exponent> {
        let mut deg = None;
        for op in &self.entries {
            for (_, a) in op.terms() {
                let d = a.homogeneous_degree()?;
                match deg {
                    None => deg = Some(d),
                    Some(x) if x == d => {}
                    Some(_) => return None,
                }
            }
        }
        deg
    }

    pub fn is_skew_adjoint(&self) -> bool {
        self.adjoint() == self.neg()
    }

    pub fn render(&self, names: &VarNames) -> String {
        if self.size == 1 {
            return self.entries[0].render(names);
        }
        let rows: Vec<String> = (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j).render(names)).collect::<Vec<_>>().join(", "))
            .collect();
        rows.join("; ")
    }
}

impl fmt::Display for MatrixDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&VarNames::standard(self.size)))
    }
}

pub fn apply(a: &MatrixDiffOp, p: &VectorExpr) -> Result<VectorExpr> {
    a.apply(p)
}

pub fn adjoint(a: &MatrixDiffOp) -> MatrixDiffOp {
    a.adjoint()
}

pub fn compose(a: &MatrixDiffOp, b: &MatrixDiffOp) -> Result<MatrixDiffOp> {
    a.compose(b)
}

pub fn symbol(a: &MatrixDiffOp) -> SymbolMatrix {
    a.symbol()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u32) -> Expression {
        Expression::gen(0, n)
    }

    fn virasoro() -> DiffOp {
        DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2)), (3, Expression::param("c"))])
    }

    #[test]
    fn apply_examples() {
        assert_eq!(DiffOp::d(1).apply(&u(0)), u(1));
        let want = &(&u(0) * &u(1)).scale_int(3) + &(&Expression::param("c") * &u(3));
        assert_eq!(virasoro().apply(&u(0)), want);
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(DiffOp::d(1).adjoint(), DiffOp::d(1).neg());
        let k = DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2))]);
        assert_eq!(k.adjoint(), k.neg());
        assert_eq!(virasoro().adjoint().adjoint(), virasoro());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(DiffOp::d(1).compose(&DiffOp::d(1)), DiffOp::d(2));
        let r = Expression::gen_pow(0, 0, 1, 2);
        let left = DiffOp::term(r.scale_int(2), 1);
        let right = DiffOp::mul_by(r);
        let k = DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2))]);
        assert_eq!(left.compose(&right), k);
    }

    #[test]
    fn symbol_examples() {
        let s = virasoro().symbol();
        assert_eq!(s.coeff(0), u(1));
        assert_eq!(s.coeff(1), u(0).scale_int(2));
        assert_eq!(s.coeff(3), Expression::param("c"));
        assert!(DiffOp::zero().symbol().is_zero());
        assert_eq!(DiffOp::d(2).adjoint().symbol(), LambdaPoly::monomial(2, Expression::one()));
    }

    #[test]
    fn matrix_adjoint_transposes() {
        let mut m = MatrixDiffOp::zero(2);
        m.set(0, 1, DiffOp::term(Expression::gen(1, 0), 1));
        let a = m.adjoint();
        assert!(a.get(0, 1).is_zero());
        assert_eq!(a.get(1, 0), &DiffOp::from_terms([(1, -Expression::gen(1, 0)), (0, -Expression::gen(1, 1))]));
    }
}
