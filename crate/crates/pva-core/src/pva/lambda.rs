//! Polynomials in λ (and λ, μ) with expression coefficients.
//!
//! `∂` in shifted arguments such as `(λ+∂)^k` always acts on the
//! coefficients to its right.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One};

use crate::diffalg::{binomial, Expression, VarNames};
use crate::diffop::DiffOp;

fn pow_i(a: i64, k: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(a).pow(k))
}

fn insert(map: &mut BTreeMap<u32, Expression>, d: u32, e: Expression) {
    if e.is_zero() {
        return;
    }
    let slot = map.entry(d).or_default();
    *slot += e;
    if slot.is_zero() {
        map.remove(&d);
    }
}

/// ∂^r e for r = 0..=k.
fn derivative_chain(e: &Expression, k: u32) -> Vec<Expression> {
    let mut out = Vec::with_capacity(k as usize + 1);
    out.push(e.clone());
    for r in 1..=k as usize {
        let next = out[r - 1].total_derivative();
        out.push(next);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LambdaPoly {
    coeffs: BTreeMap<u32, Expression>,
}

impl LambdaPoly {
    pub fn zero() -> Self {
        LambdaPoly::default()
    }

    pub fn constant(e: Expression) -> Self {
        LambdaPoly::monomial(0, e)
    }

    pub fn monomial(d: u32, e: Expression) -> Self {
        let mut p = LambdaPoly::zero();
        insert(&mut p.coeffs, d, e);
        p
    }

    pub fn from_coeffs(iter: impl IntoIterator<Item = (u32, Expression)>) -> Self {
        let mut p = LambdaPoly::zero();
        for (d, e) in iter {
            insert(&mut p.coeffs, d, e);
        }
        p
    }

    pub fn coeff(&self, d: u32) -> Expression {
        self.coeffs.get(&d).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl DoubleEndedIterator<Item = (u32, &Expression)> {
        self.coeffs.iter().map(|(d, e)| (*d, e))
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn at_zero(&self) -> Expression {
        self.coeff(0)
    }

    pub fn add(&self, o: &LambdaPoly) -> LambdaPoly {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn add_assign(&mut self, o: &LambdaPoly) {
        for (d, e) in &o.coeffs {
            insert(&mut self.coeffs, *d, e.clone());
        }
    }

    pub fn sub(&self, o: &LambdaPoly) -> LambdaPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> LambdaPoly {
        LambdaPoly { coeffs: self.coeffs.iter().map(|(d, e)| (*d, -e)).collect() }
    }

    /// Left multiplication by an expression.
    pub fn mul_expr(&self, e: &Expression) -> LambdaPoly {
        LambdaPoly::from_coeffs(self.coeffs.iter().map(|(d, c)| (*d, e * c)))
    }

    pub fn mul(&self, o: &LambdaPoly) -> LambdaPoly {
        let mut out = LambdaPoly::zero();
        for (da, a) in &self.coeffs {
            for (db, b) in &o.coeffs {
                insert(&mut out.coeffs, da + db, a * b);
            }
        }
        out
    }

    /// Multiplication by λ^k.
    pub fn shift_degree(&self, k: u32) -> LambdaPoly {
        LambdaPoly { coeffs: self.coeffs.iter().map(|(d, e)| (d + k, e.clone())).collect() }
    }

    /// ∂ applied to every coefficient.
    pub fn total_derivative(&self) -> LambdaPoly {
        LambdaPoly::from_coeffs(self.coeffs.iter().map(|(d, e)| (*d, e.total_derivative())))
    }

    /// `(aλ + ∂)^k` applied to self.
    pub fn shift(&self, a: i64, k: u32) -> LambdaPoly {
        let mut out = LambdaPoly::zero();
        for (d, e) in &self.coeffs {
            let chain = derivative_chain(e, k);
            for (r, der) in chain.into_iter().enumerate() {
                let r = r as u32;
                if der.is_zero() {
                    break;
                }
                let c = binomial(k, r) * pow_i(a, k - r);
                insert(&mut out.coeffs, d + k - r, der.scale_rational(&c));
            }
        }
        out
    }

    /// `h(λ + ∂)` applied to self, with the coefficients of `h` on the left.
    pub fn apply_op(&self, h: &DiffOp) -> LambdaPoly {
        let mut out = LambdaPoly::zero();
        for (k, a) in h.terms() {
            out.add_assign(&self.shift(1, k).mul_expr(a));
        }
        out
    }

    /// Σ_n (−λ−∂)^n p_n: the value at `−λ−∂` with ∂ acting on the coefficients.
    pub fn flip(&self) -> LambdaPoly {
        let mut out = LambdaPoly::zero();
        for (d, e) in &self.coeffs {
            let t = LambdaPoly::constant(e.clone()).shift(1, *d);
            out.add_assign(&if d % 2 == 0 { t } else { t.neg() });
        }
        out
    }

    /// Σ_d p_d (λ+μ)^d as a two-variable polynomial.
    pub fn at_sum(&self) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for (d, e) in &self.coeffs {
            for t in 0..=*d {
                out.insert(t, d - t, e.scale_rational(&binomial(*d, t)));
            }
        }
        out
    }

    pub fn in_lambda(&self) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for (d, e) in &self.coeffs {
            out.insert(*d, 0, e.clone());
        }
        out
    }

    pub fn in_mu(&self) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for (d, e) in &self.coeffs {
            out.insert(0, *d, e.clone());
        }
        out
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> LambdaPoly {
        LambdaPoly::from_coeffs(self.coeffs.iter().map(|(d, e)| (*d, f(e))))
    }

    pub fn render(&self, names: &VarNames) -> String {
        render_terms(self.coeffs.iter().rev().map(|(d, e)| (lam("λ", *d), e)), names)
    }
}

fn lam(sym: &str, d: u32) -> String {
    match d {
        0 => String::new(),
        1 => sym.to_string(),
        d => format!("{sym}^{d}"),
    }
}

fn render_terms<'a>(terms: impl Iterator<Item = (String, &'a Expression)>, names: &VarNames) -> String {
    let parts: Vec<String> = terms
        .map(|(l, e)| {
            let s = names.expression(e);
            if l.is_empty() {
                s
            } else if e.len() == 1 && !s.starts_with('-') {
                if s == "1" {
                    l
                } else {
                    format!("{s}*{l}")
                }
            } else {
                format!("({s})*{l}")
            }
        })
        .collect();
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

impl fmt::Display for LambdaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ell = self.coeffs.values().filter_map(|e| e.max_var()).max().map_or(1, |v| v + 1);
        write!(f, "{}", self.render(&VarNames::standard(ell)))
    }
}

/// Polynomial in two commuting indeterminates λ, μ.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BiLambdaPoly {
    coeffs: BTreeMap<(u32, u32), Expression>,
}

impl BiLambdaPoly {
    pub fn zero() -> Self {
        BiLambdaPoly::default()
    }

    pub fn insert(&mut self, dl: u32, dm: u32, e: Expression) {
        if e.is_zero() {
            return;
        }
        let slot = self.coeffs.entry((dl, dm)).or_default();
        *slot += e;
        if slot.is_zero() {
            self.coeffs.remove(&(dl, dm));
        }
    }

    pub fn coeff(&self, dl: u32, dm: u32) -> Expression {
        self.coeffs.get(&(dl, dm)).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = ((u32, u32), &Expression)> {
        self.coeffs.iter().map(|(k, e)| (*k, e))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_assign(&mut self, o: &BiLambdaPoly) {
        for ((a, b), e) in &o.coeffs {
            self.insert(*a, *b, e.clone());
        }
    }

    pub fn sub_assign(&mut self, o: &BiLambdaPoly) {
        for ((a, b), e) in &o.coeffs {
            self.insert(*a, *b, -e);
        }
    }

    pub fn add(&self, o: &BiLambdaPoly) -> BiLambdaPoly {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn sub(&self, o: &BiLambdaPoly) -> BiLambdaPoly {
        let mut out = self.clone();
        out.sub_assign(o);
        out
    }

    pub fn neg(&self) -> BiLambdaPoly {
        BiLambdaPoly { coeffs: self.coeffs.iter().map(|(k, e)| (*k, -e)).collect() }
    }

    pub fn mul_expr(&self, e: &Expression) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for ((a, b), c) in &self.coeffs {
            out.insert(*a, *b, e * c);
        }
        out
    }

    pub fn mul(&self, o: &BiLambdaPoly) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for ((a1, b1), x) in &self.coeffs {
            for ((a2, b2), y) in &o.coeffs {
                out.insert(a1 + a2, b1 + b2, x * y);
            }
        }
        out
    }

    /// `(aλ + bμ + ∂)^k` applied to self.
    pub fn shift(&self, a: i64, b: i64, k: u32) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for ((dl, dm), e) in &self.coeffs {
            let chain = derivative_chain(e, k);
            for (r, der) in chain.into_iter().enumerate() {
                let r = r as u32;
                if der.is_zero() {
                    break;
                }
                let s = k - r;
                let outer = binomial(k, r);
                for t in 0..=s {
                    let c = &outer * binomial(s, t) * pow_i(a, t) * pow_i(b, s - t);
                    if c == BigRational::from_integer(0.into()) {
                        continue;
                    }
                    let c = if c.is_one() { der.clone() } else { der.scale_rational(&c) };
                    out.insert(dl + t, dm + s - t, c);
                }
            }
        }
        out
    }

    /// `h(aλ + bμ + ∂)` applied to self, coefficients of `h` on the left.
    pub fn apply_op(&self, h: &DiffOp, a: i64, b: i64) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for (k, c) in h.terms() {
            out.add_assign(&self.shift(a, b, k).mul_expr(c));
        }
        out
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> BiLambdaPoly {
        let mut out = BiLambdaPoly::zero();
        for ((a, b), e) in &self.coeffs {
            out.insert(*a, *b, f(e));
        }
        out
    }

    pub fn render(&self, names: &VarNames) -> String {
        render_terms(
            self.coeffs.iter().rev().map(|((a, b), e)| {
                let l = [lam("λ", *a), lam("μ", *b)].into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>();
                (l.join("*"), e)
            }),
            names,
        )
    }
}

impl fmt::Display for BiLambdaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ell = self.coeffs.values().filter_map(|e| e.max_var()).max().map_or(1, |v| v + 1);
        write!(f, "{}", self.render(&VarNames::standard(ell)))
    }
}
