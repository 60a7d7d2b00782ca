use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num::{BigInt, BigRational, Rational64, Zero};

use super::coeff::Coefficient;
use crate::error::{Error, Result};

pub type Exponent = Rational64;

/// Jet variable `u_var^(order)`. Ordered by `(order, var)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    pub order: u32,
    pub var: usize,
}

impl Generator {
    pub fn new(var: usize, order: u32) -> Self {
        Generator { order, var }
    }

    pub fn prime(self) -> Self {
        Generator { order: self.order + 1, var: self.var }
    }
}

pub(crate) fn exp_to_big(e: Exponent) -> BigRational {
    BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

/// Power product of generators with nonzero rational exponents, sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Generator, Exponent)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn generator(g: Generator) -> Self {
        Monomial(vec![(g, Exponent::from_integer(1))])
    }

    pub fn power(g: Generator, e: Exponent) -> Self {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(g, e)])
        }
    }

    /// Builds a monomial from an arbitrary factor list, merging repeats.
    pub fn from_factors(factors: impl IntoIterator<Item = (Generator, Exponent)>) -> Self {
        let mut map: BTreeMap<Generator, Exponent> = BTreeMap::new();
        for (g, e) in factors {
            *map.entry(g).or_insert_with(Exponent::zero) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| !e.is_zero()).collect())
    }

    pub fn factors(&self) -> &[(Generator, Exponent)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> Option<Generator> {
        self.0.last().map(|(g, _)| *g)
    }

    pub fn exponent(&self, g: Generator) -> Exponent {
        match self.0.binary_search_by(|(h, _)| h.cmp(&g)) {
            Ok(k) => self.0[k].1,
            Err(_) => Exponent::zero(),
        }
    }

    /// Total exponent sum, the Δ-eigenvalue.
    pub fn degree(&self) -> Exponent {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (ga, ea) = self.0[i];
            let (gb, eb) = other.0[j];
            match ga.cmp(&gb) {
                Ordering::Less => {
                    out.push((ga, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((gb, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    let e = ea + eb;
                    if !e.is_zero() {
                        out.push((ga, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Multiplies by `g^e` in place semantics (returns the new monomial).
    pub fn times_power(&self, g: Generator, e: Exponent) -> Monomial {
        self.mul(&Monomial::power(g, e))
    }

    pub fn pow(&self, e: Exponent) -> Monomial {
        if e.is_zero() {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(g, a)| (*g, a * e)).collect())
    }

    pub fn inv(&self) -> Monomial {
        self.pow(Exponent::from_integer(-1))
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.iter().map(|(g, _)| g.var).max()
    }
}

/// Compared from the highest generator downward.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().rev();
        let mut b = other.0.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((ga, ea)), Some((gb, eb))) => {
                    let o = ga.cmp(gb).then(ea.cmp(eb));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Finite sum of coefficient-weighted monomials; zero terms never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Expression {
    terms: BTreeMap<Monomial, Coefficient>,
}

/// Sums a raw term list into canonical form.
pub fn normalize(raw: impl IntoIterator<Item = (Coefficient, Monomial)>) -> Expression {
    let mut e = Expression::zero();
    for (c, m) in raw {
        e.add_term(m, c);
    }
    e
}

impl Expression {
    pub fn zero() -> Self {
        Expression::default()
    }

    pub fn one() -> Self {
        Expression::constant(Coefficient::one())
    }

    pub fn constant(c: Coefficient) -> Self {
        Expression::term(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Expression::constant(Coefficient::from_int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Expression::constant(Coefficient::from_ratio(n, d))
    }

    pub fn param(name: &str) -> Self {
        Expression::constant(Coefficient::param(name))
    }

    pub fn term(c: Coefficient, m: Monomial) -> Self {
        let mut e = Expression::zero();
        e.add_term(m, c);
        e
    }

    pub fn monomial(m: Monomial) -> Self {
        Expression::term(Coefficient::one(), m)
    }

    /// The generator `u_var^(order)` as an expression.
    pub fn gen(var: usize, order: u32) -> Self {
        Expression::monomial(Monomial::generator(Generator::new(var, order)))
    }

    /// `u_var^(order)` raised to the rational power `p/q`.
    pub fn gen_pow(var: usize, order: u32, p: i64, q: i64) -> Self {
        Expression::monomial(Monomial::power(Generator::new(var, order), Exponent::new(p, q)))
    }

    pub fn add_term(&mut self, m: Monomial, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coefficient)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant term (coefficient of the empty monomial).
    pub fn constant_term(&self) -> Coefficient {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_default()
    }

    pub fn as_constant(&self) -> Option<Coefficient> {
        match self.terms.len() {
            0 => Some(Coefficient::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// The single term, if there is exactly one.
    pub fn as_term(&self) -> Option<(&Monomial, &Coefficient)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn scale(&self, c: &Coefficient) -> Expression {
        if c.is_zero() {
            return Expression::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        let mut out = Expression::zero();
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a * c);
        }
        out
    }

    pub fn scale_rational(&self, c: &BigRational) -> Expression {
        if c.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a.scale_rational(c))).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Expression {
        self.scale_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Coefficient) -> Expression {
        let mut out = Expression::zero();
        for (a, b) in &self.terms {
            out.add_term(a.mul(m), b * c);
        }
        out
    }

    /// Multiplicative inverse of a single term.
    pub fn inverse(&self) -> Result<Expression> {
        match self.as_term() {
            Some((m, c)) => Ok(Expression::term(c.inv().expect("nonzero term"), m.inv())),
            None if self.is_zero() => Err(Error::DivisionByZero),
            None => Err(Error::NonmonomialDivisor(format!("{self}"))),
        }
    }

    pub fn div(&self, d: &Expression) -> Result<Expression> {
        Ok(self * &d.inverse()?)
    }

    /// Integer powers of any expression; rational powers of a single term with unit coefficient
    /// (or a rational coefficient whose root is exact).
    pub fn pow(&self, e: Exponent) -> Result<Expression> {
        if e.is_integer() {
            let k = *e.numer();
            let base = if k < 0 { self.inverse()? } else { self.clone() };
            let mut acc = Expression::one();
            let mut b = base;
            let mut n = k.unsigned_abs();
            while n > 0 {
                if n & 1 == 1 {
                    acc = &acc * &b;
                }
                n >>= 1;
                if n > 0 {
                    b = &b * &b;
                }
            }
            return Ok(acc);
        }
        match self.as_term() {
            Some((m, c)) if c.is_one() => Ok(Expression::monomial(m.pow(e))),
            Some(_) => Err(Error::Unsupported(format!(
                "fractional power of a term with non-unit coefficient: ({self})^({e})"
            ))),
            None => Err(Error::NonmonomialDivisor(format!("({self})^({e})"))),
        }
    }

    /// Partial derivative with respect to a jet variable.
    pub fn partial(&self, g: Generator) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(g);
            if e.is_zero() {
                continue;
            }
            let nm = m.times_power(g, Exponent::from_integer(-1));
            out.add_term(nm, c.scale_rational(&exp_to_big(e)));
        }
        out
    }

    pub fn partial_derivative(&self, var: usize, order: u32) -> Expression {
        self.partial(Generator::new(var, order))
    }

    /// Total derivative ∂ = Σ u_i^(n+1) ∂/∂u_i^(n).
    pub fn total_derivative(&self) -> Expression {
        let mut out = Expression::zero();
        let one = Exponent::from_integer(1);
        for (m, c) in &self.terms {
            for (g, e) in m.factors() {
                let nm = m.times_power(*g, -one).times_power(g.prime(), one);
                out.add_term(nm, c.scale_rational(&exp_to_big(*e)));
            }
        }
        out
    }

    /// ∂^k applied to self.
    pub fn derivative_n(&self, k: u32) -> Expression {
        let mut e = self.clone();
        for _ in 0..k {
            if e.is_zero() {
                break;
            }
            e = e.total_derivative();
        }
        e
    }

    /// Largest generator with nonzero partial derivative, or `None` for constants.
    pub fn diff_order(&self) -> Option<Generator> {
        self.terms.keys().filter_map(|m| m.top()).max()
    }

    /// Highest derivative order of variable `var` present.
    pub fn max_order_of(&self, var: usize) -> Option<u32> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().filter(|(g, _)| g.var == var).map(|(g, _)| g.order))
            .max()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(|m| m.max_var()).max()
    }

    pub fn depends_on(&self, g: Generator) -> bool {
        self.terms.keys().any(|m| !m.exponent(g).is_zero())
    }

    /// Decomposition into Δ-eigencomponents keyed by eigenvalue.
    pub fn degree_components(&self) -> BTreeMap<Exponent, Expression> {
        let mut out: BTreeMap<Exponent, Expression> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.degree()).or_default().add_term(m.clone(), c.clone());
        }
        out
    }

    /// The single Δ-degree if homogeneous and nonzero.
    pub fn homogeneous_degree(&self) -> Option<Exponent> {
        let comps = self.degree_components();
        if comps.len() == 1 {
            comps.keys().next().copied()
        } else {
            None
        }
    }

    /// Δ f: each monomial times its total exponent.
    pub fn delta(&self) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.scale_rational(&exp_to_big(m.degree())));
        }
        out
    }

    /// Inverse of Δ, defined when no term has degree zero.
    pub fn delta_inverse(&self) -> Option<Expression> {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            let d = m.degree();
            if d.is_zero() {
                return None;
            }
            out.add_term(m.clone(), c.scale_rational(&exp_to_big(d.recip())));
        }
        Some(out)
    }

    pub fn map_coefficients(&self, f: impl Fn(&Coefficient) -> Coefficient) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Part of `self` whose monomials satisfy `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> Expression {
        Expression {
            terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn coefficient_of(&self, m: &Monomial) -> Coefficient {
        self.terms.get(m).cloned().unwrap_or_default()
    }
}

impl Add for &Expression {
    type Output = Expression;
    fn add(self, o: &Expression) -> Expression {
        let (big, small) = if self.len() >= o.len() { (self, o) } else { (o, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Expression {
    type Output = Expression;
    fn sub(self, o: &Expression) -> Expression {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Mul for &Expression {
    type Output = Expression;
    fn mul(self, o: &Expression) -> Expression {
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        let mut out = Expression::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Expression {
            type Output = Expression;
            fn $m(self, o: Expression) -> Expression { (&self).$m(&o) }
        }
        impl $tr<&Expression> for Expression {
            type Output = Expression;
            fn $m(self, o: &Expression) -> Expression { (&self).$m(o) }
        }
        impl $tr<Expression> for &Expression {
            type Output = Expression;
            fn $m(self, o: Expression) -> Expression { self.$m(&o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}

impl AddAssign<&Expression> for Expression {
    fn add_assign(&mut self, o: &Expression) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign for Expression {
    fn add_assign(&mut self, o: Expression) {
        *self += &o;
    }
}

impl SubAssign<&Expression> for Expression {
    fn sub_assign(&mut self, o: &Expression) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl SubAssign for Expression {
    fn sub_assign(&mut self, o: Expression) {
        *self -= &o;
    }
}

impl std::iter::Sum for Expression {
    fn sum<I: Iterator<Item = Expression>>(iter: I) -> Expression {
        let mut acc = Expression::zero();
        for e in iter {
            acc += e;
        }
        acc
    }
}

impl From<Coefficient> for Expression {
    fn from(c: Coefficient) -> Self {
        Expression::constant(c)
    }
}

impl From<i64> for Expression {
    fn from(n: i64) -> Self {
        Expression::int(n)
    }
}

/// Binomial coefficient as a big rational.
pub fn binomial(n: u32, k: u32) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    let mut acc = BigInt::from(1);
    for t in 0..k {
        acc = acc * BigInt::from(n - t) / BigInt::from(t + 1);
    }
    BigRational::from_integer(acc)
}

/// Length-ℓ column of expressions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct VectorExpr(pub Vec<Expression>);

impl VectorExpr {
    pub fn new(v: Vec<Expression>) -> Self {
        VectorExpr(v)
    }

    pub fn zeros(ell: usize) -> Self {
        VectorExpr(vec![Expression::zero(); ell])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Expression::is_zero)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Expression> {
        self.0.iter()
    }

    /// Σ_i self_i · other_i.
    pub fn dot(&self, other: &VectorExpr) -> Expression {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &VectorExpr) -> VectorExpr {
        VectorExpr(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &VectorExpr) -> VectorExpr {
        VectorExpr(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: &Coefficient) -> VectorExpr {
        VectorExpr(self.0.iter().map(|a| a.scale(c)).collect())
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> VectorExpr {
        VectorExpr(self.0.iter().map(f).collect())
    }

    /// Common Δ-degree of all nonzero components.
    pub fn homogeneous_degree(&self) -> Option<Exponent> {
        let mut deg = None;
        for e in self.0.iter().filter(|e| !e.is_zero()) {
            let d = e.homogeneous_degree()?;
            match deg {
                None => deg = Some(d),
                Some(x) if x == d => {}
                Some(_) => return None,
            }
        }
        deg
    }
}

impl std::ops::Index<usize> for VectorExpr {
    type Output = Expression;
    fn index(&self, i: usize) -> &Expression {
        &self.0[i]
    }
}

impl From<Vec<Expression>> for VectorExpr {
    fn from(v: Vec<Expression>) -> Self {
        VectorExpr(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u32) -> Expression {
        Expression::gen(0, n)
    }

    #[test]
    fn normalize_collects_and_cancels() {
        let g = Generator::new(0, 0);
        let gp = Generator::new(0, 1);
        let m1 = Monomial::from_factors([(g, 1.into()), (gp, 1.into())]);
        let m2 = Monomial::from_factors([(gp, 1.into()), (g, 1.into())]);
        let e = normalize([(Coefficient::one(), m1.clone()), (Coefficient::one(), m2)]);
        assert_eq!(e, Expression::term(Coefficient::from_int(2), m1));
        assert!((&u(0) - &u(0)).is_zero());
        let half = Expression::gen_pow(0, 0, 1, 2);
        assert_eq!(&half * &half, u(0));
    }

    #[test]
    fn total_derivative_examples() {
        assert_eq!(u(0).total_derivative(), u(1));
        let e = Expression::gen_pow(0, 0, -1, 2).total_derivative();
        let want = Expression::gen_pow(0, 0, -3, 2) * u(1) * Expression::ratio(-1, 2);
        assert_eq!(e, want);
        let e = (u(0) * u(2)).total_derivative();
        assert_eq!(e, u(1) * u(2) + u(0) * u(3));
    }

    #[test]
    fn partial_examples() {
        let f = u(0) * u(1) * u(1);
        assert_eq!(f.partial_derivative(0, 1), u(0) * u(1) * Expression::int(2));
        assert!(Expression::gen_pow(0, 0, -1, 4).partial_derivative(0, 2).is_zero());
    }

    #[test]
    fn orders_and_degrees() {
        assert_eq!(u(4).diff_order(), Some(Generator::new(0, 4)));
        assert_eq!(Expression::int(7).diff_order(), None);
        let d = Expression::gen_pow(0, 0, -1, 2).homogeneous_degree();
        assert_eq!(d, Some(Exponent::new(-1, 2)));
        let v = Expression::gen(1, 0);
        // (0, v) beats (0, u); (1, u) beats both
        assert_eq!((&u(0) * &v).diff_order(), Some(Generator::new(1, 0)));
        assert_eq!((&u(1) * &v).diff_order(), Some(Generator::new(0, 1)));
    }

    #[test]
    fn pow_and_inverse() {
        let e = (&u(0) + &u(1)).pow(2.into()).unwrap();
        assert_eq!(e, &(&u(0) * &u(0)) + &(&(&u(0) * &u(1)).scale_int(2) + &(&u(1) * &u(1))));
        assert!(matches!((&u(0) + &u(1)).inverse(), Err(Error::NonmonomialDivisor(_))));
        assert_eq!(u(1).pow(Exponent::new(-1, 1)).unwrap(), Expression::gen_pow(0, 1, -1, 1));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigRational::from_integer(10.into()));
        assert_eq!(binomial(2, 3), BigRational::zero());
    }
}
