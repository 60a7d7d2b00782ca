//! Multivariate polynomials over ℚ in named parameters.
//!
//! Terms are kept in a lex monomial order (parameter names compared
//! alphabetically, earlier names more significant), which makes exact
//! division and leading-coefficient normalization well defined.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, One, Signed, Zero};

/// Power product of parameters, sorted by name, exponents positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PMono(Vec<(String, u32)>);

impl PMono {
    pub fn one() -> Self {
        PMono(Vec::new())
    }

    pub fn var(name: &str) -> Self {
        PMono(vec![(name.to_string(), 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(String, u32)] {
        &self.0
    }

    pub fn degree_in(&self, x: &str) -> u32 {
        self.0.iter().find(|(n, _)| n == x).map_or(0, |(_, e)| *e)
    }

    pub fn mul(&self, other: &PMono) -> PMono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((na, ea)), Some((nb, eb))) => match na.cmp(nb) {
                    Ordering::Less => {
                        out.push((na.clone(), *ea));
                        a.next();
                    }
                    Ordering::Greater => {
                        out.push((nb.clone(), *eb));
                        b.next();
                    }
                    Ordering::Equal => {
                        out.push((na.clone(), ea + eb));
                        a.next();
                        b.next();
                    }
                },
                (Some(x), None) => {
                    out.push((*x).clone());
                    a.next();
                }
                (None, Some(y)) => {
                    out.push((*y).clone());
                    b.next();
                }
                (None, None) => break,
            }
        }
        PMono(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &PMono) -> Option<PMono> {
        let mut out = Vec::new();
        let mut j = 0;
        for (n, e) in &self.0 {
            let d = if j < other.0.len() && &other.0[j].0 == n {
                j += 1;
                other.0[j - 1].1
            } else {
                0
            };
            if d > *e {
                return None;
            }
            if e - d > 0 {
                out.push((n.clone(), e - d));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(PMono(out))
    }

    fn without(&self, x: &str) -> PMono {
        PMono(self.0.iter().filter(|(n, _)| n != x).cloned().collect())
    }

    fn with_power(&self, x: &str, e: u32) -> PMono {
        if e == 0 {
            return self.clone();
        }
        self.mul(&PMono(vec![(x.to_string(), e)]))
    }
}

impl Ord for PMono {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((na, ea)), Some((nb, eb))) => match na.cmp(nb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl PartialOrd for PMono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<PMono, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(PMono::one(), c);
        }
        p
    }

    pub fn var(name: &str) -> Self {
        let mut p = Poly::zero();
        p.terms.insert(PMono::var(name), BigRational::one());
        p
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (PMono, BigRational)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: PMono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&PMono, &BigRational)> {
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

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value if the polynomial has no parameter dependence.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<(&PMono, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(n, _)| n.clone()))
            .collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    fn mul_term(&self, m: &PMono, c: &BigRational) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(a, b)| (a.mul(m), b * c)).collect(),
        }
    }

    /// Exact quotient, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (ld, lc) = d.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut q = Poly::zero();
        while let Some((lm, lcoef)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let m = lm.div(&ld)?;
            let c = lcoef / &lc;
            rem = rem.sub(&d.mul_term(&m, &c));
            q.add_term(m, c);
        }
        Some(q)
    }

    pub fn degree_in(&self, x: &str) -> u32 {
        self.terms.keys().map(|m| m.degree_in(x)).max().unwrap_or(0)
    }

    /// Coefficients with respect to `x`: self = Σ_k c_k x^k.
    fn coeffs_in(&self, x: &str) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.degree_in(x))
                .or_default()
                .add_term(m.without(x), c.clone());
        }
        out
    }

    fn from_coeffs_in(x: &str, cs: &BTreeMap<u32, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (k, c) in cs {
            for (m, a) in &c.terms {
                out.add_term(m.with_power(x, *k), a.clone());
            }
        }
        out
    }

    /// Rescaled so that the leading coefficient is 1.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
            None => Poly::zero(),
        }
    }

    fn content_in(&self, x: &str) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs_in(x).values() {
            g = gcd(&g, c);
            if g.as_constant().is_some() && !g.is_zero() {
                return Poly::one();
            }
        }
        g
    }

    /// Sparse pseudo-remainder of `a` by `b` as polynomials in `x`.
    fn prem(a: &Poly, b: &Poly, x: &str) -> Poly {
        let db = b.degree_in(x);
        let bc = b.coeffs_in(x);
        let lb = bc.get(&db).cloned().unwrap_or_default();
        let mut r = a.clone();
        while !r.is_zero() && r.degree_in(x) >= db {
            let dr = r.degree_in(x);
            let lr = r.coeffs_in(x).remove(&dr).unwrap_or_default();
            let shift = Poly::from_coeffs_in(x, &BTreeMap::from([(dr - db, lr)]));
            r = r.mul(&lb).sub(&shift.mul(b));
        }
        r
    }

    pub fn eval_rational(&self, vals: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (n, e) in &m.0 {
                let v = vals.get(n)?;
                t *= num::pow(v.clone(), *e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Substitutes polynomials for parameters.
    pub fn substitute(&self, vals: &BTreeMap<String, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (n, e) in &m.0 {
                let f = match vals.get(n) {
                    Some(p) => p.pow(*e),
                    None => Poly::from_terms([(PMono(vec![(n.clone(), *e)]), BigRational::one())]),
                };
                t = t.mul(&f);
            }
            out = out.add(&t);
        }
        out
    }
}

/// Greatest common divisor, normalized monic (zero only if both inputs are zero).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    if a.len() == 1 && b.len() == 1 {
        let (ma, _) = a.leading().unwrap();
        let (mb, _) = b.leading().unwrap();
        let mut out = Vec::new();
        for (n, e) in &ma.0 {
            let f = mb.degree_in(n).min(*e);
            if f > 0 {
                out.push((n.clone(), f));
            }
        }
        return Poly::from_terms([(PMono(out), BigRational::one())]);
    }
    let va = a.vars();
    let vb = b.vars();
    let x = va.union(&vb).next().cloned().unwrap();
    if !va.contains(&x) {
        return gcd(a, &b.content_in(&x));
    }
    if !vb.contains(&x) {
        return gcd(&a.content_in(&x), b);
    }
    let ca = a.content_in(&x);
    let cb = b.content_in(&x);
    let gc = gcd(&ca, &cb);
    let mut r0 = a.div_exact(&ca).expect("content divides");
    let mut r1 = b.div_exact(&cb).expect("content divides");
    if r0.degree_in(&x) < r1.degree_in(&x) {
        std::mem::swap(&mut r0, &mut r1);
    }
    loop {
        let r = Poly::prem(&r0, &r1, &x);
        if r.is_zero() {
            return r1.mul(&gc).monic();
        }
        if r.degree_in(&x) == 0 {
            return gc.monic();
        }
        let c = r.content_in(&x);
        r0 = r1;
        r1 = r.div_exact(&c).expect("content divides");
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_pmono(m: &PMono) -> String {
    m.0.iter()
        .map(|(n, e)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{}", fmt_pmono(m))?;
            } else {
                write!(f, "{}*{}", fmt_rational(&a), fmt_pmono(m))?;
            }
        }
        Ok(())
    }
}

pub(crate) fn rational_to_string(c: &BigRational) -> String {
    fmt_rational(c)
}

#[cfg(test)]
pub(crate) fn big(n: i64) -> BigRational {
    BigRational::from_integer(num::BigInt::from(n))
}
