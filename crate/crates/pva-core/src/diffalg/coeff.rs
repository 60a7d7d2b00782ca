//! The coefficient field ℚ(p_1, …, p_k).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, Zero};

use super::poly::{gcd, rational_to_string, Poly};

/// Normalized fraction `num/den`: coprime, `den` monic, zero is `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coefficient {
    num: Poly,
    den: Poly,
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::zero()
    }
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Coefficient::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Coefficient::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Coefficient::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_rational(c: BigRational) -> Self {
        Coefficient { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn param(name: &str) -> Self {
        Coefficient { num: Poly::var(name), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Self {
        Coefficient { num: p, den: Poly::one() }
    }

    pub fn from_fraction(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self::normalized(num, den)
    }

    fn normalized(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Coefficient::zero();
        }
        if let Some(d) = den.as_constant() {
            if d.is_one() {
                return Coefficient { num, den };
            }
            return Coefficient { num: num.scale(&d.recip()), den: Poly::one() };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        let lc = den.leading().unwrap().1.recip();
        let (num, den) = (num.scale(&lc), den.scale(&lc));
        if den.is_one() {
            return Coefficient { num, den: Poly::one() };
        }
        Coefficient { num, den }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut s = self.num.vars();
        s.extend(self.den.vars());
        s
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn pow(&self, e: i64) -> Option<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let k = e.unsigned_abs() as u32;
        Some(Coefficient { num: base.num.pow(k), den: base.den.pow(k) })
    }

    pub fn scale_rational(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Coefficient::zero();
        }
        Coefficient { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Substitutes coefficients for parameters.
    pub fn substitute(&self, vals: &BTreeMap<String, Coefficient>) -> Coefficient {
        let mut num = Coefficient::zero();
        let mut den = Coefficient::zero();
        for (target, src) in [(&mut num, &self.num), (&mut den, &self.den)] {
            for (m, c) in src.terms() {
                let mut t = Coefficient::from_rational(c.clone());
                for (n, e) in m.factors() {
                    let f = vals.get(n).cloned().unwrap_or_else(|| Coefficient::param(n));
                    t = &t * &f.pow(*e as i64).unwrap();
                }
                *target = &*target + &t;
            }
        }
        &num / &den
    }

    /// True when the rendered form needs parentheses before `*`.
    pub fn is_compound(&self) -> bool {
        !self.den.is_one() || self.num.len() > 1
    }

    /// Sign used when printing a sum: only single-term numerators can be negative.
    pub fn is_negative_term(&self) -> bool {
        self.num.len() == 1 && self.num.leading().unwrap().1.is_negative()
    }
}

impl Add for &Coefficient {
    type Output = Coefficient;
    fn add(self, o: &Coefficient) -> Coefficient {
        if self.den.is_one() && o.den.is_one() {
            return Coefficient { num: self.num.add(&o.num), den: Poly::one() };
        }
        if self.den == o.den {
            return Coefficient::normalized(self.num.add(&o.num), self.den.clone());
        }
        Coefficient::normalized(
            self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            self.den.mul(&o.den),
        )
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;
    fn sub(self, o: &Coefficient) -> Coefficient {
        self + &(-o)
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient { num: self.num.neg(), den: self.den.clone() }
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;
    fn mul(self, o: &Coefficient) -> Coefficient {
        if self.den.is_one() && o.den.is_one() {
            return Coefficient { num: self.num.mul(&o.num), den: Poly::one() };
        }
        Coefficient::normalized(self.num.mul(&o.num), self.den.mul(&o.den))
    }
}

impl Div for &Coefficient {
    type Output = Coefficient;
    fn div(self, o: &Coefficient) -> Coefficient {
        self * &o.inv().expect("division by zero coefficient")
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Coefficient {
            type Output = Coefficient;
            fn $m(self, o: Coefficient) -> Coefficient { (&self).$m(&o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        -&self
    }
}

impl From<i64> for Coefficient {
    fn from(n: i64) -> Self {
        Coefficient::from_int(n)
    }
}

impl From<BigRational> for Coefficient {
    fn from(c: BigRational) -> Self {
        Coefficient::from_rational(c)
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.as_rational() {
            return write!(f, "{}", rational_to_string(&c));
        }
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let n = if self.num.len() > 1 { format!("({})", self.num) } else { self.num.to_string() };
        write!(f, "{n}/({})", self.den)
    }
}
