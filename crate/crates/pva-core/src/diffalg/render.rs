//! Canonical text rendering.

use std::fmt;

use num::One;

use super::coeff::Coefficient;
use super::expr::{Exponent, Expression, Generator, Monomial, VectorExpr};

/// Display names for the variables `u_1, …, u_ℓ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarNames {
    names: Vec<String>,
}

impl VarNames {
    /// `u, v, w` when ℓ ≤ 3, otherwise `u_1, …, u_ℓ`.
    pub fn standard(ell: usize) -> Self {
        let names = if ell <= 3 {
            ["u", "v", "w"][..ell.max(1)].iter().map(|s| s.to_string()).collect()
        } else {
            (1..=ell).map(|i| format!("u_{i}")).collect()
        };
        VarNames { names }
    }

    pub fn custom(names: Vec<String>) -> Self {
        VarNames { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, var: usize) -> String {
        self.names.get(var).cloned().unwrap_or_else(|| format!("u_{}", var + 1))
    }

    fn for_expr(e: &Expression) -> Self {
        VarNames::standard(e.max_var().map_or(1, |v| v + 1))
    }

    pub fn generator(&self, g: Generator) -> String {
        let base = self.name(g.var);
        match g.order {
            0..=3 => format!("{base}{}", "'".repeat(g.order as usize)),
            k => format!("{base}^({k})"),
        }
    }

    pub fn monomial(&self, m: &Monomial) -> String {
        m.factors()
            .iter()
            .rev()
            .map(|(g, e)| format!("{}{}", self.generator(*g), exponent_suffix(*e)))
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn expression(&self, e: &Expression) -> String {
        if e.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in e.terms().rev().enumerate() {
            let neg = c.is_negative_term();
            let c = if neg { -c } else { c.clone() };
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&self.term(&c, m));
        }
        out
    }

    fn term(&self, c: &Coefficient, m: &Monomial) -> String {
        let mono = (!m.is_one()).then(|| self.monomial(m));
        if c.is_one() {
            return mono.unwrap_or_else(|| "1".to_string());
        }
        let coef = if c.denom().is_one() && c.numer().len() > 1 {
            format!("({c})")
        } else {
            c.to_string()
        };
        match mono {
            Some(mono) => format!("{coef}*{mono}"),
            None => coef,
        }
    }

    pub fn vector(&self, v: &VectorExpr) -> String {
        let parts: Vec<String> = v.iter().map(|e| self.expression(e)).collect();
        format!("({})", parts.join(", "))
    }
}

fn exponent_suffix(e: Exponent) -> String {
    if e.is_one() {
        String::new()
    } else if e.is_integer() && *e.numer() > 0 {
        format!("^{}", e.numer())
    } else if e.is_integer() {
        format!("^({})", e.numer())
    } else {
        format!("^({}/{})", e.numer(), e.denom())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", VarNames::for_expr(self).expression(self))
    }
}

impl fmt::Display for VectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ell = self.iter().filter_map(|e| e.max_var()).max().map_or(self.len(), |v| (v + 1).max(self.len()));
        write!(f, "{}", VarNames::standard(ell).vector(self))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let ell = self.max_var().map_or(1, |v| v + 1);
        write!(f, "{}", VarNames::standard(ell).monomial(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        let u = |n| Expression::gen(0, n);
        let c = Expression::param("c");
        let f = &(&(&u(0) * &u(0)) * &Expression::ratio(3, 2)) + &(&c * &u(2));
        assert_eq!(f.to_string(), "c*u'' + 3/2*u^2");
        assert_eq!(Expression::gen_pow(0, 0, -1, 2).to_string(), "u^(-1/2)");
        assert_eq!(u(5).to_string(), "u^(5)");
        let g = &(&u(4) * &u(4)) - &(&u(1) * &Expression::int(2));
        assert_eq!(g.to_string(), "u^(4)^2 - 2*u'");
        assert_eq!(Expression::zero().to_string(), "0");
        let k = &(&c + &Expression::int(3)) * &u(0);
        assert_eq!(k.to_string(), "(c + 3)*u");
    }

    #[test]
    fn multi_variable_names() {
        let v = Expression::gen(1, 1);
        assert_eq!((&v * &Expression::gen(0, 0)).to_string(), "v'*u");
        let x = Expression::gen(3, 0);
        assert_eq!((&x + &Expression::gen(0, 2)).to_string(), "u_1'' + u_4");
    }
}
