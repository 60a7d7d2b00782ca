//! Text front end: session configuration, expression and operator parsing.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! sum     := ['+'|'-'] product (('+'|'-') product)*
//! product := unary (('*'|'/') unary)*
//! unary   := '-' unary | power
//! power   := atom ["'"]* ['^' exponent]*
//! atom    := integer | name | '(' sum ')'
//! exponent:= integer | '(' ['-'] integer ['/' integer] ')'
//! ```
//!
//! A variable name followed directly by `^(k)` with a non-negative integer `k`
//! denotes the k-th derivative, matching the canonical rendering `u^(4)`.
//! In operator mode the name `d` is the total derivative and `*` is composition.

use std::collections::BTreeSet;

use num::{BigInt, BigRational, Zero};
use serde::{Deserialize, Serialize};

use crate::diffalg::{Coefficient, Exponent, Expression, Generator, VarNames, VectorExpr};
use crate::diffop::{DiffOp, MatrixDiffOp};
use crate::error::{Error, Result};

/// Variable names, declared parameters and admitted algebra extensions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Explicit variable names; empty means `u, v, w` and `u_1, u_2, …`.
    pub variables: Vec<String>,
    pub params: Vec<String>,
    /// Reject identifiers that are neither variables nor declared parameters.
    pub strict_params: bool,
    /// Unit monomials such as `u^(1/2)` or `v^(-1)`. When non-empty, negative or
    /// fractional exponents are only accepted on the listed generators.
    pub extensions: Vec<String>,
}

impl SessionConfig {
    pub fn with_variables(names: &[&str]) -> Self {
        SessionConfig { variables: names.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for n in self.variables.iter().chain(&self.params) {
            if !is_identifier(n) {
                return Err(Error::Parse { pos: 0, msg: format!("invalid name `{n}`") });
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::Parse { pos: 0, msg: format!("duplicate name `{n}`") });
            }
        }
        self.extension_generators().map(|_| ())
    }

    /// Index of a variable name, if `name` denotes one.
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        if let Some(k) = self.variables.iter().position(|v| v == name) {
            return Some(k);
        }
        let alias = name.strip_prefix("u_").and_then(|s| s.parse::<usize>().ok()).filter(|&k| k >= 1);
        if self.variables.is_empty() {
            return match name {
                "u" => Some(0),
                "v" => Some(1),
                "w" => Some(2),
                _ => alias.map(|k| k - 1),
            };
        }
        alias.map(|k| k - 1).filter(|&k| k < self.variables.len())
    }

    /// Rendering names for `ell` variables.
    pub fn var_names(&self, ell: usize) -> VarNames {
        if self.variables.is_empty() {
            VarNames::standard(ell)
        } else {
            VarNames::custom(self.variables.clone())
        }
    }

    fn extension_generators(&self) -> Result<BTreeSet<Generator>> {
        let plain = SessionConfig { extensions: vec![], ..self.clone() };
        let mut out = BTreeSet::new();
        for src in &self.extensions {
            let e = parse_expression(src, &plain)?;
            match e.as_term() {
                Some((m, c)) if c.is_one() && m.factors().len() == 1 => {
                    out.insert(m.factors()[0].0);
                }
                _ => {
                    return Err(Error::Parse {
                        pos: 0,
                        msg: format!("extension `{src}` is not a single-generator monomial"),
                    })
                }
            }
        }
        Ok(out)
    }

    fn check_extensions(&self, e: &Expression) -> Result<()> {
        if self.extensions.is_empty() {
            return Ok(());
        }
        let allowed = self.extension_generators()?;
        for (m, _) in e.terms() {
            for (g, x) in m.factors() {
                let unit = *x < Exponent::zero() || !x.is_integer();
                if unit && !allowed.contains(g) {
                    return Err(Error::Unsupported(format!(
                        "{} is not invertible in the declared algebra",
                        self.var_names(g.var + 1).generator(*g)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let cs: Vec<(usize, char)> = src.char_indices().collect();
    let mut k = 0;
    while k < cs.len() {
        let (pos, c) = cs[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() {
            let start = k;
            while k < cs.len() && cs[k].1.is_ascii_digit() {
                k += 1;
            }
            let end = cs.get(k).map_or(src.len(), |x| x.0);
            out.push((pos, Tok::Int(src[cs[start].0..end].parse().expect("digits"))));
        } else if c.is_ascii_alphabetic() {
            while k < cs.len() && (cs[k].1.is_ascii_alphanumeric() || cs[k].1 == '_') {
                k += 1;
            }
            let end = cs.get(k).map_or(src.len(), |x| x.0);
            out.push((pos, Tok::Name(src[pos..end].to_string())));
        } else if "+-*/^()',;".contains(c) {
            out.push((pos, Tok::Sym(c)));
            k += 1;
        } else if c == '′' {
            out.push((pos, Tok::Sym('\'')));
            k += 1;
        } else {
            return Err(Error::Parse { pos, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

/// Splits a token list at top-level occurrences of `sep`.
fn split_top(toks: &[(usize, Tok)], sep: char) -> Vec<&[(usize, Tok)]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (k, (_, t)) in toks.iter().enumerate() {
        match t {
            Tok::Sym('(') => depth += 1,
            Tok::Sym(')') => depth -= 1,
            Tok::Sym(c) if *c == sep && depth == 0 => {
                parts.push(&toks[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    parts.push(&toks[start..]);
    parts
}

/// Drops one pair of parentheses enclosing the whole token list.
fn strip_outer(toks: &[(usize, Tok)]) -> &[(usize, Tok)] {
    if toks.len() < 2 || toks[0].1 != Tok::Sym('(') || toks[toks.len() - 1].1 != Tok::Sym(')') {
        return toks;
    }
    let mut depth = 0;
    for (k, (_, t)) in toks.iter().enumerate() {
        match t {
            Tok::Sym('(') => depth += 1,
            Tok::Sym(')') => {
                depth -= 1;
                if depth == 0 && k + 1 < toks.len() {
                    return toks;
                }
            }
            _ => {}
        }
    }
    &toks[1..toks.len() - 1]
}

#[derive(Clone, Debug)]
enum Val {
    E(Expression),
    Op(DiffOp),
}

impl Val {
    fn into_op(self) -> DiffOp {
        match self {
            Val::E(e) => DiffOp::mul_by(e),
            Val::Op(o) => o,
        }
    }

    fn add(self, o: Val) -> Val {
        match (self, o) {
            (Val::E(a), Val::E(b)) => Val::E(&a + &b),
            (a, b) => Val::Op(a.into_op().add(&b.into_op())),
        }
    }

    fn neg(self) -> Val {
        match self {
            Val::E(a) => Val::E(-a),
            Val::Op(o) => Val::Op(o.neg()),
        }
    }

    fn mul(self, o: Val) -> Val {
        match (self, o) {
            (Val::E(a), Val::E(b)) => Val::E(&a * &b),
            (Val::E(a), Val::Op(b)) => Val::Op(b.left_mul(&a)),
            (a, b) => Val::Op(a.into_op().compose(&b.into_op())),
        }
    }
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    k: usize,
    end: usize,
    cfg: &'a SessionConfig,
    operators: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.k).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn int(&mut self) -> Result<BigInt> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = n.clone();
                self.k += 1;
                Ok(n)
            }
            _ => self.err("expected an integer"),
        }
    }

    fn small_int(&mut self) -> Result<i64> {
        let pos = self.pos();
        let n = self.int()?;
        i64::try_from(n).map_err(|_| Error::Parse { pos, msg: "integer too large".into() })
    }

    fn finish(&self) -> Result<()> {
        if self.k < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }

    fn sum(&mut self) -> Result<Val> {
        let mut acc = if self.eat('-') {
            self.product()?.neg()
        } else {
            self.eat('+');
            self.product()?
        };
        loop {
            if self.eat('+') {
                acc = acc.add(self.product()?);
            } else if self.eat('-') {
                acc = acc.add(self.product()?.neg());
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Val> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(self.unary()?);
            } else if self.peek() == Some(&Tok::Sym('/')) {
                let pos = self.pos();
                self.k += 1;
                let d = match self.unary()? {
                    Val::E(e) => e,
                    Val::Op(o) if o.order().unwrap_or(0) == 0 => o.coeff(0),
                    Val::Op(_) => return Err(Error::Parse { pos, msg: "division by an operator".into() }),
                };
                acc = acc.mul(Val::E(d.inverse()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Val> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Val> {
        let (mut v, mut bare_gen) = self.atom()?;
        while self.eat('\'') {
            bare_gen = None;
            v = match v {
                Val::E(e) => Val::E(e.total_derivative()),
                Val::Op(_) => return self.err("prime applied to an operator"),
            };
        }
        if let Some(var) = bare_gen {
            if let Some(order) = self.derivative_suffix()? {
                v = Val::E(Expression::gen(var, order));
            }
        }
        while self.peek() == Some(&Tok::Sym('^')) {
            let pos = self.pos();
            self.k += 1;
            let e = self.exponent()?;
            v = match v {
                Val::E(x) => Val::E(x.pow(e).map_err(|err| match err {
                    Error::NonmonomialDivisor(m) | Error::Unsupported(m) => Error::Parse { pos, msg: m },
                    other => other,
                })?),
                Val::Op(o) => {
                    if !e.is_integer() || *e.numer() < 0 {
                        return Err(Error::Parse { pos, msg: "operator powers must be non-negative integers".into() });
                    }
                    let mut acc = DiffOp::identity();
                    for _ in 0..*e.numer() {
                        acc = acc.compose(&o);
                    }
                    Val::Op(acc)
                }
            };
        }
        Ok(v)
    }

    /// `^(k)` with a plain non-negative integer directly after a variable name.
    fn derivative_suffix(&mut self) -> Result<Option<u32>> {
        let is_deriv = matches!(
            (self.toks.get(self.k), self.toks.get(self.k + 1), self.toks.get(self.k + 2), self.toks.get(self.k + 3)),
            (Some((_, Tok::Sym('^'))), Some((_, Tok::Sym('('))), Some((_, Tok::Int(_))), Some((_, Tok::Sym(')'))))
        );
        if !is_deriv {
            return Ok(None);
        }
        self.k += 2;
        let pos = self.pos();
        let n = self.int()?;
        self.k += 1;
        u32::try_from(n).map(Some).map_err(|_| Error::Parse { pos, msg: "derivative order too large".into() })
    }

    fn exponent(&mut self) -> Result<Exponent> {
        if self.eat('(') {
            let neg = self.eat('-');
            let p = self.small_int()?;
            let q = if self.eat('/') { self.small_int()? } else { 1 };
            if q == 0 {
                return self.err("zero denominator in exponent");
            }
            self.expect(')')?;
            Ok(Exponent::new(if neg { -p } else { p }, q))
        } else {
            Ok(Exponent::from_integer(self.small_int()?))
        }
    }

    /// Parses an atom; the second component is the variable index when the atom is a bare name.
    fn atom(&mut self) -> Result<(Val, Option<usize>)> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.k += 1;
                Ok((Val::E(Expression::constant(Coefficient::from_rational(BigRational::from_integer(n)))), None))
            }
            Some(Tok::Name(name)) => {
                self.k += 1;
                if self.operators && name == "d" {
                    return Ok((Val::Op(DiffOp::d(1)), None));
                }
                if let Some(var) = self.cfg.variable_index(&name) {
                    return Ok((Val::E(Expression::gen(var, 0)), Some(var)));
                }
                if self.cfg.strict_params && !self.cfg.params.contains(&name) {
                    return Err(Error::Parse { pos, msg: format!("undeclared name `{name}`") });
                }
                Ok((Val::E(Expression::param(&name)), None))
            }
            Some(Tok::Sym('(')) => {
                self.k += 1;
                let v = self.sum()?;
                self.expect(')')?;
                Ok((v, None))
            }
            Some(_) => self.err("unexpected token"),
            None => self.err("unexpected end of input"),
        }
    }
}

fn parse_tokens(toks: &[(usize, Tok)], src_len: usize, cfg: &SessionConfig, operators: bool) -> Result<Val> {
    let mut p = Parser { toks, k: 0, end: src_len, cfg, operators };
    if toks.is_empty() {
        return p.err("empty input");
    }
    let v = p.sum()?;
    p.finish()?;
    Ok(v)
}

pub fn parse_expression(src: &str, cfg: &SessionConfig) -> Result<Expression> {
    let toks = tokenize(src)?;
    match parse_tokens(&toks, src.len(), cfg, false)? {
        Val::E(e) => {
            cfg.check_extensions(&e)?;
            Ok(e)
        }
        Val::Op(_) => unreachable!("operators only arise in operator mode"),
    }
}

/// Comma-separated components, optionally wrapped in one pair of parentheses.
pub fn parse_vector(src: &str, cfg: &SessionConfig) -> Result<VectorExpr> {
    let toks = tokenize(src)?;
    let inner = strip_outer(&toks);
    let parts = split_top(inner, ',');
    let parts = if parts.len() == 1 { split_top(&toks, ',') } else { parts };
    let mut out = Vec::with_capacity(parts.len());
    for part in parts {
        match parse_tokens(part, src.len(), cfg, false)? {
            Val::E(e) => {
                cfg.check_extensions(&e)?;
                out.push(e);
            }
            Val::Op(_) => unreachable!(),
        }
    }
    Ok(VectorExpr(out))
}

/// Square matrix of operators: rows separated by `;`, entries by `,`.
pub fn parse_operator(src: &str, cfg: &SessionConfig) -> Result<MatrixDiffOp> {
    let toks = tokenize(src)?;
    let rows = split_top(&toks, ';');
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut entries = Vec::new();
        for entry in split_top(row, ',') {
            let op = parse_tokens(entry, src.len(), cfg, true)?.into_op();
            for (_, a) in op.terms() {
                cfg.check_extensions(a)?;
            }
            entries.push(op);
        }
        if entries.len() != rows.len() {
            let pos = row.first().map_or(src.len(), |t| t.0);
            return Err(Error::Parse {
                pos,
                msg: format!("operator matrix must be square: row has {} entries, expected {}", entries.len(), rows.len()),
            });
        }
        out.push(entries);
    }
    MatrixDiffOp::from_rows(out)
}

/// Canonical text of an expression under the session's naming.
pub fn render_expression(e: &Expression, cfg: &SessionConfig, ell: usize) -> String {
    cfg.var_names(ell).expression(e)
}

/// Variable count implied by an expression list (at least 1).
pub fn implied_ell(es: &[&Expression]) -> usize {
    es.iter().filter_map(|e| e.max_var()).max().map_or(1, |v| v + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SessionConfig {
        SessionConfig::default()
    }

    fn u(n: u32) -> Expression {
        Expression::gen(0, n)
    }

    #[test]
    fn expressions() {
        let e = parse_expression("3/2*u^2 + c*u''", &cfg()).unwrap();
        let want = &(&Expression::ratio(3, 2) * &(&u(0) * &u(0))) + &(&Expression::param("c") * &u(2));
        assert_eq!(e, want);
        assert_eq!(parse_expression("u^(-1/2)", &cfg()).unwrap(), Expression::gen_pow(0, 0, -1, 2));
        assert_eq!(parse_expression("u^(4)^2", &cfg()).unwrap(), &u(4) * &u(4));
        assert_eq!(parse_expression("(u*u')'", &cfg()).unwrap(), &(&u(1) * &u(1)) + &(&u(0) * &u(2)));
        assert_eq!(parse_expression("u_2'", &cfg()).unwrap(), Expression::gen(1, 1));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_expression("(u+v)/(u+1)", &cfg()), Err(Error::NonmonomialDivisor(_))));
        assert!(matches!(parse_expression("u + * v", &cfg()), Err(Error::Parse { pos: 4, .. })));
        assert!(matches!(parse_expression("u $ v", &cfg()), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse_expression("(u", &cfg()), Err(Error::Parse { pos: 2, .. })));
        let strict = SessionConfig { strict_params: true, params: vec!["c".into()], ..cfg() };
        assert!(parse_expression("c*u", &strict).is_ok());
        assert!(parse_expression("k*u", &strict).is_err());
    }

    #[test]
    fn extensions_restrict_units() {
        let c = SessionConfig { extensions: vec!["u^(1/2)".into()], ..cfg() };
        assert!(parse_expression("u^(-1/2)*u'", &c).is_ok());
        assert!(matches!(parse_expression("u'^(-1)", &c), Err(Error::Unsupported(_))));
        let bad = SessionConfig { extensions: vec!["u*v".into()], ..cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn operators() {
        let h = parse_operator("u' + 2*u*d + c*d^3", &cfg()).unwrap();
        let want = DiffOp::from_terms([(0, u(1)), (1, u(0).scale_int(2)), (3, Expression::param("c"))]);
        assert_eq!(h, MatrixDiffOp::scalar(want));
        assert_eq!(parse_operator("d*u", &cfg()).unwrap(), parse_operator("u*d + u'", &cfg()).unwrap());
        let kn = parse_operator("(1/u')*d*(1/u')", &cfg()).unwrap();
        assert_eq!(kn.get(0, 0).coeff(1), Expression::gen_pow(0, 1, -2, 1));
        let m = parse_operator("d, 0; 0, d", &cfg()).unwrap();
        assert_eq!(m, MatrixDiffOp::diagonal(vec![DiffOp::d(1), DiffOp::d(1)]));
        assert!(parse_operator("d, 0; 0", &cfg()).is_err());
    }

    #[test]
    fn vectors() {
        let v = parse_vector("(u_3', -u_2'', -u_1')", &cfg()).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(parse_vector("u + v", &cfg()).unwrap().len(), 1);
        assert_eq!(parse_vector("(u + v)", &cfg()).unwrap().len(), 1);
        assert_eq!(parse_vector("(u)*(v), 1", &cfg()).unwrap().len(), 2);
    }

    #[test]
    fn round_trip_rendering() {
        for src in ["3/2*u^2 + c*u''", "u^(4)^2 - 2*u'", "-1/2*alpha*u^(-3/2) + beta*u'", "v'*u - 1/2/(c)*w^(1/3)"] {
            let e = parse_expression(src, &cfg()).unwrap();
            let r = render_expression(&e, &cfg(), 3);
            assert_eq!(parse_expression(&r, &cfg()).unwrap(), e, "{r}");
        }
        let h = parse_operator("c*d^3 + 2*u*d + u'", &cfg()).unwrap();
        assert_eq!(parse_operator(&h.to_string(), &cfg()).unwrap(), h);
    }
}
