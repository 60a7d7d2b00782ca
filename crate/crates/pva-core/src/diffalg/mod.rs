//! Exact symbolic kernel for algebras of differential functions.
//!
//! Elements are finite sums of monomials in the jet variables `u_i^(n)` with
//! rational exponents, over the field of rational functions in declared
//! parameters.

mod coeff;
mod expr;
pub mod poly;
mod render;

pub use coeff::Coefficient;
pub use expr::{binomial, normalize, Exponent, Expression, Generator, Monomial, VectorExpr};
pub(crate) use expr::exp_to_big;
pub use render::VarNames;

/// Differential order and Δ-decomposition of an expression.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderAndDegree {
    pub diff_order: Option<Generator>,
    pub degrees: Vec<(Exponent, Expression)>,
}

pub fn order_and_degree(f: &Expression) -> OrderAndDegree {
    OrderAndDegree {
        diff_order: f.diff_order(),
        degrees: f.degree_components().into_iter().collect(),
    }
}

pub fn total_derivative(f: &Expression) -> Expression {
    f.total_derivative()
}

pub fn partial_derivative(f: &Expression, var: usize, order: u32) -> Expression {
    f.partial_derivative(var, order)
}
