//! Symbolic engine for algebras of differential functions, λ-brackets,
//! Hamiltonian and symplectic structure checks, and Lenard hierarchies.

pub mod diffalg;
pub mod error;
pub mod hierarchies;

pub use diffalg::{Coefficient, Exponent, Expression, Generator, Monomial, VarNames, VectorExpr};
pub use error::{Error, Result};
pub mod diffop;
pub mod lenard;
pub mod pva;
pub mod syntax;
pub mod varcalc;

pub use diffop::{DiffOp, MatrixDiffOp};
pub use pva::{BiLambdaPoly, CheckReport, LambdaPoly};
pub use syntax::SessionConfig;
pub use varcalc::LocalFunctional;
