//! Exact free-field computations for W-algebras of type A (and rectangular
//! BCD combinatorics): a normally ordered vertex algebra engine, Fock modules
//! and screening operators, Wakimoto differential operators, quantum Miura
//! generators and coproduct checks.

pub mod coproduct;
pub mod fock;
pub mod glstruct;
pub mod miura;
pub mod oracle;
pub mod report;
pub mod scalars;
pub mod suites;
pub mod vertexcore;
pub mod wakimoto;

pub use scalars::{Poly, Rational, Scalar, ScalarError};
pub use vertexcore::{FieldState, GeneratorTable};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("operands live over different generator tables")]
    MixedTables,
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("exponent pairing is not integral: {0}")]
    NonIntegralExponents(String),
    #[error("columns do not form a pyramid: {0}")]
    NotUnimodal(String),
    #[error("invalid column index {0}")]
    InvalidColumn(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("matrix shapes do not match")]
    ShapeMismatch,
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("linear system has no solution: {0}")]
    NoSolution(String),
    #[error("linear system has no unique solution: {0}")]
    NonUniqueSolution(String),
    #[error("singular triangular system: {0}")]
    SingularSystem(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
