use thiserror::Error;

use crate::scalar::ScalarKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scalar variant mismatch: {left:?} vs {right:?}")]
    ScalarMismatch { left: ScalarKind, right: ScalarKind },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("series is not a unit (vanishing constant term)")]
    NotAUnit,

    #[error("component {component} is not logarithmic: term {term} is not divisible by its variable")]
    NotLogarithmic { component: usize, term: String },

    #[error("logarithmic basis is singular")]
    SingularBasis,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("automorphism is not invertible: {0}")]
    NotInvertible(String),

    #[error("derivation is not in normal form: non-resonant term at {exponent}")]
    NotInNormalForm { exponent: String },

    #[error("resonant term {exponent} passed to the homological solver")]
    ResonantInput { exponent: String },

    #[error("f0 is not in the degree-0 component of the graduation")]
    NotGradedZero,

    #[error("diagonal part vanishes (non-degeneracy condition violated)")]
    ZeroLambda,

    #[error("invalid truncation order: {0}")]
    InvalidOrder(String),

    #[error("bracket equation window violated: {0}")]
    InvalidWindow(String),

    #[error("enumeration budget exceeded: |m| <= {requested} exceeds cap {cap}")]
    BudgetExceeded { requested: u64, cap: u64 },

    #[error("first basis vector is not collinear to the diagonal part")]
    BasisNotAdapted,

    #[error("{0} requires exact scalars")]
    ExactScalarsRequired(String),

    #[error("matrix readback is not a derivation: {0}")]
    NotADerivation(String),

    #[error("syntax error at line {line}, column {column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },

    #[error("unknown variable `{name}` at line {line}, column {column}")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("mixed scalars: {0}")]
    MixedScalars(String),

    #[error("invalid scalar literal `{0}`")]
    InvalidScalar(String),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ScalarMismatch { .. } => "ScalarMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotAUnit => "NotAUnit",
            Error::NotLogarithmic { .. } => "NotLogarithmic",
            Error::SingularBasis => "SingularBasis",
            Error::SingularMatrix => "SingularMatrix",
            Error::NotInvertible(_) => "NotInvertible",
            Error::NotInNormalForm { .. } => "NotInNormalForm",
            Error::ResonantInput { .. } => "ResonantInput",
            Error::NotGradedZero => "NotGradedZero",
            Error::ZeroLambda => "ZeroLambda",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::InvalidWindow(_) => "InvalidWindow",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::BasisNotAdapted => "BasisNotAdapted",
            Error::ExactScalarsRequired(_) => "ExactScalarsRequired",
            Error::NotADerivation(_) => "NotADerivation",
            Error::Syntax { .. } => "SyntaxError",
            Error::UnknownVariable { .. } => "UnknownVariable",
            Error::MixedScalars(_) => "MixedScalars",
            Error::InvalidScalar(_) => "InvalidScalar",
        }
    }
}
