pub mod automorphism;
pub mod bruno;
pub mod derivation;
pub mod error;
pub mod ideal;
pub mod linalg;
pub mod monomial;
pub mod normalize;
pub mod omega;
pub mod parse;
pub mod poly;
pub mod scalar;
pub mod series;

pub use automorphism::Automorphism;
pub use derivation::{LogBasis, LogDerivation};
pub use error::{Error, Result};
pub use ideal::TruncatedIdeal;
pub use monomial::Exponent;
pub use scalar::{Coeff, ComplexFloat, Gaussian, Scalar, ScalarKind};
pub use series::Series;

pub use num_rational::BigRational;
