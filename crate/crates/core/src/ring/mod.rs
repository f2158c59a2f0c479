//! Exact scalars, truncated series and series-valued matrices.

pub mod linalg;
pub mod matrix;
pub mod scalar;
pub mod series;

pub use matrix::{Matrix, Ring, SeriesMatrix};
pub use scalar::{int, parse_gaussian, parse_rational, rat, Gaussian, Rational, Scalar};
pub use series::{Exponents, Series, Var, VarTable};
