//! Certified homotopy continuation for sparse polynomial systems written as
//! exponential sums in logarithmic coordinates.

pub mod condlen;
pub mod constants;
pub mod error;
pub mod example;
pub mod geometry;
pub mod hull;
pub mod linalg;
pub mod newton;
pub mod oracles;
pub mod path;
pub mod projective;
pub mod quadrature;
pub mod supports;
pub mod tracker;

pub use error::{Error, Result};
