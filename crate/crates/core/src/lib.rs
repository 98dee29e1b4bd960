//! Numerical laboratory for elliptic homogenization.
//!
//! The crate computes homogenized coefficients from periodic cell problems,
//! estimates them on growing windows with affine boundary data, and runs
//! stability experiments that compare the homogenized behaviour of pairs of
//! coefficient fields whose difference is small on average.

pub mod cell;
pub mod error;
pub mod fields;
pub mod numerics;
pub mod perforation;
pub mod rve;
pub mod stability;

pub use error::{Error, Result};
