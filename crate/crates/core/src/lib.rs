//! Numerical potential theory for random polynomials.
//!
//! Builds weighted orthonormal polynomial bases on compact sets in `C` and
//! `C^2`, the associated Bergman functions and extremal-function estimates,
//! random polynomial ensembles over those bases, zero statistics, and
//! directional Chebyshev constants through homogenization.

pub mod chebyshev;
pub mod ensemble;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod linalg;
pub mod orthopoly;
pub mod precision;
pub mod zeros;

pub use error::{Error, Result};
