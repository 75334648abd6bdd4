//! Compact sets, weights, monomial orderings and exact discrete measures.

pub mod multiindex;
pub mod quadrature;
pub mod set;
pub mod weight;

pub use multiindex::{dimension_of_polys, MultiIndex, MultiIndexOrder};
pub use quadrature::{gauss_legendre_unit, quadrature_measure, DiscreteMeasure};
pub use set::{SetKind, Support, WeightedSet, GEOM_SCHEMA};
pub use weight::{weight_eval, WeightExpr};

/// `monomial_order(d, n)`: graded lexicographic order with `z_1` strongest.
pub fn monomial_order(d: usize, n: u32) -> crate::Result<MultiIndexOrder> {
    MultiIndexOrder::new(d, n)
}
