//! Hyperbolic and quasi-hyperbolic geometry of polygonal Jordan domains.
//!
//! The crate computes, at double precision and desk scale:
//!
//! - internal (shortest-path) distances and diameters of polygonal Jordan
//!   domains, via dense grid graphs ([`geometry`]);
//! - conformal maps from the unit disk onto polygons (Schwarz–Christoffel,
//!   plus closed-form catalog entries used as test oracles) and hyperbolic
//!   geodesics of the disk ([`conformal`]);
//! - hyperbolic and quasi-hyperbolic distances and their comparability
//!   ([`metrics`]);
//! - gauge functions `t ↦ t·log^α(e+t)` and tabulated gauges, with
//!   quasi-subadditivity estimates and a tail-integral classifier ([`phi`]);
//! - integrals of a gauge composed with the hyperbolic metric over the disk
//!   and over map images ([`integrability`]);
//! - dyadic crosscut families, the weighted crosscut sums that certify
//!   Sobolev extendability of boundary parametrizations, and finite-depth
//!   ruled extensions with their p-energy ([`crosscuts`]);
//! - an explicit folded-tube domain whose boundary admits gauge-integrable
//!   hyperbolic geometry while every homeomorphic W^{1,1} extension of a
//!   designed boundary parametrization has divergent energy
//!   ([`counterexample`]);
//! - a small solver for weighted series `Σ a_n S_n^{δ-1}` with certified
//!   convergence bounds and divergence witnesses ([`series`]).
//!
//! Everything is deterministic: random sampling takes explicit seeds, and
//! reductions run in a fixed order, so reports are reproducible bit for bit.

pub mod conformal;
pub mod counterexample;
pub mod crosscuts;
pub mod geometry;
pub mod integrability;
pub mod metrics;
pub mod phi;
pub mod quad;
pub mod series;
pub mod svg;

mod guide;

pub mod prelude {
    //! Convenience re-exports of the most used types.
    pub use crate::quad::KahanSum;
}
