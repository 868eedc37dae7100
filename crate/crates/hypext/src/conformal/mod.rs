//! Numerical Riemann maps from the unit disk onto polygonal domains,
//! Möbius maps, boundary traces, and hyperbolic geodesics of the disk.
//!
//! The workhorse is the Schwarz–Christoffel representation
//! `f(z) = A + C ∫₀^z Π_k (1 − t/ζ_k)^{β_k} dt`, where the prevertices
//! `ζ_k` lie on the unit circle and the exponents `β_k` encode the exterior
//! turning angles of the target polygon (they sum to −2 over a closed
//! loop).  The parameter problem — placing the prevertices so that the
//! image sides come out in the right proportions — is solved by a damped
//! Newton iteration in logarithmic gap coordinates (see [`solve`]).
//!
//! Design points:
//!
//! * Every complex power uses the principal branch, which is safe here
//!   because `Re(1 − t/ζ) ≥ 1 − |t| ≥ 0` throughout the closed disk.
//! * Integrals with an endpoint at a prevertex extract the singular factor
//!   analytically and use Gauss–Jacobi rules; everything else uses
//!   adaptive Gauss–Legendre panels.
//! * Two closed-form maps (the identity, and the disk-to-square map built
//!   from the lemniscatic integral `∫ (1−t⁴)^{−1/2} dt`) exist purely as
//!   independent test oracles; they are evaluated from their own explicit
//!   integrands, never through the product machinery they are meant to
//!   check.
//! * Prevertex crowding (gaps below 10⁻¹⁴) is reported as an error, not
//!   silently accepted; elongated targets should be handled upstream.

mod geodesic;
mod map;
mod mobius;
mod solve;

pub use geodesic::{geodesic_length_for_gap, hyperbolic_geodesic_disk, polyline_length};
pub use map::{ConformalMap, MapFile, MapKind, LEMNISCATE_HALF};
pub use mobius::{mobius_disk_to_halfplane, MobiusMap};

use crate::geometry::GeometryError;
use crate::quad::QuadError;
use num_complex::Complex64;
use thiserror::Error;

/// Errors from map construction, evaluation, and geodesic sampling.
#[derive(Debug, Error)]
pub enum ConformalError {
    /// Evaluation point outside the open unit disk.
    #[error("point {0} lies outside the open unit disk")]
    OutsideDisk(Complex64),
    /// A normalization precondition failed (details in the message).
    #[error("invalid normalization: {0}")]
    InvalidNormalization(String),
    /// The prevertex solver did not reach the residual tolerance.
    #[error("parameter solve failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    /// Two prevertices came closer than 10⁻¹⁴ in angle.
    #[error("prevertex crowding: minimum gap {gap:.3e} below 1e-14")]
    CrowdingOverflow { gap: f64 },
    /// Geodesic endpoints coincide.
    #[error("geodesic endpoints coincide")]
    CoincidentEndpoints,
    /// The solver accepts at most 64 polygon vertices.
    #[error("polygon has {count} vertices, solver limit is 64")]
    TooManyVertices { count: usize },
    /// Underlying domain geometry error.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// Underlying quadrature failure.
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}
