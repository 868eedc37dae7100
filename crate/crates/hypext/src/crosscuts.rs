//! Dyadic crosscut families of a conformal map: weighted length sums,
//! geodesic cell decompositions, a gauge length bound with an empirical
//! constant, and a finite-depth ruled extension with its p-energy.
//!
//! A *crosscut* is the image `Γ = f(γ)` of a hyperbolic geodesic `γ` of the
//! disk joining two boundary preimages.  Boundary targets come from a
//! caller-supplied circle parametrization of `∂Ω`; their preimages under
//! `f` are recovered by inverting the map's own boundary trace through a
//! monotone arc-length table with bisection refinement — never by Newton
//! iteration on the boundary, which stalls at polygon corners where `f'`
//! degenerates.
//!
//! Design points:
//!
//! * Generation `n` splits the circle into `2ⁿ` closed arcs whose endpoint
//!   angles are the dyadic fractions `j/2ⁿ` of a full turn.  The fractions
//!   are exact in double precision, so the family axioms (equal width,
//!   disjoint interiors, full cover, two children per arc) hold bitwise.
//! * The starting generation `n₀` is the least one whose preimage chord
//!   gaps all satisfy `|ξ_{n,j+1} − ξ_{n,j}| ≤ 4π/(1+π²) ≈ 1.156`.
//! * Geodesic envelopes use the exact closed form: the Euclidean length of
//!   the disk geodesic with endpoint gap `δ` is `tan(δ/2)(π−δ)`, which is
//!   *larger* than the boundary arc `δ` for small gaps (ratio → π/2).  The
//!   identity-map generation terms `T_n = 2^{(p−2)n} Σ_j ℓ^p` consequently
//!   decay with ratio → 1/2 for every exponent `p`, and all gates in the
//!   tests are derived from these envelopes rather than from the cruder
//!   chord/arc sandwich.
//! * The length bound multiplies two factors — the tail integral
//!   `∫_{log2/2}^∞ ds/φ(s)` and the pullback integral of `φ(h)` over the
//!   half-disk between the geodesic and the shorter boundary arc — and
//!   reports the empirical constant `ℓ²/(tail·Δ)`.  The constant is not
//!   quantified by the underlying estimate, so the tests gate it with a
//!   fixed policy ceiling rather than a derived value.
//! * The extension is a transfinite (Coons-type) skeleton whose radial
//!   patch sides collapse to the shared boundary endpoints, making each
//!   patch ruled between a parent crosscut and its two children; inside
//!   the first dyadic radius the conformal map itself is used.  Patches
//!   are audited against each other by interior sampling.  A geodesic with
//!   endpoint gap `δ` dips `Θ(δ)` below the circle — several times deeper
//!   than its own dyadic ring — so patches legitimately bulge into the
//!   inner conformal region; that overlap is a property of the finite-depth
//!   skeleton itself and is therefore not part of the audit.
//! * `|DΦ|` is the operator norm (largest singular value) of the real
//!   Jacobian, which equals `|f'|` wherever `Φ` is conformal, so the energy
//!   of the skeleton is directly comparable to `∫ |f'|^p`.

use crate::conformal::{
    hyperbolic_geodesic_disk, mobius_disk_to_halfplane, polyline_length, ConformalError,
    ConformalMap, MobiusMap,
};
use crate::geometry::{orient, GeometryError, Point};
use crate::phi::{PhiError, PhiSpec, TailClass};
use crate::quad::{gauss_legendre, KahanSum, QuadRule};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

const TWO_PI: f64 = 2.0 * PI;

/// Largest admissible preimage chord gap, `4π/(1+π²)`.
pub const PREIMAGE_GAP_BOUND: f64 = 4.0 * PI / (1.0 + PI * PI);

/// Hard ceiling on generation depth (`2^depth` preimages are computed).
pub const MAX_GENERATION_DEPTH: usize = 16;

/// Trailing-ratio threshold under which a sum is flagged convergent.
pub const CONVERGENT_TERM_RATIO: f64 = 0.97;

/// Number of trailing ratios that must sit under the threshold.
pub const CONVERGENT_TERM_RUN: usize = 4;

/// Policy ceiling for the empirical constant of the length bound.
pub const EMPIRICAL_C_GATE: f64 = 100.0;

/// Default geodesic sample count for individual crosscuts.
pub const DEFAULT_CROSSCUT_SAMPLES: usize = 129;

/// Geodesic sample count used for extension skeleton crosscuts.
const EXTENSION_SAMPLES: usize = 33;

/// Boundary-trace table size used for preimage inversion.
const TRACE_TABLE_SIZE: usize = 2048;

/// Bisection steps refining each table inversion.
const INVERSION_BISECTIONS: usize = 48;

/// Where the head quadrature of the 1/φ tail integral hands over to the
/// octave-window classifier.
const TAIL_SPLIT: f64 = 1.0;

/// Relative tolerance passed to the tail classifier.
const TAIL_TOL: f64 = 1e-3;

/// Radial clamp for derivative evaluation close to the unit circle.
const DERIVATIVE_RADIUS_CLAMP: f64 = 1.0 - 1e-13;

/// Samples per decomposition arc `C_m`.
const CELL_ARC_SAMPLES: usize = 33;

/// Chord below which crosscut endpoints count as coincident.
const DEGENERATE_CHORD: f64 = 1e-10;

/// Errors from crosscut construction, sums, bounds, and extensions.
#[derive(Debug, Error)]
pub enum CrosscutError {
    #[error(
        "no generation up to {depth} meets the preimage gap bound \
         (max chord gap {max_gap:.6} at the deepest generation)"
    )]
    NoValidN0 { depth: usize, max_gap: f64 },
    #[error("boundary parametrization is not monotone at sample {index}")]
    NonMonotoneParametrization { index: usize },
    #[error("endpoint chord {chord:.6} exceeds the gap bound {bound:.6}")]
    GapTooWide { chord: f64, bound: f64 },
    #[error("the 1/φ tail integral diverges; the length bound is vacuous")]
    TailDivergent,
    #[error("the 1/φ tail classifier was inconclusive after {windows} windows")]
    TailInconclusive { windows: usize },
    #[error("crosscut endpoints of cell ({generation},{index}) coincide at sampling resolution")]
    CellDegenerate { generation: usize, index: usize },
    #[error("extension cells {first:?} and {second:?} overlap")]
    OverlapDetected {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("exponent p = {p} outside [1, 2)")]
    BadExponent { p: f64 },
    #[error("depth {value} outside {min}..={max}")]
    BadDepth {
        value: usize,
        min: usize,
        max: usize,
    },
    #[error("need at least {min} samples, got {got}")]
    BadSamples { got: usize, min: usize },
    #[error("a cycle needs at least 2 boundary points, got {points}")]
    CycleTooShort { points: usize },
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Phi(#[from] PhiError),
}

fn unit_circle_point(label: &str, xi: Complex64) -> Result<(), CrosscutError> {
    if (xi.norm() - 1.0).abs() > 1e-9 {
        return Err(ConformalError::InvalidNormalization(format!(
            "{label} must lie on the unit circle, |ξ| = {}",
            xi.norm()
        ))
        .into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dyadic parameter arcs.
// ---------------------------------------------------------------------------

/// One closed dyadic parameter arc `I_{n,j}`, the angles
/// `2π·[j/2ⁿ, (j+1)/2ⁿ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicArc {
    pub generation: usize,
    pub index: usize,
}

impl DyadicArc {
    /// Endpoints as fractions of a full turn; exact dyadic doubles.
    pub fn fraction_span(&self) -> (f64, f64) {
        let w = 0.5f64.powi(self.generation as i32);
        (self.index as f64 * w, (self.index + 1) as f64 * w)
    }

    /// Endpoint angles in radians.
    pub fn angle_span(&self) -> (f64, f64) {
        let (a, b) = self.fraction_span();
        (TWO_PI * a, TWO_PI * b)
    }

    /// The two arcs of the next generation whose union is this arc.
    pub fn children(&self) -> (DyadicArc, DyadicArc) {
        let g = self.generation + 1;
        (
            DyadicArc {
                generation: g,
                index: 2 * self.index,
            },
            DyadicArc {
                generation: g,
                index: 2 * self.index + 1,
            },
        )
    }
}

/// The dyadic family of parameter arcs for generations `n₀..=depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicFamily {
    n0: usize,
    depth: usize,
}

impl DyadicFamily {
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn generations(&self) -> impl Iterator<Item = usize> {
        self.n0..=self.depth
    }

    /// The `2ⁿ` arcs of generation `n`.
    pub fn arcs(&self, generation: usize) -> impl Iterator<Item = DyadicArc> {
        (0..1usize << generation).map(move |index| DyadicArc { generation, index })
    }
}

// ---------------------------------------------------------------------------
// Boundary parametrizations and trace inversion.
// ---------------------------------------------------------------------------

/// A sampled orientation-preserving homeomorphism of the circle onto `∂Ω`:
/// a strictly increasing angle table with one boundary point per angle,
/// evaluated between samples by chord interpolation.
#[derive(Debug, Clone)]
pub struct BoundaryParametrization {
    thetas: Vec<f64>,
    points: Vec<Complex64>,
}

impl BoundaryParametrization {
    /// Builds a parametrization from an explicit table.  Angles must lie in
    /// `[0, 2π)` and increase strictly.
    pub fn from_table(
        thetas: Vec<f64>,
        points: Vec<Complex64>,
    ) -> Result<Self, CrosscutError> {
        if thetas.len() < 8 || thetas.len() != points.len() {
            return Err(CrosscutError::BadSamples {
                got: thetas.len().min(points.len()),
                min: 8,
            });
        }
        for (i, pair) in thetas.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(CrosscutError::NonMonotoneParametrization { index: i + 1 });
            }
        }
        if thetas[0] < 0.0 || *thetas.last().unwrap() >= TWO_PI {
            return Err(CrosscutError::NonMonotoneParametrization { index: 0 });
        }
        Ok(BoundaryParametrization { thetas, points })
    }

    /// The map's own boundary trace sampled at `samples` uniform angles.
    pub fn own_trace(map: &ConformalMap, samples: usize) -> Result<Self, CrosscutError> {
        if samples < 8 {
            return Err(CrosscutError::BadSamples {
                got: samples,
                min: 8,
            });
        }
        let mut thetas = Vec::with_capacity(samples);
        let mut points = Vec::with_capacity(samples);
        for i in 0..samples {
            let theta = TWO_PI * (i as f64 / samples as f64);
            thetas.push(theta);
            points.push(map.boundary_trace(theta)?);
        }
        Ok(BoundaryParametrization { thetas, points })
    }

    pub fn samples(&self) -> usize {
        self.thetas.len()
    }

    /// Boundary point at parameter angle `theta` (wrapped), by chord
    /// interpolation between the neighbouring table samples.
    pub fn eval(&self, theta: f64) -> Complex64 {
        let mut t = theta % TWO_PI;
        if t < 0.0 {
            t += TWO_PI;
        }
        let n = self.thetas.len();
        // Index of the last sample with angle <= t (the table starts at the
        // smallest angle, so anything below thetas[0] wraps to the last arc).
        let k = self.thetas.partition_point(|&a| a <= t);
        let (i, lo, hi) = if k == 0 {
            (n - 1, self.thetas[n - 1] - TWO_PI, self.thetas[0])
        } else if k == n {
            (n - 1, self.thetas[n - 1], self.thetas[0] + TWO_PI)
        } else {
            (k - 1, self.thetas[k - 1], self.thetas[k])
        };
        let frac = (t - lo) / (hi - lo);
        let a = self.points[i];
        let b = self.points[(i + 1) % n];
        a + (b - a) * frac
    }
}

/// Inverts the map's boundary trace through a monotone arc-length table.
struct TraceInverter<'a> {
    map: &'a ConformalMap,
    angles: Vec<f64>,
    stations: Vec<f64>,
    period: f64,
}

impl<'a> TraceInverter<'a> {
    fn new(map: &'a ConformalMap) -> Result<Self, CrosscutError> {
        let period = match map.target() {
            Some(domain) => domain.perimeter(),
            None => TWO_PI,
        };
        let m = TRACE_TABLE_SIZE;
        let mut angles = Vec::with_capacity(m + 1);
        let mut stations: Vec<f64> = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let theta = TWO_PI * (i as f64 / m as f64);
            angles.push(theta);
            let raw = Self::station_on(map, map.boundary_trace(theta)?);
            let unwrapped = if let Some(&prev) = stations.last() {
                // Choose the branch within half a period of the previous
                // station; table steps are far smaller than that.
                raw + ((prev - raw) / period).round() * period
            } else {
                raw
            };
            stations.push(unwrapped);
        }
        for i in 1..stations.len() {
            if !(stations[i] > stations[i - 1]) {
                return Err(CrosscutError::NonMonotoneParametrization { index: i });
            }
        }
        Ok(TraceInverter {
            map,
            angles,
            stations,
            period,
        })
    }

    fn station_on(map: &ConformalMap, w: Complex64) -> f64 {
        match map.target() {
            Some(domain) => {
                domain
                    .nearest_boundary_station(Point { x: w.re, y: w.im })
                    .0
            }
            None => {
                let a = w.arg();
                if a < 0.0 {
                    a + TWO_PI
                } else {
                    a
                }
            }
        }
    }

    /// Circle angle whose trace lands on the boundary point `w`.
    fn invert(&self, w: Complex64) -> Result<f64, CrosscutError> {
        let raw = Self::station_on(self.map, w);
        let s0 = self.stations[0];
        let mut sigma = raw + ((s0 - raw) / self.period).ceil() * self.period;
        if sigma >= s0 + self.period {
            sigma -= self.period;
        }
        let k = self.stations.partition_point(|&s| s <= sigma);
        if k == 0 {
            return Ok(self.angles[0]);
        }
        let (mut lo, mut hi) = (self.angles[k - 1], self.angles[k.min(self.angles.len() - 1)]);
        let mut slo = self.stations[k - 1];
        for _ in 0..INVERSION_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let raw_mid = Self::station_on(self.map, self.map.boundary_trace(mid)?);
            let smid = raw_mid + ((slo - raw_mid) / self.period).round() * self.period;
            if smid <= sigma {
                lo = mid;
                slo = smid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

// ---------------------------------------------------------------------------
// Preimage cycles.
// ---------------------------------------------------------------------------

/// A dyadic family together with the preimage angles
/// `ξ_{n,j} = f⁻¹(param(θ_{n,j}))` and the boundary targets
/// `param(θ_{n,j})` for every generation `n₀..=depth`.
#[derive(Debug, Clone)]
pub struct DyadicCycles {
    family: DyadicFamily,
    /// Preimage angles per generation, index 0 holding generation `n₀`.
    xi: Vec<Vec<f64>>,
    /// Boundary-parametrization targets aligned with `xi`.
    targets: Vec<Vec<Complex64>>,
}

impl DyadicCycles {
    pub fn family(&self) -> &DyadicFamily {
        &self.family
    }

    pub fn n0(&self) -> usize {
        self.family.n0
    }

    pub fn depth(&self) -> usize {
        self.family.depth
    }

    /// Preimage angles of generation `n` (ascending modulo one wrap).
    pub fn xi(&self, generation: usize) -> &[f64] {
        &self.xi[generation - self.family.n0]
    }

    /// Preimage point `e^{iξ_{n,j}}`; the index wraps modulo `2ⁿ`.
    pub fn xi_point(&self, generation: usize, index: usize) -> Complex64 {
        let row = self.xi(generation);
        Complex64::from_polar(1.0, row[index % row.len()])
    }

    /// Boundary target `param(θ_{n,j})`; the index wraps modulo `2ⁿ`.
    pub fn target(&self, generation: usize, index: usize) -> Complex64 {
        let row = &self.targets[generation - self.family.n0];
        row[index % row.len()]
    }

    /// Largest preimage chord gap of generation `n` (wrap included).
    pub fn max_gap(&self, generation: usize) -> f64 {
        let row = self.xi(generation);
        (0..row.len())
            .map(|j| {
                (self.xi_point(generation, j + 1) - self.xi_point(generation, j)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the dyadic family and its preimage cycles up to generation
/// `depth`, returning the least starting generation `n₀ ≤ depth` whose
/// chord gaps all satisfy the `4π/(1+π²)` bound.
pub fn build_dyadic_cycles(
    map: &ConformalMap,
    param: &BoundaryParametrization,
    depth: usize,
) -> Result<DyadicCycles, CrosscutError> {
    if depth == 0 || depth > MAX_GENERATION_DEPTH {
        return Err(CrosscutError::BadDepth {
            value: depth,
            min: 1,
            max: MAX_GENERATION_DEPTH,
        });
    }
    let inverter = TraceInverter::new(map)?;
    let fine = 1usize << depth;
    let mut xi_fine = Vec::with_capacity(fine);
    let mut targets_fine = Vec::with_capacity(fine);
    for j in 0..fine {
        let theta = TWO_PI * (j as f64 / fine as f64);
        let target = param.eval(theta);
        xi_fine.push(inverter.invert(target)?);
        targets_fine.push(target);
    }
    // An orientation-preserving homeomorphism yields preimage angles that
    // ascend cyclically: exactly one wrap descent is allowed.
    let mut descents = 0usize;
    let mut first_descent = 0usize;
    for j in 0..fine {
        if xi_fine[(j + 1) % fine] < xi_fine[j] {
            descents += 1;
            first_descent = j + 1;
        }
    }
    if descents > 1 {
        return Err(CrosscutError::NonMonotoneParametrization {
            index: first_descent,
        });
    }

    let point = |j: usize| Complex64::from_polar(1.0, xi_fine[j % fine]);
    let generation_ok = |n: usize| {
        let stride = fine >> n;
        (0..1usize << n).all(|j| {
            let a = xi_fine[j * stride];
            let b = xi_fine[((j + 1) * stride) % fine];
            let mut gap = (b - a) % TWO_PI;
            if gap <= 0.0 {
                gap += TWO_PI;
            }
            let chord = (point(((j + 1) * stride) % fine) - point(j * stride)).norm();
            gap <= PI && chord <= PREIMAGE_GAP_BOUND
        })
    };
    let n0 = match (1..=depth).find(|&n| generation_ok(n)) {
        Some(n) => n,
        None => {
            let max_gap = (0..fine)
                .map(|j| (point(j + 1) - point(j)).norm())
                .fold(0.0, f64::max);
            return Err(CrosscutError::NoValidN0 { depth, max_gap });
        }
    };

    let mut xi = Vec::with_capacity(depth - n0 + 1);
    let mut targets = Vec::with_capacity(depth - n0 + 1);
    for n in n0..=depth {
        let stride = fine >> n;
        xi.push((0..1usize << n).map(|j| xi_fine[j * stride]).collect());
        targets.push(
            (0..1usize << n)
                .map(|j| targets_fine[j * stride])
                .collect(),
        );
    }
    Ok(DyadicCycles {
        family: DyadicFamily { n0, depth },
        xi,
        targets,
    })
}

// ---------------------------------------------------------------------------
// Crosscuts.
// ---------------------------------------------------------------------------

/// The image of a disk geodesic under the map: a sampled polyline with its
/// Euclidean length and a sampling-refinement estimate.
#[derive(Debug, Clone)]
pub struct Crosscut {
    pub generation: usize,
    pub index: usize,
    /// Image endpoints, evaluated through the boundary trace.
    pub endpoints: (Complex64, Complex64),
    /// Sampled image polyline (`2·samples − 1` points).
    pub polyline: Vec<Complex64>,
    /// Euclidean length of the polyline.
    pub length: f64,
    /// Relative length change from the half-resolution polyline to this
    /// one; small values certify the sampling resolution.
    pub refinement: f64,
}

fn map_geodesic_point(map: &ConformalMap, z: Complex64) -> Result<Complex64, CrosscutError> {
    if z.norm() >= 1.0 - 1e-12 {
        Ok(map.boundary_trace(z.arg())?)
    } else {
        Ok(map.evaluate_map(z)?)
    }
}

fn crosscut_indexed(
    map: &ConformalMap,
    xi1: Complex64,
    xi2: Complex64,
    samples: usize,
    generation: usize,
    index: usize,
) -> Result<Crosscut, CrosscutError> {
    if samples < 5 {
        return Err(CrosscutError::BadSamples {
            got: samples,
            min: 5,
        });
    }
    unit_circle_point("ξ1", xi1)?;
    unit_circle_point("ξ2", xi2)?;
    let fine = 2 * samples - 1;
    let geodesic = hyperbolic_geodesic_disk(xi1, xi2, fine)?;
    let mut polyline = Vec::with_capacity(fine);
    for (i, &z) in geodesic.iter().enumerate() {
        if i == 0 {
            polyline.push(map.boundary_trace(xi1.arg())?);
        } else if i == fine - 1 {
            polyline.push(map.boundary_trace(xi2.arg())?);
        } else {
            polyline.push(map_geodesic_point(map, z)?);
        }
    }
    let length = polyline_length(&polyline);
    let mut coarse = 0.0;
    for k in (2..fine).step_by(2) {
        coarse += (polyline[k] - polyline[k - 2]).norm();
    }
    let refinement = if length > 0.0 {
        (length - coarse) / length
    } else {
        0.0
    };
    let endpoints = (polyline[0], polyline[fine - 1]);
    Ok(Crosscut {
        generation,
        index,
        endpoints,
        polyline,
        length,
        refinement,
    })
}

/// Crosscut of `map` between the unit-circle preimages `ξ1`, `ξ2`: the
/// image polyline of the hyperbolic geodesic, with endpoints evaluated
/// through the boundary trace.
pub fn crosscut(
    map: &ConformalMap,
    xi1: Complex64,
    xi2: Complex64,
    samples: usize,
) -> Result<Crosscut, CrosscutError> {
    crosscut_indexed(map, xi1, xi2, samples, 0, 0)
}

/// All crosscuts `Γ_{n,j}` of the family, generation by generation.
pub fn family_crosscuts(
    map: &ConformalMap,
    cycles: &DyadicCycles,
    samples: usize,
) -> Result<Vec<Crosscut>, CrosscutError> {
    let mut cuts = Vec::new();
    for n in cycles.family().generations() {
        for j in 0..1usize << n {
            let xi1 = cycles.xi_point(n, j);
            let xi2 = cycles.xi_point(n, j + 1);
            if (xi2 - xi1).norm() < DEGENERATE_CHORD {
                return Err(CrosscutError::CellDegenerate {
                    generation: n,
                    index: j,
                });
            }
            cuts.push(crosscut_indexed(map, xi1, xi2, samples, n, j)?);
        }
    }
    Ok(cuts)
}

/// Audits pairwise disjointness: flags any transversal crossing between
/// polyline segments of two different crosscuts.
///
/// Crosscuts that share a boundary endpoint meet the boundary tangentially
/// there (geodesics arrive radially), so their inscribed chords may wiggle
/// across each other within a few segment lengths of the shared point even
/// though the exact curves only touch.  Crossings inside that tangency
/// neighbourhood are therefore ignored; crossings anywhere else are errors.
pub fn audit_crosscut_disjointness(cuts: &[Crosscut]) -> Result<(), CrosscutError> {
    let boxes: Vec<(f64, f64, f64, f64)> = cuts
        .iter()
        .map(|c| {
            let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in &c.polyline {
                b = (b.0.min(p.re), b.1.min(p.im), b.2.max(p.re), b.3.max(p.im));
            }
            b
        })
        .collect();
    let mut scale: f64 = 1.0;
    for b in &boxes {
        scale = scale.max(b.2.abs()).max(b.3.abs()).max(b.0.abs()).max(b.1.abs());
    }
    let eps = 1e3 * f64::EPSILON * scale * scale;
    let share_tol = 1e-9 * scale;
    let pt = |c: Complex64| Point { x: c.re, y: c.im };
    // Segment length adjacent to an endpoint, for sizing the tangency
    // neighbourhood around a shared boundary point.
    let adjacent = |cut: &Crosscut, p: Complex64| -> f64 {
        let line = &cut.polyline;
        let mut h = 0.0f64;
        if (line[0] - p).norm() <= share_tol && line.len() > 1 {
            h = h.max((line[1] - line[0]).norm());
        }
        if (line[line.len() - 1] - p).norm() <= share_tol && line.len() > 1 {
            h = h.max((line[line.len() - 1] - line[line.len() - 2]).norm());
        }
        h
    };
    for a in 0..cuts.len() {
        for b in a + 1..cuts.len() {
            let (ba, bb) = (&boxes[a], &boxes[b]);
            if ba.2 < bb.0 || bb.2 < ba.0 || ba.3 < bb.1 || bb.3 < ba.1 {
                continue;
            }
            let mut tangencies: Vec<(Complex64, f64)> = Vec::new();
            for &u in &[cuts[a].endpoints.0, cuts[a].endpoints.1] {
                for &v in &[cuts[b].endpoints.0, cuts[b].endpoints.1] {
                    if (u - v).norm() <= share_tol {
                        let radius = 4.0 * adjacent(&cuts[a], u).max(adjacent(&cuts[b], v));
                        tangencies.push((u, radius));
                    }
                }
            }
            for sa in cuts[a].polyline.windows(2) {
                for sb in cuts[b].polyline.windows(2) {
                    let d1 = orient(pt(sb[0]), pt(sb[1]), pt(sa[0]));
                    let d2 = orient(pt(sb[0]), pt(sb[1]), pt(sa[1]));
                    let d3 = orient(pt(sa[0]), pt(sa[1]), pt(sb[0]));
                    let d4 = orient(pt(sa[0]), pt(sa[1]), pt(sb[1]));
                    let straddle =
                        |u: f64, v: f64| (u > eps && v < -eps) || (u < -eps && v > eps);
                    if straddle(d1, d2) && straddle(d3, d4) {
                        let crossing = sa[0] + (sa[1] - sa[0]) * (d1 / (d1 - d2));
                        if tangencies
                            .iter()
                            .any(|&(p, radius)| (crossing - p).norm() <= radius)
                        {
                            continue;
                        }
                        return Err(CrosscutError::OverlapDetected {
                            first: (cuts[a].generation, cuts[a].index),
                            second: (cuts[b].generation, cuts[b].index),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Weighted crosscut sums.
// ---------------------------------------------------------------------------

/// One generation of the weighted sum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GenerationTerm {
    pub generation: usize,
    pub crosscuts: usize,
    /// `T_n = 2^{(p−2)n} Σ_j ℓ(Γ_{n,j})^p`.
    pub term: f64,
    /// `S_p` up to this generation.
    pub cumulative: f64,
    /// `T_n / T_{n−1}` when a previous generation exists.
    pub ratio: Option<f64>,
}

/// Length record for one crosscut, suitable for CSV export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrosscutLength {
    pub generation: usize,
    pub index: usize,
    pub length: f64,
}

/// The weighted sum `S_p = Σ_n 2^{(p−2)n} Σ_j ℓ^p` over the family.
#[derive(Debug, Clone, Serialize)]
pub struct CrosscutSumReport {
    pub p: f64,
    pub n0: usize,
    pub depth: usize,
    pub terms: Vec<GenerationTerm>,
    /// Whether the last trailing term ratios all sit under the threshold.
    pub convergent: bool,
    pub lengths: Vec<CrosscutLength>,
}

impl CrosscutSumReport {
    /// CSV table `generation,index,length`, one row per crosscut.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,index,length\n");
        for l in &self.lengths {
            out.push_str(&format!("{},{},{:.12e}\n", l.generation, l.index, l.length));
        }
        out
    }

    /// Pretty JSON rendering of the whole report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Computes the weighted-length sum of the crosscut family of `cycles`.
pub fn crosscut_sum(
    map: &ConformalMap,
    cycles: &DyadicCycles,
    p: f64,
    samples: usize,
) -> Result<CrosscutSumReport, CrosscutError> {
    if !(1.0..2.0).contains(&p) {
        return Err(CrosscutError::BadExponent { p });
    }
    let cuts = family_crosscuts(map, cycles, samples)?;
    let mut terms: Vec<GenerationTerm> = Vec::new();
    let mut lengths = Vec::with_capacity(cuts.len());
    let mut cumulative = KahanSum::new();
    for n in cycles.family().generations() {
        let mut power_sum = KahanSum::new();
        let mut count = 0usize;
        for cut in cuts.iter().filter(|c| c.generation == n) {
            power_sum.add(cut.length.powf(p));
            lengths.push(CrosscutLength {
                generation: n,
                index: cut.index,
                length: cut.length,
            });
            count += 1;
        }
        let term = ((p - 2.0) * n as f64).exp2() * power_sum.value();
        cumulative.add(term);
        let ratio = terms.last().map(|prev: &GenerationTerm| term / prev.term);
        terms.push(GenerationTerm {
            generation: n,
            crosscuts: count,
            term,
            cumulative: cumulative.value(),
            ratio,
        });
    }
    let convergent = terms.len() > CONVERGENT_TERM_RUN
        && terms[terms.len() - CONVERGENT_TERM_RUN..]
            .iter()
            .all(|t| t.ratio.is_some_and(|r| r < CONVERGENT_TERM_RATIO));
    Ok(CrosscutSumReport {
        p,
        n0: cycles.n0(),
        depth: cycles.depth(),
        terms,
        convergent,
        lengths,
    })
}

/// Renders the domain outline and every crosscut of the family as a
/// deterministic SVG overlay, one stroke color per generation.
pub fn crosscut_overlay_svg(
    map: &ConformalMap,
    cycles: &DyadicCycles,
    samples: usize,
) -> Result<String, CrosscutError> {
    const PALETTE: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
    ];
    let outline: Vec<Complex64> = match map.target() {
        Some(domain) => domain
            .vertices()
            .iter()
            .map(|v| Complex64::new(v.x, v.y))
            .collect(),
        None => (0..=256)
            .map(|k| Complex64::from_polar(1.0, TWO_PI * k as f64 / 256.0))
            .collect(),
    };
    let cuts = family_crosscuts(map, cycles, samples)?;
    let mut scene = crate::svg::SvgScene::fitting(&outline);
    let width = 0.003 * scene.extent();
    scene.polygon(&outline, "#333333", width);
    for cut in &cuts {
        let color = PALETTE[(cut.generation - cycles.n0()) % PALETTE.len()];
        scene.polyline(&cut.polyline, color, 0.5 * width);
    }
    Ok(scene.render())
}

// ---------------------------------------------------------------------------
// Geodesic cell decomposition.
// ---------------------------------------------------------------------------

/// Affine images of a `[-1,1]` rule's nodes and weights on `[a,b]`.
fn gl_points(rule: &QuadRule, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| (mid + half * x, w * half))
        .collect()
}

/// One cell of the decomposition, in half-plane coordinates where the
/// geodesic is the unit semicircle: the polar box
/// `ρ ∈ [R_m, 1/R_m] × θ ∈ [θ_{m+1}, θ_m]`.
#[derive(Debug, Clone)]
pub struct HalfPlaneCell {
    /// Signed cell label; negative labels mirror across the imaginary axis.
    pub m: i32,
    /// Angular span `(θ_lo, θ_hi)`.
    pub theta: (f64, f64),
    /// Radial span `(R_m, 1/R_m)`.
    pub rho: (f64, f64),
    /// Corner `z_m = e^{iθ_m}` where this cell's arc meets its neighbour's.
    pub corner: Complex64,
    /// Sampled geodesic sub-arc `C_m ⊂ closure(A_m)` on the semicircle.
    pub arc: Vec<Complex64>,
    /// Euclidean area of the polar box.
    pub area: f64,
}

/// A two-sided family of polar cells hugging the geodesic between the
/// half-plane images `T(ξ1) = 1` and `T(ξ2) = −1`.
///
/// The angular scales `θ_m = π/2^m` halve toward the endpoints and the
/// radial pinch `R_m = 1 − 2^{−(m+1)}` tightens at the same rate, so the
/// cells exhaust a neighbourhood of the open geodesic while their areas
/// decrease geometrically.
#[derive(Debug, Clone)]
pub struct GeodesicCellDecomposition {
    pub xi1: Complex64,
    pub xi2: Complex64,
    pub m_max: usize,
    mobius: MobiusMap,
    cells: Vec<HalfPlaneCell>,
}

impl GeodesicCellDecomposition {
    /// Cells in label order `+1, −1, +2, −2, …`.
    pub fn cells(&self) -> &[HalfPlaneCell] {
        &self.cells
    }

    /// Cell with signed label `m`.
    pub fn cell(&self, m: i32) -> Option<&HalfPlaneCell> {
        if m == 0 || m.unsigned_abs() as usize > self.m_max {
            return None;
        }
        let base = 2 * (m.unsigned_abs() as usize - 1);
        self.cells.get(base + usize::from(m < 0))
    }

    /// Pulls a half-plane point back to the disk.
    pub fn disk_point(&self, w: Complex64) -> Complex64 {
        self.mobius.invert(w)
    }

    /// Pushes a disk point to half-plane coordinates.
    pub fn halfplane_point(&self, z: Complex64) -> Complex64 {
        self.mobius.apply(z)
    }
}

/// Builds the geodesic cell decomposition for a normalized endpoint pair:
/// `ξ1` on the open upper-right arc and `ξ2 = conj(ξ1)`, with the chord
/// gap under the `4π/(1+π²)` bound.
pub fn cell_decomposition(
    xi1: Complex64,
    xi2: Complex64,
    m_max: usize,
) -> Result<GeodesicCellDecomposition, CrosscutError> {
    if m_max == 0 || m_max > 48 {
        return Err(CrosscutError::BadDepth {
            value: m_max,
            min: 1,
            max: 48,
        });
    }
    unit_circle_point("ξ1", xi1)?;
    unit_circle_point("ξ2", xi2)?;
    let chord = (xi1 - xi2).norm();
    if chord > PREIMAGE_GAP_BOUND {
        return Err(CrosscutError::GapTooWide {
            chord,
            bound: PREIMAGE_GAP_BOUND,
        });
    }
    if (xi2 - xi1.conj()).norm() > 1e-9 {
        return Err(ConformalError::InvalidNormalization(
            "cell decomposition needs ξ2 = conj(ξ1)".into(),
        )
        .into());
    }
    let mobius = mobius_disk_to_halfplane(xi1)?;
    let mut cells = Vec::with_capacity(2 * m_max);
    for m in 1..=m_max as i32 {
        let theta_hi = PI * 0.5f64.powi(m);
        let theta_lo = PI * 0.5f64.powi(m + 1);
        let r_in = 1.0 - 0.5f64.powi(m + 1);
        let r_out = 1.0 / r_in;
        let corner = Complex64::from_polar(1.0, theta_hi);
        let arc: Vec<Complex64> = (0..CELL_ARC_SAMPLES)
            .map(|k| {
                let t = k as f64 / (CELL_ARC_SAMPLES - 1) as f64;
                Complex64::from_polar(1.0, theta_lo + t * (theta_hi - theta_lo))
            })
            .collect();
        let area = 0.5 * (r_out * r_out - r_in * r_in) * (theta_hi - theta_lo);
        let mirrored = arc.iter().map(|z| -z.conj()).collect();
        cells.push(HalfPlaneCell {
            m,
            theta: (theta_lo, theta_hi),
            rho: (r_in, r_out),
            corner,
            arc,
            area,
        });
        cells.push(HalfPlaneCell {
            m: -m,
            theta: (PI - theta_hi, PI - theta_lo),
            rho: (r_in, r_out),
            corner: -corner.conj(),
            arc: mirrored,
            area,
        });
    }
    Ok(GeodesicCellDecomposition {
        xi1,
        xi2,
        m_max,
        mobius,
        cells,
    })
}

// ---------------------------------------------------------------------------
// Gauge length bound.
// ---------------------------------------------------------------------------

/// Outcome of the gauge length bound: the crosscut length against the
/// product of the `1/φ` tail integral and the pullback integral of
/// `φ(h_𝔻(ζ, 0))` over the lens between the geodesic and the shorter
/// boundary arc.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LengthBoundReport {
    /// Euclidean crosscut length `ℓ(Γ)`.
    pub length: f64,
    /// `∫_{log2/2}^∞ ds/φ(s)`.
    pub tail_integral: f64,
    /// `∫ φ(h) |f'|² dA` over the lens, via the half-plane model.
    pub pullback_integral: f64,
    /// `ℓ(Γ)² / (tail · pullback)`.
    pub empirical_c: f64,
    /// Whether the constant sits under the policy ceiling.
    pub passes_gate: bool,
    pub m_max: usize,
}

/// Evaluates both sides of the gauge length bound for one crosscut and
/// reports the empirical constant.  `m_max` controls the dyadic quadrature
/// refinement toward the lens corners.
pub fn crosscut_length_bound_check(
    map: &ConformalMap,
    phi: &PhiSpec,
    xi1: Complex64,
    xi2: Complex64,
    m_max: usize,
) -> Result<LengthBoundReport, CrosscutError> {
    if m_max == 0 || m_max > 48 {
        return Err(CrosscutError::BadDepth {
            value: m_max,
            min: 1,
            max: 48,
        });
    }
    unit_circle_point("ξ1", xi1)?;
    unit_circle_point("ξ2", xi2)?;
    let chord = (xi1 - xi2).norm();
    if chord > PREIMAGE_GAP_BOUND {
        return Err(CrosscutError::GapTooWide {
            chord,
            bound: PREIMAGE_GAP_BOUND,
        });
    }

    let cut = crosscut(map, xi1, xi2, DEFAULT_CROSSCUT_SAMPLES)?;

    // Tail factor: fixed head quadrature, then the octave-window classifier
    // for the improper remainder.
    let head_rule = gauss_legendre(32);
    let mut tail = KahanSum::new();
    for (s, w) in gl_points(&head_rule, 0.5 * std::f64::consts::LN_2, TAIL_SPLIT) {
        tail.add(w / phi.eval(s)?);
    }
    match phi.classify_tail_integral(TAIL_SPLIT, TAIL_TOL)? {
        TailClass::Convergent { value } => tail.add(value),
        TailClass::Divergent { .. } => return Err(CrosscutError::TailDivergent),
        TailClass::Inconclusive { windows } => {
            return Err(CrosscutError::TailInconclusive { windows })
        }
    }

    // Normalize: rotate the endpoint pair symmetric about the positive real
    // axis and send the upper endpoint to the half-plane.  The lens maps to
    // the upper half unit disk, the geodesic to the unit semicircle.
    let alpha = xi1.arg();
    let mut diff = (xi2.arg() - alpha).rem_euclid(TWO_PI);
    if diff > PI {
        diff -= TWO_PI;
    }
    let half_gap = 0.5 * diff.abs();
    if half_gap < 1e-12 {
        return Err(ConformalError::CoincidentEndpoints.into());
    }
    let rotation = Complex64::from_polar(1.0, alpha + 0.5 * diff);
    let mobius = mobius_disk_to_halfplane(Complex64::from_polar(1.0, half_gap))?;
    let a = mobius.coefficient();
    let t = a.im;

    // Integrand at w = x + iy in the upper half disk, with the stable
    // hyperbolic-distance form  h = 2 ln(1+r) + ln|a+w|² − ln(4|a|y)
    // for r = |a−w|/|a+w|, and |dζ/dw|² = 4|a|²/|a+w|⁴.
    let mut pullback = KahanSum::new();
    let x_rule = gauss_legendre(8);
    let v_rule = gauss_legendre(16);
    let mut xs = vec![0.0];
    for k in 1..=(m_max + 2) as i32 {
        xs.push(1.0 - 0.5f64.powi(k));
    }
    xs.push(1.0);
    let v_panels = [(0.0, 5.0), (5.0, 10.0), (10.0, 20.0), (20.0, 40.0)];
    for side in [1.0, -1.0] {
        for panel in xs.windows(2) {
            for (xq, wx) in gl_points(&x_rule, panel[0], panel[1]) {
                let x = side * xq;
                let y_cap = (1.0 - x * x).max(0.0).sqrt();
                if y_cap == 0.0 {
                    continue;
                }
                for &(v0, v1) in &v_panels {
                    for (v, wv) in gl_points(&v_rule, v0, v1) {
                        let y = y_cap * (-v).exp();
                        let w = Complex64::new(x, y);
                        let aw2 = (a + w).norm_sqr();
                        let r = (a - w).norm() / (a + w).norm();
                        let h = 2.0 * (1.0 + r).ln() + aw2.ln() - (4.0 * t * y).ln();
                        let pull = 4.0 * t * t / (aw2 * aw2);
                        let zeta = mobius.invert(w);
                        let mut z = rotation * zeta;
                        let zn = z.norm();
                        if zn > DERIVATIVE_RADIUS_CLAMP {
                            z *= DERIVATIVE_RADIUS_CLAMP / zn;
                        }
                        let fp = map.evaluate_derivative(z)?;
                        let g = phi.eval(h)? * fp.norm_sqr() * pull;
                        // dy = y dv under y = Y e^{−v}.
                        pullback.add(wx * wv * g * y);
                    }
                }
            }
        }
    }

    let length = cut.length;
    let empirical_c = length * length / (tail.value() * pullback.value());
    Ok(LengthBoundReport {
        length,
        tail_integral: tail.value(),
        pullback_integral: pullback.value(),
        empirical_c,
        passes_gate: empirical_c.is_finite()
            && empirical_c > 0.0
            && empirical_c <= EMPIRICAL_C_GATE,
        m_max,
    })
}

// ---------------------------------------------------------------------------
// Cycle sums.
// ---------------------------------------------------------------------------

/// Squared-length sum and diameter bound for a closed cycle of boundary
/// preimages.
#[derive(Debug, Clone)]
pub struct CycleReport {
    /// Lengths of the consecutive crosscuts, wrap included.
    pub lengths: Vec<f64>,
    pub total_length: f64,
    /// `Σ ℓ_i²`.
    pub sum_squares: f64,
    /// Cauchy–Schwarz diameter bound `√(K · Σℓ²)` over the `K` crosscuts.
    pub diameter_bound: f64,
    pub crosscuts: Vec<Crosscut>,
}

/// Builds the consecutive crosscuts of a cycle `x_0, …, x_{k}` of unit
/// circle points (closing back to `x_0`) and sums their squared lengths.
/// Every consecutive chord must meet the preimage gap bound.
pub fn cycle_crosscut_sum(
    map: &ConformalMap,
    points: &[Complex64],
    samples: usize,
) -> Result<CycleReport, CrosscutError> {
    if points.len() < 2 {
        return Err(CrosscutError::CycleTooShort {
            points: points.len(),
        });
    }
    for &p in points {
        unit_circle_point("cycle point", p)?;
    }
    let k = points.len();
    for i in 0..k {
        let chord = (points[(i + 1) % k] - points[i]).norm();
        if chord > PREIMAGE_GAP_BOUND {
            return Err(CrosscutError::GapTooWide {
                chord,
                bound: PREIMAGE_GAP_BOUND,
            });
        }
    }
    let mut crosscuts = Vec::with_capacity(k);
    let mut lengths = Vec::with_capacity(k);
    let mut total = KahanSum::new();
    let mut squares = KahanSum::new();
    for i in 0..k {
        let cut = crosscut_indexed(map, points[i], points[(i + 1) % k], samples, 0, i)?;
        lengths.push(cut.length);
        total.add(cut.length);
        squares.add(cut.length * cut.length);
        crosscuts.push(cut);
    }
    let sum_squares = squares.value();
    Ok(CycleReport {
        lengths,
        total_length: total.value(),
        sum_squares,
        diameter_bound: (k as f64 * sum_squares).sqrt(),
        crosscuts,
    })
}

// ---------------------------------------------------------------------------
// Finite-depth ruled extension.
// ---------------------------------------------------------------------------

/// Energy contribution of one extension cell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellEnergy {
    pub generation: usize,
    pub index: usize,
    pub energy: f64,
}

/// Energy summary of a finite-depth extension.
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionReport {
    pub p: f64,
    pub n0: usize,
    pub depth: usize,
    /// `∫ |f'|^p dA` over the inner disk of radius `1 − 2^{−n₀}`.
    pub inner_energy: f64,
    /// Inner energy plus every cell energy.
    pub total_energy: f64,
    /// `E_p(N)` for `N = n₀..=depth`: the energy of the skeleton truncated
    /// at radius `1 − 2^{−N}`.
    pub energy_by_depth: Vec<(usize, f64)>,
}

/// One ruled cell: the parent crosscut at the band's inner radius and the
/// two-child chain at its outer radius, sampled on a shared parameter grid.
#[derive(Debug, Clone)]
struct CellPatch {
    generation: usize,
    index: usize,
    parent: Vec<Complex64>,
    chain: Vec<Complex64>,
}

/// A finite-depth extension of the map beyond its crosscut skeleton: the
/// conformal map itself inside radius `1 − 2^{−n₀}`, and on each dyadic
/// band cell the ruled interpolation between the parent crosscut and its
/// two children.  The radial patch sides collapse to the shared crosscut
/// endpoints, which are snapped to the boundary-parametrization targets so
/// that cell corners coincide bitwise across generations.
#[derive(Debug)]
pub struct RuledExtension<'a> {
    map: &'a ConformalMap,
    cycles: DyadicCycles,
    p: f64,
    inner_energy: f64,
    cells: Vec<CellPatch>,
    cell_energies: Vec<CellEnergy>,
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_cross = pi.x + (p.y - pi.y) * (pj.x - pi.x) / (pj.y - pi.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl<'a> RuledExtension<'a> {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n0(&self) -> usize {
        self.cycles.n0()
    }

    pub fn depth(&self) -> usize {
        self.cycles.depth()
    }

    pub fn cycles(&self) -> &DyadicCycles {
        &self.cycles
    }

    pub fn inner_energy(&self) -> f64 {
        self.inner_energy
    }

    pub fn cell_energies(&self) -> &[CellEnergy] {
        &self.cell_energies
    }

    fn patch(&self, generation: usize, index: usize) -> Option<&CellPatch> {
        if generation < self.cycles.n0()
            || generation >= self.cycles.depth()
            || index >= 1usize << generation
        {
            return None;
        }
        let offset = (1usize << generation) - (1usize << self.cycles.n0());
        self.cells.get(offset + index)
    }

    /// Evaluates the ruled map on cell `(generation, index)` at parametric
    /// coordinates `s ∈ [0,1]` (radial, parent to children) and `t ∈ [0,1]`
    /// (angular).  Convex-combination interpolation keeps the cell corners
    /// and the child junction exact at `s, t ∈ {0, ½, 1}`.
    pub fn evaluate_cell(
        &self,
        generation: usize,
        index: usize,
        s: f64,
        t: f64,
    ) -> Option<Complex64> {
        let patch = self.patch(generation, index)?;
        let segments = patch.parent.len() - 1;
        let u = t.clamp(0.0, 1.0) * segments as f64;
        let i = (u.floor() as usize).min(segments - 1);
        let frac = u - i as f64;
        let p = patch.parent[i] * (1.0 - frac) + patch.parent[i + 1] * frac;
        let q = patch.chain[i] * (1.0 - frac) + patch.chain[i + 1] * frac;
        Some(p * (1.0 - s.clamp(0.0, 1.0)) + q * s.clamp(0.0, 1.0))
    }

    /// Evaluates the extension at a disk point: the conformal map inside
    /// radius `1 − 2^{−n₀}`, the ruled cells on the dyadic bands, `None`
    /// outside the covered region `|z| ≤ 1 − 2^{−depth}`.
    pub fn evaluate(&self, z: Complex64) -> Result<Option<Complex64>, CrosscutError> {
        let r = z.norm();
        let r_inner = 1.0 - 0.5f64.powi(self.cycles.n0() as i32);
        let r_max = 1.0 - 0.5f64.powi(self.cycles.depth() as i32);
        if r < r_inner {
            return Ok(Some(self.map.evaluate_map(z)?));
        }
        if r > r_max {
            return Ok(None);
        }
        let n = ((-(1.0 - r).log2()).floor() as usize)
            .clamp(self.cycles.n0(), self.cycles.depth() - 1);
        let r_in = 1.0 - 0.5f64.powi(n as i32);
        let dr = 0.5f64.powi(n as i32 + 1);
        let s = ((r - r_in) / dr).clamp(0.0, 1.0);
        let mut theta = z.arg();
        if theta < 0.0 {
            theta += TWO_PI;
        }
        let cells_n = 1usize << n;
        let u = (theta / TWO_PI).min(1.0 - f64::EPSILON) * cells_n as f64;
        let j = (u.floor() as usize).min(cells_n - 1);
        let t = u - j as f64;
        Ok(self.evaluate_cell(n, j, s, t))
    }

    /// `E_p(N)` for every truncation depth `N = n₀..=depth`, derived from
    /// the per-cell energies of this one build.
    pub fn energy_by_depth(&self) -> Vec<(usize, f64)> {
        let mut out = vec![(self.cycles.n0(), self.inner_energy)];
        let mut acc = KahanSum::new();
        acc.add(self.inner_energy);
        for n in self.cycles.n0()..self.cycles.depth() {
            for e in self
                .cell_energies
                .iter()
                .filter(|e| e.generation == n)
            {
                acc.add(e.energy);
            }
            out.push((n + 1, acc.value()));
        }
        out
    }

    /// Full-depth energy `E_p(depth)`.
    pub fn total_energy(&self) -> f64 {
        self.energy_by_depth().last().expect("nonempty").1
    }

    /// Serializable summary.
    pub fn report(&self) -> ExtensionReport {
        let by_depth = self.energy_by_depth();
        ExtensionReport {
            p: self.p,
            n0: self.cycles.n0(),
            depth: self.cycles.depth(),
            inner_energy: self.inner_energy,
            total_energy: by_depth.last().expect("nonempty").1,
            energy_by_depth: by_depth,
        }
    }
}

/// Energy of one ruled cell by per-segment Gauss quadrature of the
/// operator norm of the Cartesian Jacobian.
fn cell_energy(patch: &CellPatch, p: f64) -> f64 {
    let segments = patch.parent.len() - 1;
    let n = patch.generation;
    let r_in = 1.0 - 0.5f64.powi(n as i32);
    let dr = 0.5f64.powi(n as i32 + 1);
    let theta_lo = TWO_PI * patch.index as f64 / (1u64 << n) as f64;
    let dtheta = TWO_PI / (1u64 << n) as f64;
    let rule = gauss_legendre(2);
    let s_points = gl_points(&rule, 0.0, 1.0);
    let mut acc = KahanSum::new();
    for i in 0..segments {
        let dp = (patch.parent[i + 1] - patch.parent[i]) * segments as f64;
        let dq = (patch.chain[i + 1] - patch.chain[i]) * segments as f64;
        for (tq, wt) in gl_points(&rule, i as f64 / segments as f64, (i + 1) as f64 / segments as f64)
        {
            let frac = tq * segments as f64 - i as f64;
            let pv = patch.parent[i] * (1.0 - frac) + patch.parent[i + 1] * frac;
            let qv = patch.chain[i] * (1.0 - frac) + patch.chain[i + 1] * frac;
            for &(sq, ws) in &s_points {
                let phi_r = (qv - pv) / dr;
                let phi_t = (dp * (1.0 - sq) + dq * sq) / dtheta;
                let r = r_in + sq * dr;
                let theta = theta_lo + tq * dtheta;
                let (sin_t, cos_t) = theta.sin_cos();
                let phi_x = phi_r * cos_t - phi_t * (sin_t / r);
                let phi_y = phi_r * sin_t + phi_t * (cos_t / r);
                let frob2 = phi_x.norm_sqr() + phi_y.norm_sqr();
                let det = (phi_x.conj() * phi_y).im;
                let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0);
                let op_norm = (0.5 * (frob2 + disc.sqrt())).sqrt();
                acc.add(wt * ws * op_norm.powf(p) * r * dr * dtheta);
            }
        }
    }
    acc.value()
}

/// Direct quadrature of `∫ |f'|^p dA` over the disk of radius `1 − 2^{−n}`:
/// dyadic radial panels toward the rim (where corner singularities of
/// polygon maps concentrate) and angular midpoints refined with `n`.
pub fn conformal_disk_energy(
    map: &ConformalMap,
    n: usize,
    p: f64,
) -> Result<f64, CrosscutError> {
    if n == 0 || n > MAX_GENERATION_DEPTH {
        return Err(CrosscutError::BadDepth {
            value: n,
            min: 1,
            max: MAX_GENERATION_DEPTH,
        });
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(CrosscutError::BadExponent { p });
    }
    let radial = gauss_legendre(16);
    let angular = 128usize.max(1 << (n.min(8) + 2));
    let mut breaks = vec![0.0, 0.5];
    for k in 1..n as i32 {
        breaks.push(1.0 - 0.5f64.powi(k + 1));
    }
    let mut acc = KahanSum::new();
    for panel in breaks.windows(2) {
        for (r, wr) in gl_points(&radial, panel[0], panel[1]) {
            for i in 0..angular {
                let theta = TWO_PI * (i as f64 + 0.5) / angular as f64;
                let z = Complex64::from_polar(r, theta);
                let fp = map.evaluate_derivative(z)?;
                acc.add(wr * (TWO_PI / angular as f64) * fp.norm().powf(p) * r);
            }
        }
    }
    Ok(acc.value())
}

/// Audits the ruled cells against each other: interior samples of one cell
/// must not land inside another cell's quadrilateral.  The inner conformal
/// region is not part of the audit — geodesics dip below their own dyadic
/// band, so the skeleton legitimately overhangs it.
fn audit_cell_overlap(cells: &[CellPatch]) -> Result<(), CrosscutError> {
    let polys: Vec<Vec<Point>> = cells
        .iter()
        .map(|c| {
            let mut poly: Vec<Point> = c
                .parent
                .iter()
                .map(|z| Point { x: z.re, y: z.im })
                .collect();
            poly.extend(
                c.chain
                    .iter()
                    .rev()
                    .skip(1)
                    .take(c.chain.len() - 2)
                    .map(|z| Point { x: z.re, y: z.im }),
            );
            poly
        })
        .collect();
    let boxes: Vec<(f64, f64, f64, f64)> = polys
        .iter()
        .map(|poly| {
            let mut b = (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            );
            for p in poly {
                b = (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y));
            }
            b
        })
        .collect();
    let knots = [0.35, 0.65];
    for (ai, cell) in cells.iter().enumerate() {
        let mut samples = Vec::with_capacity(4);
        let segments = cell.parent.len() - 1;
        for &s in &knots {
            for &t in &knots {
                let u = t * segments as f64;
                let i = (u.floor() as usize).min(segments - 1);
                let frac = u - i as f64;
                let pv = cell.parent[i] * (1.0 - frac) + cell.parent[i + 1] * frac;
                let qv = cell.chain[i] * (1.0 - frac) + cell.chain[i + 1] * frac;
                let w = pv * (1.0 - s) + qv * s;
                samples.push(Point { x: w.re, y: w.im });
            }
        }
        for (bi, poly) in polys.iter().enumerate() {
            if ai == bi {
                continue;
            }
            let (bx, by) = (&boxes[ai], &boxes[bi]);
            if bx.2 < by.0 || by.2 < bx.0 || bx.3 < by.1 || by.3 < bx.1 {
                continue;
            }
            for &sample in &samples {
                if point_in_polygon(sample, poly) {
                    return Err(CrosscutError::OverlapDetected {
                        first: (cell.generation, cell.index),
                        second: (cells[bi].generation, cells[bi].index),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Builds the finite-depth ruled extension over the crosscut skeleton of
/// `cycles` and computes its p-energy.  Fails if any skeleton cell is
/// degenerate or if the cell-overlap audit finds an interior collision.
pub fn build_extension<'a>(
    map: &'a ConformalMap,
    cycles: &DyadicCycles,
    p: f64,
) -> Result<RuledExtension<'a>, CrosscutError> {
    if !(1.0..2.0).contains(&p) {
        return Err(CrosscutError::BadExponent { p });
    }
    if cycles.depth() <= cycles.n0() {
        return Err(CrosscutError::BadDepth {
            value: cycles.depth(),
            min: cycles.n0() + 1,
            max: MAX_GENERATION_DEPTH,
        });
    }

    // Snapped skeleton: one polyline per family crosscut, endpoints
    // replaced by the exact parametrization targets.
    let mut skeleton: Vec<Vec<Complex64>> = Vec::new();
    for n in cycles.family().generations() {
        for j in 0..1usize << n {
            let xi1 = cycles.xi_point(n, j);
            let xi2 = cycles.xi_point(n, j + 1);
            if (xi2 - xi1).norm() < DEGENERATE_CHORD {
                return Err(CrosscutError::CellDegenerate {
                    generation: n,
                    index: j,
                });
            }
            let cut = crosscut_indexed(map, xi1, xi2, EXTENSION_SAMPLES, n, j)?;
            let mut polyline = cut.polyline;
            *polyline.first_mut().expect("nonempty") = cycles.target(n, j);
            *polyline.last_mut().expect("nonempty") = cycles.target(n, j + 1);
            skeleton.push(polyline);
        }
    }
    let offset = |n: usize| (1usize << n) - (1usize << cycles.n0());

    let mut cells = Vec::new();
    for n in cycles.n0()..cycles.depth() {
        for j in 0..1usize << n {
            let parent = skeleton[offset(n) + j].clone();
            let left = &skeleton[offset(n + 1) + 2 * j];
            let right = &skeleton[offset(n + 1) + 2 * j + 1];
            let mut chain: Vec<Complex64> = left.iter().step_by(2).copied().collect();
            chain.extend(right.iter().step_by(2).skip(1));
            debug_assert_eq!(chain.len(), parent.len());
            cells.push(CellPatch {
                generation: n,
                index: j,
                parent,
                chain,
            });
        }
    }

    audit_cell_overlap(&cells)?;

    let cell_energies: Vec<CellEnergy> = cells
        .iter()
        .map(|c| CellEnergy {
            generation: c.generation,
            index: c.index,
            energy: cell_energy(c, p),
        })
        .collect();
    let inner_energy = conformal_disk_energy(map, cycles.n0(), p)?;

    Ok(RuledExtension {
        map,
        cycles: cycles.clone(),
        p,
        inner_energy,
        cells,
        cell_energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::geodesic_length_for_gap;
    use crate::geometry::internal_distance;
    use proptest::prelude::*;

    fn unit(theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, theta)
    }

    fn chord_for_gap(delta: f64) -> f64 {
        2.0 * (0.5 * delta).sin()
    }

    fn identity_cycles(depth: usize) -> (ConformalMap, DyadicCycles) {
        let map = ConformalMap::disk_identity();
        let param = BoundaryParametrization::own_trace(&map, 1024).expect("trace");
        let cycles = build_dyadic_cycles(&map, &param, depth).expect("cycles");
        (map, cycles)
    }

    #[test]
    fn gap_bound_constant_matches_the_closed_form() {
        assert!((PREIMAGE_GAP_BOUND - 1.156_101_928_888_945).abs() < 1e-15);
    }

    #[test]
    fn dyadic_family_axioms_hold_exactly() {
        let family = DyadicFamily { n0: 1, depth: 6 };
        for n in family.generations() {
            let arcs: Vec<DyadicArc> = family.arcs(n).collect();
            assert_eq!(arcs.len(), 1 << n);
            let width = 0.5f64.powi(n as i32);
            assert_eq!(arcs[0].fraction_span().0, 0.0);
            assert_eq!(arcs.last().unwrap().fraction_span().1, 1.0);
            for (j, arc) in arcs.iter().enumerate() {
                let (a, b) = arc.fraction_span();
                assert_eq!(b - a, width);
                if j + 1 < arcs.len() {
                    assert_eq!(b, arcs[j + 1].fraction_span().0);
                }
                let (left, right) = arc.children();
                assert_eq!(left.fraction_span().0, a);
                assert_eq!(left.fraction_span().1, right.fraction_span().0);
                assert_eq!(right.fraction_span().1, b);
            }
        }
    }

    #[test]
    fn own_trace_cycles_find_the_starting_generation() {
        let (map, cycles) = identity_cycles(6);
        assert_eq!(cycles.n0(), 3);
        assert_eq!(cycles.depth(), 6);
        for n in cycles.family().generations() {
            for (j, &xi) in cycles.xi(n).iter().enumerate() {
                let expected = TWO_PI * (j as f64 / (1u64 << n) as f64);
                assert!(
                    (xi - expected).abs() < 1e-9,
                    "generation {n} index {j}: {xi} vs {expected}"
                );
            }
        }
        assert!((cycles.max_gap(3) - 0.765_366_864_730_179_5).abs() < 1e-9);
        for n in cycles.n0()..cycles.depth() {
            for j in 0..1usize << n {
                assert_eq!(cycles.xi(n)[j], cycles.xi(n + 1)[2 * j]);
            }
        }
        let param = BoundaryParametrization::own_trace(&map, 1024).unwrap();
        match build_dyadic_cycles(&map, &param, 2) {
            Err(CrosscutError::NoValidN0 { depth: 2, max_gap }) => {
                assert!((max_gap - 2.0f64.sqrt()).abs() < 1e-9);
            }
            other => panic!("expected NoValidN0, got {other:?}"),
        }
    }

    #[test]
    fn nonmonotone_inputs_are_rejected() {
        let thetas = vec![0.0, 0.5, 0.4, 1.0, 2.0, 3.0, 4.0, 5.0];
        let points: Vec<Complex64> = thetas.iter().map(|&t| unit(t)).collect();
        match BoundaryParametrization::from_table(thetas, points) {
            Err(CrosscutError::NonMonotoneParametrization { index: 2 }) => {}
            other => panic!("expected monotonicity failure, got {other:?}"),
        }

        let map = ConformalMap::disk_identity();
        let n = 64;
        let thetas: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
        let points: Vec<Complex64> = thetas.iter().map(|&t| unit(-t)).collect();
        let param = BoundaryParametrization::from_table(thetas, points).unwrap();
        match build_dyadic_cycles(&map, &param, 3) {
            Err(CrosscutError::NonMonotoneParametrization { .. }) => {}
            other => panic!("expected orientation rejection, got {other:?}"),
        }
    }

    #[test]
    fn reparametrized_trace_recovers_the_twist() {
        let map = ConformalMap::disk_identity();
        let n = 512;
        let thetas: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
        let points: Vec<Complex64> = thetas
            .iter()
            .map(|&t| unit(t + 0.3 * t.sin()))
            .collect();
        let param = BoundaryParametrization::from_table(thetas, points).unwrap();
        let cycles = build_dyadic_cycles(&map, &param, 4).unwrap();
        assert_eq!(cycles.n0(), 3);
        for gen in cycles.family().generations() {
            for (j, &xi) in cycles.xi(gen).iter().enumerate() {
                let theta = TWO_PI * j as f64 / (1u64 << gen) as f64;
                let expected = theta + 0.3 * theta.sin();
                assert!(
                    (xi - expected).abs() < 1e-5,
                    "generation {gen} index {j}: {xi} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let map = ConformalMap::disk_identity();
        let param = BoundaryParametrization::own_trace(&map, 64).unwrap();
        assert!(matches!(
            build_dyadic_cycles(&map, &param, 0),
            Err(CrosscutError::BadDepth { .. })
        ));
        assert!(matches!(
            build_dyadic_cycles(&map, &param, MAX_GENERATION_DEPTH + 1),
            Err(CrosscutError::BadDepth { .. })
        ));
        assert!(matches!(
            BoundaryParametrization::own_trace(&map, 4),
            Err(CrosscutError::BadSamples { .. })
        ));
        let cycles = build_dyadic_cycles(&map, &param, 4).unwrap();
        assert!(matches!(
            crosscut_sum(&map, &cycles, 0.99, 33),
            Err(CrosscutError::BadExponent { .. })
        ));
        assert!(matches!(
            crosscut_sum(&map, &cycles, 2.0, 33),
            Err(CrosscutError::BadExponent { .. })
        ));
        assert!(matches!(
            crosscut(&map, unit(0.0), unit(1.0), 3),
            Err(CrosscutError::BadSamples { .. })
        ));
        assert!(matches!(
            crosscut(&map, Complex64::new(0.5, 0.0), unit(1.0), 33),
            Err(CrosscutError::Conformal(_))
        ));
        assert!(matches!(
            cycle_crosscut_sum(&map, &[unit(0.0)], 17),
            Err(CrosscutError::CycleTooShort { points: 1 })
        ));
        assert!(matches!(
            build_extension(&map, &cycles, 0.5),
            Err(CrosscutError::BadExponent { .. })
        ));
    }

    #[test]
    fn identity_antipodal_crosscut_is_a_diameter() {
        let map = ConformalMap::disk_identity();
        let cut = crosscut(&map, unit(0.0), unit(PI), 65).unwrap();
        assert_eq!(cut.polyline.len(), 129);
        assert!((cut.length - 2.0).abs() < 1e-6);
        assert!((cut.endpoints.0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((cut.endpoints.1 - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!(cut.refinement.abs() < 1e-9);
    }

    #[test]
    fn crosscut_length_sits_between_the_exact_envelopes() {
        let map = ConformalMap::disk_identity();
        for (sigma, delta) in [(0.3, PI / 4.0), (1.2, PI / 2.0), (2.5, 2.0), (4.0, 3.0)] {
            let cut = crosscut(&map, unit(sigma), unit(sigma + delta), 129).unwrap();
            let lo = chord_for_gap(delta);
            let hi = geodesic_length_for_gap(delta);
            assert!(cut.length >= lo * (1.0 - 1e-9), "gap {delta}");
            assert!(cut.length <= hi * (1.0 + 1e-9), "gap {delta}");
            assert!(
                (cut.length - hi).abs() <= 1e-4 * hi,
                "gap {delta}: {} vs {hi}",
                cut.length
            );
            assert!(cut.refinement >= -1e-12 && cut.refinement < 5e-3);
        }
    }

    #[test]
    fn square_crosscut_stays_inside_the_square() {
        let map = ConformalMap::disk_to_square();
        let cut = crosscut(&map, unit(PI / 4.0), unit(3.0 * PI / 4.0), 65).unwrap();
        let domain = map.target().expect("square target");
        for z in &cut.polyline {
            assert!(
                domain.contains_closure(Point { x: z.re, y: z.im }),
                "escaped at {z}"
            );
        }
        assert!((cut.endpoints.0 - Complex64::new(0.5, 0.5)).norm() < 5e-3);
        assert!((cut.endpoints.1 - Complex64::new(-0.5, 0.5)).norm() < 5e-3);
        let mid = cut.polyline[cut.polyline.len() / 2];
        assert!(mid.im < 0.5 - 1e-3 && mid.im > -0.5);
    }

    #[test]
    fn identity_sum_terms_match_the_exact_envelopes() {
        let (map, cycles) = identity_cycles(9);
        let report = crosscut_sum(&map, &cycles, 1.0, 65).unwrap();
        assert_eq!(report.n0, 3);
        assert_eq!(report.terms.len(), 7);
        for term in &report.terms {
            let delta = TWO_PI / (1u64 << term.generation) as f64;
            assert_eq!(term.crosscuts, 1 << term.generation);
            // p = 1 makes T_n the common length of this generation's cuts.
            assert!(term.term >= chord_for_gap(delta) * (1.0 - 1e-9));
            assert!(term.term <= geodesic_length_for_gap(delta) * (1.0 + 1e-9));
        }
        assert!(report.convergent);
        let last_ratio = report.terms.last().unwrap().ratio.unwrap();
        assert!(
            (last_ratio - 0.5).abs() < 0.05,
            "trailing ratio {last_ratio}"
        );
        let total: f64 = report.terms.iter().map(|t| t.term).sum();
        assert!((report.terms.last().unwrap().cumulative - total).abs() < 1e-12);
        assert_eq!(report.lengths.len(), (1 << 10) - (1 << 3));
    }

    #[test]
    fn sum_ratio_halves_for_every_exponent() {
        let (map, cycles) = identity_cycles(8);
        let report = crosscut_sum(&map, &cycles, 1.5, 65).unwrap();
        assert!(report.convergent);
        let last_ratio = report.terms.last().unwrap().ratio.unwrap();
        assert!(
            (last_ratio - 0.5).abs() < 0.05,
            "trailing ratio {last_ratio}"
        );
    }

    #[test]
    fn family_crosscuts_pass_the_disjointness_audit() {
        let (map, cycles) = identity_cycles(6);
        let cuts = family_crosscuts(&map, &cycles, 33).unwrap();
        assert_eq!(cuts.len(), (1 << 7) - (1 << 3));
        audit_crosscut_disjointness(&cuts).expect("identity family is disjoint");

        let square = ConformalMap::disk_to_square();
        let param = BoundaryParametrization::own_trace(&square, 512).unwrap();
        let cycles = build_dyadic_cycles(&square, &param, 5).unwrap();
        let cuts = family_crosscuts(&square, &cycles, 33).unwrap();
        audit_crosscut_disjointness(&cuts).expect("square family is disjoint");
    }

    #[test]
    fn transversal_crossings_fail_the_audit() {
        let segment = |a: Complex64, b: Complex64, index: usize| Crosscut {
            generation: 0,
            index,
            endpoints: (a, b),
            polyline: vec![a, b],
            length: (b - a).norm(),
            refinement: 0.0,
        };
        let diag = segment(Complex64::new(-1.0, -1.0), Complex64::new(1.0, 1.0), 0);
        let anti = segment(Complex64::new(-1.0, 1.0), Complex64::new(1.0, -1.0), 1);
        match audit_crosscut_disjointness(&[diag, anti]) {
            Err(CrosscutError::OverlapDetected { first, second }) => {
                assert_eq!(first, (0, 0));
                assert_eq!(second, (0, 1));
            }
            other => panic!("expected crossing, got {other:?}"),
        }
        // A shared endpoint touches without crossing.
        let left = segment(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 0);
        let up = segment(Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), 1);
        audit_crosscut_disjointness(&[left, up]).expect("touching is not crossing");
    }

    #[test]
    fn cell_decomposition_matches_the_stated_geometry() {
        let xi1 = unit(PI / 8.0);
        let dec = cell_decomposition(xi1, xi1.conj(), 6).unwrap();
        assert_eq!(dec.cells().len(), 12);
        let first = dec.cell(1).unwrap();
        assert_eq!(first.theta.1, PI * 0.5);
        assert_eq!(first.theta.0, PI * 0.25);
        assert_eq!(first.rho.0, 0.75);
        assert_eq!(first.rho.1, 1.0 / 0.75);
        for m in 1..=6i32 {
            let plus = dec.cell(m).unwrap();
            let minus = dec.cell(-m).unwrap();
            assert!(plus.area > 0.0);
            assert_eq!(minus.area, plus.area);
            if m < 6 {
                assert!(dec.cell(m + 1).unwrap().area < plus.area);
            }
            assert_eq!(minus.corner, -plus.corner.conj());
            for (a, b) in plus.arc.iter().zip(&minus.arc) {
                assert_eq!(*b, -a.conj());
            }
            assert!(plus.theta.0 < plus.theta.1);
            assert_eq!(plus.theta.0, plus.theta.1 * 0.5);
            for z in &plus.arc {
                assert!((z.norm() - 1.0).abs() < 1e-12);
                let angle = z.arg();
                assert!(angle >= plus.theta.0 - 1e-12 && angle <= plus.theta.1 + 1e-12);
            }
        }
        assert!(dec.cell(0).is_none());
        assert!(dec.cell(7).is_none());

        let w = Complex64::new(0.0, 1.0);
        let z = dec.disk_point(w);
        assert!(z.norm() < 1.0);
        assert!((dec.halfplane_point(z) - w).norm() < 1e-12);

        assert!(matches!(
            cell_decomposition(unit(1.2), unit(-1.2), 4),
            Err(CrosscutError::GapTooWide { .. })
        ));
        assert!(matches!(
            cell_decomposition(xi1, unit(-PI / 8.0 - 0.1), 4),
            Err(CrosscutError::Conformal(_))
        ));
        assert!(matches!(
            cell_decomposition(xi1, xi1.conj(), 0),
            Err(CrosscutError::BadDepth { .. })
        ));
    }

    #[test]
    fn length_bound_constant_is_stable() {
        let map = ConformalMap::disk_identity();
        let phi = PhiSpec::alpha_log(2.0).unwrap();
        let r8 = crosscut_length_bound_check(&map, &phi, unit(PI / 8.0), unit(-PI / 8.0), 8)
            .unwrap();
        let r16 = crosscut_length_bound_check(&map, &phi, unit(PI / 8.0), unit(-PI / 8.0), 16)
            .unwrap();
        let tail_oracle = 1.914_197_932_618_617_6;
        assert!(
            (r8.tail_integral - tail_oracle).abs() / tail_oracle < 0.01,
            "tail {}",
            r8.tail_integral
        );
        assert!(
            (r8.pullback_integral - 1.750_597_361_2).abs() < 1e-6,
            "pullback {}",
            r8.pullback_integral
        );
        assert!((r8.empirical_c - 0.284_248).abs() < 3e-3, "c {}", r8.empirical_c);
        assert!(r8.passes_gate && r8.empirical_c > 0.0);
        assert!(((r8.empirical_c - r16.empirical_c) / r16.empirical_c).abs() < 0.10);
        assert_eq!(r8.m_max, 8);
    }

    #[test]
    fn length_bound_stays_bounded_for_shrinking_gaps() {
        let map = ConformalMap::disk_identity();
        let phi = PhiSpec::alpha_log(2.0).unwrap();
        let mut previous = f64::INFINITY;
        for n in 3..=6i32 {
            let half = PI * 0.5f64.powi(n);
            let report =
                crosscut_length_bound_check(&map, &phi, unit(half), unit(-half), 8).unwrap();
            assert!(report.passes_gate, "n = {n}");
            assert!(report.empirical_c > 0.0 && report.empirical_c <= EMPIRICAL_C_GATE);
            assert!(report.empirical_c < previous, "constant grew at n = {n}");
            previous = report.empirical_c;
        }
        assert!((previous - 0.154_371).abs() < 3e-3, "c(6) = {previous}");
    }

    #[test]
    fn alpha_one_tail_is_divergent() {
        let map = ConformalMap::disk_identity();
        let phi = PhiSpec::alpha_log(1.0).unwrap();
        assert!(matches!(
            crosscut_length_bound_check(&map, &phi, unit(PI / 8.0), unit(-PI / 8.0), 4),
            Err(CrosscutError::TailDivergent)
        ));
    }

    #[test]
    fn eight_cycle_sum_obeys_the_exact_envelopes() {
        let map = ConformalMap::disk_identity();
        let points: Vec<Complex64> =
            (0..8).map(|k| unit(TWO_PI * k as f64 / 8.0)).collect();
        let report = cycle_crosscut_sum(&map, &points, 65).unwrap();
        assert_eq!(report.lengths.len(), 8);
        assert!(report.sum_squares >= 4.686_291_501_015_24 * (1.0 - 1e-9));
        assert!(report.sum_squares <= 7.620_103_821_206_51 * (1.0 + 1e-9));
        for &l in &report.lengths {
            assert!((l - report.lengths[0]).abs() < 1e-9);
        }
        assert!((report.diameter_bound - (8.0 * report.sum_squares).sqrt()).abs() < 1e-12);
        for start in 0..8 {
            for span in 1..=8usize {
                let chain: f64 = (0..span).map(|k| report.lengths[(start + k) % 8]).sum();
                assert!(chain * chain <= 8.0 * report.sum_squares * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn two_cycle_with_wide_gap_rejected() {
        let map = ConformalMap::disk_identity();
        match cycle_crosscut_sum(&map, &[unit(0.0), unit(2.0)], 33) {
            Err(CrosscutError::GapTooWide { chord, bound }) => {
                assert!((chord - 2.0 * 1.0f64.sin()).abs() < 1e-12);
                assert!((bound - PREIMAGE_GAP_BOUND).abs() < 1e-15);
            }
            other => panic!("expected GapTooWide, got {other:?}"),
        }
    }

    #[test]
    fn square_cycle_diameter_bound_validates_against_the_grid() {
        let map = ConformalMap::disk_to_square();
        let points: Vec<Complex64> =
            (0..8).map(|k| unit(TWO_PI * k as f64 / 8.0)).collect();
        let report = cycle_crosscut_sum(&map, &points, 33).unwrap();
        let f0 = report.crosscuts[0].endpoints.0;
        let f4 = report.crosscuts[4].endpoints.0;
        assert!((f0 - Complex64::new(0.5, 0.0)).norm() < 1e-3);
        assert!((f4 - Complex64::new(-0.5, 0.0)).norm() < 1e-3);
        let chain: f64 = report.lengths[..4].iter().sum();
        let domain = map.target().unwrap();
        let d_grid = internal_distance(
            domain,
            Point { x: f0.re, y: f0.im },
            Point { x: f4.re, y: f4.im },
            0.02,
        )
        .unwrap();
        // The four crosscuts chain f(x0) to f(x4) inside the square, so the
        // grid estimate (with its sec(π/8) + O(pitch) overshoot) stays under.
        assert!(d_grid <= chain * 1.09 + 0.06, "grid {d_grid} vs chain {chain}");
        assert!(d_grid >= 0.95);
    }

    #[test]
    fn extension_energy_carries_the_ruled_bulge() {
        let (map, cycles) = identity_cycles(8);
        let ext = build_extension(&map, &cycles, 1.0).unwrap();
        let energy = ext.total_energy();
        // Independent simulation of the same skeleton freezes the value;
        // the ruled patches overhang their dyadic bands, so the energy
        // exceeds the conformal energy by a definite factor.
        assert!(
            (energy - 4.240_185).abs() / 4.240_185 < 5e-3,
            "energy {energy}"
        );
        let conformal = conformal_disk_energy(&map, 8, 1.0).unwrap();
        assert!(
            (conformal - PI * (1.0 - 0.5f64.powi(8)).powi(2)).abs() < 1e-6,
            "conformal {conformal}"
        );
        let ratio = energy / conformal;
        assert!(ratio > 1.30 && ratio < 1.42, "bulge ratio {ratio}");

        assert!((ext.inner_energy() - PI * (7.0 / 8.0f64).powi(2)).abs() < 1e-9);
        let by_depth = ext.energy_by_depth();
        assert_eq!(by_depth[0], (3, ext.inner_energy()));
        for pair in by_depth.windows(2) {
            assert!(pair[1].1 >= pair[0].1, "energy decreased: {pair:?}");
        }
        let e7 = by_depth[by_depth.len() - 2].1;
        let e8 = by_depth[by_depth.len() - 1].1;
        assert!((e8 - e7) / e7 < 0.02, "increment {}", (e8 - e7) / e7);
    }

    #[test]
    fn square_extension_energy_stabilizes() {
        let map = ConformalMap::disk_to_square();
        let param = BoundaryParametrization::own_trace(&map, 1024).unwrap();
        let cycles = build_dyadic_cycles(&map, &param, 10).unwrap();
        let ext = build_extension(&map, &cycles, 1.0).unwrap();
        let by_depth = ext.energy_by_depth();
        for pair in by_depth.windows(2) {
            assert!(pair[1].1 >= pair[0].1 - 1e-12);
            if pair[1].0 >= 9 {
                let increment = (pair[1].1 - pair[0].1) / pair[0].1;
                assert!(increment < 0.02, "N = {}: increment {increment}", pair[1].0);
            }
        }
        // A shallower build reproduces the derived truncation exactly.
        let shallow_cycles = build_dyadic_cycles(&map, &param, 5).unwrap();
        let shallow = build_extension(&map, &shallow_cycles, 1.0).unwrap();
        let derived = by_depth.iter().find(|entry| entry.0 == 5).unwrap().1;
        assert!(
            (shallow.total_energy() - derived).abs() < 1e-9,
            "{} vs {derived}",
            shallow.total_energy()
        );
    }

    #[test]
    fn extension_corners_interpolate_exactly() {
        let (map, cycles) = identity_cycles(6);
        let ext = build_extension(&map, &cycles, 1.0).unwrap();
        for n in cycles.n0()..cycles.depth() {
            for j in [0usize, 1, (1 << n) - 1] {
                assert_eq!(
                    ext.evaluate_cell(n, j, 0.0, 0.0),
                    Some(cycles.target(n, j))
                );
                assert_eq!(
                    ext.evaluate_cell(n, j, 0.0, 1.0),
                    Some(cycles.target(n, j + 1))
                );
                assert_eq!(
                    ext.evaluate_cell(n, j, 1.0, 0.0),
                    Some(cycles.target(n + 1, 2 * j))
                );
                assert_eq!(
                    ext.evaluate_cell(n, j, 1.0, 0.5),
                    Some(cycles.target(n + 1, 2 * j + 1))
                );
                assert_eq!(
                    ext.evaluate_cell(n, j, 1.0, 1.0),
                    Some(cycles.target(n + 1, 2 * j + 2))
                );
            }
        }
        assert!(ext.evaluate_cell(2, 0, 0.5, 0.5).is_none());
        assert!(ext.evaluate_cell(6, 0, 0.5, 0.5).is_none());

        let core = Complex64::new(0.3, 0.1);
        let inner = ext.evaluate(core).unwrap().unwrap();
        assert!((inner - core).norm() < 1e-15);
        assert!(ext.evaluate(unit(1.0) * 0.999).unwrap().is_none());
        let banded = ext.evaluate(Complex64::from_polar(0.9, 1.0)).unwrap().unwrap();
        assert!(banded.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn degenerate_parametrization_detected() {
        let map = ConformalMap::disk_identity();
        let n = 16;
        let thetas: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
        let mut points: Vec<Complex64> = thetas.iter().map(|&t| unit(t)).collect();
        points[6] = points[5];
        let param = BoundaryParametrization::from_table(thetas, points).unwrap();
        let cycles = build_dyadic_cycles(&map, &param, 4).unwrap();
        assert_eq!(cycles.n0(), 3);
        match family_crosscuts(&map, &cycles, 17) {
            Err(CrosscutError::CellDegenerate {
                generation: 4,
                index: 5,
            }) => {}
            other => panic!("expected degenerate cell, got {other:?}"),
        }
        assert!(matches!(
            build_extension(&map, &cycles, 1.0),
            Err(CrosscutError::CellDegenerate { .. })
        ));
    }

    #[test]
    fn artifacts_are_deterministic() {
        let map = ConformalMap::disk_identity();
        let param = BoundaryParametrization::own_trace(&map, 256).unwrap();
        let cycles = build_dyadic_cycles(&map, &param, 5).unwrap();
        let first = crosscut_sum(&map, &cycles, 1.0, 33).unwrap();
        let second = crosscut_sum(&map, &cycles, 1.0, 33).unwrap();
        assert_eq!(first.to_csv(), second.to_csv());
        assert_eq!(first.to_json(), second.to_json());
        let csv = first.to_csv();
        assert!(csv.starts_with("generation,index,length\n"));
        assert_eq!(csv.lines().count(), 1 + (1 << 6) - (1 << 3));
        let svg1 = crosscut_overlay_svg(&map, &cycles, 17).unwrap();
        let svg2 = crosscut_overlay_svg(&map, &cycles, 17).unwrap();
        assert_eq!(svg1, svg2);
        assert!(svg1.contains("<svg") && svg1.contains("polyline"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn crosscut_lengths_always_sit_in_the_envelopes(
            sigma in 0.0..TWO_PI,
            delta in 0.05..3.0,
        ) {
            let map = ConformalMap::disk_identity();
            let cut = crosscut(&map, unit(sigma), unit(sigma + delta), 65).unwrap();
            prop_assert!(cut.length >= chord_for_gap(delta) * (1.0 - 1e-9));
            prop_assert!(cut.length <= geodesic_length_for_gap(delta) * (1.0 + 1e-9));
            prop_assert!(cut.refinement >= -1e-12 && cut.refinement < 5e-3);
        }
    }
}
