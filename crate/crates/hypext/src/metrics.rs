//! Hyperbolic and quasi-hyperbolic distances on polygonal Jordan domains,
//! with comparability diagnostics between the two.
//!
//! The hyperbolic distance lives on the unit disk in closed form,
//! `h(z₁,z₂) = 2·artanh(|z₁−z₂| / |1−z̄₁z₂|)`, and is pulled back to a
//! domain through a conformal map by inverting the map numerically
//! (multistart Newton, nine seeds from a coarse grid).  The
//! quasi-hyperbolic distance integrates `1/dist(z,∂Ω)` along shortest
//! paths of a dense grid graph with trapezoidal (endpoint-average) edge
//! weights.
//!
//! Design points:
//!
//! * Distances are symmetric under argument swap, exactly: the disk
//!   formula is algebraically symmetric at the floating-point level, and
//!   the grid metric canonicalizes the endpoint order before running the
//!   shortest-path search.
//! * The comparability gates `1/4 ≤ h/k ≤ 4` are a stated numerical
//!   policy: the continuum constants for simply connected domains are
//!   `1/2 ≤ h/k ≤ 2`, and a further factor of two absorbs grid
//!   metrication and preimage error.  [`ComparabilityReport`] records the
//!   gate verdict next to the raw statistics rather than hiding it.
//! * Map inversion favors robustness over speed: a fixed fan of coarse
//!   seeds ranked by image distance, Newton with step damping that keeps
//!   iterates strictly inside the disk, and an explicit
//!   [`MetricsError::PreimageNotFound`] carrying the best residual seen.

use crate::conformal::{hyperbolic_geodesic_disk, ConformalError, ConformalMap};
use crate::geometry::{
    internal_distance, EdgeWeight, GeometryError, GridGraph, JordanDomain, Point,
};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Errors from metric computations.
#[derive(Debug, Error)]
pub enum MetricsError {
    /// A disk-formula argument lies outside the open unit disk.
    #[error("point {0} lies outside the open unit disk")]
    OutsideDisk(Complex64),
    /// A boundary argument does not lie on the unit circle.
    #[error("point {0} does not lie on the unit circle")]
    NotOnCircle(Complex64),
    /// Multistart Newton failed to invert the map at the given point.
    #[error("no preimage found for ({}, {}) (best residual {best_residual:.3e})", target.x, target.y)]
    PreimageNotFound { target: Point, best_residual: f64 },
    /// Rejection sampling could not place enough interior points.
    #[error("interior sampling exhausted after {attempts} attempts")]
    SamplingExhausted { attempts: usize },
    /// Underlying conformal-map failure.
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    /// Underlying domain/grid failure.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One measured pair: endpoints, both metrics, and the Euclidean length
/// of the image of the connecting hyperbolic geodesic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSample {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    /// Hyperbolic distance (dimensionless).
    pub h: f64,
    /// Quasi-hyperbolic distance (dimensionless).
    pub k: f64,
    /// Euclidean length of the image of the hyperbolic geodesic.
    pub geodesic_length: f64,
    /// Grid pitch used for `k`.
    pub pitch: f64,
}

impl MetricSample {
    pub const CSV_HEADER: &'static str = "x1,y1,x2,y2,h,k,geodesic_length,pitch";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.x1, self.y1, self.x2, self.y2, self.h, self.k, self.geodesic_length, self.pitch
        )
    }
}

/// Writes samples as CSV with the standard header.
pub fn write_samples_csv<W: Write>(mut out: W, samples: &[MetricSample]) -> std::io::Result<()> {
    writeln!(out, "{}", MetricSample::CSV_HEADER)?;
    for s in samples {
        writeln!(out, "{}", s.csv_row())?;
    }
    Ok(())
}

/// Hyperbolic distance between two points of the open unit disk:
/// `2·artanh(|z₁−z₂| / |1 − z̄₁ z₂|)`.
pub fn hyperbolic_distance_disk(z1: Complex64, z2: Complex64) -> Result<f64, MetricsError> {
    if !(z1.norm() < 1.0) {
        return Err(MetricsError::OutsideDisk(z1));
    }
    if !(z2.norm() < 1.0) {
        return Err(MetricsError::OutsideDisk(z2));
    }
    let num = (z1 - z2).norm();
    let den = (Complex64::new(1.0, 0.0) - z1.conj() * z2).norm();
    Ok(2.0 * (num / den).atanh())
}

/// Hyperbolic distance between two interior points of the map's image
/// domain, by pulling both back to the disk.  Preimages are found by
/// multistart Newton with residual below `10⁻⁹ · diam(Ω)`.
pub fn hyperbolic_distance(
    map: &ConformalMap,
    w1: Point,
    w2: Point,
) -> Result<f64, MetricsError> {
    hyperbolic_distance_with_tolerance(map, w1, w2, 1e-9)
}

/// Same as [`hyperbolic_distance`] with an explicit relative residual
/// bound for the preimage Newton iteration (`residual < rel_residual ·
/// diam(Ω)`).
pub fn hyperbolic_distance_with_tolerance(
    map: &ConformalMap,
    w1: Point,
    w2: Point,
    rel_residual: f64,
) -> Result<f64, MetricsError> {
    let solver = PreimageSolver::new(map);
    let z1 = solver.invert(w1, rel_residual)?;
    let z2 = solver.invert(w2, rel_residual)?;
    hyperbolic_distance_disk(z1, z2)
}

/// Diameter of the map's image domain: target polygon bounding box when
/// available, vertex images otherwise, and the disk's own diameter 2 for
/// the identity.
fn map_diameter(map: &ConformalMap) -> f64 {
    if let Some(dom) = map.target() {
        let (lo, hi) = dom.bbox();
        return (hi - lo).norm();
    }
    let vi = map.vertex_images();
    if vi.is_empty() {
        return 2.0;
    }
    let (mut lo, mut hi) = (vi[0], vi[0]);
    for v in vi {
        lo.re = lo.re.min(v.re);
        lo.im = lo.im.min(v.im);
        hi.re = hi.re.max(v.re);
        hi.im = hi.im.max(v.im);
    }
    (hi - lo).norm()
}

/// Numerical inverse of a conformal map: coarse seed fan plus damped
/// Newton.  Built once per map so repeated inversions share the seed
/// images.
struct PreimageSolver<'a> {
    map: &'a ConformalMap,
    /// (seed point, its image), for seeds where evaluation succeeded.
    seeds: Vec<(Complex64, Complex64)>,
    diam: f64,
}

impl<'a> PreimageSolver<'a> {
    fn new(map: &'a ConformalMap) -> Self {
        let mut seeds = Vec::with_capacity(37);
        let push = |z: Complex64, seeds: &mut Vec<(Complex64, Complex64)>| {
            if let Ok(f) = map.evaluate_map(z) {
                seeds.push((z, f));
            }
        };
        push(Complex64::default(), &mut seeds);
        for &r in &[0.35, 0.65, 0.88] {
            for l in 0..12 {
                let ang = 2.0 * std::f64::consts::PI * l as f64 / 12.0;
                push(Complex64::from_polar(r, ang), &mut seeds);
            }
        }
        PreimageSolver {
            map,
            seeds,
            diam: map_diameter(map),
        }
    }

    /// Solves `f(z) = w` to `|f(z) − w| < rel_residual · diam`,
    /// trying the nine seeds closest in image distance.
    fn invert(&self, w: Point, rel_residual: f64) -> Result<Complex64, MetricsError> {
        let target: Complex64 = w.into();
        let tol = rel_residual * self.diam;
        let mut ranked: Vec<(f64, Complex64)> = self
            .seeds
            .iter()
            .map(|&(z, f)| ((f - target).norm(), z))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for &(_, seed) in ranked.iter().take(9) {
            let mut z = seed;
            for _ in 0..60 {
                let fz = match self.map.evaluate_map(z) {
                    Ok(v) => v,
                    Err(_) => break,
                };
                let resid = (fz - target).norm();
                best = best.min(resid);
                if resid < tol {
                    return Ok(z);
                }
                let dz = match self.map.evaluate_derivative(z) {
                    Ok(v) => v,
                    Err(_) => break,
                };
                if dz.norm() < 1e-300 {
                    break;
                }
                let mut step = (fz - target) / dz;
                // Keep iterates strictly inside the disk.
                let mut znew = z - step;
                let mut halved = 0;
                while znew.norm() >= 0.999_999 && halved < 40 {
                    step *= 0.5;
                    znew = z - step;
                    halved += 1;
                }
                if halved == 40 {
                    break;
                }
                z = znew;
            }
        }
        Err(MetricsError::PreimageNotFound {
            target: w,
            best_residual: best,
        })
    }
}

/// Quasi-hyperbolic distance between two points of the closed domain:
/// shortest grid path weighted by the endpoint-average of `1/dist(·,∂Ω)`.
/// The endpoint order is canonicalized so the result is exactly
/// symmetric.
pub fn quasi_hyperbolic_distance(
    domain: &JordanDomain,
    z1: Point,
    z2: Point,
    pitch: f64,
) -> Result<f64, MetricsError> {
    let graph = GridGraph::build(domain, pitch)?;
    quasi_hyperbolic_distance_on(&graph, z1, z2)
}

/// Same as [`quasi_hyperbolic_distance`] on an already-built grid, so
/// callers measuring many pairs can share the lattice.
pub fn quasi_hyperbolic_distance_on(
    graph: &GridGraph,
    z1: Point,
    z2: Point,
) -> Result<f64, MetricsError> {
    if z1 == z2 {
        return Ok(0.0);
    }
    let (a, b) = if (z1.x, z1.y) <= (z2.x, z2.y) {
        (z1, z2)
    } else {
        (z2, z1)
    };
    Ok(graph.distance(a, b, EdgeWeight::QuasiHyperbolic)?)
}

/// Points along the hyperbolic geodesic between two interior points of
/// the disk: transport `z1` to the origin by a Möbius automorphism, walk
/// the straight segment, transport back.
fn interior_geodesic(z1: Complex64, z2: Complex64, samples: usize) -> Vec<Complex64> {
    let m = (z2 - z1) / (Complex64::new(1.0, 0.0) - z1.conj() * z2);
    (0..samples)
        .map(|i| {
            let u = m * (i as f64 / (samples - 1) as f64);
            (u + z1) / (Complex64::new(1.0, 0.0) + z1.conj() * u)
        })
        .collect()
}

/// Euclidean length of the image of the hyperbolic geodesic between the
/// preimages `z1`, `z2`, as a sampled polyline.
fn image_geodesic_length(
    map: &ConformalMap,
    z1: Complex64,
    z2: Complex64,
    samples: usize,
) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    let mut prev: Option<Complex64> = None;
    for z in interior_geodesic(z1, z2, samples) {
        let f = map.evaluate_map(z)?;
        if let Some(p) = prev {
            total += (f - p).norm();
        }
        prev = Some(f);
    }
    Ok(total)
}

/// Ratio statistics of `h/k` over randomly sampled interior pairs.
#[derive(Debug, Clone)]
pub struct ComparabilityReport {
    pub samples: Vec<MetricSample>,
    pub ratio_min: f64,
    pub ratio_median: f64,
    pub ratio_max: f64,
    /// Pairs rejected as degenerate (closer than one pitch).
    pub degenerate_filtered: usize,
    pub pitch: f64,
    /// Whether every ratio fell inside the `[1/4, 4]` policy gates.
    pub within_policy_gates: bool,
}

/// Samples `sample_pairs` random interior pairs (seeded, reproducible),
/// measures both metrics on each, and reports `h/k` statistics.  Pairs
/// closer than one pitch are filtered as degenerate (the ratio would be
/// dominated by grid noise, and a coincident pair is 0/0).
pub fn comparability_report(
    map: &ConformalMap,
    domain: &JordanDomain,
    sample_pairs: usize,
    pitch: f64,
    seed: u64,
) -> Result<ComparabilityReport, MetricsError> {
    let graph = GridGraph::build(domain, pitch)?;
    let solver = PreimageSolver::new(map);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bbox();
    let clearance = 2.0 * pitch;
    let budget = 10_000 * sample_pairs.max(1);
    let mut attempts = 0usize;
    let draw = |rng: &mut ChaCha8Rng, attempts: &mut usize| -> Result<Point, MetricsError> {
        loop {
            *attempts += 1;
            if *attempts > budget {
                return Err(MetricsError::SamplingExhausted { attempts: *attempts });
            }
            let p = Point::new(
                rng.gen_range(lo.x..hi.x),
                rng.gen_range(lo.y..hi.y),
            );
            if domain.distance_to_boundary_signed(p) > clearance {
                return Ok(p);
            }
        }
    };

    let mut samples = Vec::with_capacity(sample_pairs);
    let mut degenerate = 0usize;
    while samples.len() < sample_pairs {
        let p = draw(&mut rng, &mut attempts)?;
        let q = draw(&mut rng, &mut attempts)?;
        if p.dist(q) < pitch {
            degenerate += 1;
            continue;
        }
        let z1 = solver.invert(p, 1e-9)?;
        let z2 = solver.invert(q, 1e-9)?;
        let h = hyperbolic_distance_disk(z1, z2)?;
        let k = quasi_hyperbolic_distance_on(&graph, p, q)?;
        let geodesic_length = image_geodesic_length(map, z1, z2, 48)?;
        samples.push(MetricSample {
            x1: p.x,
            y1: p.y,
            x2: q.x,
            y2: q.y,
            h,
            k,
            geodesic_length,
            pitch,
        });
    }

    let mut ratios: Vec<f64> = samples.iter().map(|s| s.h / s.k).collect();
    ratios.sort_by(f64::total_cmp);
    let ratio_min = ratios[0];
    let ratio_max = ratios[ratios.len() - 1];
    let ratio_median = ratios[ratios.len() / 2];
    let within_policy_gates = ratio_min >= 0.25 && ratio_max <= 4.0;
    Ok(ComparabilityReport {
        samples,
        ratio_min,
        ratio_median,
        ratio_max,
        degenerate_filtered: degenerate,
        pitch,
        within_policy_gates,
    })
}

/// Gehring–Hayman style diagnostic: the Euclidean length of the image of
/// the hyperbolic geodesic between two boundary points, divided by the
/// internal distance between the corresponding boundary images.  In the
/// continuum the geodesic image is a curve joining the two images, so the
/// true ratio is ≥ 1; the grid denominator may overshoot by the
/// metrication factor, so values down to `1 − 9%` are expected.
pub fn gehring_hayman_ratio(
    map: &ConformalMap,
    domain: &JordanDomain,
    xi1: Complex64,
    xi2: Complex64,
    pitch: f64,
) -> Result<f64, MetricsError> {
    for xi in [xi1, xi2] {
        if (xi.norm() - 1.0).abs() > 1e-9 {
            return Err(MetricsError::NotOnCircle(xi));
        }
    }
    let arc = hyperbolic_geodesic_disk(xi1, xi2, 1025)?;
    let mut image = Vec::with_capacity(arc.len());
    for z in arc {
        if z.norm() < 1.0 - 1e-12 {
            image.push(map.evaluate_map(z)?);
        } else {
            image.push(map.boundary_trace(z.arg())?);
        }
    }
    let mut length = 0.0;
    for w in image.windows(2) {
        length += (w[1] - w[0]).norm();
    }
    // Snap the traced endpoints onto the boundary polyline so the grid
    // attachment sees exactly-anchored boundary points.
    let snap = |c: Complex64| -> Point {
        let p: Point = c.into();
        let (station, dist) = domain.nearest_boundary_station(p);
        if dist <= 1e-6 * map_diameter(map) {
            domain.point_at_arclength(station)
        } else {
            p
        }
    };
    let p1 = snap(*image.first().expect("geodesic has samples"));
    let p2 = snap(*image.last().expect("geodesic has samples"));
    let d_internal = internal_distance(domain, p1, p2, pitch)?;
    Ok(length / d_internal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn disk_formula_reference_values() {
        // Radial integral of 2/(1−t²) from 0 to 1/2 is ln 3.
        let h = hyperbolic_distance_disk(Complex64::default(), Complex64::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(h, 3.0_f64.ln(), epsilon = 1e-14);
        let z = Complex64::new(0.3, -0.2);
        assert_eq!(hyperbolic_distance_disk(z, z).unwrap(), 0.0);
        assert!(matches!(
            hyperbolic_distance_disk(Complex64::new(1.0, 0.0), Complex64::default()),
            Err(MetricsError::OutsideDisk(_))
        ));
    }

    #[test]
    fn disk_formula_is_exactly_symmetric() {
        let pairs = [
            (Complex64::new(0.3, 0.4), Complex64::new(-0.5, 0.1)),
            (Complex64::new(0.0, 0.9), Complex64::new(0.2, -0.7)),
            (Complex64::new(-0.8, -0.1), Complex64::new(0.05, 0.6)),
        ];
        for (a, b) in pairs {
            let ab = hyperbolic_distance_disk(a, b).unwrap();
            let ba = hyperbolic_distance_disk(b, a).unwrap();
            assert_eq!(ab.to_bits(), ba.to_bits(), "swap must be bit-exact");
        }
    }

    #[test]
    fn moebius_invariance_over_twenty_automorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let random_disk_point = |r_max: f64, rng: &mut ChaCha8Rng| {
            let r = r_max * rng.gen::<f64>().sqrt();
            let t = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            Complex64::from_polar(r, t)
        };
        for _ in 0..20 {
            let a = random_disk_point(0.8, &mut rng);
            let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.gen::<f64>());
            let moebius = |z: Complex64| phase * (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z);
            let z1 = random_disk_point(0.95, &mut rng);
            let z2 = random_disk_point(0.95, &mut rng);
            let before = hyperbolic_distance_disk(z1, z2).unwrap();
            let after = hyperbolic_distance_disk(moebius(z1), moebius(z2)).unwrap();
            assert!(
                (before - after).abs() < 1e-10,
                "automorphism broke invariance: {before} vs {after}"
            );
        }
    }

    #[test]
    fn disk_formula_matches_geodesic_line_integral() {
        // Trapezoidal line integral of the density 2/(1−|z|²) along the
        // sampled geodesic, as an independent oracle.
        let line_integral = |z1: Complex64, z2: Complex64| {
            let pts = interior_geodesic(z1, z2, 20_001);
            let density = |z: Complex64| 2.0 / (1.0 - z.norm_sqr());
            let mut total = 0.0;
            for w in pts.windows(2) {
                total += (w[1] - w[0]).norm() * 0.5 * (density(w[0]) + density(w[1]));
            }
            total
        };
        // A diameter pair and a genuinely curved pair.
        for (z1, z2) in [
            (Complex64::new(0.0, 0.3), Complex64::new(0.0, -0.3)),
            (Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.1)),
            (Complex64::new(-0.6, 0.2), Complex64::new(0.4, 0.55)),
        ] {
            let closed = hyperbolic_distance_disk(z1, z2).unwrap();
            let sampled = line_integral(z1, z2);
            assert_relative_eq!(closed, sampled, max_relative = 1e-6);
        }
    }

    #[test]
    fn identity_pullback_reduces_to_disk_formula() {
        let id = ConformalMap::disk_identity();
        let w1 = Point::new(0.2, 0.1);
        let w2 = Point::new(-0.4, 0.3);
        let pulled = hyperbolic_distance(&id, w1, w2).unwrap();
        let direct =
            hyperbolic_distance_disk(Complex64::new(0.2, 0.1), Complex64::new(-0.4, 0.3)).unwrap();
        assert_abs_diff_eq!(pulled, direct, epsilon = 1e-12);
    }

    #[test]
    fn square_pullback_of_radius_half_is_ln_three() {
        let sq = ConformalMap::disk_to_square();
        let w1: Point = sq.evaluate_map(Complex64::default()).unwrap().into();
        let w2: Point = sq.evaluate_map(Complex64::new(0.5, 0.0)).unwrap().into();
        let h = hyperbolic_distance(&sq, w1, w2).unwrap();
        assert_abs_diff_eq!(h, 3.0_f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn pullback_is_stable_under_tolerance_refinement() {
        let sq = ConformalMap::disk_to_square();
        let w1 = Point::new(0.21, -0.07);
        let w2 = Point::new(-0.33, 0.18);
        let coarse = hyperbolic_distance_with_tolerance(&sq, w1, w2, 1e-9).unwrap();
        let fine = hyperbolic_distance_with_tolerance(&sq, w1, w2, 1e-12).unwrap();
        assert!(
            (coarse - fine).abs() < 1e-8,
            "refinement moved the value: {coarse} vs {fine}"
        );
    }

    #[test]
    fn preimage_fails_cleanly_outside_the_image() {
        let sq = ConformalMap::disk_to_square();
        let err = hyperbolic_distance(&sq, Point::new(5.0, 5.0), Point::new(0.0, 0.0));
        assert!(matches!(err, Err(MetricsError::PreimageNotFound { .. })));
    }

    #[test]
    fn quasi_hyperbolic_radial_reference_values() {
        // 64-gon approximation of the unit disk; k(0, r) = log(1/(1−r))
        // in the continuum.
        let disk = JordanDomain::regular_polygon(64, 1.0).unwrap();
        let graph = GridGraph::build(&disk, 0.01).unwrap();
        let origin = Point::new(0.0, 0.0);
        let k_half =
            quasi_hyperbolic_distance_on(&graph, origin, Point::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(k_half, 2.0_f64.ln(), max_relative = 0.05);
        let k_nine =
            quasi_hyperbolic_distance_on(&graph, origin, Point::new(0.9, 0.0)).unwrap();
        assert_relative_eq!(k_nine, 10.0_f64.ln(), max_relative = 0.05);
        // The one-build public entry point agrees with the shared-grid path.
        let direct =
            quasi_hyperbolic_distance(&disk, origin, Point::new(0.5, 0.0), 0.01).unwrap();
        assert_eq!(direct.to_bits(), k_half.to_bits());
    }

    #[test]
    fn quasi_hyperbolic_is_exactly_symmetric() {
        let disk = JordanDomain::regular_polygon(32, 1.0).unwrap();
        let graph = GridGraph::build(&disk, 0.05).unwrap();
        let a = Point::new(0.31, -0.12);
        let b = Point::new(-0.44, 0.27);
        let ab = quasi_hyperbolic_distance_on(&graph, a, b).unwrap();
        let ba = quasi_hyperbolic_distance_on(&graph, b, a).unwrap();
        assert_eq!(ab.to_bits(), ba.to_bits());
    }

    #[test]
    fn corridor_value_stable_under_pitch_halving() {
        // U-shaped corridor: pitch h vs h/2 must agree within 3%.
        let corridor = JordanDomain::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.8, 1.0),
                Point::new(0.8, 0.2),
                Point::new(0.2, 0.2),
                Point::new(0.2, 1.0),
                Point::new(0.0, 1.0),
            ],
            0.05,
        )
        .unwrap();
        let a = Point::new(0.1, 0.9);
        let b = Point::new(0.9, 0.9);
        let coarse = quasi_hyperbolic_distance(&corridor, a, b, 0.02).unwrap();
        let fine = quasi_hyperbolic_distance(&corridor, a, b, 0.01).unwrap();
        assert!(
            (coarse - fine).abs() / fine < 0.03,
            "refinement moved k from {coarse} to {fine}"
        );
    }

    #[test]
    fn disk_ratio_limits_match_the_closed_forms() {
        // h(0,r)/k(0,r) = log((1+r)/(1−r)) / log(1/(1−r)) tends to 2 as
        // r → 0 and to 1 as r → 1; checked at r = 10⁻³ and r = 1−10⁻³.
        let ratio = |r: f64| {
            let h = hyperbolic_distance_disk(Complex64::default(), Complex64::new(r, 0.0))
                .unwrap();
            let k = (1.0 / (1.0 - r)).ln();
            h / k
        };
        assert!(ratio(1e-3) > 1.8, "near the center the ratio approaches 2");
        let near_boundary = ratio(1.0 - 1e-3);
        assert!(
            near_boundary > 1.0 && near_boundary < 1.2,
            "near the boundary the ratio approaches 1, got {near_boundary}"
        );
    }

    #[test]
    fn comparability_on_the_square_passes_policy_gates() {
        let sq = ConformalMap::disk_to_square();
        let domain = JordanDomain::rectangle(-0.5, -0.5, 0.5, 0.5).unwrap();
        let report = comparability_report(&sq, &domain, 50, 0.02, 7).unwrap();
        assert_eq!(report.samples.len(), 50);
        assert!(report.within_policy_gates, "ratios out of [1/4, 4]");
        assert!(report.ratio_min >= 0.25 && report.ratio_max <= 4.0);
        assert!(report.ratio_min <= report.ratio_median);
        assert!(report.ratio_median <= report.ratio_max);
        // CSV round-trip: header plus one line per sample.
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &report.samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(MetricSample::CSV_HEADER));
        assert_eq!(lines.count(), 50);
    }

    #[test]
    fn gehring_hayman_on_the_disk_diameter() {
        let id = ConformalMap::disk_identity();
        let disk = JordanDomain::regular_polygon(64, 1.0).unwrap();
        let ratio = gehring_hayman_ratio(
            &id,
            &disk,
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            0.02,
        )
        .unwrap();
        assert!(
            (0.91..=1.0 + 1e-9).contains(&ratio),
            "antipodal ratio out of range: {ratio}"
        );
    }

    #[test]
    fn gehring_hayman_square_adjacent_sides() {
        let sq = ConformalMap::disk_to_square();
        let domain = JordanDomain::rectangle(-0.5, -0.5, 0.5, 0.5).unwrap();
        let ratio = gehring_hayman_ratio(
            &sq,
            &domain,
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            0.02,
        )
        .unwrap();
        assert!(
            (0.91..=30.0).contains(&ratio),
            "adjacent-side ratio out of range: {ratio}"
        );
        // Convexity: the internal distance is the chord, so the ratio is
        // also arc length / chord ≥ 1 up to grid slack — the arc from
        // (0.5, 0) to (0, 0.5) is visibly longer than the chord.
        assert!(ratio >= 1.0, "arc must beat the chord, got {ratio}");
    }

    #[test]
    fn rejects_off_circle_boundary_points() {
        let id = ConformalMap::disk_identity();
        let disk = JordanDomain::regular_polygon(32, 1.0).unwrap();
        let err = gehring_hayman_ratio(
            &id,
            &disk,
            Complex64::new(0.5, 0.0),
            Complex64::new(-1.0, 0.0),
            0.05,
        );
        assert!(matches!(err, Err(MetricsError::NotOnCircle(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn triangle_inequality_holds_in_the_disk(
            ax in -0.9f64..0.9, ay in -0.9f64..0.9,
            bx in -0.9f64..0.9, by in -0.9f64..0.9,
            cx in -0.9f64..0.9, cy in -0.9f64..0.9,
        ) {
            let a = Complex64::new(ax * 0.7, ay * 0.7);
            let b = Complex64::new(bx * 0.7, by * 0.7);
            let c = Complex64::new(cx * 0.7, cy * 0.7);
            let ab = hyperbolic_distance_disk(a, b).unwrap();
            let bc = hyperbolic_distance_disk(b, c).unwrap();
            let ac = hyperbolic_distance_disk(a, c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
