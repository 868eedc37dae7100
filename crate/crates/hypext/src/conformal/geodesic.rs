//! Hyperbolic geodesics of the unit disk with endpoints on the circle.

use super::ConformalError;
use num_complex::Complex64;

/// Samples the hyperbolic geodesic of the unit disk joining two distinct
/// unit-circle points: the arc of the circle through both that meets the
/// unit circle orthogonally (a diameter for antipodal endpoints).
///
/// The returned polyline has exactly `samples` points, spaced uniformly in
/// the arc parameter, with the endpoints exactly `ξ1` and `ξ2`.  Interior
/// samples lie strictly inside the open disk.
pub fn hyperbolic_geodesic_disk(
    xi1: Complex64,
    xi2: Complex64,
    samples: usize,
) -> Result<Vec<Complex64>, ConformalError> {
    if samples < 2 {
        return Err(ConformalError::InvalidNormalization(
            "geodesic sampling needs at least 2 points".into(),
        ));
    }
    if (xi1 - xi2).norm() < 1e-14 {
        return Err(ConformalError::CoincidentEndpoints);
    }

    // Near-antipodal endpoints: the orthogonal circle degenerates to a
    // diameter; the chord is the geodesic (exactly for antipodal pairs,
    // and to within ~1e-16 positional error inside the threshold).
    if (xi1 + xi2).norm() < 1e-8 {
        let mut pts = Vec::with_capacity(samples);
        for j in 0..samples {
            let t = j as f64 / (samples - 1) as f64;
            pts.push(xi1 + (xi2 - xi1) * t);
        }
        pts[0] = xi1;
        *pts.last_mut().unwrap() = xi2;
        return Ok(pts);
    }

    let center = orthocircle_center(xi1, xi2)?;
    let radius = (center.norm_sqr() - 1.0).sqrt();
    let a1 = (xi1 - center).arg();
    let a2 = (xi2 - center).arg();
    // Sweep the short way: the geodesic arc subtends less than pi as seen
    // from the orthocircle center, and that is the branch inside the disk.
    let mut sweep = a2 - a1;
    if sweep > std::f64::consts::PI {
        sweep -= 2.0 * std::f64::consts::PI;
    } else if sweep < -std::f64::consts::PI {
        sweep += 2.0 * std::f64::consts::PI;
    }

    let mut pts = Vec::with_capacity(samples);
    for j in 0..samples {
        let t = j as f64 / (samples - 1) as f64;
        pts.push(center + Complex64::from_polar(radius, a1 + sweep * t));
    }
    pts[0] = xi1;
    *pts.last_mut().unwrap() = xi2;
    Ok(pts)
}

/// Center of the circle through `ξ1`, `ξ2` orthogonal to the unit circle.
///
/// Orthogonality plus passage through a unit-circle point `ξ` reduce to the
/// linear condition `Re(conj(ξ) · c) = 1`; two such conditions form a 2x2
/// system whose determinant vanishes exactly for (anti)podal endpoints.
pub fn orthocircle_center(xi1: Complex64, xi2: Complex64) -> Result<Complex64, ConformalError> {
    let det = xi1.re * xi2.im - xi1.im * xi2.re;
    if det.abs() < 1e-14 {
        return Err(ConformalError::CoincidentEndpoints);
    }
    let cx = (xi2.im - xi1.im) / det;
    let cy = (xi1.re - xi2.re) / det;
    Ok(Complex64::new(cx, cy))
}

/// Euclidean length of a polyline.
pub fn polyline_length(points: &[Complex64]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Closed-form Euclidean length of the disk geodesic between unit-circle
/// points separated by angle `δ ∈ (0, π]`: the orthogonal arc has radius
/// `tan(δ/2)` and subtends `π − δ`, giving `tan(δ/2) · (π − δ)`; the
/// antipodal case is the diameter of length 2.
pub fn geodesic_length_for_gap(delta: f64) -> f64 {
    debug_assert!(delta > 0.0 && delta <= std::f64::consts::PI + 1e-12);
    if (delta - std::f64::consts::PI).abs() < 1e-12 {
        return 2.0;
    }
    (delta / 2.0).tan() * (std::f64::consts::PI - delta)
}
