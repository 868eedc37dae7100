//! Schwarz–Christoffel integral engine and prevertex parameter solver.
//!
//! The map is `f(z) = A + C ∫₀^z Π_k (1 − t/ζ_k)^{β_k} dt`.  Integrals
//! whose path ends at a prevertex extract the singular factor analytically:
//! along the chord `t(s) = p + (q − p) s` ending at the prevertex `q = ζ_k`
//! the factor `(1 − t/ζ_k)^{β_k}` equals `((ζ_k − p)/ζ_k)^{β_k} (1−s)^{β_k}`
//! (valid with principal branches because `1 − s > 0`), so a Gauss–Jacobi
//! rule with weight `(1−s)^{β_k}` integrates the remaining smooth part.
//!
//! The parameter problem is posed in logarithmic gap coordinates: gaps
//! `g_k = 2π · softmax(u)_k` with the last coordinate pinned to zero keep
//! the prevertices strictly ordered by construction.  Residuals are the
//! side-length ratios of the image polygon (sides `1..K-3` against side 0)
//! plus the two real conditions placing the image of the first prevertex
//! at the first target vertex once `f(0)` is pinned to the requested
//! center.  A damped Newton iteration with a forward-difference Jacobian
//! drives the residual below the caller's tolerance.

use super::ConformalError;
use crate::geometry::JordanDomain;
use crate::quad::{gauss_jacobi, gauss_legendre, QuadRule};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(super) const GJ_NODES: usize = 64;
const MAX_ITERATIONS: usize = 120;
const CROWDING_GAP: f64 = 1e-14;

/// Quadrature rules fixed by the turning exponents (independent of the
/// prevertex positions, so they are built once per solve / per map).
#[derive(Debug, Clone)]
pub(super) struct ScRules {
    /// `into[k]`: weight `(1−s)^{β_k}`, for paths ending at prevertex k.
    pub into: Vec<QuadRule>,
    /// `from[k]`: weight `s^{β_k}`, for paths starting at prevertex k.
    pub from: Vec<QuadRule>,
    /// Plain Gauss–Legendre for smooth sub-paths.
    pub smooth: QuadRule,
}

impl ScRules {
    pub fn build(beta: &[f64]) -> Result<Self, ConformalError> {
        let mut into = Vec::with_capacity(beta.len());
        let mut from = Vec::with_capacity(beta.len());
        for &b in beta {
            into.push(gauss_jacobi(GJ_NODES, b, 0.0)?);
            from.push(gauss_jacobi(GJ_NODES, 0.0, b)?);
        }
        Ok(ScRules {
            into,
            from,
            smooth: gauss_legendre(GJ_NODES),
        })
    }
}

/// `Π_{j≠skip} (1 − t/ζ_j)^{β_j}` with principal branches.
pub(super) fn sc_product(
    zeta: &[Complex64],
    beta: &[f64],
    t: Complex64,
    skip: Option<usize>,
) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (j, (&z, &b)) in zeta.iter().zip(beta).enumerate() {
        if Some(j) == skip {
            continue;
        }
        acc *= (Complex64::new(1.0, 0.0) - t / z).powf(b);
    }
    acc
}

/// `∫ Π dt` along the chord from `p` to the prevertex `ζ_k` (singular at
/// the far end, handled by the `into[k]` rule).
pub(super) fn chord_into_prevertex(
    rules: &ScRules,
    zeta: &[Complex64],
    beta: &[f64],
    p: Complex64,
    k: usize,
) -> Complex64 {
    let q = zeta[k];
    let d = q - p;
    let b = beta[k];
    // Extracted constant: ((ζ_k − p)/ζ_k)^{β_k}; the remaining weight is
    // (1−s)^{β_k} on [0,1], i.e. ((1−x)/2)^{β_k} on [−1,1].
    let front = (d / q).powf(b) * d * (0.5_f64).powf(b + 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rules.into[k].nodes.iter().zip(&rules.into[k].weights) {
        let s = 0.5 * (x + 1.0);
        let t = p + d * s;
        acc += sc_product(zeta, beta, t, Some(k)) * w;
    }
    front * acc
}

/// `∫ Π dt` along the chord from the prevertex `ζ_k` to `p` (singular at
/// the start, handled by the `from[k]` rule).
pub(super) fn chord_from_prevertex(
    rules: &ScRules,
    zeta: &[Complex64],
    beta: &[f64],
    k: usize,
    p: Complex64,
) -> Complex64 {
    let q = zeta[k];
    let d = p - q;
    let b = beta[k];
    // (1 − t/ζ_k) = (−d/ζ_k) s along t(s) = ζ_k + d·s.
    let front = (-d / q).powf(b) * d * (0.5_f64).powf(b + 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rules.from[k].nodes.iter().zip(&rules.from[k].weights) {
        let s = 0.5 * (x + 1.0);
        let t = q + d * s;
        acc += sc_product(zeta, beta, t, Some(k)) * w;
    }
    front * acc
}

/// `w(ζ_anchor) = ∫₀^{ζ_anchor} Π dt` along the radius: smooth half by
/// Gauss–Legendre, singular half into the prevertex by Gauss–Jacobi.
pub(super) fn radial_w(
    rules: &ScRules,
    zeta: &[Complex64],
    beta: &[f64],
    anchor: usize,
) -> Complex64 {
    let q = zeta[anchor];
    let mid = q * 0.5;
    let mut smooth = Complex64::new(0.0, 0.0);
    for (&x, &w) in rules.smooth.nodes.iter().zip(&rules.smooth.weights) {
        let s = 0.25 * (x + 1.0); // [0, 1/2]
        smooth += sc_product(zeta, beta, q * s, None) * w;
    }
    smooth *= q * 0.25;
    smooth + chord_into_prevertex(rules, zeta, beta, mid, anchor)
}

/// Side integral `∫_{ζ_k}^{ζ_{k+1}} Π dt` along the chord split at its
/// midpoint, with Gauss–Jacobi treatment at both singular ends.
pub(super) fn side_integral(
    rules: &ScRules,
    zeta: &[Complex64],
    beta: &[f64],
    k: usize,
) -> Complex64 {
    let next = (k + 1) % zeta.len();
    let mid = (zeta[k] + zeta[next]) * 0.5;
    chord_from_prevertex(rules, zeta, beta, k, mid)
        + chord_into_prevertex(rules, zeta, beta, mid, next)
}

/// Output of the parameter solve, already rotated to the normalization
/// `f(0) = center`, `f'(0) > 0`.
#[derive(Debug, Clone)]
pub(super) struct SolvedParams {
    /// Prevertex angles, strictly increasing in `[0, 2π)`.
    pub angles: Vec<f64>,
    pub zeta: Vec<Complex64>,
    pub beta: Vec<f64>,
    /// Positive real scale `C`.
    pub scale: Complex64,
    /// Offset `A = f(0)`.
    pub offset: Complex64,
    /// Target polygon vertex paired with each prevertex.
    pub vertex_images: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Turning exponents of a counterclockwise polygon; `β_k = −τ_k/π` where
/// `τ_k` is the exterior turning at vertex k.  Sums to −2.
pub(super) fn turning_exponents(vertices: &[Complex64]) -> Vec<f64> {
    let n = vertices.len();
    (0..n)
        .map(|k| {
            let prev = vertices[(k + n - 1) % n];
            let here = vertices[k];
            let next = vertices[(k + 1) % n];
            let turn = ((next - here) / (here - prev)).arg();
            -turn / std::f64::consts::PI
        })
        .collect()
}

pub(super) fn solve(
    domain: &JordanDomain,
    center: Complex64,
    tol: f64,
) -> Result<SolvedParams, ConformalError> {
    let raw: Vec<Complex64> = domain.vertices().iter().map(|&p| p.into()).collect();
    if raw.len() > 64 {
        return Err(ConformalError::TooManyVertices { count: raw.len() });
    }
    if !domain.contains(center.into()) {
        return Err(ConformalError::InvalidNormalization(
            "center image must lie inside the target domain".into(),
        ));
    }

    // Strip collinear vertices: a zero turning exponent contributes a
    // trivial factor and would make the parameter problem singular.
    let all_beta = turning_exponents(&raw);
    let mut verts: Vec<Complex64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for (v, b) in raw.iter().zip(&all_beta) {
        if b.abs() > 1e-12 {
            verts.push(*v);
            beta.push(*b);
        }
    }
    let k_n = verts.len();
    if k_n < 3 {
        return Err(ConformalError::InvalidNormalization(
            "polygon reduces to fewer than 3 corners".into(),
        ));
    }
    debug_assert!((beta.iter().sum::<f64>() + 2.0).abs() < 1e-9);

    // The chain convention below maps prevertex ζ_k to vertex k+1, so the
    // exponent living at ζ_k is the turning at vertex k+1.
    let beta_z: Vec<f64> = (0..k_n).map(|j| beta[(j + 1) % k_n]).collect();

    let rules = ScRules::build(&beta_z)?;
    let sides: Vec<Complex64> = (0..k_n).map(|k| verts[(k + 1) % k_n] - verts[k]).collect();
    let diam = {
        let (lo, hi) = domain.bbox();
        (hi - lo).norm()
    };

    // Initial guess: gaps proportional to target side lengths.
    let total: f64 = sides.iter().map(|s| s.norm()).sum();
    let guess_gap = |k: usize| (sides[k].norm() / total).max(1e-3);
    let mut u = DVector::from_fn(k_n - 1, |k, _| {
        (guess_gap(k) / guess_gap(k_n - 1)).ln()
    });

    let eval = |u: &DVector<f64>| -> (DVector<f64>, Complex64, Complex64, f64) {
        residual(u, &verts, &beta_z, &sides, &rules, center, diam)
    };

    let (mut r, mut c_val, mut w0, mut min_gap) = eval(&u);
    let mut iterations = 0;
    // The Newton loop drives the internal (ratio + anchor placement)
    // residual below `target`; the loop then re-certifies with the
    // independent placement residual and tightens `target` if needed.
    let mut target = tol;
    loop {
        while r.amax() > target {
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(ConformalError::NonConvergence {
                    iterations,
                    residual: r.amax(),
                });
            }
            if min_gap < CROWDING_GAP {
                return Err(ConformalError::CrowdingOverflow { gap: min_gap });
            }
            // Forward-difference Jacobian.
            let m = k_n - 1;
            let mut jac = DMatrix::zeros(m, m);
            let h = 1e-6;
            for col in 0..m {
                let mut up = u.clone();
                up[col] += h;
                let (rp, _, _, _) = eval(&up);
                for row in 0..m {
                    jac[(row, col)] = (rp[row] - r[row]) / h;
                }
            }
            let delta = jac
                .lu()
                .solve(&(-&r))
                .ok_or(ConformalError::NonConvergence {
                    iterations,
                    residual: r.amax(),
                })?;
            // Damped step: halve until the residual norm decreases.
            let base = r.norm();
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..36 {
                let trial = &u + &delta * lambda;
                let (rt, ct, wt, gt) = eval(&trial);
                if rt.norm() < base * (1.0 - 1e-4 * lambda) {
                    u = trial;
                    r = rt;
                    c_val = ct;
                    w0 = wt;
                    min_gap = gt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(ConformalError::NonConvergence {
                    iterations,
                    residual: r.amax(),
                });
            }
        }
        let _ = w0;

        // Rotate so that f'(0) = C becomes positive real: precomposing
        // with z ↦ e^{iσ₀} z multiplies C by e^{iσ₀} and moves the
        // prevertices to e^{−iσ₀} ζ, so σ₀ = −arg C shifts every
        // prevertex angle by +arg C.
        let sigma = c_val.arg();
        let gaps = gaps_from(&u);
        let mut theta = 0.0;
        let mut entries: Vec<(f64, f64, Complex64)> = Vec::with_capacity(k_n);
        for k in 0..k_n {
            theta += gaps[k];
            let mut ang = (theta + sigma) % (2.0 * std::f64::consts::PI);
            if ang < 0.0 {
                ang += 2.0 * std::f64::consts::PI;
            }
            // Prevertex at cumulative angle θ_k pairs with target vertex
            // k+1 (the chain anchors w at ζ_{K-1} = 1 ↔ vertex 0).
            entries.push((ang, beta_z[k], verts[(k + 1) % k_n]));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));

        let angles: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let beta_sorted: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let vertex_images: Vec<Complex64> = entries.iter().map(|e| e.2).collect();
        let zeta: Vec<Complex64> =
            angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();

        // Certificate: re-integrate every prevertex image along its own
        // radius (independent of the side-chaining used above) and take
        // the worst normalized placement error.
        let scale = Complex64::new(c_val.norm(), 0.0);
        let cert_rules = ScRules::build(&beta_sorted)?;
        let cert = placement_residual(
            &cert_rules,
            &zeta,
            &beta_sorted,
            scale,
            center,
            &vertex_images,
            diam,
        );
        if cert <= tol {
            return Ok(SolvedParams {
                angles,
                zeta,
                beta: beta_sorted,
                scale,
                offset: center,
                vertex_images,
                residual: cert,
                iterations,
            });
        }
        target *= 0.25;
        if target < 1e-15 {
            return Err(ConformalError::NonConvergence {
                iterations,
                residual: cert,
            });
        }
    }
}

/// Worst normalized vertex placement error: each prevertex image is
/// integrated along its own radius and compared against the recorded
/// target vertex, scaled by the domain diameter.
pub(super) fn placement_residual(
    rules: &ScRules,
    zeta: &[Complex64],
    beta: &[f64],
    scale: Complex64,
    offset: Complex64,
    vertex_images: &[Complex64],
    diam: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..zeta.len() {
        let img = offset + scale * radial_w(rules, zeta, beta, k);
        worst = worst.max((img - vertex_images[k]).norm() / diam);
    }
    worst
}

fn gaps_from(u: &DVector<f64>) -> Vec<f64> {
    let k_n = u.len() + 1;
    let mut e: Vec<f64> = (0..k_n)
        .map(|k| if k < u.len() { u[k].exp() } else { 1.0 })
        .collect();
    let s: f64 = e.iter().sum();
    for g in &mut e {
        *g *= 2.0 * std::f64::consts::PI / s;
    }
    e
}

/// Residual of the parameter problem at gap coordinates `u`; also
/// returns the implied scale `C`, the w-value at the anchor prevertex,
/// and the smallest prevertex gap (for crowding detection).
#[allow(clippy::too_many_arguments)]
fn residual(
    u: &DVector<f64>,
    verts: &[Complex64],
    beta: &[f64],
    sides: &[Complex64],
    rules: &ScRules,
    center: Complex64,
    diam: f64,
) -> (DVector<f64>, Complex64, Complex64, f64) {
    let k_n = verts.len();
    let gaps = gaps_from(u);
    let min_gap = gaps.iter().fold(f64::INFINITY, |a, &b| a.min(b));

    // Prevertices: ζ_k at cumulative angle g_0 + ... + g_k; ζ_{K-1} = 1.
    let mut theta = 0.0;
    let mut zeta = Vec::with_capacity(k_n);
    for g in &gaps {
        theta += g;
        zeta.push(Complex64::from_polar(1.0, theta));
    }

    // w at the anchor ζ_{K-1} (radial path), then around the circle.
    // Prevertex ζ_k maps to vertex k+1 under this chain convention.
    let mut w = vec![Complex64::default(); k_n];
    w[k_n - 1] = radial_w(rules, &zeta, beta, k_n - 1);
    for k in 0..k_n - 1 {
        let prev = (k + k_n - 1) % k_n;
        let inc = side_integral(rules, &zeta, beta, prev);
        w[k] = w[prev] + inc;
    }

    // Image side k (target v_k → v_{k+1}) corresponds to the prevertex arc
    // ζ_{k-1} → ζ_k.
    let image_side = |k: usize| w[k % k_n] - w[(k + k_n - 1) % k_n];
    let c_val = sides[0] / image_side(0);

    let mut r = DVector::zeros(k_n - 1);
    for k in 1..(k_n - 2) {
        let target = sides[k].norm() / sides[0].norm();
        let got = image_side(k).norm() / image_side(0).norm();
        r[k - 1] = (got - target) / target;
    }
    // Center conditions: f(ζ_{K-1}) = center + C·w[K-1] must hit vertex 0.
    let mismatch = (center + c_val * w[k_n - 1] - verts[0]) / diam;
    r[k_n - 3] = mismatch.re;
    r[k_n - 2] = mismatch.im;

    (r, c_val, w[k_n - 1], min_gap)
}
