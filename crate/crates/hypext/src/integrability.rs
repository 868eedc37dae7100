//! Integrals of a gauge composed with the hyperbolic distance: the disk
//! integral `∫_𝔻 φ(h_𝔻(0,z)) dz`, its radial reduction
//! `∫₀¹ φ(log(1/(1−r))) dr`, and the pulled-back area integral
//! `∫_𝔻 φ(h_𝔻(0,z))·|f′(z)|² dz` over a conformal map's image, reported
//! with a finiteness verdict.
//!
//! Design points:
//!
//! * The one-dimensional integrals substitute `u = −log(1−r)`, turning the
//!   boundary blow-up into a smooth integrand `φ(·)·e^{−u}` on `[0, ∞)`
//!   that adaptive Gauss–Legendre handles without endpoint tricks.
//! * The area integral uses dyadic annuli `r_j = 1−2^{−j}` (the integrand's
//!   mass concentrates there), a Gauss–Legendre rule in radius per annulus,
//!   and an angular *midpoint* rule: equally accurate for periodic
//!   integrands, and its nodes generically miss the vertex rays where
//!   `|f′|` spikes, which keeps annulus masses comparable across levels.
//! * Divergence is *suspected*, never certified — only finitely many annuli
//!   are computable.  Annulus masses decaying geometrically (ratio < 0.9
//!   over the last four) certify `Finite`; masses nondecreasing over the
//!   last four (ratio ≥ 0.99, a stated numerical slack) report
//!   `DivergenceSuspected`; anything mixed is `Inconclusive`.
//! * Annulus contributions are independent and summed in a fixed order, so
//!   reports are bit-stable run to run (and would remain so under parallel
//!   evaluation with the same reduction order).

use crate::conformal::{ConformalError, ConformalMap};
use crate::phi::{PhiError, PhiSpec};
use crate::quad::{gauss_legendre, integrate_adaptive, KahanSum, QuadError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from gauge-integral evaluation.
#[derive(Debug, Error)]
pub enum IntegrabilityError {
    /// Relative tolerance must lie in `(0, 1)`.
    #[error("integral tolerance must lie in (0, 1), got {tol}")]
    BadTolerance { tol: f64 },
    /// The annulus/angle resolution is outside the supported range.
    #[error("unsupported resolution: {radial_levels} radial levels (need 5..=40), {angular_nodes} angular nodes (need ≥ 8)")]
    BadResolution {
        radial_levels: usize,
        angular_nodes: usize,
    },
    /// Underlying gauge failure.
    #[error(transparent)]
    Phi(#[from] PhiError),
    /// Underlying conformal-map failure.
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    /// Underlying quadrature failure (budget exhausted before tolerance).
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Finiteness verdict for an area integral computed on finitely many annuli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IntegralVerdict {
    /// Annulus masses decay geometrically; the integral is finite and the
    /// reported value is the last cumulative partial.
    Finite { value: f64 },
    /// Annulus masses refuse to decay; the growth table lists every
    /// annulus mass for inspection.
    DivergenceSuspected { growth: Vec<f64> },
    /// Mixed behavior within the computed annuli.
    Inconclusive,
}

/// Quadrature resolution attached to a report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub radial_levels: usize,
    pub angular_nodes: usize,
    pub radial_nodes_per_annulus: usize,
}

/// Result of [`phi_hyperbolic_area_integral`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralReport {
    /// Total over all computed annuli (equals the last partial).
    pub value: f64,
    /// Cumulative values at the annulus boundaries `r_j = 1−2^{−j}`;
    /// nondecreasing since the integrand is nonnegative.
    #[serde(rename = "partials")]
    pub partial_by_radius: Vec<f64>,
    pub verdict: IntegralVerdict,
    pub quadrature: QuadratureInfo,
}

impl IntegralReport {
    /// Serialize the report as pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Substitution cutoff: past `u = 700` the factor `e^{−u}` underflows to
/// zero for every polynomially bounded gauge.
const U_MAX: f64 = 700.0;
/// Evaluation budget for the adaptive one-dimensional integrals.
const ADAPTIVE_BUDGET: usize = 400_000;
/// Gauss–Legendre nodes per annulus in radius.
const RADIAL_GL_NODES: usize = 16;
/// Annulus-mass ratio below which the last four annuli certify `Finite`.
const DECAY_RATIO: f64 = 0.9;
/// Annulus-mass ratio above which the last four annuli count as
/// nondecreasing (1 minus a stated slack for quadrature jitter).
const GROWTH_RATIO: f64 = 0.99;

/// `∫_𝔻 φ(h_𝔻(0,z)) dz = 2π ∫₀¹ r·φ(log((1+r)/(1−r))) dr`, evaluated as
/// `2π ∫₀^∞ (1−e^{−u})·φ(u + log(2−e^{−u}))·e^{−u} du` with `u = −log(1−r)`.
pub fn disk_phi_integral(spec: &PhiSpec, tol: f64) -> Result<f64, IntegrabilityError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(IntegrabilityError::BadTolerance { tol });
    }
    let integrand = |u: f64| {
        let damp = (-u).exp();
        (1.0 - damp)
            * spec
                .eval(u + (2.0 - damp).ln())
                .expect("substituted argument is nonnegative")
            * damp
    };
    let value = integrate_adaptive(integrand, 0.0, U_MAX, tol, ADAPTIVE_BUDGET)?;
    Ok(2.0 * std::f64::consts::PI * value)
}

/// `∫₀¹ φ(log(1/(1−r))) dr = ∫₀^∞ φ(u)·e^{−u} du` (radial reduction of the
/// disk integral; finite for every polynomially bounded gauge).
pub fn radial_phi_integral(spec: &PhiSpec, tol: f64) -> Result<f64, IntegrabilityError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(IntegrabilityError::BadTolerance { tol });
    }
    let integrand =
        |u: f64| spec.eval(u).expect("u is nonnegative") * (-u).exp();
    Ok(integrate_adaptive(integrand, 0.0, U_MAX, tol, ADAPTIVE_BUDGET)?)
}

/// `∫_𝔻 φ(h_𝔻(0,z))·|f′(z)|² dz` over dyadic annuli `[1−2^{1−j}, 1−2^{−j}]`,
/// `j = 1..=radial_levels` — the area of the image domain weighted by the
/// gauge of the hyperbolic distance from the map's center image.
///
/// Gauss–Legendre in radius per annulus, midpoint rule in angle, fixed
/// summation order.  The verdict inspects the last four annulus masses
/// (see the module notes for the thresholds).
pub fn phi_hyperbolic_area_integral(
    map: &ConformalMap,
    spec: &PhiSpec,
    radial_levels: usize,
    angular_nodes: usize,
) -> Result<IntegralReport, IntegrabilityError> {
    if !(5..=40).contains(&radial_levels) || angular_nodes < 8 {
        return Err(IntegrabilityError::BadResolution {
            radial_levels,
            angular_nodes,
        });
    }

    let rule = gauss_legendre(RADIAL_GL_NODES);
    let mut masses = Vec::with_capacity(radial_levels);
    let mut partials = Vec::with_capacity(radial_levels);
    let mut total = KahanSum::new();
    for j in 1..=radial_levels {
        let r_lo = 1.0 - (1.0 - j as f64).exp2();
        let r_hi = 1.0 - (-(j as f64)).exp2();
        let mut annulus = KahanSum::new();
        let mid = 0.5 * (r_lo + r_hi);
        let half = 0.5 * (r_hi - r_lo);
        for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
            let r = mid + half * node;
            let gauge = spec
                .eval(2.0 * r.atanh())
                .expect("hyperbolic distance is nonnegative");
            let mut angular = KahanSum::new();
            for l in 0..angular_nodes {
                let theta =
                    2.0 * std::f64::consts::PI * (l as f64 + 0.5) / angular_nodes as f64;
                let d = map.evaluate_derivative(Complex64::from_polar(r, theta))?;
                angular.add(d.norm_sqr());
            }
            let theta_integral =
                angular.value() * 2.0 * std::f64::consts::PI / angular_nodes as f64;
            annulus.add(weight * half * r * gauge * theta_integral);
        }
        masses.push(annulus.value());
        total.add(annulus.value());
        partials.push(total.value());
    }

    let verdict = classify_annulus_masses(&masses);
    Ok(IntegralReport {
        value: total.value(),
        partial_by_radius: partials,
        verdict,
        quadrature: QuadratureInfo {
            radial_levels,
            angular_nodes,
            radial_nodes_per_annulus: RADIAL_GL_NODES,
        },
    })
}

/// Verdict from the last four annulus-mass ratios.
fn classify_annulus_masses(masses: &[f64]) -> IntegralVerdict {
    let ratios: Vec<f64> = masses
        .windows(2)
        .rev()
        .take(4)
        .map(|pair| pair[1] / pair[0])
        .collect();
    if ratios.len() < 4 {
        return IntegralVerdict::Inconclusive;
    }
    if ratios.iter().all(|&r| r < DECAY_RATIO) {
        let value = masses.iter().sum::<f64>();
        IntegralVerdict::Finite { value }
    } else if ratios.iter().all(|&r| r >= GROWTH_RATIO) {
        IntegralVerdict::DivergenceSuspected {
            growth: masses.to_vec(),
        }
    } else {
        IntegralVerdict::Inconclusive
    }
}
