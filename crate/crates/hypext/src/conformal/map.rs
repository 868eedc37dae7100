//! The [`ConformalMap`] type: catalog constructors, evaluation, and
//! boundary traces.

use super::solve::{
    chord_from_prevertex, placement_residual, radial_w, sc_product, ScRules, SolvedParams,
};
use super::ConformalError;
use crate::geometry::{JordanDomain, Point};
use crate::quad::integrate_adaptive_complex;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Lemniscatic half-period: `∫₀¹ (1−t⁴)^{−1/2} dt`, equal to
/// `Γ(1/4)² / (4 √(2π))`.
pub const LEMNISCATE_HALF: f64 = 1.311_028_777_146_059_9;

/// Which representation backs a [`ConformalMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    /// `f(z) = z`, the disk onto itself.
    #[serde(rename = "closed_form_disk_identity")]
    DiskIdentity,
    /// Closed-form map onto the unit square centered at 0, built from the
    /// explicit integrand `(1−t⁴)^{−1/2}` (independent of the generic
    /// product machinery; exists as a test oracle).
    #[serde(rename = "closed_form_disk_to_square")]
    DiskToSquare,
    /// Numerically solved Schwarz–Christoffel map onto a polygon.
    #[serde(rename = "schwarz_christoffel")]
    SchwarzChristoffel,
}

/// A conformal homeomorphism from the unit disk onto a Jordan domain,
/// normalized by `f(0) = center_image` and `f'(0) > 0`.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    kind: MapKind,
    /// Prevertex angles, strictly increasing in `[0, 2π)`.
    prevertices: Vec<f64>,
    zeta: Vec<Complex64>,
    /// Turning exponent associated with each prevertex (sums to −2).
    beta: Vec<f64>,
    /// Scale `C = f'(0)`, positive real by normalization.
    scale: Complex64,
    /// Offset `A = f(0)`.
    offset: Complex64,
    center_image: Complex64,
    /// Image of each prevertex (a target polygon vertex).
    vertex_images: Vec<Complex64>,
    target: Option<JordanDomain>,
    rules: Option<ScRules>,
    residual: f64,
    iterations: usize,
}

/// Serialized form: the analytic data only (the target polygon and
/// quadrature caches are reconstructed on load).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub kind: MapKind,
    pub prevertices: Vec<f64>,
    pub turning_parameters: Vec<f64>,
    pub scale: [f64; 2],
    pub offset: [f64; 2],
    pub center_image: [f64; 2],
}

impl ConformalMap {
    /// The identity map of the disk.
    pub fn disk_identity() -> Self {
        ConformalMap {
            kind: MapKind::DiskIdentity,
            prevertices: Vec::new(),
            zeta: Vec::new(),
            beta: Vec::new(),
            scale: Complex64::new(1.0, 0.0),
            offset: Complex64::default(),
            center_image: Complex64::default(),
            vertex_images: Vec::new(),
            target: None,
            rules: None,
            residual: 0.0,
            iterations: 0,
        }
    }

    /// Closed-form map onto the unit square with vertices `(±1/2, ±1/2)`:
    /// `f(z) = e^{iπ/4} F(e^{−iπ/4} z) / (√2 L)` with
    /// `F(w) = ∫₀^w (1−t⁴)^{−1/2} dt` and `L` the lemniscatic constant.
    pub fn disk_to_square() -> Self {
        let q = std::f64::consts::FRAC_PI_4;
        let prevertices = vec![q, 3.0 * q, 5.0 * q, 7.0 * q];
        let zeta: Vec<Complex64> = prevertices
            .iter()
            .map(|&a| Complex64::from_polar(1.0, a))
            .collect();
        let vertex_images: Vec<Complex64> = zeta
            .iter()
            .map(|z| z / std::f64::consts::SQRT_2)
            .collect();
        let square = JordanDomain::rectangle(-0.5, -0.5, 0.5, 0.5)
            .expect("unit square is a valid domain");
        ConformalMap {
            kind: MapKind::DiskToSquare,
            prevertices,
            zeta,
            beta: vec![-0.5; 4],
            scale: Complex64::new(1.0 / (std::f64::consts::SQRT_2 * LEMNISCATE_HALF), 0.0),
            offset: Complex64::default(),
            center_image: Complex64::default(),
            vertex_images,
            target: Some(square),
            rules: None,
            residual: 0.0,
            iterations: 0,
        }
    }

    /// Solves the Schwarz–Christoffel parameter problem for `domain`,
    /// normalizing `f(0) = z0_image`, `f'(0) > 0`.  `tol` bounds the
    /// certified residual (relative side-length mismatch plus normalized
    /// placement error).
    pub fn solve_schwarz_christoffel(
        domain: &JordanDomain,
        z0_image: Point,
        tol: f64,
    ) -> Result<Self, ConformalError> {
        let params: SolvedParams = super::solve::solve(domain, z0_image.into(), tol)?;
        let rules = ScRules::build(&params.beta)?;
        Ok(ConformalMap {
            kind: MapKind::SchwarzChristoffel,
            prevertices: params.angles,
            zeta: params.zeta,
            beta: params.beta,
            scale: params.scale,
            offset: params.offset,
            center_image: params.offset,
            vertex_images: params.vertex_images,
            target: Some(domain.clone()),
            rules: Some(rules),
            residual: params.residual,
            iterations: params.iterations,
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn prevertices(&self) -> &[f64] {
        &self.prevertices
    }

    pub fn turning_parameters(&self) -> &[f64] {
        &self.beta
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn offset(&self) -> Complex64 {
        self.offset
    }

    pub fn center_image(&self) -> Complex64 {
        self.center_image
    }

    pub fn vertex_images(&self) -> &[Complex64] {
        &self.vertex_images
    }

    pub fn target(&self) -> Option<&JordanDomain> {
        self.target.as_ref()
    }

    /// Certified residual of the parameter solve (0 for closed forms):
    /// the worst vertex placement error from re-integrating each
    /// prevertex image along its own radius, normalized by the domain
    /// diameter.
    pub fn solve_residual(&self) -> f64 {
        self.residual
    }

    /// Newton iterations spent by the parameter solve (0 for closed
    /// forms and for maps rebuilt from files).
    pub fn solve_iterations(&self) -> usize {
        self.iterations
    }

    /// Recomputes the placement residual from the stored parameters.  For
    /// a freshly solved map this reproduces [`Self::solve_residual`]; for
    /// a map rebuilt from a file it measures the consistency between the
    /// serialized parameters and the reconstructed vertex images.
    pub fn recompute_residual(&self) -> Result<f64, ConformalError> {
        match self.kind {
            MapKind::DiskIdentity | MapKind::DiskToSquare => Ok(0.0),
            MapKind::SchwarzChristoffel => {
                let rules = self
                    .rules
                    .as_ref()
                    .expect("schwarz_christoffel maps always carry quadrature rules");
                let (mut lo, mut hi) = (self.vertex_images[0], self.vertex_images[0]);
                for v in &self.vertex_images {
                    lo.re = lo.re.min(v.re);
                    lo.im = lo.im.min(v.im);
                    hi.re = hi.re.max(v.re);
                    hi.im = hi.im.max(v.im);
                }
                let diam = (hi - lo).norm();
                Ok(placement_residual(
                    rules,
                    &self.zeta,
                    &self.beta,
                    self.scale,
                    self.offset,
                    &self.vertex_images,
                    diam,
                ))
            }
        }
    }

    /// Evaluates `f(z)` for `|z| < 1`.
    pub fn evaluate_map(&self, z: Complex64) -> Result<Complex64, ConformalError> {
        if z.norm() >= 1.0 {
            return Err(ConformalError::OutsideDisk(z));
        }
        match self.kind {
            MapKind::DiskIdentity => Ok(z),
            MapKind::DiskToSquare => {
                let rot = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
                let w = rot * z;
                let f = lemniscatic_integral(w)?;
                Ok(rot.conj() * f / (std::f64::consts::SQRT_2 * LEMNISCATE_HALF))
            }
            MapKind::SchwarzChristoffel => {
                let integral = integrate_adaptive_complex(
                    |t| sc_product(&self.zeta, &self.beta, t, None),
                    Complex64::default(),
                    z,
                    1e-12,
                    400_000,
                )?;
                Ok(self.offset + self.scale * integral)
            }
        }
    }

    /// Evaluates `f'(z)` for `|z| < 1`.
    pub fn evaluate_derivative(&self, z: Complex64) -> Result<Complex64, ConformalError> {
        if z.norm() >= 1.0 {
            return Err(ConformalError::OutsideDisk(z));
        }
        match self.kind {
            MapKind::DiskIdentity => Ok(Complex64::new(1.0, 0.0)),
            MapKind::DiskToSquare => {
                // f'(z) = (1+z⁴)^{−1/2} / (√2 L); Re(1+z⁴) > 0 on the disk.
                let denom = (Complex64::new(1.0, 0.0) + z.powu(4)).sqrt();
                Ok(Complex64::new(1.0, 0.0)
                    / (denom * std::f64::consts::SQRT_2 * LEMNISCATE_HALF))
            }
            MapKind::SchwarzChristoffel => {
                Ok(self.scale * sc_product(&self.zeta, &self.beta, z, None))
            }
        }
    }

    /// Continuous boundary extension `f(e^{iθ})`.
    ///
    /// Closed-form kinds evaluate radially at `r = 1 − ε` for
    /// `ε = 10⁻³, 10⁻⁴, 10⁻⁵` and Richardson-extrapolate.  The
    /// Schwarz–Christoffel kind integrates along the boundary chord from
    /// the nearest prevertex (Gauss–Jacobi absorbing that prevertex's
    /// singularity) and places the point exactly on the target side at the
    /// resulting arc-length position.
    pub fn boundary_trace(&self, theta: f64) -> Result<Complex64, ConformalError> {
        match self.kind {
            MapKind::DiskIdentity | MapKind::DiskToSquare => {
                let e = Complex64::from_polar(1.0, theta);
                let mut vals = [Complex64::default(); 3];
                for (k, eps) in [1e-3, 1e-4, 1e-5].into_iter().enumerate() {
                    vals[k] = self.evaluate_map(e * (1.0 - eps))?;
                }
                Ok(richardson3(vals, 10.0))
            }
            MapKind::SchwarzChristoffel => self.sc_trace(theta),
        }
    }

    fn sc_trace(&self, theta: f64) -> Result<Complex64, ConformalError> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut th = theta % two_pi;
        if th < 0.0 {
            th += two_pi;
        }
        let k_n = self.prevertices.len();
        let rules = self
            .rules
            .as_ref()
            .expect("schwarz_christoffel maps always carry quadrature rules");

        // Locate the prevertex gap [θ_k, θ_{k+1}) containing th (the gap
        // from the last prevertex wraps through 2π).
        let k = match self
            .prevertices
            .binary_search_by(|a| a.total_cmp(&th))
        {
            Ok(i) => i,
            Err(0) => k_n - 1, // below the first prevertex: wrapped gap
            Err(i) => i - 1,
        };
        let next = (k + 1) % k_n;
        let a_k = self.prevertices[k];
        let a_next = self.prevertices[next] + if next == 0 { two_pi } else { 0.0 };
        let th_unwrapped = if th < a_k { th + two_pi } else { th };

        let snap = 1e-12;
        if (th_unwrapped - a_k).abs() < snap {
            return Ok(self.vertex_images[k]);
        }
        if (a_next - th_unwrapped).abs() < snap {
            return Ok(self.vertex_images[next]);
        }

        let e = Complex64::from_polar(1.0, th);
        let v_k = self.vertex_images[k];
        let v_next = self.vertex_images[next];
        let side = v_next - v_k;
        let side_len = side.norm();
        let dir = side / side_len;

        // Integrate from the nearer prevertex for accuracy; the Jacobi rule
        // absorbs that prevertex's singular factor.
        let from_start = (th_unwrapped - a_k) <= (a_next - th_unwrapped);
        let travelled = if from_start {
            (self.scale * chord_from_prevertex(rules, &self.zeta, &self.beta, k, e)).norm()
        } else {
            (self.scale * chord_from_prevertex(rules, &self.zeta, &self.beta, next, e)).norm()
        };
        let travelled = travelled.min(side_len);
        if from_start {
            Ok(v_k + dir * travelled)
        } else {
            Ok(v_next - dir * travelled)
        }
    }

    /// Serializes the analytic map data.
    pub fn to_file(&self) -> MapFile {
        MapFile {
            kind: self.kind,
            prevertices: self.prevertices.clone(),
            turning_parameters: self.beta.clone(),
            scale: [self.scale.re, self.scale.im],
            offset: [self.offset.re, self.offset.im],
            center_image: [self.center_image.re, self.center_image.im],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("map serialization cannot fail")
    }

    /// Rebuilds an evaluable map from its serialized analytic data.
    /// Vertex images are recomputed by integrating around the circle, so a
    /// corrupted file shows up as inconsistent geometry rather than
    /// silently wrong traces.
    pub fn from_file(file: MapFile) -> Result<Self, ConformalError> {
        match file.kind {
            MapKind::DiskIdentity => Ok(Self::disk_identity()),
            MapKind::DiskToSquare => Ok(Self::disk_to_square()),
            MapKind::SchwarzChristoffel => {
                let zeta: Vec<Complex64> = file
                    .prevertices
                    .iter()
                    .map(|&a| Complex64::from_polar(1.0, a))
                    .collect();
                let beta = file.turning_parameters.clone();
                let rules = ScRules::build(&beta)?;
                let scale = Complex64::new(file.scale[0], file.scale[1]);
                let offset = Complex64::new(file.offset[0], file.offset[1]);
                // Walk the prevertices to recover vertex images.
                let k_n = zeta.len();
                let mut w = vec![Complex64::default(); k_n];
                w[0] = radial_w(&rules, &zeta, &beta, 0);
                for k in 1..k_n {
                    w[k] = w[k - 1] + super::solve::side_integral(&rules, &zeta, &beta, k - 1);
                }
                let vertex_images: Vec<Complex64> =
                    w.iter().map(|&wk| offset + scale * wk).collect();
                Ok(ConformalMap {
                    kind: MapKind::SchwarzChristoffel,
                    prevertices: file.prevertices,
                    zeta,
                    beta,
                    scale,
                    offset,
                    center_image: Complex64::new(file.center_image[0], file.center_image[1]),
                    vertex_images,
                    target: None,
                    rules: Some(rules),
                    residual: f64::NAN,
                    iterations: 0,
                })
            }
        }
    }
}

/// `F(w) = ∫₀^w (1−t⁴)^{−1/2} dt` along the straight segment, principal
/// branch (valid: `|t| < 1` keeps `1 − t⁴` in the right half-plane).
fn lemniscatic_integral(w: Complex64) -> Result<Complex64, ConformalError> {
    Ok(integrate_adaptive_complex(
        |t| (Complex64::new(1.0, 0.0) - t.powu(4)).sqrt().inv(),
        Complex64::default(),
        w,
        1e-12,
        400_000,
    )?)
}

/// Richardson extrapolation of `v[k] = g(ε₀/ρ^k)` to `ε → 0`, assuming an
/// expansion `g = g* + c₁ ε + c₂ ε² + …`.
fn richardson3(v: [Complex64; 3], rho: f64) -> Complex64 {
    let w0 = v[1] + (v[1] - v[0]) / (rho - 1.0);
    let w1 = v[2] + (v[2] - v[1]) / (rho - 1.0);
    w1 + (w1 - w0) / (rho * rho - 1.0)
}
