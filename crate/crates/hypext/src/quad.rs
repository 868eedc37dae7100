//! Gaussian quadrature rules and adaptive integration.
//!
//! Rules are generated with the Golub–Welsch algorithm: nodes are the
//! eigenvalues of the symmetric tridiagonal Jacobi matrix of the weight's
//! orthogonal polynomials, weights come from the first eigenvector
//! components. Endpoint-weighted Gauss–Jacobi rules absorb the algebraic
//! boundary singularities of Schwarz–Christoffel integrands; Gauss–Laguerre
//! serves as an independent oracle for integrals against `e^{-u} du`.
//!
//! All routines are deterministic and single-threaded.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::ops::{Add, Mul};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    /// The adaptive subdivision hit its budget before reaching the tolerance.
    #[error("quadrature budget exceeded: {evaluations} evaluations, last error estimate {estimate:.3e}")]
    BudgetExceeded { evaluations: usize, estimate: f64 },
    /// Invalid rule request (zero nodes, Jacobi exponent ≤ -1, ...).
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
}

/// A quadrature rule: nodes and positive weights on the rule's native domain.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Applies the rule on its native domain.
    pub fn sum<T, F>(&self, mut f: F) -> T
    where
        T: Add<Output = T> + Default,
        F: FnMut(f64) -> T,
        T: Mul<f64, Output = T>,
    {
        let mut acc = T::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(x) * w;
        }
        acc
    }

    /// Applies a `[-1,1]` rule on `[a,b]` via the affine substitution.
    pub fn sum_on<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: Add<Output = T> + Default + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = T::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }
}

/// Natural log of the Gamma function for positive arguments (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0, "ln_gamma requires a positive argument");
    if x < 0.5 {
        // Reflection keeps the Lanczos series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Nodes/weights from a symmetric tridiagonal Jacobi matrix.
///
/// `diag` holds the recurrence alphas, `offdiag` the square roots of the
/// betas (one shorter), and `mu0` is the weight's total mass.
fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> QuadRule {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = offdiag[i];
            m[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &k in &order {
        nodes.push(eig.eigenvalues[k]);
        let v0 = eig.eigenvectors[(0, k)];
        weights.push(mu0 * v0 * v0);
    }
    QuadRule { nodes, weights }
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> QuadRule {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / ((2.0 * k - 1.0) * (2.0 * k + 1.0)).sqrt()
        })
        .collect();
    golub_welsch(&diag, &offdiag, 2.0)
}

/// Gauss–Jacobi rule on `[-1, 1]` for the weight `(1-x)^a (1+x)^b`, `a,b > -1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadRule, QuadError> {
    if n == 0 {
        return Err(QuadError::InvalidRule("zero nodes".into()));
    }
    if a <= -1.0 || b <= -1.0 {
        return Err(QuadError::InvalidRule(format!(
            "Jacobi exponents must exceed -1 (got a={a}, b={b})"
        )));
    }
    let ab = a + b;
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n.saturating_sub(1));
    diag.push((b - a) / (ab + 2.0));
    for k in 1..n {
        let k = k as f64;
        let denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
        diag.push((b * b - a * a) / denom);
    }
    for k in 1..n {
        let k = k as f64;
        let beta = if k == 1.0 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + a) * (k + b) * (k + ab)
                / ((2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0))
        };
        offdiag.push(beta.sqrt());
    }
    // mu0 = ∫ (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)
    let mu0 = ((ab + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
        .exp();
    Ok(golub_welsch(&diag, &offdiag, mu0))
}

/// Gauss–Laguerre rule on `[0, ∞)` for the weight `e^{-x}`.
pub fn gauss_laguerre(n: usize) -> QuadRule {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let offdiag: Vec<f64> = (1..n).map(|k| k as f64).collect();
    golub_welsch(&diag, &offdiag, 1.0)
}

fn gl16() -> &'static QuadRule {
    static RULE: OnceLock<QuadRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Fixed-order Gauss–Legendre on `[a,b]`, generic over real/complex values.
pub fn integrate_gl<T, F>(a: f64, b: f64, n: usize, f: F) -> T
where
    T: Add<Output = T> + Default + Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    gauss_legendre(n).sum_on(a, b, f)
}

/// Adaptive Gauss–Legendre: bisects panels until the two-half refinement of
/// each panel agrees with the single-panel value to the requested tolerance
/// (relative to the running total, with an absolute floor).
pub fn integrate_adaptive<F>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_evaluations: usize,
) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let rule = gl16();
    let mut evaluations = 0usize;
    let mut stack: Vec<(f64, f64, f64)> = Vec::new();
    let coarse: f64 = rule.sum_on(a, b, &mut f);
    evaluations += rule.nodes.len();
    stack.push((a, b, coarse));
    let mut total: f64 = 0.0;
    let scale_hint = coarse.abs().max(1e-300);
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left: f64 = rule.sum_on(lo, mid, &mut f);
        let right: f64 = rule.sum_on(mid, hi, &mut f);
        evaluations += 2 * rule.nodes.len();
        let refined = left + right;
        let err = (refined - whole).abs();
        let tol = rel_tol * scale_hint.max(total.abs());
        if err <= tol.max(1e-300) || (hi - lo) < 1e-14 * (b - a).abs() {
            total += refined;
        } else {
            if evaluations > max_evaluations {
                return Err(QuadError::BudgetExceeded {
                    evaluations,
                    estimate: err,
                });
            }
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    Ok(total)
}

/// Adaptive Gauss–Legendre along the straight segment from `a` to `b` in
/// the complex plane, for complex-valued integrands analytic on the
/// segment.  Same bisection strategy as [`integrate_adaptive`], with the
/// error measured in the complex modulus.
pub fn integrate_adaptive_complex<F>(
    mut f: F,
    a: Complex64,
    b: Complex64,
    rel_tol: f64,
    max_evaluations: usize,
) -> Result<Complex64, QuadError>
where
    F: FnMut(Complex64) -> Complex64,
{
    let rule = gl16();
    let seg = b - a;
    let mut g = |s: f64| f(a + seg * s) * seg;
    let mut evaluations = 0usize;
    let mut stack: Vec<(f64, f64, Complex64)> = Vec::new();
    let coarse: Complex64 = rule.sum_on(0.0, 1.0, &mut g);
    evaluations += rule.nodes.len();
    stack.push((0.0, 1.0, coarse));
    let mut total = Complex64::default();
    let scale_hint = coarse.norm().max(1e-300);
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left: Complex64 = rule.sum_on(lo, mid, &mut g);
        let right: Complex64 = rule.sum_on(mid, hi, &mut g);
        evaluations += 2 * rule.nodes.len();
        let refined = left + right;
        let err = (refined - whole).norm();
        let tol = rel_tol * scale_hint.max(total.norm());
        if err <= tol.max(1e-300) || (hi - lo) < 1e-14 {
            total += refined;
        } else {
            if evaluations > max_evaluations {
                return Err(QuadError::BudgetExceeded {
                    evaluations,
                    estimate: err,
                });
            }
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    Ok(total)
}

/// Compensated (Kahan–Babuška) accumulator for long, slowly varying sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
