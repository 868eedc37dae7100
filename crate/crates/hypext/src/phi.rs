//! Gauge functions `φ` — strictly increasing, unbounded weights used to
//! measure how fast hyperbolic distances blow up near the boundary — with
//! empirical quasi-subadditivity and quasi-linearity constants and a
//! certificate-based classifier for the tail integral `∫_{t₀}^∞ dt/φ(t)`.
//!
//! Two families are supported: the logarithmic scale
//! `φ_α(t) = t·(log(e+t))^α` with `α > 0`, and tabulated gauges (piecewise
//! linear through increasing knots, extended past the last knot by a
//! declared power law).  A [`PhiSpec`] is immutable after construction
//! except for a single cached subadditivity constant, so evaluations are
//! pure and safe to share across threads.
//!
//! Design points:
//!
//! * Constants are *measured*, not derived: [`PhiSpec::estimate_subadditivity_m`]
//!   maximizes `φ(s+t)/(φ(s)+φ(t))` over a declared log-uniform grid and
//!   caches the result with 5% headroom; tests certify the cached constant
//!   on fresh random grids.  The headroom is policy, stated here rather
//!   than hidden in callers.
//! * The tail classifier never guesses.  It accumulates octave windows
//!   `[t₀·2ᵏ, t₀·2ᵏ⁺¹]` and only declares a verdict when one of five
//!   explicit certificates fires (magnitude divergence, fitted power-law
//!   trend in the variable `u = log(e+t)` — two-block stability required —
//!   geometric window decay, or the declared table tail exponent); anything
//!   else is reported as [`TailClass::Inconclusive`] with the window count.
//! * Window ratios of the logarithmic family approach 1 from below
//!   (`w_{k+1}/w_k ≈ (k/(k+1))^α`), so geometric-decay tests alone cannot
//!   separate `α = 0.99` from `α = 1.01`.  The trend certificate fits the
//!   decay exponent `α̂` of `w_k` against `log u` on two consecutive blocks
//!   of 48 windows and requires agreement, with a deliberate dead band
//!   `α̂ ∈ (1.03, 1.05)` between the divergent and convergent calls.

use crate::quad::{integrate_gl, KahanSum};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::path::Path;
use std::sync::OnceLock;
use thiserror::Error;

/// Errors from gauge construction, estimation, and classification.
#[derive(Debug, Error)]
pub enum PhiError {
    /// The logarithmic family needs a strictly positive exponent.
    #[error("gauge exponent must be positive and finite, got {alpha}")]
    NonPositiveAlpha { alpha: f64 },
    /// Gauges are defined on `[0, ∞)` only.
    #[error("gauge argument must be nonnegative, got {t}")]
    NegativeArgument { t: f64 },
    /// A sampling pass saw the gauge fail to increase (defensive check).
    #[error("gauge is not strictly increasing: φ({smaller}) ≥ φ({larger})")]
    NotIncreasing { smaller: f64, larger: f64 },
    /// A tabulated gauge needs at least one knot with `t > 0`.
    #[error("tabulated gauge needs at least one knot with t > 0")]
    EmptyTable,
    /// Table knots must be finite, nonnegative, and strictly increasing in
    /// both coordinates.
    #[error("table knot {index} is not finite/strictly increasing")]
    BadKnots { index: usize },
    /// The declared tail power must keep the gauge increasing to infinity.
    #[error("table tail exponent must be positive and finite, got {exponent}")]
    NonPositiveTailExponent { exponent: f64 },
    /// The sampling plan is below the declared floor (10⁴ pairs, range to 10⁶).
    #[error("sampling plan too small: {pairs} pairs up to t_max {t_max:.3e} (need ≥ 10000 pairs, t_max ≥ 1e6, 0 < t_min < t_max)")]
    PlanTooSmall { pairs: usize, t_max: f64 },
    /// Quasi-linearity scale must be positive.
    #[error("scale must be positive and finite, got {a}")]
    NonPositiveScale { a: f64 },
    /// Tail classification starts at `t₀ ≥ 1`.
    #[error("tail integral starts at t0 ≥ 1, got {t0}")]
    BadTailStart { t0: f64 },
    /// Tail tolerance must lie in `(0, 1)`.
    #[error("tail tolerance must lie in (0, 1), got {tol}")]
    BadTolerance { tol: f64 },
    /// A `--phi` style flag was not `alpha:<value>` or `table:<path>`.
    #[error("gauge flag must be `alpha:<value>` or `table:<path>`, got `{flag}`")]
    BadFlag { flag: String },
    /// Reading a table file failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Parsing a table file failed.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The two supported gauge families.
#[derive(Debug, Clone)]
pub enum PhiFamily {
    /// `φ_α(t) = t·(log(e+t))^α`, `α > 0`.
    AlphaLog { alpha: f64 },
    /// Piecewise-linear through `knots` (normalized to start at `(0,0)`),
    /// extended for `t` past the last knot `(L, φ_L)` by
    /// `φ(t) = φ_L·(t/L)^p` with the declared exponent `p`.
    Table {
        knots: Vec<(f64, f64)>,
        tail_exponent: f64,
    },
}

/// A gauge function with an optional cached subadditivity constant.
///
/// Immutable after construction except for the one-shot constant cache, so
/// a `PhiSpec` can be shared freely; evaluation never mutates.
#[derive(Debug, Clone)]
pub struct PhiSpec {
    family: PhiFamily,
    m: OnceLock<f64>,
}

/// On-disk form of a tabulated gauge (`table:<path>` flags).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableFile {
    /// `(t, φ(t))` pairs, strictly increasing in both coordinates.
    pub knots: Vec<(f64, f64)>,
    /// Power-law exponent continuing the gauge past the last knot.
    pub tail_exponent: f64,
}

/// Log-uniform sampling plan for the constant estimators.
///
/// Axis values are `{0} ∪ logspace(t_min, t_max)` for the subadditivity
/// grid and `logspace(t_min, t_max)` for the quasi-linearity grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_axis: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e7,
            points_per_axis: 160,
        }
    }
}

impl SamplingPlan {
    /// Number of `(s, t)` pairs the plan declares.
    pub fn pairs(&self) -> usize {
        self.points_per_axis * self.points_per_axis
    }

    fn validate(&self) -> Result<(), PhiError> {
        let ok = self.t_min.is_finite()
            && self.t_min > 0.0
            && self.t_max.is_finite()
            && self.t_max > self.t_min
            && self.t_max >= 1e6
            && self.pairs() >= 10_000;
        if ok {
            Ok(())
        } else {
            Err(PhiError::PlanTooSmall {
                pairs: self.pairs(),
                t_max: self.t_max,
            })
        }
    }

    /// Log-uniform axis values, optionally with a leading zero.
    fn axis(&self, include_zero: bool) -> Vec<f64> {
        let n = self.points_per_axis;
        let mut values = Vec::with_capacity(n);
        if include_zero {
            values.push(0.0);
        }
        let count = n - usize::from(include_zero);
        let log_span = (self.t_max / self.t_min).ln();
        for i in 0..count {
            let frac = if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            values.push(self.t_min * (frac * log_span).exp());
        }
        values
    }
}

/// Verdict of the tail-integral classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailClass {
    /// The integral converges; `value` includes the certified tail
    /// extrapolation beyond the last computed window.
    Convergent { value: f64 },
    /// The integral diverges; the witness records how many octave windows
    /// were summed and the partial value they reached.
    Divergent { windows: usize, partial: f64 },
    /// No certificate fired within the window budget.
    Inconclusive { windows: usize },
}

/// Default number of octave windows for [`PhiSpec::classify_tail_integral`].
pub const DEFAULT_TAIL_WINDOWS: usize = 160;
/// Hard cap on octave windows (`2^980` stays finite in double precision).
pub const MAX_TAIL_WINDOWS: usize = 980;
/// Partial value past which non-decaying windows certify divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 50.0;

/// Nodes per octave window (each window spans one octave, with table
/// windows split at interior knots, so a fixed rule is ample).
const WINDOW_GL_NODES: usize = 16;
/// Windows per trend-fit block; two consecutive blocks must agree.
const TREND_BLOCK: usize = 48;
/// Earliest window index a trend block may start at (skips the region
/// where `log(e+t)` still feels the `e`).
const TREND_SKIP: usize = 8;
/// Maximum absolute log-residual for a trend block to count as a power law.
const TREND_RESIDUAL: f64 = 0.02;
/// Maximum disagreement between the two block exponents.
const TREND_STABILITY: f64 = 0.02;
/// Fitted decay exponents at or above this certify a convergent tail.
const TREND_CONVERGENT_AT: f64 = 1.05;
/// Fitted decay exponents at or below this certify a divergent tail.
const TREND_DIVERGENT_AT: f64 = 1.03;
/// Geometric-decay certificate: this many consecutive window ratios…
const GEOMETRIC_RUN: usize = 5;
/// …must stay below this ratio.
const GEOMETRIC_RATIO: f64 = 0.95;
/// Minimum windows before any non-magnitude verdict.
const MIN_VERDICT_WINDOWS: usize = 48;

impl PhiSpec {
    /// The logarithmic gauge `φ_α(t) = t·(log(e+t))^α`.
    pub fn alpha_log(alpha: f64) -> Result<Self, PhiError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(PhiError::NonPositiveAlpha { alpha });
        }
        Ok(Self {
            family: PhiFamily::AlphaLog { alpha },
            m: OnceLock::new(),
        })
    }

    /// A tabulated gauge: piecewise linear through `knots`, power-law
    /// `t^tail_exponent` past the last knot.  A `(0, 0)` knot is prepended
    /// when the first knot starts at `t > 0`.
    pub fn table(knots: Vec<(f64, f64)>, tail_exponent: f64) -> Result<Self, PhiError> {
        if !(tail_exponent.is_finite() && tail_exponent > 0.0) {
            return Err(PhiError::NonPositiveTailExponent {
                exponent: tail_exponent,
            });
        }
        let mut normalized = Vec::with_capacity(knots.len() + 1);
        normalized.push((0.0, 0.0));
        for (index, &(t, phi)) in knots.iter().enumerate() {
            if !(t.is_finite() && phi.is_finite() && t >= 0.0 && phi >= 0.0) {
                return Err(PhiError::BadKnots { index });
            }
            if t == 0.0 && phi == 0.0 && index == 0 {
                continue; // explicit origin knot; already present
            }
            let &(prev_t, prev_phi) = normalized.last().expect("origin knot present");
            if t <= prev_t || phi <= prev_phi {
                return Err(PhiError::BadKnots { index });
            }
            normalized.push((t, phi));
        }
        if normalized.len() < 2 {
            return Err(PhiError::EmptyTable);
        }
        Ok(Self {
            family: PhiFamily::Table {
                knots: normalized,
                tail_exponent,
            },
        m: OnceLock::new(),
        })
    }

    /// Parse a `--phi` style flag: `alpha:<value>` or `table:<path>`.
    pub fn from_flag(flag: &str) -> Result<Self, PhiError> {
        if let Some(value) = flag.strip_prefix("alpha:") {
            let alpha = value.trim().parse::<f64>().map_err(|_| PhiError::BadFlag {
                flag: flag.to_owned(),
            })?;
            return Self::alpha_log(alpha);
        }
        if let Some(path) = flag.strip_prefix("table:") {
            return Self::from_table_file(Path::new(path.trim()));
        }
        Err(PhiError::BadFlag {
            flag: flag.to_owned(),
        })
    }

    /// Load a tabulated gauge from a [`TableFile`] JSON document.
    pub fn from_table_file(path: &Path) -> Result<Self, PhiError> {
        let file: TableFile = serde_json::from_reader(std::fs::File::open(path)?)?;
        Self::table(file.knots, file.tail_exponent)
    }

    /// Which family this gauge belongs to.
    pub fn family(&self) -> &PhiFamily {
        &self.family
    }

    /// Evaluate `φ(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<f64, PhiError> {
        if !(t >= 0.0) {
            return Err(PhiError::NegativeArgument { t });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.family {
            PhiFamily::AlphaLog { alpha } => t * (E + t).ln().powf(*alpha),
            PhiFamily::Table {
                knots,
                tail_exponent,
            } => {
                let &(last_t, last_phi) = knots.last().expect("validated nonempty");
                if t > last_t {
                    return last_phi * (t / last_t).powf(*tail_exponent);
                }
                let hi = knots.partition_point(|&(kt, _)| kt < t).max(1);
                let (t0, p0) = knots[hi - 1];
                let (t1, p1) = knots[hi];
                p0 + (p1 - p0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// The cached subadditivity constant, if one has been estimated.
    pub fn subadditivity_constant(&self) -> Option<f64> {
        self.m.get().copied()
    }

    /// Maximize `φ(s+t)/(φ(s)+φ(t))` over the plan's grid (`0/0` pairs
    /// skipped) and cache `1.05·M̂` as the working constant.  Returns the
    /// raw grid maximum `M̂`; the first estimate wins the cache.
    pub fn estimate_subadditivity_m(&self, plan: &SamplingPlan) -> Result<f64, PhiError> {
        plan.validate()?;
        let values = plan.axis(true);
        let evals = self.eval_monotone(&values)?;
        let mut m_hat = 0.0_f64;
        for (i, (&s, &phi_s)) in values.iter().zip(&evals).enumerate() {
            for (&t, &phi_t) in values[i..].iter().zip(&evals[i..]) {
                let denominator = phi_s + phi_t;
                if denominator == 0.0 {
                    continue;
                }
                m_hat = m_hat.max(self.eval_unchecked(s + t) / denominator);
            }
        }
        let _ = self.m.set(1.05 * m_hat);
        Ok(m_hat)
    }

    /// Maximize `φ(a·x)/φ(x)` over the plan's (positive) grid.  Monotone
    /// gauges give values ≤ 1 for `a ≤ 1` and exactly 1 for `a = 1`.
    pub fn quasilinearity_constant(&self, a: f64, plan: &SamplingPlan) -> Result<f64, PhiError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(PhiError::NonPositiveScale { a });
        }
        plan.validate()?;
        let values = plan.axis(false);
        let evals = self.eval_monotone(&values)?;
        let mut c_hat = 0.0_f64;
        for (&x, &phi_x) in values.iter().zip(&evals) {
            c_hat = c_hat.max(self.eval_unchecked(a * x) / phi_x);
        }
        Ok(c_hat)
    }

    /// Evaluate the gauge on an ascending grid, verifying strict growth
    /// (defensive: both families are increasing by construction).
    fn eval_monotone(&self, ascending: &[f64]) -> Result<Vec<f64>, PhiError> {
        let mut out = Vec::with_capacity(ascending.len());
        for &t in ascending {
            out.push(self.eval(t)?);
        }
        for (pair_v, pair_t) in out.windows(2).zip(ascending.windows(2)) {
            if pair_v[1] <= pair_v[0] {
                return Err(PhiError::NotIncreasing {
                    smaller: pair_t[0],
                    larger: pair_t[1],
                });
            }
        }
        Ok(out)
    }

    /// Classify `∫_{t₀}^∞ dt/φ(t)` with the default window budget.
    pub fn classify_tail_integral(&self, t0: f64, tol: f64) -> Result<TailClass, PhiError> {
        self.classify_tail_integral_with_budget(t0, tol, DEFAULT_TAIL_WINDOWS)
    }

    /// Classify `∫_{t₀}^∞ dt/φ(t)` by accumulating octave windows
    /// `[t₀·2ᵏ, t₀·2ᵏ⁺¹]` until a certificate fires (see the module notes
    /// for the five certificates) or `budget` windows are exhausted.
    pub fn classify_tail_integral_with_budget(
        &self,
        t0: f64,
        tol: f64,
        budget: usize,
    ) -> Result<TailClass, PhiError> {
        if !(t0.is_finite() && t0 >= 1.0) {
            return Err(PhiError::BadTailStart { t0 });
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(PhiError::BadTolerance { tol });
        }
        let budget = budget.min(MAX_TAIL_WINDOWS);

        let mut partial = KahanSum::new();
        let mut windows: Vec<Window> = Vec::with_capacity(budget);
        for k in 0..budget {
            let lo = t0 * (k as f64).exp2();
            let hi = 2.0 * lo;
            if !hi.is_finite() {
                return Ok(TailClass::Inconclusive { windows: k });
            }
            let w = self.window_integral(lo, hi);
            partial.add(w);
            windows.push(Window {
                weight: w,
                ratio: windows.last().map(|prev| w / prev.weight),
                u_lo: (E + lo).ln(),
                u_hi: (E + hi).ln(),
            });

            if let Some(verdict) = self.window_verdict(t0, tol, &windows, partial.value()) {
                return Ok(verdict);
            }
        }
        Ok(TailClass::Inconclusive { windows: budget })
    }

    /// Apply the certificate cascade after the latest window.  `None`
    /// means keep summing.
    fn window_verdict(
        &self,
        t0: f64,
        tol: f64,
        windows: &[Window],
        partial: f64,
    ) -> Option<TailClass> {
        let count = windows.len();
        let w = windows.last().expect("at least one window").weight;
        let recent = windows.iter().rev().take(GEOMETRIC_RUN).filter_map(|win| win.ratio);
        let (mut run, mut min_ratio, mut max_ratio) = (0usize, f64::INFINITY, 0.0_f64);
        for r in recent {
            run += 1;
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
        }
        let full_run = run == GEOMETRIC_RUN;

        // Magnitude divergence: the partial blew past the threshold while
        // windows refuse to decay.
        if full_run && partial > DIVERGENCE_THRESHOLD && min_ratio >= GEOMETRIC_RATIO {
            return Some(TailClass::Divergent {
                windows: count,
                partial,
            });
        }

        // Trend certificate: two consecutive blocks of windows fit the same
        // power law in u = log(e+t).
        if count >= TREND_SKIP + 2 * TREND_BLOCK {
            let older = &windows[count - 2 * TREND_BLOCK..count - TREND_BLOCK];
            let newer = &windows[count - TREND_BLOCK..];
            if let (Some(old_alpha), Some(new_alpha)) = (fit_block(older), fit_block(newer)) {
                let stable = (old_alpha - new_alpha).abs() <= TREND_STABILITY;
                if stable && new_alpha >= TREND_CONVERGENT_AT {
                    // Tail of the fitted density c·u^{-α̂}, anchored on the
                    // last measured window: density ≈ w/Δu at its midpoint.
                    let last = windows.last().expect("at least one window");
                    let u_mid = 0.5 * (last.u_lo + last.u_hi);
                    let density = last.weight / (last.u_hi - last.u_lo);
                    let tail = density * u_mid.powf(new_alpha) * last.u_hi.powf(1.0 - new_alpha)
                        / (new_alpha - 1.0);
                    if w < tol * (partial + tail) {
                        return Some(TailClass::Convergent {
                            value: partial + tail,
                        });
                    }
                }
                if stable
                    && new_alpha <= TREND_DIVERGENT_AT
                    && full_run
                    && min_ratio >= GEOMETRIC_RATIO
                {
                    return Some(TailClass::Divergent {
                        windows: count,
                        partial,
                    });
                }
            }
        }

        if count < MIN_VERDICT_WINDOWS {
            return None;
        }

        // Geometric decay: sustained ratios below 0.95 allow a geometric
        // tail bound (exact when the decay really is geometric).
        if full_run && max_ratio < GEOMETRIC_RATIO {
            let tail = w * max_ratio / (1.0 - max_ratio);
            if w < tol * (partial + tail) {
                return Some(TailClass::Convergent {
                    value: partial + tail,
                });
            }
        }

        // Declared-exponent certificates for tabulated gauges: past the
        // last knot the reciprocal is exactly c·t^{-p}.
        if let PhiFamily::Table {
            knots,
            tail_exponent,
        } = &self.family
        {
            let &(last_t, last_phi) = knots.last().expect("validated nonempty");
            let lo = t0 * ((count - 1) as f64).exp2();
            if lo >= last_t {
                let p = *tail_exponent;
                if p > 1.0 {
                    let t_end = 2.0 * lo;
                    let tail = last_t.powf(p) / last_phi * t_end.powf(1.0 - p) / (p - 1.0);
                    if w < tol * (partial + tail) {
                        return Some(TailClass::Convergent {
                            value: partial + tail,
                        });
                    }
                } else {
                    return Some(TailClass::Divergent {
                        windows: count,
                        partial,
                    });
                }
            }
        }

        None
    }

    /// `∫_lo^hi dt/φ(t)` by Gauss–Legendre, split at table knots so every
    /// panel sees a smooth integrand.
    fn window_integral(&self, lo: f64, hi: f64) -> f64 {
        let mut cuts = vec![lo];
        if let PhiFamily::Table { knots, .. } = &self.family {
            cuts.extend(
                knots
                    .iter()
                    .map(|&(t, _)| t)
                    .filter(|&t| t > lo && t < hi),
            );
        }
        cuts.push(hi);
        let mut total = KahanSum::new();
        for pair in cuts.windows(2) {
            total.add(integrate_gl(pair[0], pair[1], WINDOW_GL_NODES, |t| {
                1.0 / self.eval_unchecked(t)
            }));
        }
        total.value()
    }
}

/// One accumulated octave window of `∫ dt/φ`.
struct Window {
    weight: f64,
    /// `weight / previous weight` (absent for the first window).
    ratio: Option<f64>,
    /// `log(e + lo)` at the window's left edge.
    u_lo: f64,
    /// `log(e + hi)` at the window's right edge.
    u_hi: f64,
}

/// Least-squares decay exponent of `log w` against `log u` over a block
/// (`w ≈ c·u^{-α̂}` per window); `None` when the block deviates from a
/// power law beyond the residual budget.
fn fit_block(block: &[Window]) -> Option<f64> {
    let xs: Vec<f64> = block
        .iter()
        .map(|w| (0.5 * (w.u_lo + w.u_hi)).ln())
        .collect();
    let ys: Vec<f64> = block.iter().map(|w| w.weight.ln()).collect();
    let n = block.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut variance = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        covariance += (x - mean_x) * (y - mean_y);
        variance += (x - mean_x) * (x - mean_x);
    }
    let slope = covariance / variance;
    let intercept = mean_y - slope * mean_x;
    let worst = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0_f64, f64::max);
    (worst < TREND_RESIDUAL).then_some(-slope)
}
