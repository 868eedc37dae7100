//! Dichotomy for series of the form `Σ aₙ·Sₙ^{δ−1}` with `Sₙ = a₁+…+aₙ`
//! and divergent `Σ aₙ`: the weighted series diverges for every `δ ≥ 0`
//! and converges for every `δ < 0`, with explicit certificates both ways.
//!
//! The convergent side is certified by the closed bound
//! `Σ_{k≥2} aₖ·Sₖ^{δ−1} ≤ a₁^δ/(−δ)` (compare each term with the integral
//! of `t^{δ−1}` over `[S_{k−1}, Sₖ]`); the divergent side by the
//! telescoping witness `Σ a_{k+1}/Sₖ ≥ ln S_N − ln a₁`, which grows
//! without bound whenever the plain sums do.
//!
//! ## Design
//!
//! - **Certificates over magnitudes.**  Divergence is never inferred from
//!   partial-sum size; the telescoping witness is compared against a
//!   caller-declared threshold, so arbitrarily slow divergence is still
//!   certified once the budget allows it, and an exhausted budget reports
//!   the witness reached instead of guessing.
//! - **Both convergence bounds.**  The proof bound `a₁^δ/(−δ)` covers the
//!   series from its second term; the first term contributes `a₁^δ`
//!   exactly, so the full series is bounded by their sum.  Reports carry
//!   both so either normalization can be checked.
//! - **Incremental caching.**  A probe extends its partial-sum table on
//!   demand with compensated accumulators; repeated queries at growing
//!   lengths never recompute earlier rows.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::quad::KahanSum;

/// Errors for weighted-series probes.
#[derive(Debug, Error)]
pub enum SeriesError {
    /// The term generator produced a non-positive value.
    #[error("term {index} is {value}, but all terms must be positive")]
    NonPositiveTerm { index: usize, value: f64 },
    /// The divergence witness did not reach the threshold within budget.
    #[error("witness {witness:.6} below threshold after {budget} terms")]
    BudgetExceeded { budget: usize, witness: f64 },
    /// The exponent must be a finite number.
    #[error("exponent delta = {value} is not finite")]
    NonFiniteDelta { value: f64 },
    /// A query asked for zero terms.
    #[error("partial-sum queries need at least one term")]
    EmptyRange,
    /// The convergence-inequality replay needs a negative exponent.
    #[error("replay needs delta < 0, got {delta}")]
    DeltaNotNegative { delta: f64 },
}

/// One row of the weighted partial-sum table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesPartial {
    /// Term index `n` (1-based).
    pub n: usize,
    /// The term `aₙ`.
    pub term: f64,
    /// Plain partial sum `Sₙ`.
    pub plain: f64,
    /// Weighted partial sum `Σ_{k≤n} aₖ·Sₖ^{δ−1}`.
    pub weighted: f64,
    /// Proof-side tail `Σ_{2≤k≤n} aₖ·Sₖ^{δ−1}` (the quantity the closed
    /// convergence bound controls).
    pub proof_tail: f64,
}

impl SeriesPartial {
    pub const CSV_HEADER: &'static str = "n,term,plain,weighted,proof_tail";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.n, self.term, self.plain, self.weighted, self.proof_tail
        )
    }
}

/// Writes partial-sum rows as CSV with the standard header.
pub fn write_partials_csv<W: Write>(
    mut out: W,
    rows: &[SeriesPartial],
) -> std::io::Result<()> {
    writeln!(out, "{}", SeriesPartial::CSV_HEADER)?;
    for row in rows {
        writeln!(out, "{}", row.csv_row())?;
    }
    Ok(())
}

/// Outcome of the dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SeriesClass {
    /// `δ ≥ 0`: the weighted series diverges; `witness` is the certified
    /// telescoping lower bound `ln S_N − ln a₁` at the first length `at`
    /// where it passed the threshold.
    Diverges { witness: f64, at: usize },
    /// `δ < 0`: the weighted series converges; `bound` controls the series
    /// from its second term, `full_bound = a₁^δ + bound` the whole series.
    Converges { bound: f64, full_bound: f64 },
}

/// Replay of the convergence proof's closed inequality at one length.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReplayReport {
    /// Length the inequality was evaluated at.
    pub n: usize,
    /// Left side `a₁^δ`.
    pub lhs: f64,
    /// Right side `S_N^δ + (−δ)·Σ_{2≤k≤N} aₖ·Sₖ^{δ−1}`.
    pub rhs: f64,
    /// `(lhs − rhs)/|lhs|`; nonnegative up to rounding.
    pub slack: f64,
}

/// A weighted-series probe: an exponent, a deterministic positive term
/// generator, and the partial sums computed so far.
pub struct SeriesProbe {
    delta: f64,
    terms: Box<dyn Fn(usize) -> f64 + Send + Sync>,
    partials: Vec<SeriesPartial>,
    plain: KahanSum,
    weighted: KahanSum,
    proof_tail: KahanSum,
}

impl std::fmt::Debug for SeriesProbe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeriesProbe")
            .field("delta", &self.delta)
            .field("computed", &self.partials.len())
            .finish()
    }
}

impl SeriesProbe {
    /// Creates a probe for exponent `delta` over the terms `aₙ =
    /// terms(n)` (1-based); terms are validated lazily as they are
    /// generated.
    pub fn new<F>(delta: f64, terms: F) -> Result<Self, SeriesError>
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        if !delta.is_finite() {
            return Err(SeriesError::NonFiniteDelta { value: delta });
        }
        Ok(SeriesProbe {
            delta,
            terms: Box::new(terms),
            partials: Vec::new(),
            plain: KahanSum::new(),
            weighted: KahanSum::new(),
            proof_tail: KahanSum::new(),
        })
    }

    /// The exponent `δ`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Extends the cached table through row `n`.
    fn extend(&mut self, n: usize) -> Result<(), SeriesError> {
        while self.partials.len() < n {
            let index = self.partials.len() + 1;
            let term = (self.terms)(index);
            if !(term > 0.0) || !term.is_finite() {
                return Err(SeriesError::NonPositiveTerm { index, value: term });
            }
            self.plain.add(term);
            let plain = self.plain.value();
            let increment = term * plain.powf(self.delta - 1.0);
            self.weighted.add(increment);
            if index > 1 {
                self.proof_tail.add(increment);
            }
            self.partials.push(SeriesPartial {
                n: index,
                term,
                plain,
                weighted: self.weighted.value(),
                proof_tail: self.proof_tail.value(),
            });
        }
        Ok(())
    }

    /// Weighted partial sums through `n`: row `k-1` carries `S_k` and the
    /// weighted sum through `k`.
    pub fn weighted_partial_sums(
        &mut self,
        n: usize,
    ) -> Result<&[SeriesPartial], SeriesError> {
        if n == 0 {
            return Err(SeriesError::EmptyRange);
        }
        self.extend(n)?;
        Ok(&self.partials[..n])
    }

    /// Certifies the dichotomy under the caller's hypothesis that the
    /// plain series diverges.
    ///
    /// For `δ < 0` the closed convergence bounds are returned
    /// unconditionally.  For `δ ≥ 0` the telescoping witness
    /// `ln S_N − ln a₁` is grown until it passes `threshold`; an exhausted
    /// `budget` reports the witness reached so far.
    pub fn classify_weighted_series(
        &mut self,
        budget: usize,
        threshold: f64,
    ) -> Result<SeriesClass, SeriesError> {
        if budget == 0 {
            return Err(SeriesError::EmptyRange);
        }
        self.extend(1)?;
        let a1 = self.partials[0].term;
        if self.delta < 0.0 {
            let bound = a1.powf(self.delta) / (-self.delta);
            return Ok(SeriesClass::Converges {
                bound,
                full_bound: a1.powf(self.delta) + bound,
            });
        }
        let log_a1 = a1.ln();
        for n in 1..=budget {
            self.extend(n)?;
            let witness = self.partials[n - 1].plain.ln() - log_a1;
            if witness > threshold {
                return Ok(SeriesClass::Diverges { witness, at: n });
            }
        }
        Err(SeriesError::BudgetExceeded {
            budget,
            witness: self.partials[budget - 1].plain.ln() - log_a1,
        })
    }

    /// Replays the convergence proof's inequality
    /// `a₁^δ ≥ S_N^δ + (−δ)·Σ_{2≤k≤N} aₖ·Sₖ^{δ−1}` at length `n`.
    pub fn replay_convergence_inequality(
        &mut self,
        n: usize,
    ) -> Result<ReplayReport, SeriesError> {
        if self.delta >= 0.0 {
            return Err(SeriesError::DeltaNotNegative { delta: self.delta });
        }
        if n == 0 {
            return Err(SeriesError::EmptyRange);
        }
        self.extend(n)?;
        let lhs = self.partials[0].term.powf(self.delta);
        let row = self.partials[n - 1];
        let rhs = row.plain.powf(self.delta) + (-self.delta) * row.proof_tail;
        Ok(ReplayReport {
            n,
            lhs,
            rhs,
            slack: (lhs - rhs) / lhs.abs(),
        })
    }
}
