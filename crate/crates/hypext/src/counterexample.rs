//! Folded-trapezoid domains with gauge-integrable quasi-hyperbolic bulk and
//! unbounded internal diameter, plus the boundary parametrization whose
//! Sobolev extensions all fail the `W^{1,1}` energy test.
//!
//! The construction starts from a gauge `φ` whose reciprocal series
//! diverges and produces a chain of shrinking trapezoids whose lengths
//! `a_k = (1/φ(k))·S_k^{-2/3}` are square-summable against the gauge while
//! their plain sum diverges.  The chain is folded into a serpentine of
//! vertical runs so the truncated domain fits in a bounded box even though
//! walking the tube end to end takes arbitrarily long as the truncation
//! grows.  A monotone circle-to-boundary table then concentrates
//! geometrically shrinking source arcs onto stations deeper and deeper
//! inside the serpentine, so any disk extension must transport those arcs
//! over certified internal distances and its gradient integral diverges.
//!
//! ## Design
//!
//! - **Declared tail models.**  Infinite-tail quantities (the square-sum
//!   normalization, grouping thresholds) use a rigorous bracket
//!   `[partial, partial + 3/(φ(N+1)·S_N^{1/3})]` with the midpoint as the
//!   working value; the bracket is carried in the plan rather than being
//!   silently truncated.
//! - **Turn geometry.**  Runs are joined by two polygonalized
//!   quarter-annuli around a straight guard shelf.  The axis displacement
//!   `6·c·a(entering) + guard length` provably clears the neighbouring run
//!   tubes by twice the entering half-width, which the builder re-audits
//!   numerically ([`CounterexampleError::GuardViolated`] guards
//!   regressions, not expected geometry).
//! - **Gate bounds.**  Internal-distance lower bounds are certified by
//!   counting forced band crossings: every path from the cap to a station
//!   must cross each straight run it precedes, so summed run lengths bound
//!   the internal metric from below without any grid search.  Grid
//!   Dijkstra remains as a spot check on shallow truncations where the
//!   pitch can resolve the narrowest pipe.
//! - **Cheap integral bound.**  The quasi-hyperbolic integrand is bounded
//!   along elbow paths: centerline crossing costs accumulate per trapezoid
//!   and the lateral leg contributes a secant-corrected logarithm, so each
//!   trapezoid's gauge mass reduces to one exponential-weight quadrature.
//! - **Shared arc endpoint.**  The first two source arcs of the bad
//!   parametrization touch at `3π/4`, so the first target interval spans
//!   all stations up to the second interval's near end; every later arc is
//!   isolated and its target shrinks to a ball-sized station interval.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, JordanDomain, Point};
use crate::integrability::{radial_phi_integral, IntegrabilityError};
use crate::metrics::MetricsError;
use crate::phi::{PhiError, PhiSpec, TailClass};
use crate::quad::{gauss_legendre, KahanSum};

/// Segments polygonalizing the half-disk cap at the chain head.
pub const CAP_SEGMENTS: usize = 32;
/// Segments polygonalizing each quarter-annulus turn.
pub const TURN_SEGMENTS: usize = 8;
/// Smallest truncation index accepted by [`base_sequences`].
pub const MIN_TRUNCATION: usize = 64;
/// Increment threshold under which the weighted square sum is reported
/// stable.
pub const WEIGHTED_INCREMENT_FLOOR: f64 = 1e-8;
/// Required ratio of certified internal-distance growth to unfolded span.
pub const GATE_RATIO_FLOOR: f64 = 0.9;
/// Allowed disagreement factor between the cheap per-trapezoid bound and
/// grid Dijkstra at the spot-check points.
pub const SPOT_CHECK_FACTOR: f64 = 4.0;
/// Safety factor applied to the `4^n` thresholds when placing probe
/// intervals, absorbing the cap-side slack of the gate certificates.
pub const PROBE_GATE_MARGIN: f64 = 1.10;
/// Target scaled radius of an isolated probe interval's image, as a
/// fraction of its `4^n` threshold.
pub const LEVEL_BALL_FRACTION: f64 = 0.01;
/// A probe run is flagged divergent when every level adds at least this
/// much to the lower-bound partial sums.
pub const PROBE_DIVERGENCE_FLOOR: f64 = PI / 4.0;

/// Upper integration limit for the exponential-weight gauge quadratures
/// (`e^{-60}` is far below double-precision relevance for these gauges).
const GAUGE_QUAD_LIMIT: f64 = 60.0;
/// Nodes for the exponential-weight gauge quadratures.
const GAUGE_QUAD_NODES: usize = 64;
/// Sequence entries included in JSON dumps (the folded part of the plan;
/// full vectors can exceed a million entries and stay in memory only).
const JSON_HEAD: usize = 512;

fn serialize_head<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let cut = v.len().min(JSON_HEAD);
    let mut seq = s.serialize_seq(Some(cut))?;
    for x in &v[..cut] {
        seq.serialize_element(x)?;
    }
    seq.end()
}

/// Errors for the folded-domain construction and its probes.
#[derive(Debug, Error)]
pub enum CounterexampleError {
    /// The gauge's reciprocal series converges, so the trapezoid lengths
    /// would be summable and the construction inapplicable.
    #[error("gauge reciprocal series converges; construction needs divergence")]
    TailConvergent,
    /// The divergence pre-check could not certify either way.
    #[error("gauge tail classification inconclusive after {windows} windows")]
    TailUnclassified { windows: usize },
    /// The truncation cannot resolve the requested grouping depth.
    #[error("truncation {have} too short: grouping needs about {needed} terms")]
    TruncationTooShort { needed: usize, have: usize },
    /// A group contains no indices at this truncation.
    #[error("group {group} is empty at this truncation")]
    GroupExhausted { group: usize },
    /// The assembled boundary polygon crosses itself (construction bug
    /// guard; the audit re-checks what the layout already guarantees).
    #[error("layout polygon self-intersects near edges {first} and {second}")]
    SelfIntersection { first: usize, second: usize },
    /// Adjacent run tubes sit closer than the turn displacement promises.
    #[error("turn {turn}: clearance {clearance:.3e} below required {required:.3e}")]
    GuardViolated {
        turn: usize,
        clearance: f64,
        required: f64,
    },
    /// The scaled layout cannot certify the requested number of probe
    /// levels.
    #[error("requested {requested} probe levels but only {max_certifiable} certifiable")]
    InsufficientDepth {
        requested: usize,
        max_certifiable: usize,
    },
    /// A scalar argument is outside its documented range.
    #[error("parameter {name} = {value} out of range")]
    BadParameter { name: &'static str, value: f64 },
    /// Gauge evaluation failed.
    #[error(transparent)]
    Phi(#[from] PhiError),
    /// Geometry layer failure other than a self-intersection.
    #[error(transparent)]
    Geometry(GeometryError),
    /// Reference radial integral failed.
    #[error(transparent)]
    Integrability(#[from] IntegrabilityError),
    /// Grid metric failure during a spot check.
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl From<GeometryError> for CounterexampleError {
    fn from(err: GeometryError) -> Self {
        match err {
            GeometryError::SelfIntersecting { first, second } => {
                CounterexampleError::SelfIntersection { first, second }
            }
            other => CounterexampleError::Geometry(other),
        }
    }
}

/// Raw (unnormalized) construction sequences.
///
/// Index `k` is the subscript: `a[0] = 0` by convention, `a[k]` is the
/// length of trapezoid `k`, `b[k] = a_1 + … + a_{k-1}` its left abscissa,
/// and `partials[k]` the reciprocal-gauge partial sum through `k`.
#[derive(Debug, Clone, Serialize)]
pub struct BaseSequences {
    /// Trapezoid lengths, `a[0] = 0`.
    #[serde(rename = "a_head", serialize_with = "serialize_head")]
    pub a: Vec<f64>,
    /// Cumulative abscissas, `b[1] = 0`, length `truncation + 2`.
    #[serde(rename = "b_head", serialize_with = "serialize_head")]
    pub b: Vec<f64>,
    /// Partial sums of the reciprocal gauge, `partials[0] = 0`.
    #[serde(rename = "partials_head", serialize_with = "serialize_head")]
    pub partials: Vec<f64>,
    /// Largest consecutive ratio `a_k / a_{k+1}` over the truncation.
    pub ratio_bound: f64,
    /// Index attaining the ratio bound.
    pub ratio_argmax: usize,
    /// Number of computed terms.
    pub truncation: usize,
}

/// Builds the raw sequences after certifying that the reciprocal-gauge
/// series diverges.
pub fn base_sequences(
    spec: &PhiSpec,
    truncation: usize,
) -> Result<BaseSequences, CounterexampleError> {
    if truncation < MIN_TRUNCATION {
        return Err(CounterexampleError::BadParameter {
            name: "truncation",
            value: truncation as f64,
        });
    }
    match spec.classify_tail_integral(1.0, 1e-3)? {
        TailClass::Divergent { .. } => {}
        TailClass::Convergent { .. } => return Err(CounterexampleError::TailConvergent),
        TailClass::Inconclusive { windows } => {
            return Err(CounterexampleError::TailUnclassified { windows })
        }
    }

    let mut a = Vec::with_capacity(truncation + 1);
    let mut partials = Vec::with_capacity(truncation + 1);
    a.push(0.0);
    partials.push(0.0);
    let mut running = KahanSum::default();
    for k in 1..=truncation {
        let reciprocal = 1.0 / spec.eval(k as f64)?;
        running.add(reciprocal);
        let s = running.value();
        partials.push(s);
        a.push(reciprocal * s.powf(-2.0 / 3.0));
    }

    let mut b = Vec::with_capacity(truncation + 2);
    b.push(0.0);
    b.push(0.0);
    let mut acc = KahanSum::default();
    for k in 1..=truncation {
        acc.add(a[k]);
        b.push(acc.value());
    }

    let (mut ratio_bound, mut ratio_argmax) = (0.0, 1);
    for k in 1..truncation {
        let r = a[k] / a[k + 1];
        if r > ratio_bound {
            ratio_bound = r;
            ratio_argmax = k;
        }
    }

    Ok(BaseSequences {
        a,
        b,
        partials,
        ratio_bound,
        ratio_argmax,
        truncation,
    })
}

/// One straight run of a serpentine group: the greedy window of trapezoid
/// indices it carries, plus the guard indices consumed by the preceding
/// turn.
#[derive(Debug, Clone, Serialize)]
pub struct WindowPlan {
    /// First index handed to this window before guard consumption.
    pub anchor: usize,
    /// Indices consumed as guard material by the preceding turn.
    pub guard: usize,
    /// First index actually laid along the straight run.
    pub start: usize,
    /// Last index of the run (inclusive).
    pub end: usize,
    /// Length carried by the run, `Σ a_k` over `start..=end`.
    pub mass: f64,
    /// Length of the guard shelf, `Σ a_k` over `anchor..start`.
    pub guard_sum: f64,
    /// Whether the group continued past this window.
    pub interior: bool,
    /// Whether the mass landed in the `[target/2, 2·target]` band.
    pub satisfies_target: bool,
}

/// One serpentine group: a contiguous index range folded at a common
/// length target `l = 2^{-n}`.
#[derive(Debug, Clone, Serialize)]
pub struct GroupPlan {
    /// Group number `n` (1-based).
    pub index: usize,
    /// Per-run length target `2^{-n}`.
    pub target: f64,
    /// First trapezoid index of the group.
    pub first: usize,
    /// Last trapezoid index of the group (inclusive).
    pub last: usize,
    /// Straight runs with their guards.
    pub windows: Vec<WindowPlan>,
    /// Square mass `Σ a_k²` over the group (normalized lengths).
    pub square_mass: f64,
    /// Set when the grouping indices coincided and this group was folded
    /// into its successor.
    pub merged_into_next: bool,
}

/// The normalized construction plan: sequences, grouping, and per-group
/// run windows, ready to be folded into a polygon.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexamplePlan {
    /// The gauge driving the construction.
    #[serde(skip)]
    pub phi: PhiSpec,
    /// Number of computed sequence terms.
    pub truncation: usize,
    /// Normalization factor applied to the raw lengths.
    pub rho: f64,
    /// Rigorous bracket for the raw square sum (partial, partial + tail).
    pub square_sum_bracket: (f64, f64),
    /// Declared square tail beyond the truncation, in normalized units.
    pub square_tail: f64,
    /// Normalized lengths, `a[0] = 0`.
    #[serde(rename = "a_head", serialize_with = "serialize_head")]
    pub a: Vec<f64>,
    /// Normalized cumulative abscissas, `b[1] = 0`.
    #[serde(rename = "b_head", serialize_with = "serialize_head")]
    pub b: Vec<f64>,
    /// Raw reciprocal-gauge partial sums (for certified tail bounds).
    #[serde(rename = "partials_head", serialize_with = "serialize_head")]
    pub partials: Vec<f64>,
    /// Largest consecutive ratio and its index.
    pub ratio_bound: f64,
    /// Index attaining the ratio bound.
    pub ratio_argmax: usize,
    /// Grouping indices `i_1 ≤ i_2 ≤ …` (group `n` spans
    /// `i_n + 1 ..= i_{n+1}`), length `groups + 1`.
    pub i: Vec<usize>,
    /// Per-group run plans.
    pub groups: Vec<GroupPlan>,
}

/// Maximal index whose square-sum suffix (computed terms plus the declared
/// tail) still reaches each quarter-power threshold.
///
/// `a` is the normalized length sequence (`a[0] = 0`), `declared_tail` the
/// normalized square mass assumed beyond the truncation, and the returned
/// vector has `groups + 1` entries so every group has both edges.
pub fn grouping_indices(
    a: &[f64],
    declared_tail: f64,
    groups: usize,
) -> Result<Vec<usize>, CounterexampleError> {
    let n_max = a.len() - 1;
    let mut suffix = vec![0.0; n_max + 2];
    let mut acc = KahanSum::default();
    acc.add(declared_tail);
    suffix[n_max + 1] = acc.value();
    for k in (1..=n_max).rev() {
        acc.add(a[k] * a[k]);
        suffix[k] = acc.value();
    }

    let mut indices = Vec::with_capacity(groups + 1);
    for n in 1..=groups + 1 {
        let threshold = (1.0 / 3.0) * 4.0f64.powi(-(n as i32));
        // Thresholds inside twice the tail cannot be located reliably.
        if threshold <= 2.0 * declared_tail {
            return Err(CounterexampleError::TruncationTooShort {
                needed: 4 * n_max,
                have: n_max,
            });
        }
        let mut idx = *indices.last().unwrap_or(&1);
        while idx + 1 <= n_max && suffix[idx + 1] >= threshold {
            idx += 1;
        }
        if idx + 1 > n_max {
            return Err(CounterexampleError::TruncationTooShort {
                needed: 4 * n_max,
                have: n_max,
            });
        }
        indices.push(idx);
    }
    Ok(indices)
}

/// Greedy run windows and guards for one contiguous index range at length
/// target `target`.
///
/// Each window is the shortest prefix of the remaining indices whose mass
/// reaches `target / 2`; each guard is the shortest following prefix whose
/// length, added to three times the entering width scale, covers the
/// previous window's opening width.  The final window may fall short of
/// the target.
pub fn segment_plan(
    a: &[f64],
    ratio_bound: f64,
    first: usize,
    last: usize,
    target: f64,
) -> Result<Vec<WindowPlan>, CounterexampleError> {
    if first > last || last >= a.len() {
        return Err(CounterexampleError::GroupExhausted { group: 0 });
    }
    let mut windows: Vec<WindowPlan> = Vec::new();
    let mut next = first;
    let mut prev_anchor: Option<usize> = None;
    while next <= last {
        let anchor = next;
        let (mut guard, mut guard_sum) = (0usize, 0.0);
        if let Some(prev) = prev_anchor {
            while 3.0 * ratio_bound * a[anchor] + guard_sum < ratio_bound * a[prev]
                && anchor + guard <= last
            {
                guard_sum += a[anchor + guard];
                guard += 1;
            }
        }
        let start = anchor + guard;
        if start > last {
            windows.push(WindowPlan {
                anchor,
                guard,
                start,
                end: last,
                mass: 0.0,
                guard_sum,
                interior: false,
                satisfies_target: false,
            });
            break;
        }
        let mut mass = 0.0;
        let mut end = start;
        loop {
            mass += a[end];
            if mass >= target / 2.0 || end == last {
                break;
            }
            end += 1;
        }
        windows.push(WindowPlan {
            anchor,
            guard,
            start,
            end,
            mass,
            guard_sum,
            interior: end < last,
            satisfies_target: mass >= target / 2.0 && mass <= 2.0 * target,
        });
        prev_anchor = Some(anchor);
        next = end + 1;
    }
    Ok(windows)
}

impl CounterexamplePlan {
    /// Builds the full normalized plan: raw sequences, square-sum
    /// normalization with its declared tail, grouping indices, and greedy
    /// run windows for `groups` groups.
    pub fn new(
        spec: &PhiSpec,
        truncation: usize,
        groups: usize,
    ) -> Result<Self, CounterexampleError> {
        if groups == 0 {
            return Err(CounterexampleError::BadParameter {
                name: "groups",
                value: 0.0,
            });
        }
        let base = base_sequences(spec, truncation)?;

        let mut sq = KahanSum::default();
        for k in 1..=truncation {
            sq.add(base.a[k] * base.a[k]);
        }
        let partial_sq = sq.value();
        let s_n = base.partials[truncation];
        let tail_raw = 3.0 / (spec.eval((truncation + 1) as f64)? * s_n.powf(1.0 / 3.0));
        let total_mid = partial_sq + 0.5 * tail_raw;
        let rho = ((1.0 / 3.0) / total_mid).sqrt();
        let rho2 = rho * rho;

        let a: Vec<f64> = base.a.iter().map(|&x| x * rho).collect();
        let b: Vec<f64> = base.b.iter().map(|&x| x * rho).collect();
        let declared_tail = 0.5 * tail_raw * rho2;

        let i = grouping_indices(&a, declared_tail, groups)?;

        let mut group_plans = Vec::with_capacity(groups);
        for n in 1..=groups {
            let first = i[n - 1] + 1;
            let last = i[n];
            let target = 2.0f64.powi(-(n as i32));
            if first > last {
                group_plans.push(GroupPlan {
                    index: n,
                    target,
                    first,
                    last,
                    windows: Vec::new(),
                    square_mass: 0.0,
                    merged_into_next: true,
                });
                continue;
            }
            let windows = segment_plan(&a, base.ratio_bound, first, last, target)
                .map_err(|_| CounterexampleError::GroupExhausted { group: n })?;
            let mut mass = KahanSum::default();
            for k in first..=last {
                mass.add(a[k] * a[k]);
            }
            group_plans.push(GroupPlan {
                index: n,
                target,
                first,
                last,
                windows,
                square_mass: mass.value(),
                merged_into_next: false,
            });
        }

        Ok(CounterexamplePlan {
            phi: spec.clone(),
            truncation,
            rho,
            square_sum_bracket: (partial_sq, partial_sq + tail_raw),
            square_tail: declared_tail,
            a,
            b,
            partials: base.partials,
            ratio_bound: base.ratio_bound,
            ratio_argmax: base.ratio_argmax,
            i,
            groups: group_plans,
        })
    }

    /// JSON dump of the plan (sequences included; the gauge is described
    /// by the caller's configuration, not serialized).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// One straight centerline span of the folded layout.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpan {
    /// Owning group (0 for the horizontal prefix trapezoid).
    pub group: usize,
    /// Window index within the group.
    pub window: usize,
    /// Centerline chainage interval of the run.
    pub chain: (f64, f64),
    /// Certified distance accumulated before this run starts.
    pub gate: f64,
    /// Run length (its window mass).
    pub length: f64,
    /// Axis coordinate: `x` of a vertical run, `y` of the prefix.
    pub axis: f64,
    /// Entering half-width.
    pub half_width: f64,
    /// True for vertical runs, false for the horizontal prefix.
    pub vertical: bool,
    /// Anchor index whose width scale sized the preceding turn.
    pub anchor: usize,
}

#[derive(Debug, Clone, Copy)]
struct Knot {
    pos: Point,
    chain: f64,
    half_width: f64,
}

#[derive(Debug, Clone, Copy)]
struct Extent {
    min: Point,
    max: Point,
}

impl Extent {
    fn empty() -> Self {
        Extent {
            min: Point {
                x: f64::INFINITY,
                y: f64::INFINITY,
            },
            max: Point {
                x: f64::NEG_INFINITY,
                y: f64::NEG_INFINITY,
            },
        }
    }

    fn include(&mut self, p: Point, pad: f64) {
        self.min.x = self.min.x.min(p.x - pad);
        self.min.y = self.min.y.min(p.y - pad);
        self.max.x = self.max.x.max(p.x + pad);
        self.max.y = self.max.y.max(p.y + pad);
    }
}

/// The folded serpentine: boundary polygon, per-group realized extents,
/// straight-run table, and the certified-distance bookkeeping.
#[derive(Debug, Clone)]
pub struct FoldedLayout {
    /// The boundary polygon (validated simple and counterclockwise).
    pub domain: JordanDomain,
    /// Realized horizontal extent per group, `widths[n-1]` for group `n`.
    pub widths: Vec<f64>,
    /// Realized vertical extent per group.
    pub heights: Vec<f64>,
    /// Radius of the polygonalized half-disk cap.
    pub cap_radius: f64,
    /// Straight centerline spans in traversal order (prefix first).
    pub runs: Vec<RunSpan>,
    /// Total certified distance from the cap to the tube end.
    pub total_gate: f64,
    /// Number of folded groups.
    pub groups: usize,
    /// Smallest audited clearance margin between facing runs, as a
    /// fraction of the required clearance.
    pub clearance_margin: f64,
    knots: Vec<Knot>,
    stations: Vec<f64>,
    end_station: f64,
}

struct PathBuilder {
    pos: Point,
    dir: Point,
    chain: f64,
    knots: Vec<Knot>,
}

impl PathBuilder {
    fn new(half_width: f64) -> Self {
        let mut knots = Vec::new();
        knots.push(Knot {
            pos: Point { x: 0.0, y: 0.0 },
            chain: 0.0,
            half_width,
        });
        PathBuilder {
            pos: Point { x: 0.0, y: 0.0 },
            dir: Point { x: 1.0, y: 0.0 },
            chain: 0.0,
            knots,
        }
    }

    fn straight(&mut self, len: f64, half_width_end: f64) {
        self.pos = Point {
            x: self.pos.x + self.dir.x * len,
            y: self.pos.y + self.dir.y * len,
        };
        self.chain += len;
        self.knots.push(Knot {
            pos: self.pos,
            chain: self.chain,
            half_width: half_width_end,
        });
    }

    /// Appends a polygonalized quarter-annulus turn of centerline radius
    /// `radius`, counterclockwise when `ccw`, at constant half-width.
    fn quarter(&mut self, radius: f64, ccw: bool, half_width: f64) {
        let sign = if ccw { 1.0 } else { -1.0 };
        let normal = Point {
            x: -self.dir.y,
            y: self.dir.x,
        };
        let center = Point {
            x: self.pos.x + sign * radius * normal.x,
            y: self.pos.y + sign * radius * normal.y,
        };
        let start = (self.pos.y - center.y).atan2(self.pos.x - center.x);
        for step in 1..=TURN_SEGMENTS {
            let angle = start + sign * (PI / 2.0) * step as f64 / TURN_SEGMENTS as f64;
            let next = Point {
                x: center.x + radius * angle.cos(),
                y: center.y + radius * angle.sin(),
            };
            self.chain += self.pos.dist(next);
            self.pos = next;
            self.knots.push(Knot {
                pos: next,
                chain: self.chain,
                half_width,
            });
        }
        self.dir = if ccw {
            Point {
                x: -self.dir.y,
                y: self.dir.x,
            }
        } else {
            Point {
                x: self.dir.y,
                y: -self.dir.x,
            }
        };
    }
}

/// Miter-offset walls of a variable-width polyline.
fn offset_walls(knots: &[Knot]) -> (Vec<Point>, Vec<Point>) {
    let n = knots.len();
    let seg_dir = |i: usize| -> Point {
        let d = knots[i + 1].pos - knots[i].pos;
        d.normalized()
    };
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let (d_prev, d_next) = if i == 0 {
            let d = seg_dir(0);
            (d, d)
        } else if i == n - 1 {
            let d = seg_dir(n - 2);
            (d, d)
        } else {
            (seg_dir(i - 1), seg_dir(i))
        };
        let mut miter = Point {
            x: d_prev.x + d_next.x,
            y: d_prev.y + d_next.y,
        };
        miter = miter.normalized();
        let cos_half = ((1.0 + d_prev.dot(d_next)) / 2.0).sqrt().max(0.5);
        let normal = Point {
            x: -miter.y,
            y: miter.x,
        };
        let reach = knots[i].half_width / cos_half;
        left.push(Point {
            x: knots[i].pos.x + reach * normal.x,
            y: knots[i].pos.y + reach * normal.y,
        });
        right.push(Point {
            x: knots[i].pos.x - reach * normal.x,
            y: knots[i].pos.y - reach * normal.y,
        });
    }
    (left, right)
}

/// Folds the first `groups` groups of a plan into the serpentine polygon.
pub fn fold_layout(
    plan: &CounterexamplePlan,
    groups: usize,
) -> Result<FoldedLayout, CounterexampleError> {
    if groups == 0 || groups > plan.groups.len() {
        return Err(CounterexampleError::BadParameter {
            name: "groups",
            value: groups as f64,
        });
    }
    let a = &plan.a;
    let cm = plan.ratio_bound;
    let cap_radius = cm * a[1];
    let last_index = plan.i[groups];
    let end_half_width = cm * a[last_index + 1];

    let mut builder = PathBuilder::new(cap_radius);
    let mut runs: Vec<RunSpan> = Vec::new();
    let mut extents = vec![Extent::empty(); groups + 1];
    let mut gate = 0.0;

    // Horizontal prefix trapezoid (index 1).
    let chain0 = builder.chain;
    builder.straight(a[1], cm * a[2]);
    runs.push(RunSpan {
        group: 0,
        window: 0,
        chain: (chain0, builder.chain),
        gate,
        length: a[1],
        axis: 0.0,
        half_width: cap_radius,
        vertical: false,
        anchor: 1,
    });
    gate += a[1];
    extents[0].include(Point { x: 0.0, y: 0.0 }, cap_radius);
    extents[0].include(builder.pos, cm * a[2]);

    let mut descending = true;
    let mut first_turn = true;
    let mut prev_run_start_index = 1usize;

    for group in plan.groups.iter().take(groups) {
        if group.merged_into_next {
            continue;
        }
        for (w_idx, window) in group.windows.iter().enumerate() {
            if window.start > window.end || window.mass == 0.0 {
                continue;
            }
            let radius = 3.0 * cm * a[window.anchor];
            let entering = cm * a[window.anchor];
            // Minimum displacement that clears the previous run's opening
            // width by twice the entering half-width.
            let required_shift =
                cm * a[prev_run_start_index] + 3.0 * cm * a[window.start];
            let mark = builder.knots.len();
            if first_turn {
                builder.quarter(radius, false, entering);
                first_turn = false;
            } else {
                let natural = 2.0 * radius + window.guard_sum;
                let extra = (required_shift - natural).max(0.0);
                builder.quarter(radius, descending, entering);
                // Guard shelf: the guard trapezoids laid straight, plus any
                // widening needed by the clearance rule.
                let mut shelf_hw = entering;
                for k in window.anchor..window.start {
                    shelf_hw = cm * a[k + 1];
                    builder.straight(a[k], shelf_hw);
                }
                if extra > 0.0 {
                    builder.straight(extra, shelf_hw);
                }
                builder.quarter(radius, descending, cm * a[window.start]);
                descending = !descending;
            }
            for knot in &builder.knots[mark..] {
                extents[group.index].include(knot.pos, knot.half_width);
            }

            let axis = builder.pos.x;
            let chain_lo = builder.chain;
            let run_hw = cm * a[window.start];
            for k in window.start..=window.end {
                builder.straight(a[k], cm * a[k + 1]);
            }
            for knot in &builder.knots[builder.knots.len() - (window.end - window.start + 1)..]
            {
                extents[group.index].include(knot.pos, knot.half_width);
            }
            extents[group.index].include(
                Point {
                    x: axis,
                    y: builder.knots[builder.knots.len() - (window.end - window.start + 1)]
                        .pos
                        .y,
                },
                run_hw,
            );
            runs.push(RunSpan {
                group: group.index,
                window: w_idx,
                chain: (chain_lo, builder.chain),
                gate,
                length: window.mass,
                axis,
                half_width: run_hw,
                vertical: true,
                anchor: window.anchor,
            });
            gate += window.mass;
            prev_run_start_index = window.start;
        }
    }

    // Clearance audit between consecutive vertical runs.
    let mut clearance_margin = f64::INFINITY;
    let vertical: Vec<&RunSpan> = runs.iter().filter(|r| r.vertical).collect();
    for (turn, pair) in vertical.windows(2).enumerate() {
        let gap = (pair[1].axis - pair[0].axis) - pair[0].half_width - pair[1].half_width;
        let required = 2.0 * cm * a[pair[1].anchor];
        let margin = gap / required;
        if margin < clearance_margin {
            clearance_margin = margin;
        }
        if gap < required * (1.0 - 1e-9) {
            return Err(CounterexampleError::GuardViolated {
                turn,
                clearance: gap,
                required,
            });
        }
    }
    if vertical.len() < 2 {
        clearance_margin = 1.0;
    }

    // Per-group realized extents.
    let mut widths = Vec::with_capacity(groups);
    let mut heights = Vec::with_capacity(groups);
    for g in 1..=groups {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for run in runs.iter().filter(|r| r.group == g) {
            lo = lo.min(run.axis - run.half_width);
            hi = hi.max(run.axis + run.half_width);
        }
        if lo > hi {
            widths.push(0.0);
            heights.push(0.0);
            continue;
        }
        widths.push(hi - lo);
        let e = &extents[g];
        heights.push(e.max.y - e.min.y);
    }

    // Assemble the boundary polygon: right wall forward, end cap, left
    // wall backward, cap arc.
    let (left, right) = offset_walls(&builder.knots);
    let wall_len = right.len();
    let mut vertices = Vec::with_capacity(2 * wall_len + CAP_SEGMENTS);
    vertices.extend_from_slice(&right);
    vertices.extend(left.iter().rev().copied());
    for step in 1..CAP_SEGMENTS {
        let angle = PI / 2.0 + PI * step as f64 / CAP_SEGMENTS as f64;
        vertices.push(Point {
            x: cap_radius * angle.cos(),
            y: cap_radius * angle.sin(),
        });
    }
    let domain = JordanDomain::new(vertices, end_half_width)?;
    debug_assert!(
        domain.vertices()[0].dist(right[0]) < 1e-12 * cap_radius,
        "polygon orientation flipped during validation"
    );

    let cumulative = domain.cumulative_lengths();
    let stations: Vec<f64> = cumulative[..wall_len].to_vec();
    let end_station = cumulative[wall_len - 1]
        + 0.5 * domain.vertices()[wall_len - 1].dist(domain.vertices()[wall_len % domain.vertices().len()]);

    Ok(FoldedLayout {
        domain,
        widths,
        heights,
        cap_radius,
        runs,
        total_gate: gate,
        groups,
        clearance_margin,
        knots: builder.knots,
        stations,
        end_station,
    })
}

impl FoldedLayout {
    /// Certified internal-distance lower bound from the cap center to the
    /// tube point at centerline chainage `chain`: completed run lengths
    /// plus partial progress through the containing run.
    pub fn gate_for_chain(&self, chain: f64) -> f64 {
        let mut gate = 0.0;
        for run in &self.runs {
            if chain < run.chain.0 {
                return gate;
            }
            if chain <= run.chain.1 {
                return run.gate + (chain - run.chain.0);
            }
            gate = run.gate + run.length;
        }
        gate
    }

    /// Inverse of [`Self::gate_for_chain`]: the first chainage whose gate
    /// reaches `gate`, or `None` past the reachable total.
    pub fn chain_for_gate(&self, gate: f64) -> Option<f64> {
        if gate <= 0.0 {
            return Some(0.0);
        }
        for run in &self.runs {
            if gate <= run.gate + run.length {
                return Some(run.chain.0 + (gate - run.gate));
            }
        }
        None
    }

    /// Boundary station (polygon arc length) of the tube-side wall point
    /// at centerline chainage `chain`.
    pub fn station_for_chain(&self, chain: f64) -> f64 {
        let clamped = chain.clamp(0.0, self.knots.last().map(|k| k.chain).unwrap_or(0.0));
        let mut lo = 0;
        let mut hi = self.knots.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid].chain <= clamped {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let span = self.knots[hi].chain - self.knots[lo].chain;
        let frac = if span > 0.0 {
            (clamped - self.knots[lo].chain) / span
        } else {
            0.0
        };
        self.stations[lo] + frac * (self.stations[hi] - self.stations[lo])
    }

    /// Station of the tube end (midpoint of the end cap).
    pub fn end_station(&self) -> f64 {
        self.end_station
    }
}

/// Convergence report for the gauge-weighted square sums.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedSumsReport {
    /// Kahan partial sum `Σ a_k² φ(k)` through the truncation.
    pub partial: f64,
    /// Certified bound on the remaining tail.
    pub tail_bound: f64,
    /// First index beyond which every computed increment stays under
    /// [`WEIGHTED_INCREMENT_FLOOR`].
    pub stable_from: Option<usize>,
    /// Spot increment: `(index, a_index² φ(index))` at the report
    /// checkpoint.
    pub checkpoint: (usize, f64),
    /// Whether the tail bound certifies convergence of the full series.
    pub converged: bool,
}

/// Per-group certified-growth entry of the diameter report.
#[derive(Debug, Clone, Serialize)]
pub struct GateGrowth {
    /// Group number.
    pub group: usize,
    /// Certified internal-distance increment over the group.
    pub gate_increment: f64,
    /// Unfolded span covered by the group.
    pub span: f64,
    /// `gate_increment / span`.
    pub ratio: f64,
}

/// Certified internal-diameter growth per folded group.
#[derive(Debug, Clone, Serialize)]
pub struct DiameterGrowthReport {
    /// Per-group growth entries.
    pub per_group: Vec<GateGrowth>,
    /// Worst per-group ratio.
    pub min_ratio: f64,
    /// Total certified distance, cap to tube end.
    pub total_gate: f64,
}

/// One spot comparison of the cheap integrand bound against grid
/// Dijkstra.
#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    /// Trapezoid index probed.
    pub trapezoid: usize,
    /// Cheap elbow-path bound at the probe point.
    pub cheap: f64,
    /// Grid quasi-hyperbolic distance at the probe point.
    pub grid: f64,
    /// `max(cheap/grid, grid/cheap)`.
    pub ratio: f64,
}

/// Per-trapezoid gauge mass of the quasi-hyperbolic integrand.
#[derive(Debug, Clone, Serialize)]
pub struct TrapezoidIntegral {
    /// Trapezoid index.
    pub index: usize,
    /// Cheap upper bound for the gauge mass over the trapezoid.
    pub value: f64,
    /// Reference combination `a² φ(index) + a² · (radial integral)`.
    pub reference: f64,
    /// `value / reference`.
    pub ratio: f64,
}

/// Gauge integral of the quasi-hyperbolic distance over the unfolded
/// chain, bounded trapezoid by trapezoid.
#[derive(Debug, Clone, Serialize)]
pub struct ChainIntegralReport {
    /// Sum of the per-trapezoid bounds.
    pub total: f64,
    /// Largest per-trapezoid ratio against the reference combination.
    pub empirical_constant: f64,
    /// `Σ a_k² φ(k)` over the folded indices.
    pub weighted_square_sum: f64,
    /// Reference radial gauge integral.
    pub radial_integral: f64,
    /// The first few per-trapezoid entries, for inspection.
    pub head: Vec<TrapezoidIntegral>,
    /// Grid Dijkstra spot checks (empty when disabled).
    pub spot_checks: Vec<SpotCheck>,
}

/// The three verification sub-reports for a folded truncation.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// Convergence of the gauge-weighted square sums.
    pub weighted: WeightedSumsReport,
    /// Certified internal-diameter growth per group.
    pub diameter: DiameterGrowthReport,
    /// Bounded gauge integral of the quasi-hyperbolic distance.
    pub integral: ChainIntegralReport,
}

impl VerificationReport {
    /// JSON dump of all three sub-reports.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Builds the unfolded chain polygon (cap plus trapezoids `1..=count`).
pub fn unfolded_chain(
    plan: &CounterexamplePlan,
    count: usize,
) -> Result<JordanDomain, CounterexampleError> {
    if count == 0 || count + 1 >= plan.a.len() {
        return Err(CounterexampleError::BadParameter {
            name: "count",
            value: count as f64,
        });
    }
    let cm = plan.ratio_bound;
    let cap = cm * plan.a[1];
    let mut vertices = Vec::with_capacity(2 * count + CAP_SEGMENTS + 2);
    for k in 1..=count + 1 {
        vertices.push(Point {
            x: plan.b[k],
            y: -cm * plan.a[k],
        });
    }
    for k in (1..=count + 1).rev() {
        vertices.push(Point {
            x: plan.b[k],
            y: cm * plan.a[k],
        });
    }
    for step in 1..CAP_SEGMENTS {
        let angle = PI / 2.0 + PI * step as f64 / CAP_SEGMENTS as f64;
        vertices.push(Point {
            x: cap * angle.cos(),
            y: cap * angle.sin(),
        });
    }
    Ok(JordanDomain::new(vertices, cm * plan.a[count + 1])?)
}

/// Gauge mass of `φ(bound + u)` under the normalized exponential weight
/// `e^{-u/σ}/σ`, by fixed Gauss–Legendre quadrature.
fn gauge_exponential_mass(
    spec: &PhiSpec,
    bound: f64,
    sigma: f64,
) -> Result<f64, CounterexampleError> {
    let rule = gauss_legendre(GAUGE_QUAD_NODES);
    let mut sum = KahanSum::default();
    for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let u = 0.5 * GAUGE_QUAD_LIMIT * (x + 1.0);
        let jac = 0.5 * GAUGE_QUAD_LIMIT * w;
        sum.add(spec.eval(bound + u)? * (-u / sigma).exp() / sigma * jac);
    }
    Ok(sum.value())
}

/// Runs the three verification sub-reports.
///
/// `pitch` controls the optional grid spot checks of the cheap integrand
/// bound (pass `0.0` to skip them); `checkpoint` is the index whose
/// weighted increment is quoted in the first sub-report.
pub fn verify_counterexample(
    plan: &CounterexamplePlan,
    layout: &FoldedLayout,
    pitch: f64,
    checkpoint: usize,
) -> Result<VerificationReport, CounterexampleError> {
    let spec = &plan.phi;
    let n_max = plan.truncation;
    let checkpoint = checkpoint.clamp(1, n_max);

    // Sub-report 1: gauge-weighted square sums.
    let mut sum = KahanSum::default();
    let mut last_large = 0usize;
    let mut checkpoint_increment = 0.0;
    for k in 1..=n_max {
        let w = plan.a[k] * plan.a[k] * spec.eval(k as f64)?;
        sum.add(w);
        if w >= WEIGHTED_INCREMENT_FLOOR {
            last_large = k;
        }
        if k == checkpoint {
            checkpoint_increment = w;
        }
    }
    let rho2 = plan.rho * plan.rho;
    let tail_bound = 3.0 * rho2 * plan.partials[n_max].powf(-1.0 / 3.0);
    let weighted = WeightedSumsReport {
        partial: sum.value(),
        tail_bound,
        stable_from: if last_large < n_max {
            Some(last_large + 1)
        } else {
            None
        },
        checkpoint: (checkpoint, checkpoint_increment),
        converged: tail_bound.is_finite() && last_large < n_max,
    };

    // Sub-report 2: certified diameter growth per group.
    let mut per_group = Vec::with_capacity(layout.groups);
    let mut min_ratio = f64::INFINITY;
    for group in plan.groups.iter().take(layout.groups) {
        let gate_increment: f64 = layout
            .runs
            .iter()
            .filter(|r| r.group == group.index)
            .map(|r| r.length)
            .sum();
        let span = plan.b[group.last + 1] - plan.b[group.first];
        let ratio = if span > 0.0 { gate_increment / span } else { 1.0 };
        min_ratio = min_ratio.min(ratio);
        per_group.push(GateGrowth {
            group: group.index,
            gate_increment,
            span,
            ratio,
        });
    }
    let diameter = DiameterGrowthReport {
        per_group,
        min_ratio,
        total_gate: layout.total_gate,
    };

    // Sub-report 3: cheap integrand bound, trapezoid by trapezoid.
    let last_index = plan.i[layout.groups];
    let cm = plan.ratio_bound;
    let radial = radial_phi_integral(spec, 1e-9)?;
    let mut crossing = 0.0; // centerline crossing cost through earlier trapezoids
    let mut total = KahanSum::default();
    let mut weighted_sq = KahanSum::default();
    let mut empirical = 0.0f64;
    let mut head = Vec::new();
    let mut crossing_at = vec![0.0; last_index + 2];
    let mut secants = vec![1.0; last_index + 2];
    for k in 1..=last_index {
        let (ak, ak1) = (plan.a[k], plan.a[k + 1]);
        let slope = cm * (ak - ak1) / ak;
        let secant = (1.0 + slope * slope).sqrt();
        secants[k] = secant;
        let q = ak / ak1;
        let step = if (q - 1.0).abs() < 1e-12 {
            secant / cm
        } else {
            secant * (q / (q - 1.0)) * q.ln() / cm
        };
        crossing += step;
        crossing_at[k] = crossing;
        let mass = gauge_exponential_mass(spec, crossing, secant)?;
        let value = cm * ak * (ak + ak1) * mass;
        let reference = ak * ak * (spec.eval(k as f64)? + radial);
        let ratio = value / reference;
        empirical = empirical.max(ratio);
        total.add(value);
        weighted_sq.add(ak * ak * spec.eval(k as f64)?);
        if head.len() < 5 {
            head.push(TrapezoidIntegral {
                index: k,
                value,
                reference,
                ratio,
            });
        }
    }

    let mut spot_checks = Vec::new();
    if pitch > 0.0 {
        let count = 5.min(last_index);
        let chain = unfolded_chain(plan, count)?;
        let graph = crate::geometry::GridGraph::build(&chain, pitch)?;
        let base = Point { x: 0.0, y: 0.0 };
        for k in 1..=3.min(count) {
            let mid_hw = cm * (plan.a[k] + plan.a[k + 1]) / 2.0;
            let probe = Point {
                x: plan.b[k] + plan.a[k] / 2.0,
                y: mid_hw / 2.0,
            };
            let cheap = crossing_at[k] - 0.5 * (crossing_at[k] - crossing_at[k - 1])
                + secants[k] * 2.0f64.ln();
            let grid =
                crate::metrics::quasi_hyperbolic_distance_on(&graph, base, probe)?;
            let ratio = (cheap / grid).max(grid / cheap);
            spot_checks.push(SpotCheck {
                trapezoid: k,
                cheap,
                grid,
                ratio,
            });
        }
    }

    let integral = ChainIntegralReport {
        total: total.value(),
        empirical_constant: empirical,
        weighted_square_sum: weighted_sq.value(),
        radial_integral: radial,
        head,
        spot_checks,
    };

    Ok(VerificationReport {
        weighted,
        diameter,
        integral,
    })
}

/// One certified level of the bad parametrization: a geometrically
/// shrinking source arc and its target station interval deep inside the
/// serpentine.
#[derive(Debug, Clone, Serialize)]
pub struct LevelInterval {
    /// Level number `n`.
    pub n: usize,
    /// Internal-distance threshold `4^n` this level certifies.
    pub threshold: f64,
    /// Source arc `[π - π/2ⁿ, π - π/2ⁿ + π/4ⁿ]` on the circle.
    pub source: (f64, f64),
    /// Target station interval on the scaled boundary.
    pub station: (f64, f64),
    /// Certified scaled internal distance from the cap to the interval's
    /// near end.
    pub certified: f64,
    /// Half the station length of the target (bounds the image's
    /// Euclidean radius).
    pub ball_radius: f64,
}

/// The monotone circle-to-boundary table concentrating shrinking arcs at
/// certified depths.
#[derive(Debug, Clone, Serialize)]
pub struct BadParametrizationPlan {
    /// Accumulation angle of the source arcs.
    pub omega0: f64,
    /// Similarity factor applied to the layout.
    pub scale: f64,
    /// Scaled boundary perimeter.
    pub perimeter: f64,
    /// Scaled station of the tube end (the accumulation target).
    pub end_station: f64,
    /// Certified levels in increasing depth.
    pub levels: Vec<LevelInterval>,
    /// Strictly increasing `(angle, station)` knots, from `(0, 0)` to
    /// `(2π, perimeter)`.
    pub table: Vec<(f64, f64)>,
}

impl BadParametrizationPlan {
    /// Piecewise-linear station for a circle angle in `[0, 2π]`.
    pub fn angle_to_station(&self, angle: f64) -> f64 {
        let theta = angle.clamp(0.0, 2.0 * PI);
        let mut lo = 0;
        let mut hi = self.table.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.table[mid].0 <= theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, s0) = self.table[lo];
        let (t1, s1) = self.table[hi];
        if t1 <= t0 {
            return s0;
        }
        s0 + (theta - t0) / (t1 - t0) * (s1 - s0)
    }

    /// JSON dump of the parametrization plan.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Source arc `[π - π/2ⁿ, π - π/2ⁿ + π/4ⁿ]` of level `n`.
fn source_arc(n: usize) -> (f64, f64) {
    let start = PI - PI / 2.0f64.powi(n as i32);
    (start, start + PI / 4.0f64.powi(n as i32))
}

/// Builds the bad parametrization over a scaled copy of the layout.
///
/// `scale` multiplies all distances; level `n` certifies the threshold
/// `4^n` when the scaled gate reaches `PROBE_GATE_MARGIN · 4^n`.  Requests
/// beyond the reachable depth fail with the honest maximum.
pub fn bad_parametrization(
    layout: &FoldedLayout,
    scale: f64,
    levels: usize,
) -> Result<BadParametrizationPlan, CounterexampleError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CounterexampleError::BadParameter {
            name: "scale",
            value: scale,
        });
    }
    if levels == 0 {
        return Err(CounterexampleError::BadParameter {
            name: "levels",
            value: 0.0,
        });
    }
    let mut max_certifiable = 0usize;
    while PROBE_GATE_MARGIN * 4.0f64.powi(max_certifiable as i32 + 1)
        <= scale * layout.total_gate
    {
        max_certifiable += 1;
    }
    if levels > max_certifiable {
        return Err(CounterexampleError::InsufficientDepth {
            requested: levels,
            max_certifiable,
        });
    }

    // Near ends at the gate thresholds.
    let mut near_station = Vec::with_capacity(levels);
    for n in 1..=levels {
        let gate = PROBE_GATE_MARGIN * 4.0f64.powi(n as i32) / scale;
        let chain = layout
            .chain_for_gate(gate)
            .expect("threshold below certified total");
        near_station.push(scale * layout.station_for_chain(chain));
    }
    let end_station = scale * layout.end_station();
    let perimeter = scale * layout.domain.perimeter();

    let mut intervals = Vec::with_capacity(levels);
    for n in 1..=levels {
        let near = near_station[n - 1];
        let source = source_arc(n);
        let next_limit = if n < levels {
            near_station[n]
        } else {
            end_station
        };
        let touches_next = n < levels && {
            let next_source = source_arc(n + 1);
            (source.1 - next_source.0).abs() < 1e-12
        };
        let far = if touches_next {
            next_limit
        } else {
            let desired = near + 2.0 * LEVEL_BALL_FRACTION * 4.0f64.powi(n as i32);
            desired.min(0.5 * (near + next_limit))
        };
        intervals.push(LevelInterval {
            n,
            threshold: 4.0f64.powi(n as i32),
            source,
            station: (near, far),
            certified: PROBE_GATE_MARGIN * 4.0f64.powi(n as i32),
            ball_radius: 0.5 * (far - near),
        });
    }

    let mut table = vec![(0.0, 0.0)];
    for level in &intervals {
        let last = *table.last().expect("table starts nonempty");
        if (level.source.0 - last.0).abs() < 1e-12 {
            debug_assert!(
                (level.station.0 - last.1).abs() < 1e-9 * perimeter.max(1.0),
                "adjacent arcs must share their station"
            );
        } else {
            table.push((level.source.0, level.station.0));
        }
        table.push((level.source.1, level.station.1));
    }
    table.push((PI, end_station));
    table.push((2.0 * PI, perimeter));
    debug_assert!(
        table
            .windows(2)
            .all(|w| w[1].0 > w[0].0 - 1e-15 && w[1].1 > w[0].1),
        "angle table must increase strictly"
    );

    Ok(BadParametrizationPlan {
        omega0: PI,
        scale,
        perimeter,
        end_station,
        levels: intervals,
        table,
    })
}

/// One level's contribution to the gradient-integral lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeLevel {
    /// Level number.
    pub n: usize,
    /// Source arc measure `π/4ⁿ`.
    pub arc_measure: f64,
    /// Certified (or measured) internal distance to the level's target.
    pub distance: f64,
    /// `arc_measure · distance`.
    pub lower_bound: f64,
    /// Quadrature of the candidate's radial derivative over the arc, when
    /// a candidate was supplied.
    pub radial_estimate: Option<f64>,
    /// Partial sum of the lower bounds through this level.
    pub partial: f64,
}

/// Lower-bound series for the gradient integral of boundary extensions.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    /// Inner radius whose factor multiplies the series in the final
    /// energy bound.
    pub eta: f64,
    /// Per-level contributions.
    pub levels: Vec<ProbeLevel>,
    /// Levels requested beyond the plan's certified depth.
    pub excluded: usize,
    /// Set when at least two levels each add at least
    /// [`PROBE_DIVERGENCE_FLOOR`].
    pub diverging: bool,
}

impl ProbeReport {
    /// JSON dump of the probe report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Evaluates the lower-bound series `Σ |A_n| · d_n` over the plan's
/// certified levels, optionally quadrating a candidate extension's radial
/// derivative over each source arc.
///
/// The candidate maps polar disk coordinates `(r, θ)` to the plane; its
/// image curves from the `eta`-circle to the boundary are what any
/// integrable extension must realize, so `eta · Σ` bounds its gradient
/// integral from below.  Levels past the certified depth are excluded and
/// counted, never extrapolated.
pub fn w11_lowerbound_probe(
    plan: &BadParametrizationPlan,
    candidate: Option<&dyn Fn(f64, f64) -> Point>,
    eta: f64,
    levels: usize,
) -> Result<ProbeReport, CounterexampleError> {
    if !(0.0 < eta && eta < 1.0) {
        return Err(CounterexampleError::BadParameter { name: "eta", value: eta });
    }
    if levels == 0 {
        return Err(CounterexampleError::BadParameter {
            name: "levels",
            value: 0.0,
        });
    }
    let used = levels.min(plan.levels.len());
    let excluded = levels - used;
    let rule = gauss_legendre(16);
    let mut partial = KahanSum::default();
    let mut out = Vec::with_capacity(used);
    let mut min_increment = f64::INFINITY;
    for level in plan.levels.iter().take(used) {
        let measure = level.source.1 - level.source.0;
        let lower = measure * level.certified;
        min_increment = min_increment.min(lower);
        partial.add(lower);
        let radial_estimate = match candidate {
            None => None,
            Some(map) => {
                let mut theta_sum = KahanSum::default();
                for (&xt, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
                    let theta =
                        0.5 * (level.source.0 + level.source.1) + 0.5 * measure * xt;
                    let mut r_sum = KahanSum::default();
                    for (&xr, &wr) in rule.nodes.iter().zip(rule.weights.iter()) {
                        let r = 0.5 * (eta + 1.0) + 0.5 * (1.0 - eta) * xr;
                        let h = 1e-5 * (1.0 - r) + 1e-9;
                        let plus = map(r + h, theta);
                        let minus = map(r - h, theta);
                        let speed = plus.dist(minus) / (2.0 * h);
                        r_sum.add(speed * r * 0.5 * (1.0 - eta) * wr);
                    }
                    theta_sum.add(r_sum.value() * 0.5 * measure * wt);
                }
                Some(theta_sum.value())
            }
        };
        out.push(ProbeLevel {
            n: level.n,
            arc_measure: measure,
            distance: level.certified,
            lower_bound: lower,
            radial_estimate,
            partial: partial.value(),
        });
    }
    let diverging = out.len() >= 2 && min_increment >= PROBE_DIVERGENCE_FLOOR;
    Ok(ProbeReport {
        eta,
        levels: out,
        excluded,
        diverging,
    })
}

/// Reference probe on a well-behaved domain: the same source arcs, a
/// constant-speed boundary table, and grid-measured internal distances.
///
/// On a bounded-diameter domain the measured distances stay bounded, so
/// the per-level contributions decay like the arc measures and the series
/// converges — the contrast case for [`w11_lowerbound_probe`].
pub fn smooth_comparison_probe(
    domain: &JordanDomain,
    base: Point,
    levels: usize,
    pitch: f64,
) -> Result<ProbeReport, CounterexampleError> {
    if levels == 0 {
        return Err(CounterexampleError::BadParameter {
            name: "levels",
            value: 0.0,
        });
    }
    if !(pitch > 0.0) {
        return Err(CounterexampleError::BadParameter {
            name: "pitch",
            value: pitch,
        });
    }
    let graph = crate::geometry::GridGraph::build(domain, pitch)?;
    let perimeter = domain.perimeter();
    let (lo, hi) = domain.bbox();
    let centroid = Point {
        x: 0.5 * (lo.x + hi.x),
        y: 0.5 * (lo.y + hi.y),
    };
    let mut partial = KahanSum::default();
    let mut out = Vec::with_capacity(levels);
    let mut min_increment = f64::INFINITY;
    for n in 1..=levels {
        let source = source_arc(n);
        let measure = source.1 - source.0;
        let mid_station = (source.0 + 0.5 * measure) / (2.0 * PI) * perimeter;
        let on_boundary = domain.point_at_arclength(mid_station);
        let inward = (centroid - on_boundary).normalized();
        let probe = Point {
            x: on_boundary.x + 2.0 * pitch * inward.x,
            y: on_boundary.y + 2.0 * pitch * inward.y,
        };
        let distance = graph.distance(base, probe, crate::geometry::EdgeWeight::Euclidean)?;
        let lower = measure * distance;
        min_increment = min_increment.min(lower);
        partial.add(lower);
        out.push(ProbeLevel {
            n,
            arc_measure: measure,
            distance,
            lower_bound: lower,
            radial_estimate: None,
            partial: partial.value(),
        });
    }
    let diverging = out.len() >= 2 && min_increment >= PROBE_DIVERGENCE_FLOOR;
    Ok(ProbeReport {
        eta: 0.0,
        levels: out,
        excluded: 0,
        diverging,
    })
}

/// SVG rendering of the unfolded chain (cap plus the first `count`
/// trapezoids).
pub fn unfolded_chain_svg(
    plan: &CounterexamplePlan,
    count: usize,
) -> Result<String, CounterexampleError> {
    use num_complex::Complex64;
    let domain = unfolded_chain(plan, count)?;
    let outline: Vec<Complex64> = domain
        .vertices()
        .iter()
        .map(|v| Complex64::new(v.x, v.y))
        .collect();
    let mut scene = crate::svg::SvgScene::fitting(&outline);
    let width = 0.003 * scene.extent();
    scene.polygon(&outline, "#333333", width);
    let cm = plan.ratio_bound;
    for k in 1..=count {
        let x = plan.b[k];
        scene.polyline(
            &[
                Complex64::new(x, -cm * plan.a[k]),
                Complex64::new(x, cm * plan.a[k]),
            ],
            "#1f77b4",
            0.5 * width,
        );
    }
    Ok(scene.render())
}

/// SVG rendering of the folded serpentine with its centerline.
pub fn folded_layout_svg(layout: &FoldedLayout) -> String {
    use num_complex::Complex64;
    let outline: Vec<Complex64> = layout
        .domain
        .vertices()
        .iter()
        .map(|v| Complex64::new(v.x, v.y))
        .collect();
    let center: Vec<Complex64> = layout
        .knots
        .iter()
        .map(|k| Complex64::new(k.pos.x, k.pos.y))
        .collect();
    let mut scene = crate::svg::SvgScene::fitting(&outline);
    let width = 0.003 * scene.extent();
    scene.polygon(&outline, "#333333", width);
    scene.polyline(&center, "#d62728", 0.5 * width);
    scene.dot(Complex64::new(0.0, 0.0), 1.5 * width, "#2ca02c");
    scene.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn close(x: f64, y: f64, rel: f64) -> bool {
        (x - y).abs() <= rel * y.abs().max(1.0)
    }

    fn alpha_one() -> PhiSpec {
        PhiSpec::alpha_log(1.0).expect("alpha gauge")
    }

    fn fixture() -> &'static (CounterexamplePlan, FoldedLayout) {
        static CELL: OnceLock<(CounterexamplePlan, FoldedLayout)> = OnceLock::new();
        CELL.get_or_init(|| {
            let plan = CounterexamplePlan::new(&alpha_one(), 1 << 20, 6).expect("plan");
            let layout = fold_layout(&plan, 6).expect("layout");
            (plan, layout)
        })
    }

    fn report() -> &'static VerificationReport {
        static CELL: OnceLock<VerificationReport> = OnceLock::new();
        CELL.get_or_init(|| {
            let (plan, layout) = fixture();
            verify_counterexample(plan, layout, 0.02, 100_000).expect("report")
        })
    }

    #[test]
    fn base_rejects_short_truncation() {
        assert!(matches!(
            base_sequences(&alpha_one(), 8),
            Err(CounterexampleError::BadParameter { name: "truncation", .. })
        ));
    }

    #[test]
    fn base_rejects_convergent_gauge() {
        let spec = PhiSpec::alpha_log(2.0).expect("alpha gauge");
        assert!(matches!(
            base_sequences(&spec, 4096),
            Err(CounterexampleError::TailConvergent)
        ));
        assert!(matches!(
            CounterexamplePlan::new(&spec, 4096, 3),
            Err(CounterexampleError::TailConvergent)
        ));
    }

    #[test]
    fn base_matches_frozen_head() {
        let (plan, _) = fixture();
        let raw_a1 = plan.a[1] / plan.rho;
        assert!(close(raw_a1, 0.913_165_668_123_342_2, 1e-12), "a1 = {raw_a1}");
        assert!(
            close(plan.ratio_bound, 2.989_510_680_582_718, 1e-12),
            "ratio bound = {}",
            plan.ratio_bound
        );
        assert_eq!(plan.ratio_argmax, 1);
        assert!(
            close(plan.partials[plan.truncation], 3.530_646_523_446_314_7, 1e-12),
            "S_N = {}",
            plan.partials[plan.truncation]
        );
    }

    #[test]
    fn base_monotone_invariants() {
        let (plan, _) = fixture();
        for k in 1..plan.truncation.min(20_000) {
            assert!(plan.a[k] > 0.0);
            assert!(plan.a[k + 1] <= plan.a[k] * (1.0 + 1e-12));
            assert!(plan.a[k] / plan.a[k + 1] <= plan.ratio_bound * (1.0 + 1e-12));
            assert!(close(plan.b[k + 1] - plan.b[k], plan.a[k], 1e-9));
        }
        assert_eq!(plan.b[1], 0.0);
    }

    #[test]
    fn plan_normalization_frozen() {
        let (plan, _) = fixture();
        assert!(close(plan.rho, 0.582_597_024_543_882_1, 1e-12), "rho = {}", plan.rho);
        assert!(close(plan.a[1], 0.532_007_601_164_285_2, 1e-12), "A1 = {}", plan.a[1]);
        assert!(
            close(plan.square_sum_bracket.0, 0.982_069_426_220_581_6, 1e-12),
            "bracket low = {}",
            plan.square_sum_bracket.0
        );
        let width = plan.square_sum_bracket.1 - plan.square_sum_bracket.0;
        assert!(close(width, 1.355_336_953_461_668e-7, 1e-9), "width = {width}");
        assert!(close(plan.square_tail, 0.5 * width * plan.rho * plan.rho, 1e-12));
        // The normalized square sum (midpoint model) is exactly one third.
        let mid = 0.5 * (plan.square_sum_bracket.0 + plan.square_sum_bracket.1);
        assert!(close(mid * plan.rho * plan.rho, 1.0 / 3.0, 1e-12));
    }

    #[test]
    fn plan_grouping_frozen() {
        let (plan, _) = fixture();
        assert_eq!(plan.i, vec![1, 2, 5, 10, 23, 55, 139]);
    }

    #[test]
    fn plan_windows_frozen() {
        let (plan, _) = fixture();
        let spans = |n: usize| -> Vec<(usize, usize)> {
            plan.groups[n - 1]
                .windows
                .iter()
                .map(|w| (w.start, w.end))
                .collect()
        };
        assert_eq!(spans(4), vec![(11, 13), (14, 17), (18, 23)]);
        assert_eq!(spans(5), vec![(24, 27), (28, 32), (33, 38), (39, 46), (47, 55)]);
        assert_eq!(
            spans(6),
            vec![
                (56, 61),
                (62, 68),
                (69, 76),
                (77, 85),
                (86, 95),
                (96, 107),
                (108, 121),
                (122, 137),
                (138, 139)
            ]
        );
        for group in &plan.groups {
            for window in &group.windows {
                assert_eq!(window.guard, 0, "alpha=1 run needs no guards");
                assert_eq!(window.anchor, window.start);
            }
        }
    }

    #[test]
    fn plan_interior_windows_hit_band() {
        let (plan, _) = fixture();
        for group in &plan.groups {
            for window in &group.windows {
                if window.interior {
                    assert!(
                        window.satisfies_target,
                        "group {} window at {} mass {} target {}",
                        group.index,
                        window.start,
                        window.mass,
                        group.target
                    );
                }
                assert!(window.mass <= 2.0 * group.target);
            }
        }
    }

    #[test]
    fn plan_group_square_mass_bounded() {
        let (plan, _) = fixture();
        for group in &plan.groups {
            let bound = 4.0f64.powi(1 - group.index as i32);
            assert!(
                group.square_mass <= bound,
                "group {}: {} > {}",
                group.index,
                group.square_mass,
                bound
            );
        }
    }

    #[test]
    fn plan_rejects_zero_groups() {
        assert!(matches!(
            CounterexamplePlan::new(&alpha_one(), 1 << 10, 0),
            Err(CounterexampleError::BadParameter { name: "groups", .. })
        ));
    }

    #[test]
    fn grouping_handles_coincident_thresholds() {
        // One huge square followed by dust: two thresholds land on the
        // same index.
        let mut a = vec![0.0, 0.57];
        a.extend(std::iter::repeat(0.02).take(40));
        let i = grouping_indices(&a, 1e-9, 2).expect("grouping");
        assert_eq!(i.len(), 3);
        assert_eq!(i[0], i[1], "coincident grouping indices expected");
    }

    #[test]
    fn grouping_rejects_fat_tail() {
        let a = vec![0.0, 0.5, 0.4, 0.3];
        assert!(matches!(
            grouping_indices(&a, 0.2, 3),
            Err(CounterexampleError::TruncationTooShort { .. })
        ));
    }

    #[test]
    fn segment_plan_inserts_guards_for_steep_drops() {
        // A long first trapezoid then unit dust forces guard material
        // after the first fold.
        let mut a = vec![0.0, 4.0];
        a.extend(std::iter::repeat(1.0).take(12));
        let windows = segment_plan(&a, 4.0, 1, 13, 4.0).expect("windows");
        assert_eq!(windows[0].start, 1);
        assert_eq!(windows[0].end, 1);
        let second = &windows[1];
        assert_eq!(second.anchor, 2);
        assert_eq!(second.guard, 4, "3*4*1 + 4 = 16 >= 4*4");
        assert_eq!(second.start, 6);
        assert!(close(second.guard_sum, 4.0, 1e-12));
        // Guarded fold still clears: shift >= previous width scale.
        assert!(3.0 * 4.0 * a[second.anchor] + second.guard_sum >= 4.0 * a[1]);
    }

    #[test]
    fn segment_plan_rejects_empty_range() {
        let a = vec![0.0, 1.0, 0.5];
        assert!(matches!(
            segment_plan(&a, 2.0, 3, 2, 1.0),
            Err(CounterexampleError::GroupExhausted { .. })
        ));
    }

    #[test]
    fn fold_widths_match_frozen() {
        let (_, layout) = fixture();
        let frozen = [
            1.064_015_202_328_570_5,
            1.192_115_024_561_139_6,
            0.479_004_736_890_340_45,
            0.354_985_106_777_438_05,
            0.213_676_239_087_810_42,
            0.123_914_191_394_702,
        ];
        for (got, want) in layout.widths.iter().zip(frozen.iter()) {
            assert!(close(*got, *want, 1e-9), "width {got} vs {want}");
        }
    }

    #[test]
    fn fold_heights_within_budget() {
        let (plan, layout) = fixture();
        for (idx, height) in layout.heights.iter().enumerate() {
            let budget = 8.0 * plan.ratio_bound * 2.0f64.powi(-(idx as i32 + 1));
            assert!(*height > 0.0);
            assert!(*height <= budget, "group {} height {height} > {budget}", idx + 1);
        }
    }

    #[test]
    fn fold_gates_match_frozen() {
        let (_, layout) = fixture();
        let frozen = [
            0.709_965_687_957_467_7,
            0.909_045_206_034_793_1,
            1.023_709_408_403_136_8,
            1.127_965_877_628_152_7,
            1.209_656_970_942_870_8,
            1.276_376_869_471_727_2,
        ];
        for (g, want) in (1..=6).zip(frozen.iter()) {
            let got: f64 = layout
                .runs
                .iter()
                .filter(|r| r.group <= g)
                .map(|r| r.length)
                .sum();
            assert!(close(got, *want, 1e-9), "gate through group {g}: {got} vs {want}");
        }
        assert!(close(layout.total_gate, frozen[5], 1e-12));
    }

    #[test]
    fn fold_clearance_margin_comfortable() {
        let (_, layout) = fixture();
        assert!(layout.clearance_margin >= 1.0, "margin {}", layout.clearance_margin);
    }

    #[test]
    fn fold_polygon_is_audited_and_ccw() {
        let (plan, layout) = fixture();
        assert_eq!(layout.domain.vertices().len(), 999);
        assert!(layout.domain.area() > 0.0);
        let first = layout.domain.vertices()[0];
        assert!(close(first.x, 0.0, 1e-12));
        assert!(close(first.y, -plan.ratio_bound * plan.a[1], 1e-12));
    }

    #[test]
    fn fold_rejects_out_of_range_groups() {
        let (plan, _) = fixture();
        assert!(matches!(
            fold_layout(plan, 7),
            Err(CounterexampleError::BadParameter { name: "groups", .. })
        ));
    }

    #[test]
    fn fold_skips_merged_groups() {
        let a = vec![0.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.025];
        let mut b = vec![0.0, 0.0];
        for k in 1..a.len() - 1 {
            b.push(b[k] + a[k]);
        }
        let windows = segment_plan(&a, 2.0, 2, 5, 0.5).expect("windows");
        let plan = CounterexamplePlan {
            phi: alpha_one(),
            truncation: 7,
            rho: 1.0,
            square_sum_bracket: (0.0, 0.0),
            square_tail: 0.0,
            a: a.clone(),
            b,
            partials: (0..=7).map(|k| k as f64).collect(),
            ratio_bound: 2.0,
            ratio_argmax: 4,
            i: vec![1, 1, 5],
            groups: vec![
                GroupPlan {
                    index: 1,
                    target: 0.5,
                    first: 2,
                    last: 1,
                    windows: Vec::new(),
                    square_mass: 0.0,
                    merged_into_next: true,
                },
                GroupPlan {
                    index: 2,
                    target: 0.5,
                    first: 2,
                    last: 5,
                    windows,
                    square_mass: 0.3,
                    merged_into_next: false,
                },
            ],
        };
        let layout = fold_layout(&plan, 2).expect("merged fold");
        assert_eq!(layout.widths[0], 0.0, "merged group spans nothing");
        assert!(layout.widths[1] > 0.0);
        let mass: f64 = a[2..=5].iter().sum();
        assert!(close(layout.total_gate, a[1] + mass, 1e-12));
    }

    #[test]
    fn gate_chain_roundtrip() {
        let (_, layout) = fixture();
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let gate = frac * layout.total_gate;
            let chain = layout.chain_for_gate(gate).expect("within total");
            assert!(close(layout.gate_for_chain(chain), gate, 1e-9));
        }
        assert!(layout.chain_for_gate(layout.total_gate * 1.01).is_none());
        // Stations are monotone along the tube wall.
        let end_chain = layout.runs.last().expect("runs").chain.1;
        let mut prev = -1.0;
        for k in 0..=200 {
            let s = layout.station_for_chain(end_chain * k as f64 / 200.0);
            assert!(s >= prev);
            prev = s;
        }
        assert!(layout.end_station() > prev);
    }

    #[test]
    fn verify_weighted_frozen() {
        let weighted = &report().weighted;
        assert!(close(weighted.partial, 0.782_876_139_939_281, 1e-9), "{}", weighted.partial);
        assert!(
            close(weighted.tail_bound, 0.668_712_897_217_441_5, 1e-9),
            "{}",
            weighted.tail_bound
        );
        assert_eq!(weighted.stable_from, Some(492_104));
        assert_eq!(weighted.checkpoint.0, 100_000);
        assert!(
            close(weighted.checkpoint.1, 5.893_490_913_358_61e-8, 1e-9),
            "{}",
            weighted.checkpoint.1
        );
        assert!(weighted.converged);
        assert!(weighted.checkpoint.1 < 1e-6);
    }

    #[test]
    fn verify_diameter_growth_certified() {
        let diameter = &report().diameter;
        assert_eq!(diameter.per_group.len(), 6);
        assert!(diameter.min_ratio >= 0.999, "min ratio {}", diameter.min_ratio);
        assert!(diameter.min_ratio >= GATE_RATIO_FLOOR);
        assert!(close(diameter.total_gate, 1.276_376_869_471_727_2, 1e-9));
    }

    #[test]
    fn verify_integral_frozen() {
        let integral = &report().integral;
        assert!(close(integral.total, 9.702_409_800_020_419, 1e-9), "{}", integral.total);
        assert!(
            close(integral.empirical_constant, 9.557_864_909_426_76, 1e-6),
            "{}",
            integral.empirical_constant
        );
        assert!(integral.empirical_constant <= 12.0);
        assert!(
            close(integral.radial_integral, 1.512_219_728_051_459, 1e-9),
            "{}",
            integral.radial_integral
        );
        assert_eq!(integral.head[0].index, 1);
        assert!(close(integral.head[0].value, 7.643_442_76, 1e-6));
        assert!(close(integral.head[1].value, 1.045_892_10, 1e-6));
        assert!(close(integral.head[2].value, 0.351_934_28, 1e-6));
    }

    #[test]
    fn verify_spot_checks_agree_with_grid() {
        let spots = &report().integral.spot_checks;
        assert_eq!(spots.len(), 3);
        for spot in spots {
            assert!(spot.cheap.is_finite() && spot.grid.is_finite());
            assert!(
                spot.ratio <= SPOT_CHECK_FACTOR,
                "trapezoid {} ratio {}",
                spot.trapezoid,
                spot.ratio
            );
        }
    }

    #[test]
    fn parametrization_levels_certified() {
        let (_, layout) = fixture();
        let bp = bad_parametrization(layout, 128.0, 3).expect("parametrization");
        assert_eq!(bp.omega0, PI);
        assert_eq!(bp.levels.len(), 3);
        for level in &bp.levels {
            let (lo, hi) = level.source;
            assert!(close(hi - lo, PI / 4.0f64.powi(level.n as i32), 1e-15));
            assert!(close(level.certified, PROBE_GATE_MARGIN * level.threshold, 1e-12));
            assert!(level.station.1 > level.station.0);
        }
        assert!(close(bp.levels[0].source.0, PI / 2.0, 1e-15));
        assert!(close(bp.levels[0].source.1, 0.75 * PI, 1e-15));
        // Touching arcs share their station: level 1 ends where level 2
        // starts, in both angle and station.
        assert!(close(bp.levels[0].source.1, bp.levels[1].source.0, 1e-15));
        assert!(close(bp.levels[0].station.1, bp.levels[1].station.0, 1e-9));
        // Isolated levels get ball-sized targets.
        for level in &bp.levels[1..] {
            assert!(close(
                level.ball_radius,
                LEVEL_BALL_FRACTION * level.threshold,
                1e-9
            ));
        }
        // The deepest threshold lands in the first vertical run: its
        // chainage is the gate plus the chord length of the entry turn
        // (gate and chainage agree along the horizontal prefix).
        let (plan, _) = fixture();
        let gate = PROBE_GATE_MARGIN * 64.0 / 128.0;
        let chain = layout.chain_for_gate(gate).expect("reachable");
        let radius = 3.0 * plan.ratio_bound * plan.a[2];
        let turn_chords = 2.0 * TURN_SEGMENTS as f64 * radius * (PI / 32.0).sin();
        assert!(close(chain, gate + turn_chords, 1e-12), "chain {chain}");
    }

    #[test]
    fn parametrization_depth_is_honest() {
        let (_, layout) = fixture();
        match bad_parametrization(layout, 128.0, 4) {
            Err(CounterexampleError::InsufficientDepth {
                requested,
                max_certifiable,
            }) => {
                assert_eq!(requested, 4);
                assert_eq!(max_certifiable, 3);
            }
            other => panic!("expected depth error, got {other:?}"),
        }
    }

    #[test]
    fn parametrization_table_is_monotone_bijection() {
        let (_, layout) = fixture();
        let bp = bad_parametrization(layout, 128.0, 3).expect("parametrization");
        for pair in bp.table.windows(2) {
            assert!(pair[1].0 > pair[0].0);
            assert!(pair[1].1 > pair[0].1);
        }
        assert_eq!(bp.table.first(), Some(&(0.0, 0.0)));
        assert!(close(bp.table.last().expect("end").0, 2.0 * PI, 1e-15));
        assert!(close(bp.angle_to_station(0.0), 0.0, 1e-15));
        assert!(close(bp.angle_to_station(2.0 * PI), bp.perimeter, 1e-12));
        let mut prev = -1.0;
        for k in 0..=500 {
            let s = bp.angle_to_station(2.0 * PI * k as f64 / 500.0);
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn parametrization_rejects_bad_arguments() {
        let (_, layout) = fixture();
        assert!(matches!(
            bad_parametrization(layout, 0.0, 2),
            Err(CounterexampleError::BadParameter { name: "scale", .. })
        ));
        assert!(matches!(
            bad_parametrization(layout, f64::NAN, 2),
            Err(CounterexampleError::BadParameter { name: "scale", .. })
        ));
        assert!(matches!(
            bad_parametrization(layout, 128.0, 0),
            Err(CounterexampleError::BadParameter { name: "levels", .. })
        ));
    }

    #[test]
    fn probe_lower_bounds_frozen() {
        let (_, layout) = fixture();
        let bp = bad_parametrization(layout, 128.0, 3).expect("parametrization");
        let probe = w11_lowerbound_probe(&bp, None, 0.5, 5).expect("probe");
        assert_eq!(probe.levels.len(), 3);
        assert_eq!(probe.excluded, 2);
        for level in &probe.levels {
            assert!(
                close(level.lower_bound, PI * PROBE_GATE_MARGIN, 1e-12),
                "level {} bound {}",
                level.n,
                level.lower_bound
            );
            assert!(level.radial_estimate.is_none());
        }
        assert!(probe.diverging, "equal increments certify linear growth");
        assert!(close(
            probe.levels[2].partial,
            3.0 * PI * PROBE_GATE_MARGIN,
            1e-12
        ));
    }

    #[test]
    fn probe_candidate_radial_estimates() {
        let (_, layout) = fixture();
        let bp = bad_parametrization(layout, 128.0, 2).expect("parametrization");
        let map = |r: f64, theta: f64| Point {
            x: 3.0 * r * theta.cos(),
            y: 3.0 * r * theta.sin(),
        };
        let probe = w11_lowerbound_probe(&bp, Some(&map), 0.5, 2).expect("probe");
        for level in &probe.levels {
            let estimate = level.radial_estimate.expect("candidate supplied");
            assert!(estimate > 0.0);
            // The candidate has speed 3, so the estimate is close to
            // 3 * measure * integral of r dr over [eta, 1].
            let expected = 3.0 * level.arc_measure * 0.5 * (1.0 - 0.25);
            assert!(close(estimate, expected, 1e-6), "{estimate} vs {expected}");
        }
    }

    #[test]
    fn probe_rejects_bad_arguments() {
        let (_, layout) = fixture();
        let bp = bad_parametrization(layout, 128.0, 2).expect("parametrization");
        assert!(matches!(
            w11_lowerbound_probe(&bp, None, 0.0, 2),
            Err(CounterexampleError::BadParameter { name: "eta", .. })
        ));
        assert!(matches!(
            w11_lowerbound_probe(&bp, None, 1.0, 2),
            Err(CounterexampleError::BadParameter { name: "eta", .. })
        ));
        assert!(matches!(
            w11_lowerbound_probe(&bp, None, 0.5, 0),
            Err(CounterexampleError::BadParameter { name: "levels", .. })
        ));
    }

    #[test]
    fn smooth_probe_converges_on_square() {
        let square = JordanDomain::rectangle(0.0, 0.0, 2.0, 2.0).expect("square");
        let base = Point { x: 1.0, y: 1.0 };
        let probe = smooth_comparison_probe(&square, base, 5, 0.02).expect("probe");
        assert!(!probe.diverging);
        // Bounded distances: contributions decay with the arc measures.
        for pair in probe.levels.windows(2) {
            assert!(pair[1].lower_bound < pair[0].lower_bound);
            assert!(pair[1].lower_bound <= 0.5 * pair[0].lower_bound);
        }
        let diameter = 8.0f64.sqrt();
        for level in &probe.levels {
            assert!(level.distance <= 1.2 * diameter);
        }
    }

    #[test]
    fn svg_renders_are_deterministic() {
        let (plan, layout) = fixture();
        let one = folded_layout_svg(layout);
        let two = folded_layout_svg(layout);
        assert_eq!(one, two);
        assert!(one.contains("<svg"));
        assert!(one.contains("polygon") || one.contains("path") || one.contains("polyline"));
        let chain = unfolded_chain_svg(plan, 8).expect("chain svg");
        assert!(chain.contains("<svg"));
    }

    #[test]
    fn json_dumps_are_bounded_and_stable() {
        let (plan, layout) = fixture();
        let dumped = plan.to_json();
        assert!(dumped.len() < 200_000, "json length {}", dumped.len());
        assert!(dumped.contains("\"rho\""));
        assert!(dumped.contains("\"a_head\""));
        assert_eq!(dumped, plan.to_json());
        let report = verify_counterexample(plan, layout, 0.0, 1_000).expect("report");
        assert!(report.to_json().contains("\"weighted\""));
        let bp = bad_parametrization(layout, 128.0, 3).expect("parametrization");
        assert!(bp.to_json().contains("\"omega0\""));
    }

    #[test]
    fn unfolded_chain_matches_plan_geometry() {
        let (plan, _) = fixture();
        let chain = unfolded_chain(plan, 6).expect("chain");
        assert!(chain.area() > 0.0);
        let (lo, hi) = chain.bbox();
        let cap = plan.ratio_bound * plan.a[1];
        assert!(close(lo.x, -cap, 1e-9));
        assert!(close(hi.x, plan.b[7], 1e-9));
        assert!(close(hi.y, cap, 1e-9));
        assert!(matches!(
            unfolded_chain(plan, 0),
            Err(CounterexampleError::BadParameter { name: "count", .. })
        ));
    }
}
