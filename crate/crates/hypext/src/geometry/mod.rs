//! Polygonal Jordan domains and grid approximations of internal geometry.
//!
//! The two central types are [`JordanDomain`], a validated simple polygon
//! with a designated resolution scale, and [`GridGraph`], a lattice graph
//! sampled from the domain interior whose shortest paths approximate
//! internal (geodesic) distance and, with inverse-boundary-distance edge
//! weights, the quasi-hyperbolic metric.
//!
//! Design points:
//!
//! * Validation happens once, at construction.  A [`JordanDomain`] is
//!   guaranteed simple (no self-intersections), free of degenerate edges,
//!   and stored counterclockwise, so downstream code never re-checks.
//! * All boundary queries (nearest distance, segment crossing) go through a
//!   spatial bucket index over the edges, making per-node work on large
//!   grids close to constant time.
//! * Grid nodes sit at exact integer multiples of the pitch, so halving the
//!   pitch produces a strict superset of nodes; approximate distances are
//!   then monotone under refinement, which the tests exploit.

mod grid;
mod polygon;

pub use grid::{
    internal_diameter, internal_diameter_on, internal_distance, DiameterReport, EdgeWeight,
    GridGraph,
};
pub use polygon::{EdgeBuckets, JordanDomain};

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

/// Errors arising from domain construction and grid queries.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// A polygon needs at least three vertices.
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    /// Two consecutive vertices coincide (relative to the polygon scale).
    #[error("edge {index} is degenerate: consecutive vertices coincide")]
    DegenerateEdge { index: usize },
    /// Two non-adjacent edges touch or cross, so the curve is not Jordan.
    #[error("boundary is self-intersecting: edges {first} and {second} meet")]
    SelfIntersecting { first: usize, second: usize },
    /// A query point lies outside the closed domain.
    #[error("point ({}, {}) lies outside the domain", point.x, point.y)]
    PointOutside { point: Point },
    /// The grid at the requested pitch has no path between the endpoints.
    #[error("grid at pitch {pitch} does not connect the requested points")]
    DisconnectedAtResolution { pitch: f64 },
    /// A pitch or resolution hint was zero, negative, or non-finite.
    #[error("invalid resolution {value}: must be finite and positive")]
    InvalidResolution { value: f64 },
    /// The grid at the requested pitch contains no interior nodes at all.
    #[error("grid at pitch {pitch} captured no interior nodes")]
    EmptyGrid { pitch: f64 },
}

/// A point in the plane.
///
/// Serialized as a two-element array `[x, y]` so that vertex lists read
/// naturally in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Scalar cross product `self.x * other.y - self.y * other.x`.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Unit vector in the same direction; the zero vector is returned as is.
    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    /// Counterclockwise rotation by a quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    /// Linear interpolation `self + t * (other - self)`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point::new(z.re, z.im)
    }
}

impl From<Point> for Complex64 {
    fn from(p: Point) -> Self {
        Complex64::new(p.x, p.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, rhs: f64) -> Point {
        Point::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point::new(x, y))
    }
}

/// Shortest distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Closest parameter `t in [0, 1]` of the projection of `p` onto `[a, b]`.
pub fn project_onto_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return 0.0;
    }
    ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
}

/// Tests whether the closed segments `[p1, p2]` and `[q1, q2]` have any
/// point in common, using an absolute tolerance `eps` for the orientation
/// tests.  Collinear overlaps count as contact.
pub fn segments_touch(p1: Point, p2: Point, q1: Point, q2: Point, eps: f64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);

    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    // Near-degenerate configurations: fall back to distance checks, which
    // are robust for touching and collinear-overlap cases.
    let touch_tol = eps.max(f64::EPSILON);
    if d1.abs() <= eps && on_segment_within(q1, q2, p1, touch_tol) {
        return true;
    }
    if d2.abs() <= eps && on_segment_within(q1, q2, p2, touch_tol) {
        return true;
    }
    if d3.abs() <= eps && on_segment_within(p1, p2, q1, touch_tol) {
        return true;
    }
    if d4.abs() <= eps && on_segment_within(p1, p2, q2, touch_tol) {
        return true;
    }
    false
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when `c`
/// lies to the left of the directed line `a -> b`.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment_within(a: Point, b: Point, p: Point, tol: f64) -> bool {
    point_segment_distance(p, a, b) <= tol
}

/// Scale-aware tolerance used by the intersection predicates: a fixed
/// multiple of machine epsilon times the squared extent of the inputs
/// (orientation values scale as length squared).
pub fn orientation_eps(points: &[Point]) -> f64 {
    let mut m: f64 = 1.0;
    for p in points {
        m = m.max(p.x.abs()).max(p.y.abs());
    }
    64.0 * f64::EPSILON * m * m
}
