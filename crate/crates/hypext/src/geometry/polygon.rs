//! Simple polygons with validated boundaries and fast boundary queries.

use super::{
    orient, orientation_eps, point_segment_distance, project_onto_segment, segments_touch,
    GeometryError, Point,
};
use serde::{Deserialize, Serialize};

/// A polygonal Jordan domain: a simple closed polygon, stored
/// counterclockwise, together with a resolution hint that downstream
/// algorithms use as a default length scale (grid pitch, sampling step).
///
/// Construction validates the boundary once: at least three vertices, no
/// degenerate (zero-length) edges, and no contact between non-adjacent
/// edges.  Clockwise input is silently reversed.
#[derive(Debug, Clone)]
pub struct JordanDomain {
    vertices: Vec<Point>,
    resolution_hint: f64,
    // Cached derived data, computed once at construction.
    cumulative: Vec<f64>,
    perimeter: f64,
    bbox: (Point, Point),
    buckets: EdgeBuckets,
    eps: f64,
}

/// On-disk form of a domain: a vertex list plus the resolution hint.
/// This is the only serialization boundary; deserialized files are routed
/// through [`JordanDomain::new`] so validation cannot be bypassed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainFile {
    pub vertices: Vec<Point>,
    pub resolution_hint: f64,
}

impl JordanDomain {
    /// Validates and builds a domain from a vertex loop (not repeated at
    /// the end) and a resolution hint.
    pub fn new(vertices: Vec<Point>, resolution_hint: f64) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if !resolution_hint.is_finite() || resolution_hint <= 0.0 {
            return Err(GeometryError::InvalidResolution {
                value: resolution_hint,
            });
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeometryError::DegenerateEdge { index: i });
            }
        }

        let mut vertices = vertices;
        let eps = orientation_eps(&vertices);
        let scale = vertices
            .iter()
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(1.0_f64, f64::max);
        let length_tol = 32.0 * f64::EPSILON * scale;

        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if a.dist(b) <= length_tol {
                return Err(GeometryError::DegenerateEdge { index: i });
            }
        }

        // Signed area: positive means counterclockwise.
        let area2: f64 = (0..n)
            .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
            .sum();
        if area2.abs() <= eps {
            // Collapsed polygon (all vertices near one line).
            return Err(GeometryError::SelfIntersecting {
                first: 0,
                second: 1,
            });
        }
        if area2 < 0.0 {
            vertices.reverse();
        }

        Self::check_simplicity(&vertices, eps)?;

        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += vertices[i].dist(vertices[(i + 1) % n]);
            cumulative.push(acc);
        }
        let perimeter = acc;

        let (mut lo, mut hi) = (vertices[0], vertices[0]);
        for v in &vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }

        let diag = (hi - lo).norm();
        let cell = (diag / 128.0).max(length_tol.max(f64::MIN_POSITIVE));
        let buckets = EdgeBuckets::build(&vertices, cell);

        Ok(JordanDomain {
            vertices,
            resolution_hint,
            cumulative,
            perimeter,
            bbox: (lo, hi),
            buckets,
            eps,
        })
    }

    fn check_simplicity(vertices: &[Point], eps: f64) -> Result<(), GeometryError> {
        let n = vertices.len();
        let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
        for i in 0..n {
            let (a1, a2) = edge(i);
            let (ax0, ax1) = (a1.x.min(a2.x), a1.x.max(a2.x));
            let (ay0, ay1) = (a1.y.min(a2.y), a1.y.max(a2.y));
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (b1, b2) = edge(j);
                if adjacent {
                    // Adjacent edges share one endpoint; any further contact
                    // (a fold-back along the same line) is an intersection.
                    let (shared, pa, pb) = if j == i + 1 {
                        (a2, a1, b2)
                    } else {
                        (a1, a2, b1)
                    };
                    if orient(pa, shared, pb).abs() <= eps
                        && (pa - shared).dot(pb - shared) > 0.0
                    {
                        return Err(GeometryError::SelfIntersecting { first: i, second: j });
                    }
                    continue;
                }
                // Bounding-box prune before the exact test.
                let (bx0, bx1) = (b1.x.min(b2.x), b1.x.max(b2.x));
                let (by0, by1) = (b1.y.min(b2.y), b1.y.max(b2.y));
                let margin = eps.sqrt();
                if bx0 > ax1 + margin
                    || bx1 < ax0 - margin
                    || by0 > ay1 + margin
                    || by1 < ay0 - margin
                {
                    continue;
                }
                if segments_touch(a1, a2, b1, b2, eps) {
                    return Err(GeometryError::SelfIntersecting { first: i, second: j });
                }
            }
        }
        Ok(())
    }

    /// Regular `n`-gon of circumradius `radius` centered at the origin,
    /// with a vertex on the positive x-axis.
    pub fn regular_polygon(n: usize, radius: f64) -> Result<Self, GeometryError> {
        let vertices: Vec<Point> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point::new(radius * t.cos(), radius * t.sin())
            })
            .collect();
        // Side length shrinks like 2*pi*r/n; keep the hint comfortably finer.
        let hint = radius * std::f64::consts::PI / n as f64;
        Self::new(vertices, hint)
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        let hint = ((x1 - x0).abs().min((y1 - y0).abs()) / 8.0).max(f64::MIN_POSITIVE);
        Self::new(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            hint,
        )
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn resolution_hint(&self) -> f64 {
        self.resolution_hint
    }

    /// Returns a copy with a different resolution hint (geometry unchanged).
    pub fn with_resolution_hint(&self, hint: f64) -> Result<Self, GeometryError> {
        if !hint.is_finite() || hint <= 0.0 {
            return Err(GeometryError::InvalidResolution { value: hint });
        }
        let mut d = self.clone();
        d.resolution_hint = hint;
        Ok(d)
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Cumulative arc length at each vertex; entry `i` is the boundary
    /// station of vertex `i`, and the final entry equals the perimeter.
    pub fn cumulative_lengths(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Axis-aligned bounding box as `(min_corner, max_corner)`.
    pub fn bbox(&self) -> (Point, Point) {
        self.bbox
    }

    pub(crate) fn buckets(&self) -> &EdgeBuckets {
        &self.buckets
    }

    /// Strict interior test by crossing parity (boundary points report
    /// `false` up to numerical tolerance on the parity rule itself; use
    /// [`Self::distance_to_boundary_signed`] for boundary-aware queries).
    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = self.bbox;
        if p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y {
            return false;
        }
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            // Half-open rule: count the edge when p.y is in [min, max).
            if (a.y <= p.y) != (b.y <= p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the nearest boundary edge, regardless
    /// of which side `p` lies on.
    pub fn boundary_distance_unsigned(&self, p: Point) -> f64 {
        self.buckets.nearest_distance(p, f64::INFINITY)
    }

    /// Distance to the boundary, positive inside, negative outside.
    pub fn distance_to_boundary_signed(&self, p: Point) -> f64 {
        let d = self.boundary_distance_unsigned(p);
        if self.contains(p) {
            d
        } else {
            -d
        }
    }

    /// Distance from an interior point to the boundary.  Errors with
    /// [`GeometryError::PointOutside`] when `p` is not in the closure
    /// (within a tolerance of the domain scale).
    pub fn distance_to_boundary(&self, p: Point) -> Result<f64, GeometryError> {
        let d = self.distance_to_boundary_signed(p);
        if d >= -self.boundary_tolerance() {
            Ok(d.max(0.0))
        } else {
            Err(GeometryError::PointOutside { point: p })
        }
    }

    /// Tolerance under which a point is treated as lying on the boundary.
    pub fn boundary_tolerance(&self) -> f64 {
        let (lo, hi) = self.bbox;
        1e-9 * (hi - lo).norm().max(1.0)
    }

    /// Whether `p` lies in the closed domain (interior or boundary).
    pub fn contains_closure(&self, p: Point) -> bool {
        self.distance_to_boundary_signed(p) >= -self.boundary_tolerance()
    }

    /// Boundary point at arc-length station `s` (wrapped modulo the
    /// perimeter), measured counterclockwise from vertex 0.
    pub fn point_at_arclength(&self, s: f64) -> Point {
        let l = self.perimeter;
        let mut s = s % l;
        if s < 0.0 {
            s += l;
        }
        // cumulative is sorted; find the edge containing station s.
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.vertices.len() - 1),
            Err(i) => i - 1,
        };
        let a = self.vertices[idx];
        let b = self.vertices[(idx + 1) % self.vertices.len()];
        let edge_len = self.cumulative[idx + 1] - self.cumulative[idx];
        let t = if edge_len > 0.0 {
            (s - self.cumulative[idx]) / edge_len
        } else {
            0.0
        };
        a.lerp(b, t)
    }

    /// Arc-length station of the boundary point nearest to `p`, together
    /// with the distance to it.
    pub fn nearest_boundary_station(&self, p: Point) -> (f64, f64) {
        let n = self.vertices.len();
        let mut best = (0.0, f64::INFINITY);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let t = project_onto_segment(p, a, b);
            let q = a.lerp(b, t);
            let d = p.dist(q);
            if d < best.1 {
                let s = self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i]);
                best = (s, d);
            }
        }
        best
    }

    /// `count` boundary points equally spaced in arc length, starting at
    /// vertex 0.
    pub fn sample_boundary(&self, count: usize) -> Vec<Point> {
        (0..count)
            .map(|k| self.point_at_arclength(self.perimeter * k as f64 / count as f64))
            .collect()
    }

    /// Whether the open segment `(a, b)` touches the boundary anywhere
    /// beyond a small exclusion ball around each endpoint.  The exclusion
    /// allows segments anchored at boundary points (their endpoint *is* a
    /// boundary contact) to be tested for crossings elsewhere.
    pub fn segment_touches_boundary(&self, a: Point, b: Point, exclude_radius: f64) -> bool {
        self.buckets
            .segment_hits(a, b, self.eps, exclude_radius, &self.vertices)
    }

    /// Reads a domain from its JSON file form, running full validation.
    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let file: DomainFile =
            serde_json::from_str(text).map_err(|_| GeometryError::TooFewVertices(0))?;
        Self::new(file.vertices, file.resolution_hint)
    }

    /// Serializes the domain to its JSON file form.
    pub fn to_json(&self) -> String {
        let file = DomainFile {
            vertices: self.vertices.clone(),
            resolution_hint: self.resolution_hint,
        };
        serde_json::to_string_pretty(&file).expect("domain serialization cannot fail")
    }
}

/// Uniform spatial hash over the boundary edges: each cell stores the
/// indices of edges whose bounding box meets it.  Supports nearest-edge
/// distance (expanding ring search with an upper-bound hint) and
/// segment-vs-boundary contact tests.
#[derive(Debug, Clone)]
pub struct EdgeBuckets {
    cell: f64,
    origin: Point,
    nx: i64,
    ny: i64,
    cells: Vec<Vec<u32>>,
    edges: Vec<(Point, Point)>,
}

impl EdgeBuckets {
    pub fn build(vertices: &[Point], cell: f64) -> Self {
        let n = vertices.len();
        let edges: Vec<(Point, Point)> =
            (0..n).map(|i| (vertices[i], vertices[(i + 1) % n])).collect();
        let (mut lo, mut hi) = (vertices[0], vertices[0]);
        for v in vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        // Pad by one cell so ring searches never index out of range logic.
        let origin = Point::new(lo.x - cell, lo.y - cell);
        let nx = (((hi.x - origin.x) / cell).floor() as i64 + 2).max(1);
        let ny = (((hi.y - origin.y) / cell).floor() as i64 + 2).max(1);
        let mut cells = vec![Vec::new(); (nx * ny) as usize];
        for (idx, (a, b)) in edges.iter().enumerate() {
            let x0 = (((a.x.min(b.x) - origin.x) / cell).floor() as i64).clamp(0, nx - 1);
            let x1 = (((a.x.max(b.x) - origin.x) / cell).floor() as i64).clamp(0, nx - 1);
            let y0 = (((a.y.min(b.y) - origin.y) / cell).floor() as i64).clamp(0, ny - 1);
            let y1 = (((a.y.max(b.y) - origin.y) / cell).floor() as i64).clamp(0, ny - 1);
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    cells[(gy * nx + gx) as usize].push(idx as u32);
                }
            }
        }
        EdgeBuckets {
            cell,
            origin,
            nx,
            ny,
            cells,
            edges,
        }
    }

    fn cell_of(&self, p: Point) -> (i64, i64) {
        (
            (((p.x - self.origin.x) / self.cell).floor() as i64).clamp(0, self.nx - 1),
            (((p.y - self.origin.y) / self.cell).floor() as i64).clamp(0, self.ny - 1),
        )
    }

    /// Distance from `p` to the nearest edge.  `hint` is an upper bound on
    /// the answer (use `INFINITY` when unknown); a tight hint lets the ring
    /// search start close to the right radius and exit quickly.
    pub fn nearest_distance(&self, p: Point, hint: f64) -> f64 {
        let (cx, cy) = self.cell_of(p);
        let mut best = f64::INFINITY;
        let max_ring = (self.nx.max(self.ny)) as i64 + 1;
        let start_ring = if hint.is_finite() {
            (((hint / self.cell).floor() as i64) - 1).max(0)
        } else {
            0
        };
        let mut ring = start_ring;
        loop {
            // Any edge outside the current ring is at least this far away.
            let ring_clearance = (ring as f64 - 1.0).max(0.0) * self.cell;
            if best <= ring_clearance || ring > max_ring {
                // Hinted starts may skip inner rings; the hint guarantees an
                // edge within `hint`, so `best` is populated before exit
                // unless the hint was infinite and the grid is exhausted.
                break;
            }
            self.for_ring(cx, cy, ring, |edge_idx| {
                let (a, b) = self.edges[edge_idx as usize];
                let d = point_segment_distance(p, a, b);
                if d < best {
                    best = d;
                }
            });
            ring += 1;
        }
        if best.is_infinite() && start_ring > 0 {
            // Defensive: a bad hint skipped everything; redo exhaustively.
            return self.nearest_distance(p, f64::INFINITY);
        }
        best
    }

    fn for_ring(&self, cx: i64, cy: i64, ring: i64, mut f: impl FnMut(u32)) {
        let visit = |cells: &Vec<Vec<u32>>, gx: i64, gy: i64, f: &mut dyn FnMut(u32)| {
            if gx >= 0 && gx < self.nx && gy >= 0 && gy < self.ny {
                for &e in &cells[(gy * self.nx + gx) as usize] {
                    f(e);
                }
            }
        };
        if ring == 0 {
            visit(&self.cells, cx, cy, &mut f);
            return;
        }
        for gx in (cx - ring)..=(cx + ring) {
            visit(&self.cells, gx, cy - ring, &mut f);
            visit(&self.cells, gx, cy + ring, &mut f);
        }
        for gy in (cy - ring + 1)..=(cy + ring - 1) {
            visit(&self.cells, cx - ring, gy, &mut f);
            visit(&self.cells, cx + ring, gy, &mut f);
        }
    }

    /// Whether segment `[a, b]` touches any boundary edge, ignoring contact
    /// within `exclude_radius` of either segment endpoint.
    pub fn segment_hits(
        &self,
        a: Point,
        b: Point,
        eps: f64,
        exclude_radius: f64,
        _vertices: &[Point],
    ) -> bool {
        let x0 = (((a.x.min(b.x) - self.origin.x) / self.cell).floor() as i64 - 1).clamp(0, self.nx - 1);
        let x1 = (((a.x.max(b.x) - self.origin.x) / self.cell).floor() as i64 + 1).clamp(0, self.nx - 1);
        let y0 = (((a.y.min(b.y) - self.origin.y) / self.cell).floor() as i64 - 1).clamp(0, self.ny - 1);
        let y1 = (((a.y.max(b.y) - self.origin.y) / self.cell).floor() as i64 + 1).clamp(0, self.ny - 1);
        let mut seen = vec![false; self.edges.len()];
        for gy in y0..=y1 {
            for gx in x0..=x1 {
                for &e in &self.cells[(gy * self.nx + gx) as usize] {
                    if seen[e as usize] {
                        continue;
                    }
                    seen[e as usize] = true;
                    let (q1, q2) = self.edges[e as usize];
                    if !segments_touch(a, b, q1, q2, eps) {
                        continue;
                    }
                    if exclude_radius > 0.0 {
                        // Accept the contact only if the boundary edge comes
                        // near the segment somewhere away from the endpoints.
                        if self.contact_only_near_endpoints(a, b, q1, q2, exclude_radius) {
                            continue;
                        }
                    }
                    return true;
                }
            }
        }
        false
    }

    fn contact_only_near_endpoints(
        &self,
        a: Point,
        b: Point,
        q1: Point,
        q2: Point,
        r: f64,
    ) -> bool {
        // Sample the portion of [a, b] outside the exclusion balls and check
        // it stays strictly on one side / clear of the edge.  16 samples is
        // plenty for the short lattice segments this guards.
        let len = a.dist(b);
        if len <= 2.0 * r {
            return true;
        }
        let t0 = r / len;
        let t1 = 1.0 - r / len;
        let near = (0..=16).any(|k| {
            let t = t0 + (t1 - t0) * k as f64 / 16.0;
            let p = a.lerp(b, t);
            point_segment_distance(p, q1, q2) < 1e-12 * len.max(1.0)
        });
        !near
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        self.edges[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn unit_square() -> JordanDomain {
        JordanDomain::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_too_few_vertices() {
        let r = JordanDomain::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 0.1);
        assert!(matches!(r, Err(GeometryError::TooFewVertices(2))));
    }

    #[test]
    fn rejects_degenerate_edge() {
        let r = JordanDomain::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            0.1,
        );
        assert!(matches!(r, Err(GeometryError::DegenerateEdge { index: 1 })));
    }

    #[test]
    fn rejects_bowtie() {
        let r = JordanDomain::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            0.1,
        );
        assert!(matches!(r, Err(GeometryError::SelfIntersecting { .. })));
    }

    #[test]
    fn rejects_bad_resolution() {
        let r = JordanDomain::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            0.0,
        );
        assert!(matches!(r, Err(GeometryError::InvalidResolution { .. })));
    }

    #[test]
    fn normalizes_clockwise_input() {
        let cw = JordanDomain::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
            ],
            0.1,
        )
        .unwrap();
        assert!(cw.area() > 0.0);
        assert_relative_eq!(cw.area(), 1.0);
    }

    #[test]
    fn square_metrics() {
        let sq = unit_square();
        assert_relative_eq!(sq.perimeter(), 4.0);
        assert_relative_eq!(sq.area(), 1.0);
        assert!(sq.contains(Point::new(0.5, 0.5)));
        assert!(!sq.contains(Point::new(1.5, 0.5)));
        assert_relative_eq!(
            sq.distance_to_boundary(Point::new(0.5, 0.5)).unwrap(),
            0.5
        );
        assert_relative_eq!(
            sq.distance_to_boundary(Point::new(0.25, 0.5)).unwrap(),
            0.25
        );
        assert!(matches!(
            sq.distance_to_boundary(Point::new(2.0, 0.5)),
            Err(GeometryError::PointOutside { .. })
        ));
    }

    #[test]
    fn arclength_walk_round_trips() {
        let sq = unit_square();
        assert_abs_diff_eq!(
            sq.point_at_arclength(0.5).dist(Point::new(0.5, 0.0)),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sq.point_at_arclength(1.5).dist(Point::new(1.0, 0.5)),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sq.point_at_arclength(-0.5).dist(Point::new(0.0, 0.5)),
            0.0,
            epsilon = 1e-12
        );
        let (s, d) = sq.nearest_boundary_station(Point::new(0.5, -0.1));
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn boundary_samples_are_uniform() {
        let sq = unit_square();
        let pts = sq.sample_boundary(8);
        assert_eq!(pts.len(), 8);
        for w in 0..8 {
            let a = pts[w];
            let b = pts[(w + 1) % 8];
            assert_abs_diff_eq!(a.dist(b), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn regular_polygon_approaches_circle() {
        let hex = JordanDomain::regular_polygon(6, 1.0).unwrap();
        assert_eq!(hex.vertices().len(), 6);
        assert_relative_eq!(hex.perimeter(), 6.0, epsilon = 1e-12);
        // Hexagon area: 3*sqrt(3)/2.
        assert_relative_eq!(hex.area(), 1.5 * 3.0_f64.sqrt(), epsilon = 1e-12);
        let big = JordanDomain::regular_polygon(512, 1.0).unwrap();
        assert_relative_eq!(big.area(), std::f64::consts::PI, epsilon = 1e-3);
        // Distance from the center is the apothem.
        assert_relative_eq!(
            big.distance_to_boundary(Point::new(0.0, 0.0)).unwrap(),
            (std::f64::consts::PI / 512.0).cos(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn segment_boundary_contact() {
        let sq = unit_square();
        // Fully interior segment: no contact.
        assert!(!sq.segment_touches_boundary(
            Point::new(0.2, 0.2),
            Point::new(0.8, 0.8),
            0.0
        ));
        // Segment poking through the right wall.
        assert!(sq.segment_touches_boundary(
            Point::new(0.8, 0.5),
            Point::new(1.2, 0.5),
            0.0
        ));
        // Segment anchored on the boundary: contact at its own endpoint is
        // excused by the exclusion radius.
        assert!(!sq.segment_touches_boundary(
            Point::new(0.0, 0.5),
            Point::new(0.4, 0.5),
            1e-9
        ));
    }

    #[test]
    fn json_round_trip_validates() {
        let sq = unit_square();
        let text = sq.to_json();
        let back = JordanDomain::from_json(&text).unwrap();
        assert_eq!(back.vertices().len(), 4);
        assert_relative_eq!(back.area(), 1.0);
        // Corrupt file: self-intersecting loop must be rejected on load.
        let bad = r#"{"vertices": [[0,0],[1,1],[1,0],[0,1]], "resolution_hint": 0.1}"#;
        assert!(JordanDomain::from_json(bad).is_err());
    }

    #[test]
    fn l_shape_notch_corner_dominates() {
        // Unit square minus its upper-right quarter.  For (0.4, 0.4) the
        // nearest boundary feature is the re-entrant corner at (0.5, 0.5),
        // closer than either outer wall: 0.1 * sqrt(2), not 0.4.
        let l = JordanDomain::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 0.5),
                Point::new(0.5, 0.5),
                Point::new(0.5, 1.0),
                Point::new(0.0, 1.0),
            ],
            0.02,
        )
        .unwrap();
        let z = Point::new(0.4, 0.4);
        let exact = l.distance_to_boundary(z).unwrap();
        // Brute-force oracle: min over a dense boundary sampling.
        let brute = l
            .sample_boundary(200_000)
            .iter()
            .map(|q| q.dist(z))
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(exact, brute, epsilon = 1e-4);
        assert_relative_eq!(exact, 0.1 * 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn l_shape_distances() {
        // L-shaped domain: [0,2]^2 minus [1,2]x[1,2].
        let l = JordanDomain::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 2.0),
                Point::new(0.0, 2.0),
            ],
            0.05,
        )
        .unwrap();
        assert_relative_eq!(l.area(), 3.0);
        assert!(l.contains(Point::new(0.5, 1.5)));
        assert!(!l.contains(Point::new(1.5, 1.5)));
        // Distance to the inner corner region.
        assert_relative_eq!(
            l.distance_to_boundary(Point::new(0.5, 0.5)).unwrap(),
            0.5
        );
        let d = l
            .distance_to_boundary(Point::new(1.25, 0.75))
            .unwrap();
        assert_relative_eq!(d, 0.25);
    }
}
