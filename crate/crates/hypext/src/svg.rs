//! Deterministic SVG scene writer for geometry overlays.
//!
//! Design points:
//!
//! * Output is a pure function of the calls made on the scene: elements are
//!   emitted in insertion order and every coordinate is printed with a fixed
//!   six-decimal format, so two identical builds produce identical bytes.
//! * Scenes live in mathematical coordinates (y up).  The writer flips the
//!   y-axis at print time by negating ordinates and shifting the `viewBox`,
//!   rather than attaching a `transform`, so the emitted numbers are the
//!   final ones a viewer sees.
//! * Stroke widths are given in user units and scale with the drawing; the
//!   caller picks them relative to the scene extent.

use num_complex::Complex64;

/// Pixel width of the rendered image; height follows the aspect ratio.
const RENDER_WIDTH_PX: f64 = 640.0;

/// Fraction of the scene extent added as a margin on every side.
const MARGIN_FRACTION: f64 = 0.05;

/// An SVG drawing under construction, in y-up coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgScene {
    x: (f64, f64),
    y: (f64, f64),
    elements: Vec<String>,
}

fn fmt(v: f64) -> String {
    // Normalize negative zero so the output does not depend on the sign of
    // a rounding error that is invisible at this precision.
    let r = if v == 0.0 { 0.0 } else { v };
    format!("{r:.6}")
}

impl SvgScene {
    /// Creates an empty scene spanning the rectangle `[x0, x1] × [y0, y1]`.
    /// Degenerate spans are widened symmetrically to keep the view box
    /// valid.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let widen = |lo: f64, hi: f64| {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            if hi - lo < 1e-9 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let x = widen(x0, x1);
        let y = widen(y0, y1);
        SvgScene {
            x,
            y,
            elements: Vec::new(),
        }
    }

    /// Creates a scene just large enough to show all the given points.
    pub fn fitting<'a, I: IntoIterator<Item = &'a Complex64>>(points: I) -> Self {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x = (x.0.min(p.re), x.1.max(p.re));
            y = (y.0.min(p.im), y.1.max(p.im));
        }
        if !x.0.is_finite() {
            x = (-1.0, 1.0);
            y = (-1.0, 1.0);
        }
        SvgScene::new(x.0, y.0, x.1, y.1)
    }

    /// Extent of the larger scene axis, handy for picking stroke widths.
    pub fn extent(&self) -> f64 {
        (self.x.1 - self.x.0).max(self.y.1 - self.y.0)
    }

    fn points_attr(points: &[Complex64]) -> String {
        let mut s = String::with_capacity(points.len() * 20);
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&fmt(p.re));
            s.push(',');
            s.push_str(&fmt(-p.im));
        }
        s
    }

    /// Adds an open polyline stroked in the given CSS color.
    pub fn polyline(&mut self, points: &[Complex64], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        self.elements.push(format!(
            "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{}\" points=\"{}\"/>",
            fmt(width),
            Self::points_attr(points),
        ));
    }

    /// Adds a closed, unfilled polygon stroked in the given CSS color.
    pub fn polygon(&mut self, points: &[Complex64], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        self.elements.push(format!(
            "<polygon fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{}\" points=\"{}\"/>",
            fmt(width),
            Self::points_attr(points),
        ));
    }

    /// Adds a filled dot.
    pub fn dot(&mut self, center: Complex64, radius: f64, fill: &str) {
        self.elements.push(format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>",
            fmt(center.re),
            fmt(-center.im),
            fmt(radius),
        ));
    }

    /// Renders the scene to a complete SVG document.
    pub fn render(&self) -> String {
        let mx = MARGIN_FRACTION * (self.x.1 - self.x.0);
        let my = MARGIN_FRACTION * (self.y.1 - self.y.0);
        let (x0, x1) = (self.x.0 - mx, self.x.1 + mx);
        let (y0, y1) = (self.y.0 - my, self.y.1 + my);
        let w = x1 - x0;
        let h = y1 - y0;
        let px_h = RENDER_WIDTH_PX * h / w;
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
             viewBox=\"{} {} {} {}\">\n",
            fmt(RENDER_WIDTH_PX),
            fmt(px_h),
            // The y-axis is flipped by negating ordinates, so the view box
            // starts at the negated top edge.
            fmt(x0),
            fmt(-y1),
            fmt(w),
            fmt(h),
        ));
        for e in &self.elements {
            out.push_str(e);
            out.push('\n');
        }
        out.push_str("</svg>\n");
        out
    }
}
