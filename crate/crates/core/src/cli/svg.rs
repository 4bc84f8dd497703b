//! Minimal SVG writer restricted to `path`, `circle` and `line` elements.

use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub stroke: &'static str,
    pub width: f64,
    pub dashed: bool,
}

impl Style {
    pub const fn solid(stroke: &'static str, width: f64) -> Self {
        Self { stroke, width, dashed: false }
    }

    pub const fn dashed(stroke: &'static str, width: f64) -> Self {
        Self { stroke, width, dashed: true }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Path(Vec<Vec2>, Style),
    Circle(Vec2, f64, &'static str),
    Line(Vec2, Vec2, Style),
}

/// Shapes in world coordinates, laid out on write with the y axis pointing up.
#[derive(Debug, Clone, Default)]
pub struct Drawing {
    shapes: Vec<Shape>,
}

const SIZE: f64 = 800.0;
const MARGIN: f64 = 0.1;

impl Drawing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn polyline(&mut self, pts: Vec<Vec2>, style: Style) {
        if pts.len() >= 2 {
            self.shapes.push(Shape::Path(pts, style));
        }
    }

    /// Closed polyline; the first point is repeated at the end.
    pub fn polygon(&mut self, mut pts: Vec<Vec2>, style: Style) {
        if let Some(&first) = pts.first() {
            if pts.last() != Some(&first) {
                pts.push(first);
            }
        }
        self.polyline(pts, style);
    }

    /// Marker of the given pixel radius.
    pub fn marker(&mut self, at: Vec2, radius_px: f64, fill: &'static str) {
        self.shapes.push(Shape::Circle(at, radius_px, fill));
    }

    pub fn segment(&mut self, a: Vec2, b: Vec2, style: Style) {
        self.shapes.push(Shape::Line(a, b, style));
    }

    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut take = |p: &Vec2| {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        };
        for s in &self.shapes {
            match s {
                Shape::Path(pts, _) => pts.iter().for_each(&mut take),
                Shape::Circle(c, _, _) => take(c),
                Shape::Line(a, b, _) => {
                    take(a);
                    take(b);
                }
            }
        }
        if !lo[0].is_finite() {
            return ([-1.0, -1.0], [1.0, 1.0]);
        }
        (lo, hi)
    }

    /// Tight bounding box plus a 10% margin, scaled so the longer side is 800 px.
    pub fn to_svg(&self) -> String {
        let (lo, hi) = self.bounds();
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let pad = MARGIN * span;
        let (x0, y1) = (lo[0] - pad, hi[1] + pad);
        let k = SIZE / (span + 2.0 * pad);
        let w = ((hi[0] - lo[0] + 2.0 * pad) * k).round();
        let h = ((hi[1] - lo[1] + 2.0 * pad) * k).round();
        let px = |p: &Vec2| ((p[0] - x0) * k, (y1 - p[1]) * k);
        let stroke = |s: &Style| {
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            format!("stroke=\"{}\" stroke-width=\"{}\"{dash}", s.stroke, s.width)
        };

        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        for s in &self.shapes {
            match s {
                Shape::Path(pts, st) => {
                    let mut d = String::new();
                    for (i, p) in pts.iter().enumerate() {
                        let (x, y) = px(p);
                        d.push_str(&format!("{}{x:.3} {y:.3}", if i == 0 { "M" } else { " L" }));
                    }
                    out.push_str(&format!("  <path d=\"{d}\" fill=\"none\" {}/>\n", stroke(st)));
                }
                Shape::Circle(c, r, fill) => {
                    let (x, y) = px(c);
                    out.push_str(&format!("  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r}\" fill=\"{fill}\"/>\n"));
                }
                Shape::Line(a, b, st) => {
                    let ((xa, ya), (xb, yb)) = (px(a), px(b));
                    out.push_str(&format!(
                        "  <line x1=\"{xa:.3}\" y1=\"{ya:.3}\" x2=\"{xb:.3}\" y2=\"{yb:.3}\" {}/>\n",
                        stroke(st)
                    ));
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_allowed_elements_and_closed_paths() {
        let mut d = Drawing::new();
        d.polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], Style::solid("black", 1.0));
        d.marker([0.5, 0.5], 3.0, "red");
        d.segment([0.0, 0.0], [1.0, 1.0], Style::dashed("blue", 1.0));
        let svg = d.to_svg();
        for line in svg.lines().skip(1) {
            let t = line.trim_start();
            assert!(
                t.starts_with("<path") || t.starts_with("<circle") || t.starts_with("<line") || t == "</svg>",
                "{t}"
            );
        }
        assert!(svg.contains("M66.667 733.333 L733.333 733.333 L733.333 66.667 L66.667 733.333"), "{svg}");
    }
}
