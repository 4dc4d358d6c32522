//! Convex polygon clipping for the planar zero cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Number of sides of the polygons bracketing the truncation disc.
pub const DISC_SIDES: usize = 512;

/// Vertices closer than this multiple of `R` are merged.
const MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polygon {
    /// Counter-clockwise vertices.
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn square(half_side: f64) -> Self {
        let h = half_side;
        Polygon { vertices: vec![[-h, -h], [h, -h], [h, h], [-h, h]] }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let v = &self.vertices;
        let twice: f64 = (0..v.len())
            .map(|i| {
                let [x0, y0] = v[i];
                let [x1, y1] = v[(i + 1) % v.len()];
                x0 * y1 - x1 * y0
            })
            .sum();
        0.5 * twice
    }

    pub fn centroid(&self) -> Option<[f64; 2]> {
        let a = self.area();
        if !(a > 0.0) {
            return None;
        }
        let v = &self.vertices;
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..v.len() {
            let [x0, y0] = v[i];
            let [x1, y1] = v[(i + 1) % v.len()];
            let w = x0 * y1 - x1 * y0;
            cx += (x0 + x1) * w;
            cy += (y0 + y1) * w;
        }
        Some([cx / (6.0 * a), cy / (6.0 * a)])
    }

    pub fn max_norm(&self) -> f64 {
        self.vertices.iter().map(|[x, y]| x.hypot(*y)).fold(0.0, f64::max)
    }

    /// Intersects with the half-plane `⟨x, u⟩ ≤ d` (Sutherland–Hodgman).
    pub fn clip(&mut self, u: [f64; 2], d: f64, merge_dist: f64) {
        let v = &self.vertices;
        let side: Vec<f64> = v.iter().map(|p| p[0] * u[0] + p[1] * u[1] - d).collect();
        if side.iter().all(|&s| s <= 0.0) {
            return;
        }
        let mut out = Vec::with_capacity(v.len() + 1);
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            let (p, q) = (v[i], v[j]);
            let (sp, sq) = (side[i], side[j]);
            if sp <= 0.0 {
                out.push(p);
            }
            if (sp <= 0.0) != (sq <= 0.0) {
                let w = sp / (sp - sq);
                out.push([p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]);
            }
        }
        dedup_ring(&mut out, merge_dist);
        self.vertices = out;
    }
}

fn dedup_ring(vs: &mut Vec<[f64; 2]>, tol: f64) {
    let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]) <= tol;
    vs.dedup_by(|b, a| close(*a, *b));
    while vs.len() > 1 && close(vs[0], vs[vs.len() - 1]) {
        vs.pop();
    }
}

/// Area of the cell intersected with the truncation disc, bracketed by an
/// inscribed and a circumscribed regular polygon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaBracket {
    pub inner: f64,
    pub outer: f64,
}

impl AreaBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.inner + self.outer)
    }

    pub fn gap(&self) -> f64 {
        self.outer - self.inner
    }
}

/// Clips the square `[-R, R]²` by the given half-planes, then by the inscribed
/// and circumscribed `DISC_SIDES`-gons of the disc of radius `R`.
pub fn clip_to_disc(planes: impl IntoIterator<Item = ([f64; 2], f64)>, radius: f64) -> (Polygon, Polygon) {
    let merge = MERGE_TOL * radius;
    let mut cell = Polygon::square(radius);
    for (u, t) in planes {
        cell.clip(u, t, merge);
    }
    let half_angle = PI / DISC_SIDES as f64;
    let apothem = radius * half_angle.cos();
    if cell.max_norm() <= apothem {
        return (cell.clone(), cell);
    }
    let mut inner = cell.clone();
    let mut outer = cell;
    for k in 0..DISC_SIDES {
        let (s, c) = ((2 * k + 1) as f64 * half_angle).sin_cos();
        inner.clip([c, s], apothem, merge);
        outer.clip([c, s], radius, merge);
    }
    (inner, outer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_area_and_centroid() {
        let s = Polygon::square(2.0);
        assert_eq!(s.area(), 16.0);
        assert_eq!(s.centroid(), Some([0.0, 0.0]));
    }

    #[test]
    fn clip_halves_square() {
        let mut s = Polygon::square(1.0);
        s.clip([1.0, 0.0], 0.0, 1e-12);
        assert!((s.area() - 2.0).abs() < 1e-15);
        let c = s.centroid().unwrap();
        assert!((c[0] + 0.5).abs() < 1e-15 && c[1].abs() < 1e-15);
    }

    #[test]
    fn clip_outside_is_noop() {
        let mut s = Polygon::square(1.0);
        s.clip([0.6, 0.8], 1.5, 1e-12);
        assert_eq!(s, Polygon::square(1.0));
    }

    #[test]
    fn clip_through_vertex_merges() {
        let mut s = Polygon::square(1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        s.clip([h, h], 0.0, 1e-12);
        assert_eq!(s.vertices.len(), 3);
        assert!((s.area() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn disc_brackets() {
        let (inner, outer) = clip_to_disc(std::iter::empty(), 1.0);
        let b = AreaBracket { inner: inner.area(), outer: outer.area() };
        let n = DISC_SIDES as f64;
        assert!((b.inner - 0.5 * n * (2.0 * PI / n).sin()).abs() < 1e-12);
        // four slivers of the circumscribed polygon stick out of the square
        let circumscribed = n * (PI / n).tan();
        assert!(b.outer <= circumscribed && circumscribed - b.outer < 3e-7);
        assert!(b.inner < PI && PI < b.outer && b.gap() < 1e-3);
    }
}
