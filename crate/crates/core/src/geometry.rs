//! Small planar geometry helpers shared by the mesh, element and recovery code.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

/// Axis-aligned rectangle, `origin` at the south-west corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub origin: Vec2,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(origin: Vec2, width: f64, height: f64) -> Self {
        Rect {
            origin,
            width,
            height,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.width
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.height
    }
}

/// z-component of the cross product of two plane vectors.
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed polygon area by the shoelace formula; positive for CCW ordering.
pub fn polygon_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += cross2(a, b);
    }
    0.5 * acc
}

pub fn polygon_centroid(vertices: &[Vec2]) -> Vec2 {
    let n = vertices.len();
    let area = polygon_area(vertices);
    if area.abs() < f64::EPSILON {
        // degenerate; fall back to the vertex average
        let sum: Vec2 = vertices.iter().sum();
        return sum / n as f64;
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let w = cross2(a, b);
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Vec2::new(cx, cy) / (6.0 * area)
}

/// Proper intersection test between segments `a0-a1` and `b0-b1`.
///
/// The test is strict: shared endpoints and mere touching (an endpoint lying
/// on the other segment) do not count as an intersection.
pub fn segments_intersect_strict(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = cross2(b1 - b0, a0 - b0);
    let d2 = cross2(b1 - b0, a1 - b0);
    let d3 = cross2(a1 - a0, b0 - a0);
    let d4 = cross2(a1 - a0, b1 - a0);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Distance from point `p` to the segment `a-b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}
