//! Planar obstacle shapes and the few queries the simulator needs.

use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];

pub(crate) fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// Closest point to `p` on segment `ab`.
pub(crate) fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

/// Closed segment-segment intersection test.
pub(crate) fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| {
        d == 0.0 && p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Footprint of an obstacle on the ground plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Circle { center: Vec2, radius: f64 },
    /// Convex polygon; vertices are stored counter-clockwise.
    Polygon { vertices: Vec<Vec2> },
}

impl Shape {
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Shape::Circle { center, radius }
    }

    /// Axis-aligned rectangle `[min, max]`.
    pub fn rect(min: Vec2, max: Vec2) -> Self {
        Shape::Polygon {
            vertices: vec![min, [max[0], min[1]], max, [min[0], max[1]]],
        }
    }

    /// Signed area; positive when counter-clockwise.
    pub(crate) fn polygon_area(vertices: &[Vec2]) -> f64 {
        let n = vertices.len();
        (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum::<f64>() / 2.0
    }

    /// Checks convexity and puts polygon vertices in counter-clockwise order.
    pub fn normalized(self) -> Result<Self, String> {
        match self {
            Shape::Circle { radius, .. } if !(radius > 0.0) => Err("circle radius must be positive".into()),
            Shape::Circle { .. } => Ok(self),
            Shape::Polygon { mut vertices } => {
                if vertices.len() < 3 {
                    return Err("polygon needs at least 3 vertices".into());
                }
                let area = Self::polygon_area(&vertices);
                if area == 0.0 || !area.is_finite() {
                    return Err("polygon is degenerate".into());
                }
                if area < 0.0 {
                    vertices.reverse();
                }
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    if cross(sub(b, a), sub(c, b)) < 0.0 {
                        return Err("polygon must be convex".into());
                    }
                }
                Ok(Shape::Polygon { vertices })
            }
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Shape::Circle { center, radius } => norm(sub(p, *center)) <= *radius,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| cross(sub(vertices[(i + 1) % n], vertices[i]), sub(p, vertices[i])) >= 0.0)
            }
        }
    }

    /// Closest point on the boundary.
    pub fn closest_boundary_point(&self, p: Vec2) -> Vec2 {
        match self {
            Shape::Circle { center, radius } => {
                let d = sub(p, *center);
                let n = norm(d);
                if n == 0.0 {
                    [center[0] + radius, center[1]]
                } else {
                    [center[0] + d[0] / n * radius, center[1] + d[1] / n * radius]
                }
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = vertices[0];
                let mut best_d = f64::INFINITY;
                for i in 0..n {
                    let c = closest_on_segment(p, vertices[i], vertices[(i + 1) % n]);
                    let d = norm(sub(p, c));
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            }
        }
    }

    /// Distance from `p` to the footprint (zero inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        match self {
            Shape::Circle { center, radius } => norm(sub(p, *center)) - radius,
            Shape::Polygon { .. } => norm(sub(p, self.closest_boundary_point(p))),
        }
    }

    /// Whether the closed segment `ab` touches the footprint.
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        match self {
            Shape::Circle { center, radius } => norm(sub(closest_on_segment(*center, a, b), *center)) <= *radius,
            Shape::Polygon { vertices } => {
                if self.contains(a) || self.contains(b) {
                    return true;
                }
                let n = vertices.len();
                (0..n).any(|i| segments_intersect(a, b, vertices[i], vertices[(i + 1) % n]))
            }
        }
    }

    pub fn translated(&self, t: Vec2) -> Self {
        match self {
            Shape::Circle { center, radius } => Shape::Circle {
                center: [center[0] + t[0], center[1] + t[1]],
                radius: *radius,
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|v| [v[0] + t[0], v[1] + t[1]]).collect(),
            },
        }
    }

    /// Outline as a closed polyline; circles are approximated with `n` segments.
    pub fn outline(&self, n: usize) -> Vec<Vec2> {
        match self {
            Shape::Circle { center, radius } => (0..=n)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
                })
                .collect(),
            Shape::Polygon { vertices } => {
                let mut v = vertices.clone();
                v.push(vertices[0]);
                v
            }
        }
    }
}
