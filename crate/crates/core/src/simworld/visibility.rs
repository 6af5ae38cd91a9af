use super::shapes::{closest_on_segment, dot, norm, segments_intersect, sub, Shape, Vec2};
use super::{SimRobot, WorldModel, BOUNDARY_ID};
use crate::geometry::wrap_angle;

/// Whether obstacle `id` has a boundary point inside the camera's horizontal
/// field of view and within `fov_range`. Occlusion by other obstacles is not
/// considered. [`BOUNDARY_ID`] asks about the world boundary.
pub fn is_obstacle_visible(world: &WorldModel, robot: &SimRobot, id: i64) -> bool {
    let half = robot.cam.horizontal_half_fov();
    let sector = Sector {
        apex: robot.pose.position(),
        heading: robot.pose.theta,
        half,
        range: world.fov_range,
    };
    if id == BOUNDARY_ID {
        return sector.extreme_points().iter().any(|p| !world.bounds.contains(*p));
    }
    let Some(o) = usize::try_from(id).ok().and_then(|i| world.obstacles.get(i)) else {
        return false;
    };
    sector.touches_boundary_of(&o.shape)
}

/// Closed circular sector (the 2D viewing frustum).
struct Sector {
    apex: Vec2,
    heading: f64,
    half: f64,
    range: f64,
}

impl Sector {
    fn edge_dir(&self, side: f64) -> Vec2 {
        let a = self.heading + side * self.half;
        [a.cos(), a.sin()]
    }

    fn contains(&self, p: Vec2) -> bool {
        let d = sub(p, self.apex);
        let r = norm(d);
        if r > self.range {
            return false;
        }
        if r == 0.0 {
            return true;
        }
        // small slack absorbs rounding on the sector edges
        wrap_angle(d[1].atan2(d[0]) - self.heading).abs() <= self.half + 1e-12
    }

    /// Points of the sector outline that bound its extent: apex, arc ends and
    /// the axis-aligned arc extrema that fall inside the angular window.
    fn extreme_points(&self) -> Vec<Vec2> {
        let mut pts = vec![self.apex];
        let mut angles = vec![self.heading - self.half, self.heading + self.half];
        for k in 0..4 {
            let a = k as f64 * std::f64::consts::FRAC_PI_2;
            if wrap_angle(a - self.heading).abs() <= self.half {
                angles.push(a);
            }
        }
        pts.extend(angles.into_iter().map(|a| [self.apex[0] + self.range * a.cos(), self.apex[1] + self.range * a.sin()]));
        pts
    }

    fn touches_boundary_of(&self, shape: &Shape) -> bool {
        // apex inside the footprint: the boundary surrounds the camera
        if shape.contains(self.apex) {
            let c = shape.closest_boundary_point(self.apex);
            return norm(sub(c, self.apex)) <= self.range;
        }
        match shape {
            Shape::Circle { center, radius } => self.touches_circle(*center, *radius),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).any(|i| self.touches_segment(vertices[i], vertices[(i + 1) % n]))
            }
        }
    }

    /// Closest boundary point of a circle with the apex outside it is the first
    /// candidate; failing that the sector edges and arc may still cross the circle.
    fn touches_circle(&self, center: Vec2, radius: f64) -> bool {
        let d = sub(center, self.apex);
        let dist = norm(d);
        let near = [self.apex[0] + d[0] / dist * (dist - radius), self.apex[1] + d[1] / dist * (dist - radius)];
        if self.contains(near) {
            return true;
        }
        if dist - radius > self.range {
            return false;
        }
        for side in [-1.0, 1.0] {
            let e = self.edge_dir(side);
            let tip = [self.apex[0] + e[0] * self.range, self.apex[1] + e[1] * self.range];
            if norm(sub(closest_on_segment(center, self.apex, tip), center)) <= radius {
                return true;
            }
        }
        // circle meeting only the arc: the arc point towards the centre
        if self.contains([self.apex[0] + d[0] / dist * self.range, self.apex[1] + d[1] / dist * self.range]) {
            return dist - radius <= self.range && dist + radius >= self.range;
        }
        false
    }

    fn touches_segment(&self, a: Vec2, b: Vec2) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        for side in [-1.0, 1.0] {
            let e = self.edge_dir(side);
            let tip = [self.apex[0] + e[0] * self.range, self.apex[1] + e[1] * self.range];
            if segments_intersect(self.apex, tip, a, b) {
                return true;
            }
        }
        // segment crossing only the arc: its closest point to the apex, or the
        // arc crossing points, lie in the sector
        let c = closest_on_segment(self.apex, a, b);
        if self.contains(c) {
            return true;
        }
        let ab = sub(b, a);
        let f = sub(a, self.apex);
        let qa = dot(ab, ab);
        let qb = 2.0 * dot(f, ab);
        let qc = dot(f, f) - self.range * self.range;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 || qa == 0.0 {
            return false;
        }
        let s = disc.sqrt();
        [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)]
            .into_iter()
            .filter(|t| (0.0..=1.0).contains(t))
            .any(|t| {
                let p = [a[0] + t * ab[0], a[1] + t * ab[1]];
                let d = sub(p, self.apex);
                wrap_angle(d[1].atan2(d[0]) - self.heading).abs() <= self.half + 1e-12
            })
    }
}
