use super::{SimRobot, WorldModel};
use crate::geometry::{backproject_pixel, robot_to_world, CameraModel, GroundPoint, PixelPoint, EPS_V};
use crate::traversability::TraversabilityMask;

/// Ground-truth mask renderer with the per-pixel backprojection cached.
///
/// The cache depends only on the camera, so one renderer serves a whole episode.
#[derive(Debug, Clone)]
pub struct MaskRenderer {
    cam: CameraModel,
    /// Robot-frame ground point for every pixel below the horizon band, row-major.
    rays: Vec<Option<GroundPoint>>,
}

impl MaskRenderer {
    pub fn new(cam: CameraModel) -> Self {
        let mut rays = Vec::with_capacity(cam.width * cam.height);
        for v in 0..cam.height {
            for u in 0..cam.width {
                let ray = if (v as f64) > cam.c_y + EPS_V {
                    backproject_pixel(&cam, PixelPoint::new(u as f64, v as f64)).ok()
                } else {
                    None
                };
                rays.push(ray);
            }
        }
        Self { cam, rays }
    }

    pub fn camera(&self) -> &CameraModel {
        &self.cam
    }

    /// Robot-frame ground point seen by pixel `(u, v)`, if it lies below the horizon band.
    pub fn ray(&self, u: usize, v: usize) -> Option<GroundPoint> {
        self.rays[v * self.cam.width + u]
    }

    /// A pixel is traversable when its ground point is inside the bounds,
    /// outside every obstacle footprint and, with occlusion on, visible from
    /// the camera without crossing an obstacle.
    pub fn render(&self, world: &WorldModel, robot: &SimRobot) -> TraversabilityMask {
        let eye = robot.pose.position();
        let (w, h) = (self.cam.width, self.cam.height);
        let mut bits = vec![false; w * h];
        for (bit, ray) in bits.iter_mut().zip(&self.rays) {
            let Some(g) = ray else { continue };
            let p = robot_to_world(&robot.pose, *g);
            *bit = world.is_free(p) && !(world.occlusion && world.is_occluded(eye, p));
        }
        TraversabilityMask::from_bits(w, h, bits).expect("sized to the camera")
    }
}

pub fn render_traversability_mask(world: &WorldModel, robot: &SimRobot) -> TraversabilityMask {
    MaskRenderer::new(robot.cam).render(world, robot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_ground_point, world_to_robot, Pose2};
    use crate::simworld::{check_collision, Obstacle, Shape};
    use proptest::prelude::*;

    fn open_world() -> WorldModel {
        let mut w = crate::simworld::tests::open_world();
        w.bounds.min = [-1000.0, -1000.0];
        w.bounds.max = [1000.0, 1000.0];
        w
    }

    fn robot(x: f64, y: f64, theta: f64) -> SimRobot {
        SimRobot { pose: Pose2::new(x, y, theta), cam: CameraModel::default() }
    }

    #[test]
    fn empty_world_is_free_below_horizon() {
        let w = open_world();
        let m = render_traversability_mask(&w, &robot(1.0, -2.0, 0.7));
        let cam = CameraModel::default();
        for v in 0..cam.height {
            for u in 0..cam.width {
                assert_eq!(m.get(u, v), v >= cam.first_ground_row(), "({u},{v})");
            }
        }
    }

    #[test]
    fn obstacle_ahead_blob_bottom_edge() {
        let mut w = open_world();
        w.occlusion = false;
        w.obstacles.push(Obstacle::new(Shape::circle([3.0, 0.0], 0.5)));
        let cam = CameraModel::default();
        let m = render_traversability_mask(&w, &robot(0.0, 0.0, 0.0));
        let u = cam.c_x as usize;
        // lowest blocked row on the centre column
        let v_low = (cam.first_ground_row()..cam.height).rev().find(|&v| !m.get(u, v)).unwrap();
        // independent: ground range of a row is f_y h / (v - c_y)
        let range = |v: usize| cam.f_y * cam.h_cam / (v as f64 - cam.c_y);
        assert!(range(v_low) >= 2.5 && range(v_low + 1) < 2.5);
        // blob is centred on c_x
        let cols: Vec<usize> = (0..cam.width).filter(|&u| !m.get(u, v_low - 2)).collect();
        let mid = (cols[0] + cols[cols.len() - 1]) as f64 / 2.0;
        assert!((mid - cam.c_x).abs() <= 1.0, "{mid}");
        // without occlusion the ground behind the circle shows again
        let far = (cam.first_ground_row()..v_low).find(|&v| range(v) > 4.0).unwrap();
        assert!(m.get(u, far));
        w.occlusion = true;
        let m = render_traversability_mask(&w, &robot(0.0, 0.0, 0.0));
        assert!(!m.get(u, far));
    }

    #[test]
    fn obstacle_behind_is_not_rendered() {
        let mut w = open_world();
        w.obstacles.push(Obstacle::new(Shape::circle([3.0, 0.0], 0.5)));
        let m = render_traversability_mask(&w, &robot(0.0, 0.0, std::f64::consts::PI));
        let expect = TraversabilityMask::below_horizon(&CameraModel::default());
        assert_eq!(m, expect);
    }

    fn obstacle_strategy() -> impl Strategy<Value = Obstacle> {
        prop_oneof![
            ((-6.0..6.0f64), (-6.0..6.0f64), (0.2..1.5f64)).prop_map(|(x, y, r)| Obstacle::new(Shape::circle([x, y], r))),
            ((-6.0..6.0f64), (-6.0..6.0f64), (0.2..2.0f64), (0.2..2.0f64))
                .prop_map(|(x, y, a, b)| Obstacle::new(Shape::rect([x, y], [x + a, y + b]))),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rigid_motion_equivariance(
            obstacles in prop::collection::vec(obstacle_strategy(), 0..4),
            pose in ((-3.0..3.0f64), (-3.0..3.0f64), (-3.2..3.2f64)),
            motion in ((-5.0..5.0f64), (-5.0..5.0f64), (-3.2..3.2f64)),
        ) {
            let mut w = open_world();
            w.obstacles = obstacles;
            let r = robot(pose.0, pose.1, pose.2);
            let (c, s) = (motion.2.cos(), motion.2.sin());
            let tf = |p: [f64; 2]| [c * p[0] - s * p[1] + motion.0, s * p[0] + c * p[1] + motion.1];
            let mut w2 = w.clone();
            for o in &mut w2.obstacles {
                o.shape = match &o.shape {
                    Shape::Circle { center, radius } => Shape::circle(tf(*center), *radius),
                    Shape::Polygon { vertices } => Shape::Polygon { vertices: vertices.iter().map(|v| tf(*v)).collect() },
                };
            }
            let p2 = tf(r.pose.position());
            let r2 = robot(p2[0], p2[1], r.pose.theta + motion.2);
            let a = render_traversability_mask(&w, &r);
            let b = render_traversability_mask(&w2, &r2);
            // bit-exact up to pixels whose ground point sits on a footprint edge
            let cam = CameraModel::default();
            let renderer = MaskRenderer::new(cam);
            for v in 0..cam.height {
                for u in 0..cam.width {
                    if a.get(u, v) != b.get(u, v) {
                        let g = renderer.ray(u, v).unwrap();
                        let p = robot_to_world(&r.pose, g);
                        let edge = w.obstacles.iter().map(|o| o.shape.closest_boundary_point(p))
                            .map(|q| (q[0] - p[0]).hypot(q[1] - p[1]))
                            .fold(f64::INFINITY, f64::min);
                        prop_assert!(edge < 1e-9, "pixel ({u},{v}) differs {edge}");
                    }
                }
            }
        }

        #[test]
        fn visible_obstacle_ground_is_never_free(
            obstacles in prop::collection::vec(obstacle_strategy(), 1..4),
            theta in -3.2..3.2f64,
        ) {
            let mut w = open_world();
            w.obstacles = obstacles;
            let r = robot(0.0, 0.0, theta);
            let m = render_traversability_mask(&w, &r);
            let cam = r.cam;
            let r_safe = 2.0;
            let mut blocked_ahead = false;
            // every visible ground point within r_safe that lies on an obstacle is non-traversable
            for i in 0..=80 {
                for j in -40..=40 {
                    let g = GroundPoint::new(i as f64 * r_safe / 80.0, j as f64 * r_safe / 40.0);
                    if g.x.hypot(g.y) > r_safe { continue; }
                    let Ok(px) = project_ground_point(&cam, g) else { continue };
                    let (u, v) = (px.u.round(), px.v.round());
                    if u < 0.0 || v < 0.0 || u >= cam.width as f64 || v >= cam.height as f64 { continue; }
                    let pw = robot_to_world(&r.pose, renderer_ground(&cam, u as usize, v as usize));
                    if !w.is_free(pw) {
                        prop_assert!(!m.get(u as usize, v as usize));
                        blocked_ahead = true;
                    }
                }
            }
            // a collision with an obstacle whose contact lies in the visible ground must show up in the mask
            if let Some(c) = check_collision(&w, [0.0, 0.0]) {
                if c.obstacle_id >= 0 {
                    let g = world_to_robot(&r.pose, c.contact_point);
                    if let Ok(px) = project_ground_point(&cam, g) {
                        let inside = px.u >= 0.0 && px.v >= 0.0 && px.u < cam.width as f64 - 1.0 && px.v < cam.height as f64 - 1.0;
                        if inside && g.x.hypot(g.y) <= r_safe {
                            prop_assert!(blocked_ahead || m.count_traversable() < TraversabilityMask::below_horizon(&cam).count_traversable());
                        }
                    }
                }
            }
        }
    }

    fn renderer_ground(cam: &CameraModel, u: usize, v: usize) -> GroundPoint {
        backproject_pixel(cam, PixelPoint::new(u as f64, v as f64)).unwrap()
    }
}
