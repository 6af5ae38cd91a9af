//! Deterministic 2D world with oracle perception.
//!
//! The simulator knows the metric truth: obstacle footprints, the robot pose
//! and the camera. It renders ground-truth traversability masks, answers
//! collision and visibility queries, and stands in for place recognition.

mod record;
mod render;
pub mod shapes;
mod visibility;

pub use record::{parse_positions_json, record_expert, RecordError, RecordParams, Recording};
pub use render::{render_traversability_mask, MaskRenderer};
pub use shapes::{Shape, Vec2};
pub use visibility::is_obstacle_visible;

use crate::geometry::{CameraModel, Pose2};
use crate::topograph::{localize, GraphError, LocalizationQuery, TopoGraph};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use shapes::{norm, sub};
use std::path::Path;
use thiserror::Error;

/// Distance slack under which a disk counts as touching.
pub const CONTACT_TOL: f64 = 1e-9;
/// Obstacle id reported when the robot leaves the world bounds.
pub const BOUNDARY_ID: i64 = -1;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> WorldError {
    WorldError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn outline(&self) -> Vec<Vec2> {
        vec![
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
            self.min,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    #[serde(flatten)]
    pub shape: Shape,
    /// Marks an obstacle inserted as an environment perturbation.
    #[serde(default)]
    pub is_target: bool,
}

impl Obstacle {
    pub fn new(shape: Shape) -> Self {
        Self { shape, is_target: false }
    }

    pub fn target(shape: Shape) -> Self {
        Self { shape, is_target: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: Vec2,
    pub radius: f64,
}

fn yes() -> bool {
    true
}

/// Synthetic environment plus the camera and the scripted expert route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub bounds: Bounds,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub robot_radius: f64,
    pub fov_range: f64,
    pub camera: CameraModel,
    /// `[x, y, theta]` in the world frame.
    pub start_pose: [f64; 3],
    #[serde(default)]
    pub goal_region: Option<GoalRegion>,
    #[serde(default)]
    pub expert_waypoints: Vec<Vec2>,
    /// Obstacles hide the ground behind them in rendered masks.
    #[serde(default = "yes")]
    pub occlusion: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRobot {
    pub pose: Pose2,
    pub cam: CameraModel,
}

/// Contact between the robot disk and an obstacle or the world boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    /// Obstacle index, or [`BOUNDARY_ID`].
    pub obstacle_id: i64,
    /// Closest point of the touched footprint or wall.
    pub contact_point: Vec2,
    /// Unit vector from the contact point towards free space.
    pub normal: Vec2,
}

impl WorldModel {
    pub fn validate(&self) -> Result<(), WorldError> {
        let b = &self.bounds;
        if !(b.min[0] < b.max[0] && b.min[1] < b.max[1]) {
            return Err(invalid("bounds", "min must be strictly below max"));
        }
        if !(self.robot_radius > 0.0) {
            return Err(invalid("robot_radius", "must be > 0"));
        }
        if !(self.fov_range > 0.0) {
            return Err(invalid("fov_range", "must be > 0"));
        }
        self.camera
            .validate()
            .map_err(|e| invalid("camera", e.to_string()))?;
        for (i, o) in self.obstacles.iter().enumerate() {
            let path = format!("obstacles[{i}]");
            o.shape
                .clone()
                .normalized()
                .map_err(|e| invalid(path.clone(), e))?;
            let inside = match &o.shape {
                Shape::Circle { center, radius } => {
                    b.contains([center[0] - radius, center[1] - radius])
                        && b.contains([center[0] + radius, center[1] + radius])
                }
                Shape::Polygon { vertices } => vertices.iter().all(|v| b.contains(*v)),
            };
            if !inside {
                return Err(invalid(path, "obstacle must lie within bounds"));
            }
        }
        if let Some(g) = &self.goal_region {
            if !(g.radius > 0.0) {
                return Err(invalid("goal_region.radius", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Validates and puts polygons in canonical (counter-clockwise) order.
    pub fn normalized(mut self) -> Result<Self, WorldError> {
        self.validate()?;
        for o in &mut self.obstacles {
            o.shape = o.shape.clone().normalized().expect("validated");
        }
        Ok(self)
    }

    pub fn from_json(s: &str) -> Result<Self, WorldError> {
        serde_json::from_str::<WorldModel>(s)?.normalized()
    }

    pub fn to_json(&self) -> Result<String, WorldError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), WorldError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn start(&self) -> Pose2 {
        Pose2::new(self.start_pose[0], self.start_pose[1], self.start_pose[2])
    }

    pub fn with_obstacle(mut self, obstacle: Obstacle) -> Result<Self, WorldError> {
        self.obstacles.push(obstacle);
        self.normalized()
    }

    /// Whether a ground point is free floor (inside bounds, outside every footprint).
    pub fn is_free(&self, p: Vec2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.shape.contains(p))
    }

    /// Whether the line of sight from `eye` to `p` crosses an obstacle.
    pub fn is_occluded(&self, eye: Vec2, p: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.shape.intersects_segment(eye, p))
    }
}

/// Disk-vs-world contact test; obstacles take precedence over the boundary
/// and the lowest obstacle id wins.
pub fn check_collision(world: &WorldModel, position: Vec2) -> Option<Collision> {
    let r = world.robot_radius + CONTACT_TOL;
    for (i, o) in world.obstacles.iter().enumerate() {
        if o.shape.distance(position) <= r {
            let c = o.shape.closest_boundary_point(position);
            let mut n = sub(position, c);
            let len = norm(n);
            let inside = o.shape.contains(position);
            if len == 0.0 {
                n = match &o.shape {
                    Shape::Circle { center, .. } => sub(c, *center),
                    Shape::Polygon { .. } => [1.0, 0.0],
                };
            } else if inside {
                n = [-n[0], -n[1]];
            }
            let l = norm(n);
            return Some(Collision {
                obstacle_id: i as i64,
                contact_point: c,
                normal: [n[0] / l, n[1] / l],
            });
        }
    }
    let b = &world.bounds;
    let walls = [
        (position[0] - b.min[0], [1.0, 0.0], [b.min[0], position[1]]),
        (b.max[0] - position[0], [-1.0, 0.0], [b.max[0], position[1]]),
        (position[1] - b.min[1], [0.0, 1.0], [position[0], b.min[1]]),
        (b.max[1] - position[1], [0.0, -1.0], [position[0], b.max[1]]),
    ];
    let (gap, normal, point) = walls
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("four walls");
    (gap <= r).then_some(Collision {
        obstacle_id: BOUNDARY_ID,
        contact_point: point,
        normal,
    })
}

/// Moves the robot out of contact: its center ends `3 * robot_radius` from the
/// contact point along the contact normal. Repeats for chained contacts.
pub fn push_out(world: &WorldModel, position: Vec2) -> Vec2 {
    let mut p = position;
    let clearance = 3.0 * world.robot_radius;
    for _ in 0..8 {
        let Some(c) = check_collision(world, p) else {
            break;
        };
        p = [
            c.contact_point[0] + c.normal[0] * clearance,
            c.contact_point[1] + c.normal[1] * clearance,
        ];
    }
    p
}

/// Nearest graph node to the (noisy) robot position.
///
/// Graph poses live in a frame scaled by `pose_scale` relative to metric truth.
pub fn oracle_localize<R: Rng + ?Sized>(
    robot: &Pose2,
    graph: &TopoGraph,
    pose_scale: f64,
    sigma_pos: f64,
    rng: &mut R,
) -> Result<usize, GraphError> {
    let mut p = robot.position();
    if sigma_pos > 0.0 {
        let n = Normal::new(0.0, sigma_pos).expect("finite sigma");
        p[0] += n.sample(rng);
        p[1] += n.sample(rng);
    }
    localize(graph, LocalizationQuery::Position([p[0] * pose_scale, p[1] * pose_scale]))
}

/// Metric distance from `p` to the closest graph node.
pub fn distance_to_graph(graph: &TopoGraph, pose_scale: f64, p: Vec2) -> f64 {
    graph
        .nodes
        .iter()
        .map(|n| norm(sub([n.pose[0] / pose_scale, n.pose[1] / pose_scale], p)))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topograph::{build_graph, GraphBuildParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn open_world() -> WorldModel {
        WorldModel {
            bounds: Bounds { min: [-20.0, -20.0], max: [20.0, 20.0] },
            obstacles: vec![],
            robot_radius: 0.25,
            fov_range: 10.0,
            camera: CameraModel::default(),
            start_pose: [0.0, 0.0, 0.0],
            goal_region: None,
            expert_waypoints: vec![],
            occlusion: true,
        }
    }

    #[test]
    fn collision_cases() {
        let mut w = open_world();
        w.obstacles.push(Obstacle::new(Shape::circle([3.0, 0.0], 0.5)));
        // separated by 0.01
        assert_eq!(check_collision(&w, [3.0 - 0.5 - 0.25 - 0.01, 0.0]), None);
        let c = check_collision(&w, [3.0, 0.1]).unwrap();
        assert_eq!(c.obstacle_id, 0);
        // tangent within 1e-9
        let c = check_collision(&w, [3.0 - 0.75 - 5e-10, 0.0]).unwrap();
        assert_eq!(c.obstacle_id, 0);
        assert!((c.normal[0] + 1.0).abs() < 1e-12);
        assert_eq!(check_collision(&w, [19.9, 0.0]).unwrap().obstacle_id, BOUNDARY_ID);
        w.obstacles.insert(0, Obstacle::new(Shape::rect([2.0, -1.0], [2.6, 1.0])));
        assert_eq!(check_collision(&w, [2.5, 0.0]).unwrap().obstacle_id, 0);
    }

    #[test]
    fn push_out_clears_contact() {
        let mut w = open_world();
        w.obstacles.push(Obstacle::new(Shape::circle([3.0, 0.0], 0.5)));
        w.obstacles.push(Obstacle::new(Shape::rect([5.0, -1.0], [6.0, 1.0])));
        for p in [[2.4, 0.0], [3.0, 0.2], [5.1, 0.0], [-19.9, 3.0], [3.0, 0.0]] {
            let q = push_out(&w, p);
            assert!(check_collision(&w, q).is_none(), "{p:?} -> {q:?}");
        }
        let q = push_out(&w, [2.4, 0.0]);
        assert!((q[0] - (2.5 - 0.75)).abs() < 1e-12);
    }

    #[test]
    fn world_validation() {
        let mut w = open_world();
        assert!(w.validate().is_ok());
        w.obstacles.push(Obstacle::new(Shape::circle([19.9, 0.0], 0.5)));
        let err = w.validate().unwrap_err().to_string();
        assert!(err.starts_with("obstacles[0]"), "{err}");
        let mut w = open_world();
        w.robot_radius = 0.0;
        assert!(w.validate().unwrap_err().to_string().starts_with("robot_radius"));
    }

    #[test]
    fn world_json_round_trip() {
        let mut w = open_world();
        w.obstacles.push(Obstacle::target(Shape::circle([3.0, 0.0], 0.5)));
        w.obstacles.push(Obstacle::new(Shape::rect([5.0, -1.0], [6.0, 1.0])));
        w.goal_region = Some(GoalRegion { center: [8.0, 0.0], radius: 0.5 });
        let s = w.to_json().unwrap();
        assert!(s.contains("\"type\": \"circle\""));
        assert_eq!(WorldModel::from_json(&s).unwrap(), w);
    }

    #[test]
    fn oracle_localization() {
        let z: Vec<[f64; 2]> = (0..6).map(|i| [i as f64 * 1.7, 0.0]).collect();
        let g = build_graph(&z, GraphBuildParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(oracle_localize(&Pose2::new(3.0, 0.0, 0.0), &g, 1.7, 0.0, &mut rng).unwrap(), 3);
        // midway between two nodes: smallest id wins
        let unit: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, 0.0]).collect();
        let gu = build_graph(&unit, GraphBuildParams::default()).unwrap();
        assert_eq!(oracle_localize(&Pose2::new(2.5, 0.0, 0.0), &gu, 1.0, 0.0, &mut rng).unwrap(), 2);
        // seeded noise: recompute with the same stream
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let got = oracle_localize(&Pose2::new(2.2, 0.1, 0.0), &g, 1.7, 0.1, &mut a).unwrap();
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let n = Normal::new(0.0, 0.1).unwrap();
        let q = [2.2 + n.sample(&mut b), 0.1 + n.sample(&mut b)];
        let expect = (0..6)
            .min_by(|&i, &j| {
                let di = (i as f64 - q[0]).hypot(q[1]);
                let dj = (j as f64 - q[0]).hypot(q[1]);
                di.total_cmp(&dj)
            })
            .unwrap();
        assert_eq!(got, expect);
        assert!((distance_to_graph(&g, 1.7, [2.5, 0.0]) - 0.5).abs() < 1e-12);
    }
}
