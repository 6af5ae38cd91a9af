//! Scripted expert: a pure-pursuit follower that stands in for the recorded
//! demonstration and produces the pose sequence used to build the graph.

use super::shapes::{norm, sub, Vec2};
use super::{check_collision, WorldModel};
use crate::geometry::{wrap_angle, Pose2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("need at least two waypoints")]
    TooFewWaypoints,
    #[error("infeasible waypoints: {0}")]
    InfeasibleWaypoints(String),
    #[error("invalid recording parameter {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordParams {
    pub dt: f64,
    pub speed: f64,
    pub lookahead: f64,
    pub max_turn_rate: f64,
    /// Poses are emitted every `sample_every` integration steps.
    pub sample_every: usize,
    pub max_steps: usize,
}

impl Default for RecordParams {
    fn default() -> Self {
        Self {
            dt: 0.2,
            speed: 0.5,
            lookahead: 0.3,
            max_turn_rate: 2.0,
            sample_every: 1,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    /// Metric poses `[x, y, theta]` in the world frame.
    pub poses: Vec<[f64; 3]>,
    /// Positions after applying the frame scale; this is what the graph sees.
    pub positions: Vec<Vec2>,
    pub scale: f64,
}

impl Recording {
    /// JSON document holding only the scaled positions.
    pub fn positions_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({ "positions": self.positions })).expect("plain floats")
    }
}

/// Reads the `{"positions": [[x, y], ...]}` document written by
/// [`Recording::positions_json`].
pub fn parse_positions_json(s: &str) -> Result<Vec<Vec2>, serde_json::Error> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        positions: Vec<Vec2>,
    }
    Ok(serde_json::from_str::<Doc>(s)?.positions)
}

/// Follows the waypoint polyline from its first point and records the poses.
///
/// The follower drives at constant speed towards a carrot `lookahead` ahead
/// along the path and stops within one step of the last waypoint, which is
/// always recorded exactly.
pub fn record_expert(world: &WorldModel, waypoints: &[Vec2], params: RecordParams, scale: f64) -> Result<Recording, RecordError> {
    if waypoints.len() < 2 {
        return Err(RecordError::TooFewWaypoints);
    }
    if !(params.dt > 0.0) {
        return Err(RecordError::InvalidParams("dt"));
    }
    if !(params.speed > 0.0) {
        return Err(RecordError::InvalidParams("speed"));
    }
    if !(params.lookahead > 0.0) {
        return Err(RecordError::InvalidParams("lookahead"));
    }
    if params.sample_every == 0 {
        return Err(RecordError::InvalidParams("sample_every"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(RecordError::InvalidParams("scale"));
    }
    for (i, w) in waypoints.iter().enumerate() {
        if let Some(c) = check_collision(world, *w) {
            return Err(RecordError::InfeasibleWaypoints(format!(
                "waypoint {i} at ({:.3}, {:.3}) collides with obstacle {}",
                w[0], w[1], c.obstacle_id
            )));
        }
    }

    // cumulative arc length of the polyline
    let mut arc = vec![0.0];
    for seg in waypoints.windows(2) {
        arc.push(arc.last().unwrap() + norm(sub(seg[1], seg[0])));
    }
    let total = *arc.last().unwrap();
    let point_at = |s: f64| -> Vec2 {
        let s = s.clamp(0.0, total);
        let i = arc.partition_point(|&a| a <= s).clamp(1, waypoints.len() - 1);
        let len = arc[i] - arc[i - 1];
        let t = if len > 0.0 { (s - arc[i - 1]) / len } else { 0.0 };
        let (a, b) = (waypoints[i - 1], waypoints[i]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    };
    let progress_near = |p: Vec2, from: f64| -> f64 {
        // projection onto the polyline, searching forward from the last progress
        let mut best = (f64::INFINITY, from);
        for i in 1..waypoints.len() {
            if arc[i] < from {
                continue;
            }
            let (a, b) = (waypoints[i - 1], waypoints[i]);
            let ab = sub(b, a);
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = if len2 > 0.0 {
                (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d = norm(sub(p, q));
            let s = (arc[i - 1] + t * (arc[i] - arc[i - 1])).max(from);
            if d < best.0 - 1e-12 {
                best = (d, s);
            }
        }
        best.1
    };

    let first = sub(waypoints[1], waypoints[0]);
    let mut pose = Pose2::new(waypoints[0][0], waypoints[0][1], first[1].atan2(first[0]));
    let goal = *waypoints.last().unwrap();
    let mut poses = vec![[pose.x, pose.y, pose.theta]];
    let mut progress = 0.0;
    let step = params.speed * params.dt;
    for k in 1..=params.max_steps {
        if norm(sub(goal, pose.position())) <= step && progress >= total - params.lookahead - step {
            break;
        }
        progress = progress_near(pose.position(), progress);
        let carrot = point_at(progress + params.lookahead);
        let d = sub(carrot, pose.position());
        let err = wrap_angle(d[1].atan2(d[0]) - pose.theta);
        let w = (err / params.dt).clamp(-params.max_turn_rate, params.max_turn_rate);
        // turn in place on sharp corners
        let v = if err.abs() > std::f64::consts::FRAC_PI_2 { 0.0 } else { params.speed * err.cos().max(0.0) };
        let theta = pose.theta + w * params.dt;
        pose = Pose2::new(pose.x + v * theta.cos() * params.dt, pose.y + v * theta.sin() * params.dt, theta);
        if let Some(c) = check_collision(world, pose.position()) {
            return Err(RecordError::InfeasibleWaypoints(format!(
                "follower hit obstacle {} at ({:.3}, {:.3})",
                c.obstacle_id, pose.x, pose.y
            )));
        }
        if k % params.sample_every == 0 {
            poses.push([pose.x, pose.y, pose.theta]);
        }
        if k == params.max_steps {
            return Err(RecordError::InfeasibleWaypoints("follower did not reach the last waypoint".into()));
        }
    }
    let last = poses.last().copied().unwrap();
    if last[0] != goal[0] || last[1] != goal[1] {
        poses.push([goal[0], goal[1], last[2]]);
    }
    let positions = poses.iter().map(|p| [p[0] * scale, p[1] * scale]).collect();
    Ok(Recording { poses, positions, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::tests::open_world;
    use crate::simworld::{Obstacle, Shape};

    #[test]
    fn straight_corridor_is_monotone() {
        let w = open_world();
        let r = record_expert(&w, &[[0.0, 0.0], [8.0, 0.0]], RecordParams::default(), 1.7).unwrap();
        assert!(r.poses.windows(2).all(|p| p[1][0] > p[0][0]));
        assert!(r.poses.iter().all(|p| p[1] == 0.0));
        assert_eq!(*r.poses.last().unwrap(), [8.0, 0.0, 0.0]);
        assert_eq!(r.positions[3], [r.poses[3][0] * 1.7, 0.0]);
        assert_eq!(parse_positions_json(&r.positions_json()).unwrap(), r.positions);
        assert!(parse_positions_json("{\"poses\": []}").is_err());
    }

    #[test]
    fn square_loop_tracks_waypoints() {
        let w = open_world();
        let wp = [[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0], [0.0, 0.0]];
        let r = record_expert(&w, &wp, RecordParams::default(), 1.0).unwrap();
        // every waypoint is passed within 0.2 m
        for p in &wp {
            let d = r.poses.iter().map(|q| (q[0] - p[0]).hypot(q[1] - p[1])).fold(f64::INFINITY, f64::min);
            assert!(d <= 0.2, "{p:?} {d}");
        }
        // and the trajectory never strays far from the polyline
        for q in &r.poses {
            let dist = wp
                .windows(2)
                .map(|s| {
                    let c = crate::simworld::shapes::closest_on_segment([q[0], q[1]], s[0], s[1]);
                    (c[0] - q[0]).hypot(c[1] - q[1])
                })
                .fold(f64::INFINITY, f64::min);
            assert!(dist <= 0.2, "{q:?} {dist}");
        }
        assert_eq!(r.poses.last().unwrap()[..2], [0.0, 0.0]);
    }

    #[test]
    fn waypoint_inside_obstacle_is_rejected() {
        let mut w = open_world();
        w.obstacles.push(Obstacle::new(Shape::circle([4.0, 0.0], 0.5)));
        let err = record_expert(&w, &[[0.0, 0.0], [4.0, 0.0], [8.0, 0.0]], RecordParams::default(), 1.0).unwrap_err();
        assert!(matches!(err, RecordError::InfeasibleWaypoints(_)));
        let err = record_expert(&w, &[[0.0, 0.0], [8.0, 0.0]], RecordParams::default(), 1.0).unwrap_err();
        assert!(matches!(err, RecordError::InfeasibleWaypoints(_)));
    }
}
