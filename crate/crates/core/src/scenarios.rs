//! Built-in worlds used by the examples, the CLI defaults and the tests.

use crate::geometry::CameraModel;
use crate::simworld::{record_expert, Bounds, GoalRegion, Obstacle, RecordError, RecordParams, Shape, WorldModel};
use crate::topograph::{build_graph, GraphBuildParams, GraphError, TopoGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Straight 3 m wide corridor with the goal 8 m ahead of the start.
pub fn corridor_world() -> WorldModel {
    WorldModel {
        bounds: Bounds { min: [-1.0, -1.5], max: [11.0, 1.5] },
        obstacles: Vec::new(),
        robot_radius: 0.25,
        fov_range: 10.0,
        camera: CameraModel::default(),
        start_pose: [0.0, 0.0, 0.0],
        goal_region: Some(GoalRegion { center: [8.0, 0.0], radius: 0.5 }),
        expert_waypoints: vec![[0.0, 0.0], [8.0, 0.0]],
        occlusion: true,
    }
}

/// Perturbation halfway along the corridor, overlapping the expert route on
/// its left side so that driving straight clips it.
pub fn target_obstacle() -> Obstacle {
    Obstacle::target(Shape::circle([4.0, 0.35], 0.3))
}

/// Second perturbation, a box just right of the centre line.
pub fn target_box() -> Obstacle {
    Obstacle::target(Shape::rect([5.0, -0.6], [5.5, -0.1]))
}

/// Wall spanning the whole corridor width.
pub fn blocking_obstacle() -> Obstacle {
    Obstacle::target(Shape::rect([4.0, -1.5], [4.4, 1.5]))
}

/// Records the expert route of `world` and builds the graph in the scaled frame.
pub fn expert_graph(world: &WorldModel, pose_scale: f64, params: GraphBuildParams) -> Result<TopoGraph, ScenarioError> {
    let rec = record_expert(world, &world.expert_waypoints, RecordParams::default(), pose_scale)?;
    Ok(build_graph(&rec.positions, params)?)
}
