//! MPPI low-level planner over unicycle kinematics.
//!
//! Planning happens in the current robot frame: every call starts at the
//! origin with heading zero. The stage cost mixes a pixel-space term (distance
//! between the projected position and the subgoal pixel) with a metric term
//! (number of backprojected obstacle points within `r_safe`).

mod mppi;

pub use mppi::{mppi_solve, mppi_solve_with, MppiDiagnostics, PlannerOutput};

use crate::geometry::{project_ground_point, wrap_angle, CameraModel, GroundPoint, PixelPoint, EPS_PROJ};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("invalid MPPI configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> GroundPoint {
        GroundPoint::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Linear velocity (m/s).
    pub v: f64,
    /// Angular velocity (rad/s).
    pub w: f64,
}

impl ControlInput {
    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }

    pub fn clamped(self, cfg: &MppiConfig) -> Self {
        Self {
            v: self.v.clamp(cfg.v_min, cfg.v_max),
            w: self.w.clamp(-cfg.w_max, cfg.w_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MppiConfig {
    /// Planning step (s).
    pub dt: f64,
    pub horizon_steps: usize,
    pub num_samples: usize,
    /// Softmax temperature.
    pub lambda: f64,
    pub sigma_v: f64,
    pub sigma_w: f64,
    pub w_obst: f64,
    pub w_sg: f64,
    /// Diagonal of the control penalty matrix, `[q_v, q_w]`.
    pub q_ctrl: [f64; 2],
    /// Collision threshold distance (m).
    pub r_safe: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub rng_seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            horizon_steps: 20,
            num_samples: 512,
            lambda: 1.0,
            sigma_v: 0.3,
            sigma_w: 0.5,
            w_obst: 10.0,
            w_sg: 10.0,
            q_ctrl: [1.0, 100.0],
            r_safe: 2.0,
            v_min: 0.0,
            v_max: 1.0,
            w_max: 1.0,
            rng_seed: 0,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let fail = |field: &'static str, reason: &str| {
            Err(ControllerError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.dt) {
            return fail("dt", "must be > 0");
        }
        if self.horizon_steps < 1 {
            return fail("horizon_steps", "must be >= 1");
        }
        if self.num_samples < 2 {
            return fail("num_samples", "must be >= 2");
        }
        if !positive(self.lambda) {
            return fail("lambda", "must be > 0");
        }
        if !positive(self.sigma_v) {
            return fail("sigma_v", "must be > 0");
        }
        if !positive(self.sigma_w) {
            return fail("sigma_w", "must be > 0");
        }
        if !positive(self.r_safe) {
            return fail("r_safe", "must be > 0");
        }
        if !(self.w_obst >= 0.0 && self.w_sg >= 0.0) {
            return fail("w_obst", "cost weights must be >= 0");
        }
        if !(self.q_ctrl[0] >= 0.0 && self.q_ctrl[1] >= 0.0) {
            return fail("q_ctrl", "diagonal entries must be >= 0");
        }
        if !(self.v_min <= self.v_max) {
            return fail("v_min", "must not exceed v_max");
        }
        if !(self.w_max >= 0.0) {
            return fail("w_max", "must be >= 0");
        }
        Ok(())
    }
}

/// Unicycle kinematics, explicit Euler over one step.
pub fn step_dynamics(s: RobotState, u: ControlInput, dt: f64) -> RobotState {
    let (sin, cos) = s.theta.sin_cos();
    RobotState {
        x: s.x + u.v * cos * dt,
        y: s.y + u.v * sin * dt,
        theta: wrap_angle(s.theta + u.w * dt),
    }
}

/// Penalty for states that cannot be projected (at or behind the camera plane).
pub fn unprojectable_penalty(cam: &CameraModel) -> f64 {
    10.0 * cam.diagonal()
}

/// Pixel distance between the projected position and the subgoal pixel.
pub fn subgoal_cost(s: &RobotState, cam: &CameraModel, sg: PixelPoint) -> f64 {
    if s.x < EPS_PROJ {
        return unprojectable_penalty(cam);
    }
    match project_ground_point(cam, s.position()) {
        Ok(p) => p.distance(&sg),
        Err(_) => unprojectable_penalty(cam),
    }
}

/// Number of obstacle points strictly closer than `r_safe`.
pub fn obstacle_cost(s: &RobotState, obstacles: &[GroundPoint], r_safe: f64) -> f64 {
    let r2 = r_safe * r_safe;
    obstacles
        .iter()
        .filter(|o| {
            let dx = s.x - o.x;
            let dy = s.y - o.y;
            dx * dx + dy * dy < r2
        })
        .count() as f64
}

pub fn control_cost(u: &ControlInput, q_ctrl: [f64; 2]) -> f64 {
    q_ctrl[0] * u.v * u.v + q_ctrl[1] * u.w * u.w
}

/// Inputs shared by every rollout of one planning call.
#[derive(Debug, Clone, Copy)]
pub struct CostContext<'a> {
    pub cam: &'a CameraModel,
    pub subgoal: PixelPoint,
    pub obstacles: &'a [GroundPoint],
}

pub fn total_cost(s: &RobotState, u: &ControlInput, ctx: &CostContext<'_>, cfg: &MppiConfig) -> f64 {
    let obst = if cfg.w_obst != 0.0 {
        cfg.w_obst * obstacle_cost(s, ctx.obstacles, cfg.r_safe)
    } else {
        0.0
    };
    obst + cfg.w_sg * subgoal_cost(s, ctx.cam, ctx.subgoal) + control_cost(u, cfg.q_ctrl)
}

/// Accumulated stage cost of a control sequence rolled out from the origin.
pub fn rollout_cost(controls: &[ControlInput], ctx: &CostContext<'_>, cfg: &MppiConfig) -> f64 {
    let mut s = RobotState::default();
    let mut cost = 0.0;
    for u in controls {
        s = step_dynamics(s, *u, cfg.dt);
        cost += total_cost(&s, u, ctx, cfg);
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cam() -> CameraModel {
        CameraModel::new(100.0, 100.0, 160.0, 120.0, 0.5, 320, 240).unwrap()
    }

    #[test]
    fn dynamics_examples() {
        let s = step_dynamics(RobotState::default(), ControlInput::new(1.0, 0.0), 0.2);
        assert_eq!(s, RobotState::new(0.2, 0.0, 0.0));
        let s = step_dynamics(RobotState::new(0.0, 0.0, PI / 2.0), ControlInput::new(1.0, 0.0), 0.2);
        assert!(s.x.abs() < 1e-15 && (s.y - 0.2).abs() < 1e-15 && s.theta == PI / 2.0);
        let s = step_dynamics(RobotState::default(), ControlInput::new(0.0, 1.0), 0.2);
        assert_eq!(s, RobotState::new(0.0, 0.0, 0.2));
    }

    #[test]
    fn subgoal_cost_examples() {
        let c = cam();
        let s = RobotState::new(2.0, 0.0, 0.3);
        assert_eq!(subgoal_cost(&s, &c, PixelPoint::new(160.0, 145.0)), 0.0);
        assert_eq!(subgoal_cost(&s, &c, PixelPoint::new(110.0, 145.0)), 50.0);
        let behind = RobotState::new(-1.0, 0.0, 0.0);
        assert_eq!(subgoal_cost(&behind, &c, PixelPoint::new(160.0, 145.0)), 4000.0);
        assert_eq!(unprojectable_penalty(&c), 4000.0);
    }

    #[test]
    fn obstacle_cost_examples() {
        let obs = [GroundPoint::new(2.0, 0.0)];
        assert_eq!(obstacle_cost(&RobotState::new(0.5, 0.0, 0.0), &obs, 2.0), 1.0);
        assert_eq!(obstacle_cost(&RobotState::new(5.0, 0.0, 0.0), &obs, 2.0), 0.0);
        assert_eq!(obstacle_cost(&RobotState::new(0.5, 0.0, 0.0), &[], 2.0), 0.0);
    }

    #[test]
    fn total_cost_examples() {
        let c = cam();
        let cfg = MppiConfig::default();
        let sg = PixelPoint::new(160.0, 145.0);
        let ctx = CostContext { cam: &c, subgoal: sg, obstacles: &[] };
        let on_sg = RobotState::new(2.0, 0.0, 0.0);
        assert_eq!(total_cost(&on_sg, &ControlInput::default(), &ctx, &cfg), 0.0);
        assert_eq!(total_cost(&on_sg, &ControlInput::new(1.0, 0.0), &ctx, &cfg), 1.0);
        assert_eq!(total_cost(&on_sg, &ControlInput::new(0.0, 0.5), &ctx, &cfg), 25.0);
        let off = RobotState::new(2.0, 1.0, 0.0);
        let obs = [GroundPoint::new(2.5, 1.0), GroundPoint::new(9.0, 9.0)];
        let ctx = CostContext { cam: &c, subgoal: sg, obstacles: &obs };
        // 10 * 1 obstacle + 10 * 50 px + 25
        assert_eq!(total_cost(&off, &ControlInput::new(0.0, 0.5), &ctx, &cfg), 535.0);
    }

    #[test]
    fn config_validation() {
        assert!(MppiConfig::default().validate().is_ok());
        let bad = [
            MppiConfig { dt: 0.0, ..Default::default() },
            MppiConfig { horizon_steps: 0, ..Default::default() },
            MppiConfig { num_samples: 1, ..Default::default() },
            MppiConfig { lambda: 0.0, ..Default::default() },
            MppiConfig { sigma_w: -1.0, ..Default::default() },
            MppiConfig { r_safe: 0.0, ..Default::default() },
            MppiConfig { v_min: 2.0, ..Default::default() },
        ];
        for b in bad {
            assert!(matches!(b.validate(), Err(ControllerError::InvalidConfig { .. })));
        }
    }

    proptest! {
        #[test]
        fn obstacle_cost_matches_double_loop(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..100),
            states in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20),
            r in 0.1f64..3.0,
        ) {
            let obs: Vec<GroundPoint> = pts.iter().map(|&(x, y)| GroundPoint::new(x, y)).collect();
            for &(x, y) in &states {
                let mut n = 0;
                for o in &obs {
                    if ((x - o.x).powi(2) + (y - o.y).powi(2)).sqrt() < r {
                        n += 1;
                    }
                }
                prop_assert_eq!(obstacle_cost(&RobotState::new(x, y, 0.0), &obs, r), n as f64);
            }
        }

        #[test]
        fn straight_and_still_rollouts(v in 0.0f64..1.0, w in -1.0f64..1.0, steps in 1usize..50) {
            let mut s = RobotState::default();
            let mut r = RobotState::default();
            for _ in 0..steps {
                s = step_dynamics(s, ControlInput::new(v, 0.0), 0.2);
                r = step_dynamics(r, ControlInput::new(0.0, w), 0.2);
            }
            prop_assert!(s.y.abs() < 1e-12);
            prop_assert_eq!((r.x, r.y), (0.0, 0.0));
        }
    }
}
