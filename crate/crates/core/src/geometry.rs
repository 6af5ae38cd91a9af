//! Pinhole camera model and the ground-plane projection pair.
//!
//! Robot frame follows the ROS convention (X forward, Y left, Z up). The
//! camera frame follows OpenCV (X right, Y down, Z forward). A ground point
//! `(x, y)` in the robot frame sits at `(-y, h_cam, x)` in the camera frame,
//! which gives the closed-form projection and its inverse (IPM) below.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Minimum forward distance (m) accepted by [`project_ground_point`].
pub const EPS_PROJ: f64 = 1e-6;
/// Minimum pixel offset below the horizon row accepted by [`backproject_pixel`].
pub const EPS_V: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ground point at x = {x} lies at or behind the camera plane")]
    DegenerateProjection { x: f64 },
    #[error("pixel row v = {v} is not below the horizon row (c_y = {c_y})")]
    HorizonDegenerate { v: f64, c_y: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
}

/// Intrinsics, mounting height and image size of a forward-looking camera
/// whose optical axis is parallel to the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub f_x: f64,
    pub f_y: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub h_cam: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            f_x: 160.0,
            f_y: 160.0,
            c_x: 160.0,
            c_y: 120.0,
            h_cam: 0.5,
            width: 320,
            height: 240,
        }
    }
}

impl CameraModel {
    pub fn new(
        f_x: f64,
        f_y: f64,
        c_x: f64,
        c_y: f64,
        h_cam: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        let cam = Self {
            f_x,
            f_y,
            c_x,
            c_y,
            h_cam,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidCamera(msg.to_string()));
        if !(self.f_x > 0.0 && self.f_y > 0.0) {
            return bad("focal lengths must be positive");
        }
        if !(self.h_cam > 0.0) {
            return bad("camera height must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive");
        }
        if !(self.c_x > 0.0 && self.c_x < self.width as f64) {
            return bad("c_x must lie strictly inside the image");
        }
        if !(self.c_y > 0.0 && self.c_y < self.height as f64) {
            return bad("c_y must lie strictly inside the image");
        }
        Ok(())
    }

    /// Half of the horizontal field of view, `atan(width / (2 f_x))`.
    pub fn horizontal_half_fov(&self) -> f64 {
        (self.width as f64 / (2.0 * self.f_x)).atan()
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    /// First integer row strictly below the horizon guard band.
    pub fn first_ground_row(&self) -> usize {
        let limit = self.c_y + EPS_V;
        let row = limit.floor() as usize + 1;
        row.min(self.height)
    }
}

/// Real-valued image coordinates; may fall outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// A point on the ground plane in the robot frame (x forward, y left).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &GroundPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Planar pose in a world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid may return exactly 2pi for tiny negative inputs
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Rounds half-up to the integer grid (`0.5 -> 1`, `-0.5 -> 0`).
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

pub fn project_ground_point(cam: &CameraModel, p: GroundPoint) -> Result<PixelPoint, GeometryError> {
    if !(p.x >= EPS_PROJ) {
        return Err(GeometryError::DegenerateProjection { x: p.x });
    }
    Ok(PixelPoint {
        u: cam.c_x - cam.f_x * p.y / p.x,
        v: cam.c_y + cam.f_y * cam.h_cam / p.x,
    })
}

/// Inverse perspective mapping of a pixel known to lie on the ground.
pub fn backproject_pixel(cam: &CameraModel, q: PixelPoint) -> Result<GroundPoint, GeometryError> {
    let dv = q.v - cam.c_y;
    if !(dv > EPS_V) {
        return Err(GeometryError::HorizonDegenerate { v: q.v, c_y: cam.c_y });
    }
    let x = cam.f_y * cam.h_cam / dv;
    let y = -(q.u - cam.c_x) * cam.f_y * cam.h_cam / (cam.f_x * dv);
    Ok(GroundPoint { x, y })
}

/// Expresses a world point in the frame of a robot at `robot_pose`.
pub fn world_to_robot(robot_pose: &Pose2, p_world: [f64; 2]) -> GroundPoint {
    let dx = p_world[0] - robot_pose.x;
    let dy = p_world[1] - robot_pose.y;
    let (s, c) = robot_pose.theta.sin_cos();
    GroundPoint {
        x: c * dx + s * dy,
        y: -s * dx + c * dy,
    }
}

pub fn robot_to_world(robot_pose: &Pose2, p: GroundPoint) -> [f64; 2] {
    let (s, c) = robot_pose.theta.sin_cos();
    [
        robot_pose.x + c * p.x - s * p.y,
        robot_pose.y + s * p.x + c * p.y,
    ]
}
