//! Subgoal pixel selection from a relative yaw and a traversability mask.
//!
//! A ground ray leaving the camera at heading `alpha` projects to the single
//! image column `u = c_x - f_x tan(alpha)`, so the ray is traced row by row up
//! that column, from the bottom of the image towards the horizon.

use crate::geometry::{round_half_up, wrap_angle, CameraModel, PixelPoint, Pose2};
use crate::traversability::TraversabilityMask;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Fraction of the traced segment, measured from its near end.
pub const SEGMENT_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubgoalError {
    #[error("mask has no traversable pixel")]
    NoTraversableRegion,
    #[error("mask is {mask_w}x{mask_h} but the camera image is {cam_w}x{cam_h}")]
    DimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        cam_w: usize,
        cam_h: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawEstimate {
    pub alpha: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgoalMode {
    OnRay,
    FallbackClosest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgoalPixel {
    pub p: PixelPoint,
    pub mode: SubgoalMode,
}

/// Seam for relative-rotation estimators.
pub trait YawEstimator<O, N> {
    fn estimate(&mut self, observation: &O, subgoal_node: &N) -> YawEstimate;
}

/// Image column of the projected ground ray; infinite when the ray points
/// sideways or backwards and never enters the image.
pub fn ray_column(cam: &CameraModel, alpha: f64) -> f64 {
    let alpha = wrap_angle(alpha);
    if alpha.abs() < FRAC_PI_2 {
        cam.c_x - cam.f_x * alpha.tan()
    } else if alpha >= 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }
}

pub fn select_subgoal_pixel(
    mask: &TraversabilityMask,
    cam: &CameraModel,
    alpha: f64,
) -> Result<SubgoalPixel, SubgoalError> {
    if !mask.matches_camera(cam) {
        return Err(SubgoalError::DimensionMismatch {
            mask_w: mask.width(),
            mask_h: mask.height(),
            cam_w: cam.width,
            cam_h: cam.height,
        });
    }
    if mask.count_traversable() == 0 {
        return Err(SubgoalError::NoTraversableRegion);
    }
    let u_ray = ray_column(cam, alpha);
    if let Some(p) = trace_ray(mask, cam, u_ray) {
        return Ok(SubgoalPixel {
            p,
            mode: SubgoalMode::OnRay,
        });
    }
    Ok(SubgoalPixel {
        p: closest_to_ray(mask, u_ray),
        mode: SubgoalMode::FallbackClosest,
    })
}

fn trace_ray(mask: &TraversabilityMask, cam: &CameraModel, u_ray: f64) -> Option<PixelPoint> {
    if !u_ray.is_finite() {
        return None;
    }
    let col = round_half_up(u_ray);
    if col < 0 || col >= mask.width() as i64 {
        return None;
    }
    let col = col as usize;
    let top = cam.first_ground_row();
    let mut rows = (top..mask.height()).rev();
    let near = rows.by_ref().find(|&v| mask.get(col, v))?;
    let mut far = near;
    for v in rows {
        if !mask.get(col, v) {
            break;
        }
        far = v;
    }
    let length = (near - far) as f64;
    let v = near as i64 - round_half_up(SEGMENT_FRACTION * length);
    Some(PixelPoint::new(col as f64, v as f64))
}

/// Traversable pixel with the smallest horizontal distance to the ray column;
/// ties go to the smaller row, then the smaller column.
fn closest_to_ray(mask: &TraversabilityMask, u_ray: f64) -> PixelPoint {
    let dist = |u: usize| -> f64 {
        if u_ray == f64::NEG_INFINITY {
            u as f64
        } else if u_ray == f64::INFINITY {
            -(u as f64)
        } else {
            (u as f64 - u_ray).abs()
        }
    };
    let mut best: Option<(f64, usize, usize)> = None;
    for u in 0..mask.width() {
        let Some(v) = (0..mask.height()).find(|&v| mask.get(u, v)) else {
            continue;
        };
        let cand = (dist(u), v, u);
        let replace = match best {
            None => true,
            Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
        };
        if replace {
            best = Some(cand);
        }
    }
    let (_, v, u) = best.expect("mask has a traversable pixel");
    PixelPoint::new(u as f64, v as f64)
}

/// Relative rotation from the robot heading to the subgoal node heading,
/// optionally perturbed with Gaussian noise.
pub fn oracle_yaw<R: Rng + ?Sized>(robot: &Pose2, node_phi: f64, sigma_alpha: f64, rng: &mut R) -> YawEstimate {
    let mut alpha = node_phi - robot.theta;
    if sigma_alpha > 0.0 {
        alpha += Normal::new(0.0, sigma_alpha).expect("finite sigma").sample(rng);
    }
    YawEstimate {
        alpha: wrap_angle(alpha),
        valid: true,
    }
}
