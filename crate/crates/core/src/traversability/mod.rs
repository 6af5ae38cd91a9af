//! Binary traversability masks, border following and obstacle-point sampling.

mod contour;
mod pgm;

pub use contour::{extract_contours, Contour};
pub use pgm::{read_pgm, write_gray_pgm, write_pgm, PgmError};

use crate::geometry::{backproject_pixel, CameraModel, GroundPoint, PixelPoint, EPS_V};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Probability threshold applied when a soft traversability estimate is binarized.
pub const DEFAULT_BINARY_THRESHOLD: f64 = 0.95;
pub const DEFAULT_POINTS_PER_CONTOUR: usize = 32;

/// Row-major binary grid; `true` marks a traversable pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraversabilityMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl TraversabilityMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == width * height).then_some(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                bits.push(f(u, v));
            }
        }
        Self { width, height, bits }
    }

    /// Binarizes per-pixel traversability probabilities: `p >= threshold` is traversable.
    pub fn from_probabilities(
        width: usize,
        height: usize,
        probs: &[f64],
        threshold: f64,
    ) -> Option<Self> {
        (probs.len() == width * height).then(|| Self {
            width,
            height,
            bits: probs.iter().map(|&p| p >= threshold).collect(),
        })
    }

    /// Every pixel strictly below the camera's horizon band is traversable.
    pub fn below_horizon(cam: &CameraModel) -> Self {
        let first = cam.first_ground_row();
        Self::from_fn(cam.width, cam.height, |_, v| v >= first)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.width + u]
    }

    /// Out-of-image coordinates read as non-traversable.
    pub fn get_i(&self, u: i64, v: i64) -> bool {
        if u < 0 || v < 0 || u >= self.width as i64 || v >= self.height as i64 {
            return false;
        }
        self.get(u as usize, v as usize)
    }

    /// Lookup of a real-valued pixel, rounded half-up to the grid.
    pub fn at(&self, p: PixelPoint) -> bool {
        use crate::geometry::round_half_up;
        self.get_i(round_half_up(p.u), round_half_up(p.v))
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.bits[v * self.width + u] = value;
    }

    pub fn count_traversable(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn matches_camera(&self, cam: &CameraModel) -> bool {
        self.width == cam.width && self.height == cam.height
    }

    /// Left-right mirror (`u -> width - 1 - u`).
    pub fn mirrored(&self) -> Self {
        Self::from_fn(self.width, self.height, |u, v| self.get(self.width - 1 - u, v))
    }
}

/// Seam for anything that turns an observation into a mask.
pub trait TraversabilityEstimator<O> {
    fn estimate(&self, observation: &O) -> TraversabilityMask;
}

/// Obstacle pixels sampled from mask contours, plus their ground-plane images.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObstaclePointSet {
    pub points: Vec<PixelPoint>,
}

impl ObstaclePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// IPM of every sampled pixel. Sampling guarantees each one is below the horizon.
    pub fn backproject(&self, cam: &CameraModel) -> Vec<GroundPoint> {
        self.points
            .iter()
            .filter_map(|&p| backproject_pixel(cam, p).ok())
            .collect()
    }
}

fn eligible(cam: &CameraModel, u: usize, v: usize) -> bool {
    (v as f64) > cam.c_y + EPS_V && v + 1 != cam.height && u != 0 && u + 1 != cam.width
}

/// Uniform sample without replacement of up to `n_per_contour` pixels per contour.
///
/// Pixels on the horizon band, the bottom row and the side columns are dropped
/// first; they bound the field of view rather than mark obstacles.
pub fn sample_obstacle_points(
    contours: &[Contour],
    cam: &CameraModel,
    n_per_contour: usize,
    rng_seed: u64,
) -> ObstaclePointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = Vec::new();
    let n = n_per_contour.max(1);
    for contour in contours {
        let mut seen = std::collections::HashSet::new();
        let pool: Vec<(usize, usize)> = contour
            .points
            .iter()
            .copied()
            .filter(|&(u, v)| eligible(cam, u, v) && seen.insert((u, v)))
            .collect();
        if pool.is_empty() {
            continue;
        }
        let take = n.min(pool.len());
        let mut picked = index::sample(&mut rng, pool.len(), take).into_vec();
        picked.sort_unstable();
        points.extend(
            picked
                .into_iter()
                .map(|i| PixelPoint::new(pool[i].0 as f64, pool[i].1 as f64)),
        );
    }
    ObstaclePointSet { points }
}
