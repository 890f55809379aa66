//! Flat-array entry points for callers in other languages.
//!
//! Data crosses as contiguous row-major `f64`/`u8` buffers with an explicit
//! shape. Poses are `N × 7` rows of `[qw, qx, qy, qz, x, y, z]`.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Vec3;
use crate::scene::SceneWorld;
use crate::sensor::{apply_randomization, simulate_scan, SensorConfig, SensorError};
use crate::transform::RigidTransform;

#[derive(Debug, Error, PartialEq)]
pub enum BatchError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("row {row}: rotation quaternion must be finite and non-zero")]
    InvalidPose { row: usize },
    #[error(transparent)]
    Sensor(#[from] SensorError),
}

/// A row-major buffer and its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatArray<T> {
    pub data: Vec<T>,
    pub shape: Vec<usize>,
}

impl<T> FlatArray<T> {
    pub fn new(data: Vec<T>, shape: Vec<usize>) -> Result<Self, BatchError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(BatchError::ShapeMismatch(format!(
                "shape {shape:?} holds {n} elements, buffer has {}",
                data.len()
            )));
        }
        Ok(Self { data, shape })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchScan {
    /// `N × rays`.
    pub ranges: FlatArray<f64>,
    /// `N × rays`, 0 or 1.
    pub hits: FlatArray<u8>,
    /// `N × rays × 3`, robot base frame.
    pub points: FlatArray<f64>,
}

/// Parses an `N × 7` pose buffer.
pub fn poses_from_flat(poses: &[f64], shape: &[usize]) -> Result<Vec<RigidTransform>, BatchError> {
    if shape.len() != 2 || shape[1] != 7 || shape[0] * 7 != poses.len() {
        return Err(BatchError::ShapeMismatch(format!(
            "poses must be N x 7 with a matching buffer, got shape {shape:?} and {} values",
            poses.len()
        )));
    }
    poses
        .chunks_exact(7)
        .enumerate()
        .map(|(row, p)| {
            RigidTransform::new([p[0], p[1], p[2], p[3]], Vec3::new(p[4], p[5], p[6]))
                .map_err(|_| BatchError::InvalidPose { row })
        })
        .collect()
}

/// Scans environment `env_ids[i]` from pose row `i`, optionally randomized.
/// Ranges match [`simulate_scan`] bit for bit.
pub fn batch_scan(
    world: &SceneWorld,
    env_ids: &[u32],
    poses: &[f64],
    pose_shape: &[usize],
    sensor: &SensorConfig,
    t: f64,
    randomize: bool,
) -> Result<BatchScan, BatchError> {
    let poses = poses_from_flat(poses, pose_shape)?;
    if poses.len() != env_ids.len() {
        return Err(BatchError::ShapeMismatch(format!(
            "{} env ids for {} poses",
            env_ids.len(),
            poses.len()
        )));
    }
    sensor.validate()?;
    let rays = sensor.pattern.rays_per_frame;
    let frames = env_ids
        .par_iter()
        .zip(&poses)
        .map(|(&env, pose)| {
            let f = simulate_scan(world, env, pose, sensor, t)?;
            Ok(if randomize { apply_randomization(&f, sensor) } else { f })
        })
        .collect::<Result<Vec<_>, SensorError>>()?;
    let n = frames.len();
    let mut ranges = Vec::with_capacity(n * rays);
    let mut hits = Vec::with_capacity(n * rays);
    let mut points = Vec::with_capacity(n * rays * 3);
    for f in &frames {
        ranges.extend_from_slice(&f.ranges);
        hits.extend(f.hit_flags.iter().map(|&h| h as u8));
        points.extend(f.points_base.iter().flat_map(|p| [p.x, p.y, p.z]));
    }
    Ok(BatchScan {
        ranges: FlatArray::new(ranges, vec![n, rays])?,
        hits: FlatArray::new(hits, vec![n, rays])?,
        points: FlatArray::new(points, vec![n, rays, 3])?,
    })
}
