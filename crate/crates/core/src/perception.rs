//! Point-cloud preprocessing for the proximal/distal perception pathways.
//!
//! A frame is split by elevation `theta` (sensor frame, positive up):
//! returns above the threshold form the proximal cloud, everything else,
//! including misses at their sentinel range, forms the distal cloud.
//! Proximal points are reduced by farthest point sampling, distal points by
//! averaging ranges over a fixed angular grid. Both are ordered by
//! `(theta, phi)` and stacked into fixed-shape histories.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ray, Vec3};
use crate::scene::{SceneError, SceneWorld};
use crate::sensor::ScanFrame;
use crate::transform::RigidTransform;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("{what}: expected {expected} points per frame, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    /// Elevation above the sensor's horizontal plane.
    pub theta: f64,
    /// Azimuth in `[-π, π)`.
    pub phi: f64,
    pub range: f64,
    /// Sensor-frame Cartesian position.
    pub position: Vec3,
    pub hit: bool,
}

impl SphericalPoint {
    /// The padding element of fixed-shape sequences.
    pub const ZERO: SphericalPoint = SphericalPoint {
        theta: 0.0,
        phi: 0.0,
        range: 0.0,
        position: Vec3::new(0.0, 0.0, 0.0),
        hit: false,
    };

    pub fn from_direction(direction: &Vec3, range: f64, hit: bool) -> Self {
        let theta = direction.z.clamp(-1.0, 1.0).asin();
        let mut phi = direction.y.atan2(direction.x);
        if phi >= PI {
            phi = -PI;
        }
        Self {
            theta,
            phi,
            range,
            position: direction * range,
            hit,
        }
    }

    /// Angles of a bin centre with the given range; position follows.
    pub fn from_angles(theta: f64, phi: f64, range: f64, hit: bool) -> Self {
        let d = Vec3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin());
        Self {
            theta,
            phi,
            range,
            position: d * range,
            hit,
        }
    }
}

/// Regular `(theta, phi)` grid used by [`average_downsample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta_range: [f64; 2],
    pub phi_range: [f64; 2],
    /// Range reported by empty bins.
    pub d_max: f64,
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn bin(v: f64, [lo, hi]: [f64; 2], n: usize) -> usize {
        let f = ((v - lo) / (hi - lo) * n as f64).floor();
        if f.is_nan() || f < 0.0 {
            0
        } else {
            (f as usize).min(n - 1)
        }
    }

    fn center([lo, hi]: [f64; 2], n: usize, i: usize) -> f64 {
        lo + (i as f64 + 0.5) * (hi - lo) / n as f64
    }

    pub fn index_of(&self, theta: f64, phi: f64) -> usize {
        Self::bin(theta, self.theta_range, self.n_theta) * self.n_phi + Self::bin(phi, self.phi_range, self.n_phi)
    }

    pub fn bin_center(&self, index: usize) -> (f64, f64) {
        (
            Self::center(self.theta_range, self.n_theta, index / self.n_phi),
            Self::center(self.phi_range, self.n_phi, index % self.n_phi),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    /// The point of largest range (first such index).
    #[default]
    MaxRange,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub theta_threshold: f64,
    pub k_proximal: usize,
    pub distal_bins: (usize, usize),
    /// Elevation span of the distal grid; `None` means `[-π/2, theta_threshold]`.
    pub distal_theta_range: Option<[f64; 2]>,
    pub d_max: f64,
    pub n_hist: usize,
    pub start_rule: StartRule,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            theta_threshold: -0.15,
            k_proximal: 256,
            distal_bins: (8, 36),
            distal_theta_range: None,
            d_max: 30.0,
            n_hist: 10,
            start_rule: StartRule::MaxRange,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.k_proximal == 0 {
            return Err(PerceptionError::InvalidConfig("k_proximal must be >= 1"));
        }
        if self.distal_bins.0 == 0 || self.distal_bins.1 == 0 {
            return Err(PerceptionError::InvalidConfig("distal bins must be >= 1"));
        }
        if self.n_hist == 0 {
            return Err(PerceptionError::InvalidConfig("n_hist must be >= 1"));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) || !self.theta_threshold.is_finite() {
            return Err(PerceptionError::InvalidConfig("d_max and theta_threshold must be finite, d_max > 0"));
        }
        let [lo, hi] = self.distal_grid().theta_range;
        if !(lo < hi) {
            return Err(PerceptionError::InvalidConfig("distal theta range is empty"));
        }
        Ok(())
    }

    pub fn distal_grid(&self) -> AngularGrid {
        AngularGrid {
            n_theta: self.distal_bins.0,
            n_phi: self.distal_bins.1,
            theta_range: self
                .distal_theta_range
                .unwrap_or([-FRAC_PI_2, self.theta_threshold]),
            phi_range: [-PI, PI],
            d_max: self.d_max,
        }
    }

    pub fn distal_len(&self) -> usize {
        self.distal_bins.0 * self.distal_bins.1
    }
}

/// Splits a frame into `(proximal, distal)`. Misses never enter the
/// proximal set; they join the distal set at their sentinel range.
pub fn partition(frame: &ScanFrame, theta_threshold: f64) -> (Vec<SphericalPoint>, Vec<SphericalPoint>) {
    let mut proximal = Vec::new();
    let mut distal = Vec::new();
    for i in 0..frame.len() {
        let p = SphericalPoint::from_direction(&frame.directions[i], frame.ranges[i], frame.hit_flags[i]);
        if p.hit && p.theta > theta_threshold {
            proximal.push(p);
        } else {
            distal.push(p);
        }
    }
    (proximal, distal)
}

/// Greedy max-min selection of `min(k, n)` points, in selection order.
/// Distances are squared Euclidean on `position`; ties go to the lower index.
pub fn farthest_point_sample(points: &[SphericalPoint], k: usize, start: StartRule) -> Vec<SphericalPoint> {
    let n = points.len();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let first = match start {
        StartRule::Index(i) => i.min(n - 1),
        StartRule::MaxRange => {
            let mut best = 0;
            for (i, p) in points.iter().enumerate() {
                if p.range > points[best].range {
                    best = i;
                }
            }
            best
        }
    };
    let mut chosen = vec![first];
    let mut min_d2: Vec<f64> = points
        .iter()
        .map(|p| (p.position - points[first].position).norm_squared())
        .collect();
    let mut taken = vec![false; n];
    taken[first] = true;
    while chosen.len() < k.min(n) {
        let mut next = usize::MAX;
        for i in 0..n {
            if !taken[i] && (next == usize::MAX || min_d2[i] > min_d2[next]) {
                next = i;
            }
        }
        taken[next] = true;
        chosen.push(next);
        let q = points[next].position;
        for (d, p) in min_d2.iter_mut().zip(points) {
            *d = d.min((p.position - q).norm_squared());
        }
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

/// One point per grid bin, `theta`-major. Non-empty bins carry the mean
/// range of their members, empty bins carry `grid.d_max`; both sit at the
/// bin centre. Points outside the grid are clamped into the edge bins.
pub fn average_downsample(points: &[SphericalPoint], grid: &AngularGrid) -> Vec<SphericalPoint> {
    let mut sum = vec![0.0; grid.len()];
    let mut count = vec![0usize; grid.len()];
    for p in points {
        let b = grid.index_of(p.theta, p.phi);
        sum[b] += p.range;
        count[b] += 1;
    }
    (0..grid.len())
        .map(|b| {
            let (theta, phi) = grid.bin_center(b);
            if count[b] == 0 {
                SphericalPoint::from_angles(theta, phi, grid.d_max, false)
            } else {
                SphericalPoint::from_angles(theta, phi, sum[b] / count[b] as f64, true)
            }
        })
        .collect()
}

/// Stable lexicographic sort by `(theta, phi)`.
pub fn spherical_sort(points: &mut [SphericalPoint]) {
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.phi.total_cmp(&b.phi)));
}

/// Fixed-size inputs for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedFrame {
    /// `k_proximal` points: the sorted FPS subset followed by zero padding.
    pub proximal: Vec<SphericalPoint>,
    /// `n_theta · n_phi` points, one per distal bin.
    pub distal: Vec<SphericalPoint>,
}

/// Partition, sample, downsample and sort one frame.
pub fn preprocess_frame(frame: &ScanFrame, cfg: &PartitionConfig) -> Result<ProcessedFrame, PerceptionError> {
    cfg.validate()?;
    let (proximal, distal) = partition(frame, cfg.theta_threshold);
    let mut proximal = farthest_point_sample(&proximal, cfg.k_proximal, cfg.start_rule);
    spherical_sort(&mut proximal);
    proximal.resize(cfg.k_proximal, SphericalPoint::ZERO);
    let mut distal = average_downsample(&distal, &cfg.distal_grid());
    spherical_sort(&mut distal);
    Ok(ProcessedFrame { proximal, distal })
}

/// Sequences of `n_hist` frames, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub proximal: Vec<Vec<SphericalPoint>>,
    pub distal: Vec<Vec<SphericalPoint>>,
}

impl History {
    pub fn proximal_shape(&self) -> (usize, usize) {
        (self.proximal.len(), self.proximal.first().map_or(0, Vec::len))
    }

    pub fn distal_shape(&self) -> (usize, usize) {
        (self.distal.len(), self.distal.first().map_or(0, Vec::len))
    }
}

/// Ring of the last `n_hist` processed frames for one environment.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    n_hist: usize,
    k_proximal: usize,
    distal_len: usize,
    frames: VecDeque<ProcessedFrame>,
}

impl HistoryBuffer {
    pub fn new(n_hist: usize, k_proximal: usize, distal_len: usize) -> Self {
        Self {
            n_hist,
            k_proximal,
            distal_len,
            frames: VecDeque::with_capacity(n_hist),
        }
    }

    pub fn for_config(cfg: &PartitionConfig) -> Self {
        Self::new(cfg.n_hist, cfg.k_proximal, cfg.distal_len())
    }

    pub fn fill(&self) -> usize {
        self.frames.len()
    }

    pub fn push_and_assemble(
        &mut self,
        proximal: Vec<SphericalPoint>,
        distal: Vec<SphericalPoint>,
    ) -> Result<History, PerceptionError> {
        if proximal.len() != self.k_proximal {
            return Err(PerceptionError::ShapeMismatch {
                what: "proximal",
                expected: self.k_proximal,
                actual: proximal.len(),
            });
        }
        if distal.len() != self.distal_len {
            return Err(PerceptionError::ShapeMismatch {
                what: "distal",
                expected: self.distal_len,
                actual: distal.len(),
            });
        }
        if self.frames.len() == self.n_hist {
            self.frames.pop_front();
        }
        self.frames.push_back(ProcessedFrame { proximal, distal });
        Ok(self.assemble())
    }

    pub fn assemble(&self) -> History {
        let pad = self.n_hist - self.frames.len();
        let mut h = History {
            proximal: vec![vec![SphericalPoint::ZERO; self.k_proximal]; pad],
            distal: vec![vec![SphericalPoint::ZERO; self.distal_len]; pad],
        };
        for f in &self.frames {
            h.proximal.push(f.proximal.clone());
            h.distal.push(f.distal.clone());
        }
        h
    }
}

/// Local terrain sampling grid, centred on the base, heading-aligned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightGrid {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    /// Deepest height reported below the base; deeper or missing terrain
    /// reads as `-probe_depth`.
    pub probe_depth: f64,
}

impl Default for HeightGrid {
    fn default() -> Self {
        Self {
            nx: 17,
            ny: 11,
            spacing: 0.1,
            probe_depth: 2.0,
        }
    }
}

/// Static terrain height relative to the base at each grid cell, `x`-major
/// (`out[ix * ny + iy]`). Cells lie on the base's heading-aligned x-y
/// axes; roll and pitch are ignored.
pub fn sample_privileged_height(
    world: &SceneWorld,
    env_id: u32,
    base_pose: &RigidTransform,
    grid: &HeightGrid,
) -> Result<Vec<f64>, PerceptionError> {
    let mut out = vec![-grid.probe_depth; grid.nx * grid.ny];
    if env_id >= world.num_envs() {
        return Err(SceneError::InvalidEnv {
            env: env_id,
            num_envs: world.num_envs(),
        }
        .into());
    }
    let Some(bounds) = world.env_bounds(env_id) else {
        return Ok(out);
    };
    let base = base_pose.translation();
    let (s, c) = base_pose.yaw().sin_cos();
    let top = bounds.max.z.max(base.z) + 1.0;
    let floor = base.z - grid.probe_depth;
    let half = |n: usize| (n as f64 - 1.0) / 2.0;
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let lx = (ix as f64 - half(grid.nx)) * grid.spacing;
            let ly = (iy as f64 - half(grid.ny)) * grid.spacing;
            let origin = Vec3::new(base.x + c * lx - s * ly, base.y + s * lx + c * ly, top);
            let ray = Ray {
                origin,
                direction: -Vec3::z(),
                t_min: 0.0,
                t_max: top - floor,
            };
            if let Some(h) = world.cast_static(env_id, &ray)? {
                out[ix * grid.ny + iy] = h.hit.point.z - base.z;
            }
        }
    }
    Ok(out)
}
