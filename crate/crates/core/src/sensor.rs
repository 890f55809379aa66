//! Scan simulation and LiDAR randomization.
//!
//! A [`ScanFrame`] is produced by casting every direction of the pattern
//! bundle from the sensor origin (`base_pose ∘ mount`). Misses carry the
//! `max_range` sentinel with `hit = false`. Self-occlusion needs no special
//! handling: the robot's own body is just another dynamic entity of its
//! environment.
//!
//! Randomization draws from a counter-based stream keyed by
//! `(seed, env_id, frame_index, point_index)`, so results do not depend on
//! how frames are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ray, Vec3};
use crate::pattern::{PatternError, PatternSpec, RayBundle};
use crate::scene::{SceneError, SceneWorld};
use crate::transform::RigidTransform;

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("invalid sensor config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub pattern: PatternSpec,
    pub max_range: f64,
    pub min_range: f64,
    /// Base frame → sensor frame.
    pub mount: RigidTransform,
    /// Probability that a point is replaced by a short fake return.
    pub mask_ratio: f64,
    /// Range of the fake returns, metres.
    pub mask_value_range: [f64; 2],
    /// Probability that a surviving hit gets multiplicative range noise.
    pub noise_ratio: f64,
    /// Noisy ranges become `range · (1 + u)`, `u ~ U[-m, m]`.
    pub noise_rel_magnitude: f64,
    pub rng_seed: u64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            pattern: PatternSpec::preset("mid360-like").expect("built-in preset"),
            max_range: 30.0,
            min_range: 0.05,
            mount: RigidTransform::identity(),
            mask_ratio: 0.1,
            mask_value_range: [0.0, 0.3],
            noise_ratio: 0.1,
            noise_rel_magnitude: 0.1,
            rng_seed: 0,
        }
    }
}

impl SensorConfig {
    /// Noise-free configuration around `pattern`.
    pub fn ideal(pattern: PatternSpec, max_range: f64) -> Self {
        Self {
            pattern,
            max_range,
            min_range: 0.0,
            mask_ratio: 0.0,
            noise_ratio: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.min_range >= 0.0 && self.min_range < self.max_range && self.max_range.is_finite()) {
            return Err(SensorError::InvalidConfig("require 0 <= min_range < max_range"));
        }
        if !unit(self.mask_ratio) || !unit(self.noise_ratio) {
            return Err(SensorError::InvalidConfig("ratios must lie in [0, 1]"));
        }
        let [lo, hi] = self.mask_value_range;
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(SensorError::InvalidConfig("mask_value_range needs lo <= hi"));
        }
        if !(self.noise_rel_magnitude >= 0.0 && self.noise_rel_magnitude.is_finite()) {
            return Err(SensorError::InvalidConfig("noise_rel_magnitude must be >= 0"));
        }
        self.pattern.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFrame {
    pub env_id: u32,
    pub t: f64,
    /// `round(t / frame_period)`; part of the randomization key.
    pub frame_index: u64,
    /// Unit directions, sensor frame.
    pub directions: Vec<Vec3>,
    pub ranges: Vec<f64>,
    pub hit_flags: Vec<bool>,
    /// Return positions in the robot base frame.
    pub points_base: Vec<Vec3>,
}

impl ScanFrame {
    pub fn empty(env_id: u32, t: f64) -> Self {
        Self {
            env_id,
            t,
            frame_index: 0,
            directions: Vec::new(),
            ranges: Vec::new(),
            hit_flags: Vec::new(),
            points_base: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn hit_count(&self) -> usize {
        self.hit_flags.iter().filter(|&&h| h).count()
    }

    /// Builds a frame from directions and ranges, deriving `points_base`.
    pub fn from_parts(
        env_id: u32,
        t: f64,
        directions: Vec<Vec3>,
        ranges: Vec<f64>,
        hit_flags: Vec<bool>,
        mount: &RigidTransform,
    ) -> Self {
        let points_base = directions
            .iter()
            .zip(&ranges)
            .map(|(d, r)| mount.apply_point(&(d * *r)))
            .collect();
        Self {
            env_id,
            t,
            frame_index: 0,
            directions,
            ranges,
            hit_flags,
            points_base,
        }
    }
}

pub fn frame_index(t: f64, frame_period: f64) -> u64 {
    (t / frame_period).round().max(0.0) as u64
}

/// Casts one pattern frame for `env_id` from a robot at `base_pose`.
pub fn simulate_scan(
    world: &SceneWorld,
    env_id: u32,
    base_pose: &RigidTransform,
    config: &SensorConfig,
    t: f64,
) -> Result<ScanFrame, SensorError> {
    config.validate()?;
    let bundle = config.pattern.generate(t)?;
    scan_bundle(world, env_id, base_pose, config, &bundle, t)
}

/// [`simulate_scan`] with a pre-generated bundle, so many environments
/// scanning at the same `t` can share one. `bundle` must come from
/// `config.pattern.generate(t)`.
pub fn scan_bundle(
    world: &SceneWorld,
    env_id: u32,
    base_pose: &RigidTransform,
    config: &SensorConfig,
    bundle: &RayBundle,
    t: f64,
) -> Result<ScanFrame, SensorError> {
    let sensor = base_pose.compose(&config.mount);
    let origin = sensor.translation();

    let results: Vec<(f64, bool)> = bundle
        .directions
        .par_iter()
        .map(|d| {
            let ray = Ray {
                origin,
                direction: sensor.apply_vector(d),
                t_min: config.min_range,
                t_max: config.max_range,
            };
            Ok(match world.cast(env_id, &ray)? {
                Some(h) => (h.hit.t, true),
                None => (config.max_range, false),
            })
        })
        .collect::<Result<_, SceneError>>()?;

    let (ranges, hit_flags): (Vec<f64>, Vec<bool>) = results.into_iter().unzip();
    let mut frame = ScanFrame::from_parts(env_id, t, bundle.directions.clone(), ranges, hit_flags, &config.mount);
    frame.frame_index = frame_index(t, config.pattern.frame_period);
    Ok(frame)
}

/// Counter-based generator for one point of one frame.
fn point_rng(seed: u64, env_id: u32, frame_index: u64, point: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((env_id as u64) << 40) ^ frame_index);
    // Four f64 draws per point = eight 32-bit words.
    rng.set_word_pos(point as u128 * 8);
    rng
}

/// Masking and distance noise applied to a copy of `frame`.
///
/// Each point is independently masked with probability `mask_ratio`: its
/// range is replaced by a draw from `mask_value_range` and it is flagged as a
/// hit. Each remaining hit is independently perturbed with probability
/// `noise_ratio`. Every output range is clamped into `[0, max_range]`.
pub fn apply_randomization(frame: &ScanFrame, config: &SensorConfig) -> ScanFrame {
    let mut out = frame.clone();
    if config.mask_ratio == 0.0 && config.noise_ratio == 0.0 {
        return out;
    }
    let [lo, hi] = config.mask_value_range;
    let m = config.noise_rel_magnitude;
    out.ranges
        .par_iter_mut()
        .zip(out.hit_flags.par_iter_mut())
        .zip(out.points_base.par_iter_mut())
        .zip(out.directions.par_iter())
        .enumerate()
        .for_each(|(i, (((range, hit), point), dir))| {
            let mut rng = point_rng(config.rng_seed, frame.env_id, frame.frame_index, i);
            let mask_draw: f64 = rng.gen();
            let mask_value: f64 = rng.gen();
            let noise_draw: f64 = rng.gen();
            let noise_value: f64 = rng.gen();
            let new_range = if mask_draw < config.mask_ratio {
                *hit = true;
                lo + mask_value * (hi - lo)
            } else if *hit && noise_draw < config.noise_ratio {
                *range * (1.0 + m * (2.0 * noise_value - 1.0))
            } else {
                return;
            };
            *range = new_range.clamp(0.0, config.max_range);
            *point = config.mount.apply_point(&(dir * *range));
        });
    out
}
