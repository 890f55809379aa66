//! Step-time benchmark: shared dynamic mesh versus per-environment rebuilds.
//!
//! A step is one dynamic update followed by one scan in every environment.
//! `shared_dynamic` keeps all entities in one world with one refit per step.
//! `per_env_rebuild` gives every environment its own world whose dynamic BVH
//! is rebuilt from scratch each step. Both cast the same pattern from the
//! same pose against the same geometry.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::pattern::{PatternError, PatternSpec};
use crate::scene::recipe::{bench_motion, preset, PresetParams, SceneRecipe};
use crate::scene::{EntityId, Maintenance, SceneError, SceneWorld};
use crate::sensor::{scan_bundle, SensorConfig, SensorError};
use crate::transform::RigidTransform;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    SharedDynamic,
    PerEnvRebuild,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::SharedDynamic => "shared_dynamic",
            Baseline::PerEnvRebuild => "per_env_rebuild",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub env_counts: Vec<u32>,
    pub rays_per_frame: Vec<usize>,
    /// Timed steps per repetition.
    pub steps: usize,
    /// Untimed steps before the first repetition.
    pub warmup: usize,
    pub repetitions: usize,
    pub entities_per_env: usize,
    pub entity_subdivisions: u32,
    /// Scan pattern preset name.
    pub pattern: String,
    pub baselines: Vec<Baseline>,
    /// Simulated seconds per step.
    pub dt: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            env_counts: vec![1, 16, 64, 256],
            rays_per_frame: vec![1000, 4000, 16000],
            steps: 20,
            warmup: 2,
            repetitions: 3,
            entities_per_env: 6,
            entity_subdivisions: 4,
            pattern: "mid360-like".into(),
            baselines: vec![Baseline::SharedDynamic, Baseline::PerEnvRebuild],
            dt: 0.1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.into()));
        if self.env_counts.is_empty() || self.env_counts.contains(&0) {
            return bad("env counts must be positive");
        }
        if self.rays_per_frame.is_empty() || self.rays_per_frame.contains(&0) {
            return bad("ray counts must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be >= 1");
        }
        if self.repetitions < 3 {
            return bad("repetitions must be >= 3");
        }
        if self.baselines.is_empty() {
            return bad("no baseline selected");
        }
        PatternSpec::preset(&self.pattern)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub baseline: Baseline,
    pub envs: u32,
    pub rays: usize,
    pub entities_per_env: usize,
    pub dynamic_triangles: usize,
    pub steps: usize,
    pub repetitions: usize,
    /// Mean wall-clock per step over all timed steps.
    pub mean_ms: f64,
    /// Standard deviation of the per-step times.
    pub std_ms: f64,
    /// Coefficient of variation of the per-repetition means.
    pub cv: f64,
    pub rays_per_second: f64,
}

/// The worlds driven by one baseline.
enum Worlds {
    Shared(SceneWorld, Vec<EntityId>),
    PerEnv(Vec<(SceneWorld, Vec<EntityId>)>),
}

fn split_per_env(recipe: &SceneRecipe) -> Vec<SceneRecipe> {
    (0..recipe.num_envs)
        .map(|env| SceneRecipe {
            num_envs: 1,
            statics: vec![recipe.statics[env as usize].clone()],
            entities: recipe
                .entities
                .iter()
                .filter(|e| e.env == env)
                .map(|e| {
                    let mut e = e.clone();
                    e.env = 0;
                    e
                })
                .collect(),
        })
        .collect()
}

impl Worlds {
    fn new(baseline: Baseline, recipe: &SceneRecipe) -> Result<Self, SceneError> {
        Ok(match baseline {
            Baseline::SharedDynamic => {
                let (w, ids) = recipe.build()?;
                Worlds::Shared(w, ids)
            }
            Baseline::PerEnvRebuild => Worlds::PerEnv(
                split_per_env(recipe)
                    .iter()
                    .map(|r| {
                        let (w, ids) = r.build()?;
                        Ok((w.with_maintenance(Maintenance::AlwaysRebuild), ids))
                    })
                    .collect::<Result<_, SceneError>>()?,
            ),
        })
    }

    fn step(&mut self, per_env: usize, sensor: &SensorConfig, pose: &RigidTransform, t: f64) -> Result<(), BenchError> {
        let motion = |k: usize| bench_motion(k % per_env, per_env, t);
        let bundle = sensor.pattern.generate(t)?;
        match self {
            Worlds::Shared(world, ids) => {
                let updates: Vec<_> = ids.iter().enumerate().map(|(k, id)| (*id, motion(k))).collect();
                world.update_dynamic(&updates, t)?;
                (0..world.num_envs())
                    .into_par_iter()
                    .try_for_each(|env| scan_bundle(world, env, pose, sensor, &bundle, t).map(drop))?;
            }
            Worlds::PerEnv(worlds) => {
                worlds.par_iter_mut().try_for_each(|(world, ids)| {
                    let updates: Vec<_> = ids.iter().enumerate().map(|(k, id)| (*id, motion(k))).collect();
                    world.update_dynamic(&updates, t)
                })?;
                worlds
                    .par_iter()
                    .try_for_each(|(world, _)| scan_bundle(world, 0, pose, sensor, &bundle, t).map(drop))?;
            }
        }
        Ok(())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Times one (envs, rays, baseline) cell.
pub fn bench_case(cfg: &BenchConfig, envs: u32, rays: usize, baseline: Baseline) -> Result<BenchRecord, BenchError> {
    let params = PresetParams {
        num_envs: envs,
        entities_per_env: cfg.entities_per_env,
        entity_subdivisions: cfg.entity_subdivisions,
        ..PresetParams::default()
    };
    let recipe = preset("bench", &params).expect("built-in preset");
    let pattern = PatternSpec::preset(&cfg.pattern)?.with_rays_per_frame(rays)?;
    let sensor = SensorConfig::ideal(pattern, 30.0);
    let pose = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 0.5));
    let per_env = cfg.entities_per_env.max(1);

    let mut worlds = Worlds::new(baseline, &recipe)?;
    let mut t = 0.0;
    for _ in 0..cfg.warmup {
        t += cfg.dt;
        worlds.step(per_env, &sensor, &pose, t)?;
    }
    let mut samples = Vec::with_capacity(cfg.steps * cfg.repetitions);
    let mut rep_means = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        let start = samples.len();
        for _ in 0..cfg.steps {
            t += cfg.dt;
            let clock = Instant::now();
            worlds.step(per_env, &sensor, &pose, t)?;
            samples.push(clock.elapsed().as_secs_f64() * 1e3);
        }
        rep_means.push(mean_std(&samples[start..]).0);
    }
    let (mean_ms, std_ms) = mean_std(&samples);
    let (rm, rs) = mean_std(&rep_means);
    Ok(BenchRecord {
        baseline,
        envs,
        rays,
        entities_per_env: cfg.entities_per_env,
        dynamic_triangles: recipe.dynamic_triangles(),
        steps: cfg.steps,
        repetitions: cfg.repetitions,
        mean_ms,
        std_ms,
        cv: if rm > 0.0 { rs / rm } else { 0.0 },
        rays_per_second: envs as f64 * rays as f64 / (mean_ms / 1e3),
    })
}

/// Every (envs, rays, baseline) combination, in that nesting order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &envs in &cfg.env_counts {
        for &rays in &cfg.rays_per_frame {
            for &b in &cfg.baselines {
                out.push(bench_case(cfg, envs, rays, b)?);
            }
        }
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 11] = [
    "baseline",
    "envs",
    "rays",
    "entities_per_env",
    "dynamic_triangles",
    "steps",
    "repetitions",
    "mean_ms",
    "std_ms",
    "cv",
    "rays_per_second",
];

pub fn write_csv(records: &[BenchRecord], w: impl Write) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.baseline.name().to_owned(),
            r.envs.to_string(),
            r.rays.to_string(),
            r.entities_per_env.to_string(),
            r.dynamic_triangles.to_string(),
            r.steps.to_string(),
            r.repetitions.to_string(),
            format!("{:.4}", r.mean_ms),
            format!("{:.4}", r.std_ms),
            format!("{:.4}", r.cv),
            format!("{:.1}", r.rays_per_second),
        ])?;
    }
    out.flush()?;
    Ok(())
}
