//! End-to-end check of scene casting against an all-triangle oracle.
//!
//! The oracle never sees the world's buffers or trees. It keeps its own copy
//! of the recipe geometry, applies each step's transforms with rotation
//! matrices, and intersects every triangle of the environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{intersect_ray_triangle, Ray, Vec3};
use crate::scene::recipe::SceneRecipe;
use crate::scene::SceneError;
use crate::transform::RigidTransform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateConfig {
    /// Rays per step, spread round-robin over environments.
    pub rays: usize,
    pub steps: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Move entities through the refit-skipping test hook instead of
    /// `update_dynamic`. A correct validator must then fail.
    pub inject_stale: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            rays: 1000,
            steps: 10,
            seed: 0,
            tolerance: 1e-6,
            inject_stale: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub steps: usize,
    pub casts: usize,
    /// Casts where both sides hit.
    pub hits: usize,
    /// Casts where exactly one side hit, or both hit with `|Δt|` above
    /// tolerance.
    pub mismatches: usize,
    /// Largest `|Δt|` over casts where both sides hit.
    pub max_abs_dt: f64,
    pub pass: bool,
}

type Tri = [Vec3; 3];

fn triangles(vertices: &[Vec3], indices: &[[u32; 3]]) -> Vec<Tri> {
    indices
        .iter()
        .map(|t| t.map(|i| vertices[i as usize]))
        .collect()
}

fn oracle_cast(tris: &[Tri], ray: &Ray) -> Option<f64> {
    let mut best: Option<f64> = None;
    for [a, b, c] in tris {
        if let Some(t) = intersect_ray_triangle(ray, a, b, c) {
            if best.map_or(true, |b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_step(rng: &mut ChaCha8Rng, prev: &RigidTransform) -> RigidTransform {
    let delta = RigidTransform::from_axis_angle(
        random_unit(rng) * rng.gen_range(0.0..0.4),
        Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.1..0.1)),
    );
    let moved = delta.compose(prev);
    // Keep entities inside the sampled region.
    let t = moved.translation();
    let clamped = Vec3::new(t.x.clamp(-10.0, 10.0), t.y.clamp(-10.0, 10.0), t.z.clamp(0.0, 3.0));
    RigidTransform::new(moved.quaternion_wxyz(), clamped).expect("unit rotation")
}

/// Runs `cfg.steps` update/cast rounds over `recipe`. Step 0 uses the
/// recipe's initial transforms; later steps random-walk every entity.
pub fn run_validate(recipe: &SceneRecipe, cfg: &ValidateConfig) -> Result<ValidateReport, SceneError> {
    let (mut world, ids) = recipe.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let statics: Vec<Vec<Tri>> = recipe
        .statics
        .iter()
        .map(|m| m.as_ref().map_or_else(Vec::new, |m| triangles(&m.vertices, &m.indices)))
        .collect();
    let mut poses: Vec<RigidTransform> = recipe.entities.iter().map(|e| e.transform).collect();
    let mut report = ValidateReport {
        steps: cfg.steps,
        casts: 0,
        hits: 0,
        mismatches: 0,
        max_abs_dt: 0.0,
        pass: false,
    };

    for step in 0..cfg.steps {
        if step > 0 {
            for p in poses.iter_mut() {
                *p = random_step(&mut rng, p);
            }
            let updates: Vec<_> = ids.iter().copied().zip(poses.iter().copied()).collect();
            if cfg.inject_stale {
                world.move_entities_without_refit(&updates)?;
            } else {
                world.update_dynamic(&updates, step as f64 * 0.1)?;
            }
        }

        let mut env_tris = statics.clone();
        for (e, pose) in recipe.entities.iter().zip(&poses) {
            let r = pose.rotation().to_rotation_matrix();
            let t = pose.translation();
            let moved: Vec<Vec3> = e.mesh.vertices.iter().map(|v| r.matrix() * v + t).collect();
            env_tris[e.env as usize].extend(triangles(&moved, &e.mesh.indices));
        }

        for i in 0..cfg.rays {
            let env = (i % recipe.num_envs.max(1) as usize) as u32;
            let origin = Vec3::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0), rng.gen_range(0.2..4.0));
            let ray = Ray::new(origin, random_unit(&mut rng), 0.0, 100.0).expect("valid ray");
            let got = world.cast(env, &ray)?.map(|h| h.hit.t);
            let want = oracle_cast(&env_tris[env as usize], &ray);
            report.casts += 1;
            match (got, want) {
                (Some(a), Some(b)) => {
                    report.hits += 1;
                    let dt = (a - b).abs();
                    report.max_abs_dt = report.max_abs_dt.max(dt);
                    if !(dt <= cfg.tolerance) {
                        report.mismatches += 1;
                    }
                }
                (None, None) => {}
                _ => report.mismatches += 1,
            }
        }
    }
    report.pass = report.mismatches == 0 && report.max_abs_dt <= cfg.tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::recipe::{preset, PresetParams};

    fn small() -> SceneRecipe {
        let p = PresetParams {
            num_envs: 2,
            entities_per_env: 4,
            static_triangles: 300,
            ..PresetParams::default()
        };
        preset("clutter", &p).unwrap()
    }

    #[test]
    fn honest_world_passes() {
        let cfg = ValidateConfig {
            rays: 200,
            steps: 5,
            ..ValidateConfig::default()
        };
        let r = run_validate(&small(), &cfg).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.hits > 0);
    }

    #[test]
    fn stale_tree_is_caught() {
        let cfg = ValidateConfig {
            rays: 400,
            steps: 5,
            inject_stale: true,
            ..ValidateConfig::default()
        };
        let r = run_validate(&small(), &cfg).unwrap();
        assert!(!r.pass);
        assert!(r.mismatches > 0);
    }

    #[test]
    fn empty_scene_all_misses() {
        let r = run_validate(&SceneRecipe::empty(3), &ValidateConfig::default()).unwrap();
        assert!(r.pass);
        assert_eq!(r.hits, 0);
    }
}
