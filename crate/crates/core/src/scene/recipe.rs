//! In-memory scene recipes and the built-in presets.
//!
//! A [`SceneRecipe`] is plain geometry: one optional static mesh per
//! environment and a list of dynamic entities with their local meshes and
//! initial transforms. Worlds, validators and benchmarks all start from one.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EntityId, SceneError, SceneWorld};
use crate::geometry::primitives::{cuboid, heightfield, icosphere, plane};
use crate::geometry::{TriangleMesh, Vec3};
use crate::transform::RigidTransform;

#[derive(Debug, Clone, PartialEq)]
pub struct EntityRecipe {
    pub env: u32,
    pub mesh: TriangleMesh,
    pub transform: RigidTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecipe {
    pub num_envs: u32,
    pub statics: Vec<Option<TriangleMesh>>,
    pub entities: Vec<EntityRecipe>,
}

impl SceneRecipe {
    pub fn empty(num_envs: u32) -> Self {
        Self {
            num_envs,
            statics: vec![None; num_envs as usize],
            entities: Vec::new(),
        }
    }

    /// Registers everything and places entities at their initial transforms
    /// (time 0). Entity ids follow recipe order.
    pub fn build(&self) -> Result<(SceneWorld, Vec<EntityId>), SceneError> {
        let mut world = SceneWorld::new(self.num_envs);
        for (env, mesh) in self.statics.iter().enumerate() {
            if let Some(m) = mesh.as_ref().filter(|m| !m.is_empty()) {
                world.register_static_mesh(env as u32, m.clone())?;
            }
        }
        let mut ids = Vec::with_capacity(self.entities.len());
        let mut initial = Vec::with_capacity(self.entities.len());
        for e in &self.entities {
            let id = world.register_dynamic_entity(e.env, e.mesh.clone())?;
            ids.push(id);
            initial.push((id, e.transform));
        }
        world.update_dynamic(&initial, 0.0)?;
        Ok((world, ids))
    }

    pub fn static_triangles(&self) -> usize {
        self.statics.iter().flatten().map(TriangleMesh::triangle_count).sum()
    }

    pub fn dynamic_triangles(&self) -> usize {
        self.entities.iter().map(|e| e.mesh.triangle_count()).sum()
    }
}

pub const PRESET_NAMES: &[&str] = &["empty", "flat", "clutter", "bench"];

/// Knobs shared by the presets; each preset reads the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetParams {
    pub num_envs: u32,
    /// Dynamic entities per environment.
    pub entities_per_env: usize,
    /// Random static triangles per environment (`clutter`).
    pub static_triangles: usize,
    /// Icosphere subdivision of dynamic entities (`bench`).
    pub entity_subdivisions: u32,
    pub seed: u64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            num_envs: 1,
            entities_per_env: 2,
            static_triangles: 5000,
            entity_subdivisions: 4,
            seed: 0,
        }
    }
}

/// Builds a named preset:
///
/// * `empty`: no geometry at all.
/// * `flat`: a 40 m ground plane, four static pillars, and
///   `entities_per_env` dynamic boxes around the origin.
/// * `clutter`: terrain plus `static_triangles` random triangles, and
///   `entities_per_env` random boxes and spheres.
/// * `bench`: terrain plus `entities_per_env` dense spheres of
///   `entity_subdivisions` levels.
pub fn preset(name: &str, p: &PresetParams) -> Option<SceneRecipe> {
    Some(match name {
        "empty" => SceneRecipe::empty(p.num_envs),
        "flat" => flat(p),
        "clutter" => clutter(p),
        "bench" => bench(p),
        _ => return None,
    })
}

fn ring_position(k: usize, n: usize, radius: f64) -> Vec3 {
    let a = TAU * k as f64 / n.max(1) as f64;
    Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
}

fn flat(p: &PresetParams) -> SceneRecipe {
    let mut ground = plane(0.0, 20.0, 4, 0);
    for k in 0..4 {
        let c = ring_position(k, 4, 6.0) + Vec3::new(0.0, 0.0, 1.0);
        ground.append(&cuboid(c, Vec3::new(0.5, 0.5, 2.0), 0));
    }
    let mut r = SceneRecipe::empty(p.num_envs);
    r.statics = vec![Some(ground); p.num_envs as usize];
    for env in 0..p.num_envs {
        for k in 0..p.entities_per_env {
            r.entities.push(EntityRecipe {
                env,
                mesh: cuboid(Vec3::zeros(), Vec3::new(0.6, 0.6, 0.8), 0),
                transform: RigidTransform::from_translation(ring_position(k, p.entities_per_env, 3.0) + Vec3::z() * 0.4),
            });
        }
    }
    r
}

fn rough_terrain(cells: usize) -> TriangleMesh {
    heightfield(15.0, cells, 0, |x, y| 0.15 * (0.7 * x).sin() * (0.5 * y).cos())
}

fn random_soup(rng: &mut ChaCha8Rng, n: usize) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    m.vertices.reserve(3 * n);
    for i in 0..n {
        let c = Vec3::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0), rng.gen_range(0.0..4.0));
        for _ in 0..3 {
            let o = Vec3::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            m.vertices.push(c + o);
        }
        let b = 3 * i as u32;
        m.indices.push([b, b + 1, b + 2]);
        m.tags.push(0);
    }
    m
}

fn random_entity(rng: &mut ChaCha8Rng) -> TriangleMesh {
    if rng.gen_bool(0.5) {
        let s = Vec3::new(rng.gen_range(0.3..1.2), rng.gen_range(0.3..1.2), rng.gen_range(0.3..1.5));
        cuboid(Vec3::zeros(), s, 0)
    } else {
        icosphere(Vec3::zeros(), rng.gen_range(0.2..0.7), rng.gen_range(1..=2), 0)
    }
}

fn clutter(p: &PresetParams) -> SceneRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut r = SceneRecipe::empty(p.num_envs);
    for env in 0..p.num_envs as usize {
        let mut m = rough_terrain(20);
        m.append(&random_soup(&mut rng, p.static_triangles));
        r.statics[env] = Some(m);
    }
    for env in 0..p.num_envs {
        for _ in 0..p.entities_per_env {
            let mesh = random_entity(&mut rng);
            let t = Vec3::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0), rng.gen_range(0.2..2.5));
            r.entities.push(EntityRecipe {
                env,
                mesh,
                transform: RigidTransform::from_yaw(rng.gen_range(0.0..TAU), t),
            });
        }
    }
    r
}

fn bench(p: &PresetParams) -> SceneRecipe {
    let mut r = SceneRecipe::empty(p.num_envs);
    r.statics = vec![Some(rough_terrain(16)); p.num_envs as usize];
    for env in 0..p.num_envs {
        for k in 0..p.entities_per_env {
            r.entities.push(EntityRecipe {
                env,
                mesh: icosphere(Vec3::zeros(), 0.4, p.entity_subdivisions, 0),
                transform: bench_motion(k, p.entities_per_env, 0.0),
            });
        }
    }
    r
}

/// Smooth deterministic motion of entity `k` of `n`: a 0.5 m circle around
/// its home on a 3 m ring, with spin about z.
pub fn bench_motion(k: usize, n: usize, t: f64) -> RigidTransform {
    let phase = TAU * (k as f64 / n.max(1) as f64 + 0.25 * t);
    let home = ring_position(k, n, 3.0);
    let offset = Vec3::new(0.5 * phase.cos(), 0.5 * phase.sin(), 0.6);
    RigidTransform::from_yaw(phase, home + offset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        let p = PresetParams {
            num_envs: 3,
            entities_per_env: 2,
            static_triangles: 100,
            entity_subdivisions: 1,
            seed: 5,
        };
        for name in PRESET_NAMES {
            let r = preset(name, &p).unwrap();
            let (w, ids) = r.build().unwrap();
            assert_eq!(w.num_envs(), 3);
            assert_eq!(ids.len(), r.entities.len());
            assert!(!w.is_stale());
        }
        assert!(preset("nope", &p).is_none());
        let c = preset("clutter", &p).unwrap();
        assert_eq!(c, preset("clutter", &p).unwrap());
        assert_eq!(c.statics[0].as_ref().unwrap().triangle_count(), 2 * 20 * 20 + 100);
    }
}
