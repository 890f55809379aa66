//! Per-environment static geometry plus one dynamic mesh shared by all
//! environments.
//!
//! Static meshes get their own BVH, built once at registration. Every
//! dynamic entity of every environment lives in a single global mesh whose
//! triangles are tagged with their environment id; a step moves its vertices
//! and refits its one BVH. Casting for environment `i` queries the static BVH
//! of `i` and the global BVH filtered to tag `i`.
//!
//! Phases alternate: [`SceneWorld::update_dynamic`] takes `&mut self` and
//! [`SceneWorld::cast`] takes `&self`, so a cast overlapping an update is
//! rejected at compile time. Registering an entity after an update leaves the
//! dynamic BVH stale until the next update, and casts report
//! [`SceneError::StaleDynamicBvh`] in the meantime.

pub mod file;
pub mod recipe;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Bvh, GeometryError, Hit, Ray, TriangleMesh, Vec3};
use crate::transform::RigidTransform;

/// A step rebuilds instead of refitting once the summed node surface area
/// has grown past this multiple of its value at build time.
pub const REBUILD_AREA_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("environment {env} out of range (world has {num_envs})")]
    InvalidEnv { env: u32, num_envs: u32 },
    #[error("static mesh already registered for environment {0}")]
    AlreadyRegistered(u32),
    #[error("unknown dynamic entity {0:?}")]
    UnknownEntity(EntityId),
    #[error("dynamic bvh is stale: call update_dynamic after registering entities")]
    StaleDynamicBvh,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone)]
pub struct DynamicEntity {
    pub id: EntityId,
    pub env_id: u32,
    /// Geometry in the entity frame.
    pub local_mesh: TriangleMesh,
    pub vertex_span: Range<usize>,
    pub triangle_span: Range<usize>,
    /// Transform applied at the latest update.
    pub transform: RigidTransform,
}

#[derive(Debug, Clone)]
struct StaticEnv {
    mesh: TriangleMesh,
    bvh: Bvh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshSource {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CastHit {
    pub hit: Hit,
    pub source: MeshSource,
}

/// Counters for the global dynamic BVH. Each `update_dynamic` call performs
/// exactly one maintenance operation: a refit, or a rebuild when topology
/// changed or the tree degraded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DynamicBvhStats {
    pub updates: u64,
    pub refits: u64,
    pub rebuilds: u64,
}

/// How `update_dynamic` keeps the dynamic BVH current.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Maintenance {
    /// Refit every step; rebuild only after topology changes or once the
    /// tree has degraded past [`REBUILD_AREA_FACTOR`].
    #[default]
    Refit,
    /// Rebuild from scratch every step. Reference strategy for benchmarks.
    AlwaysRebuild,
}

#[derive(Debug, Clone)]
pub struct SceneWorld {
    num_envs: u32,
    statics: Vec<Option<StaticEnv>>,
    dynamic_mesh: TriangleMesh,
    local_vertices: Vec<Vec3>,
    vertex_owner: Vec<u32>,
    entities: Vec<DynamicEntity>,
    dynamic_bvh: Option<Bvh>,
    stale: bool,
    needs_rebuild: bool,
    sim_time: f64,
    stats: DynamicBvhStats,
    maintenance: Maintenance,
}

impl SceneWorld {
    pub fn new(num_envs: u32) -> Self {
        Self {
            num_envs,
            statics: vec![None; num_envs as usize],
            dynamic_mesh: TriangleMesh::default(),
            local_vertices: Vec::new(),
            vertex_owner: Vec::new(),
            entities: Vec::new(),
            dynamic_bvh: None,
            stale: false,
            needs_rebuild: true,
            sim_time: 0.0,
            stats: DynamicBvhStats::default(),
            maintenance: Maintenance::Refit,
        }
    }

    pub fn with_maintenance(mut self, maintenance: Maintenance) -> Self {
        self.maintenance = maintenance;
        self
    }

    pub fn maintenance(&self) -> Maintenance {
        self.maintenance
    }

    pub fn num_envs(&self) -> u32 {
        self.num_envs
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub fn stats(&self) -> DynamicBvhStats {
        self.stats
    }

    pub fn entities(&self) -> &[DynamicEntity] {
        &self.entities
    }

    pub fn entity(&self, id: EntityId) -> Option<&DynamicEntity> {
        self.entities.get(id.0 as usize)
    }

    pub fn dynamic_mesh(&self) -> &TriangleMesh {
        &self.dynamic_mesh
    }

    pub fn dynamic_bvh(&self) -> Option<&Bvh> {
        self.dynamic_bvh.as_ref()
    }

    pub fn static_mesh(&self, env: u32) -> Option<&TriangleMesh> {
        self.statics.get(env as usize)?.as_ref().map(|s| &s.mesh)
    }

    pub fn static_bvh(&self, env: u32) -> Option<&Bvh> {
        self.statics.get(env as usize)?.as_ref().map(|s| &s.bvh)
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    fn check_env(&self, env: u32) -> Result<(), SceneError> {
        if env < self.num_envs {
            Ok(())
        } else {
            Err(SceneError::InvalidEnv {
                env,
                num_envs: self.num_envs,
            })
        }
    }

    /// Stores the non-moving geometry of `env` and builds its BVH. Tags of
    /// `mesh` are overwritten with `env`.
    pub fn register_static_mesh(&mut self, env: u32, mut mesh: TriangleMesh) -> Result<(), SceneError> {
        self.check_env(env)?;
        if self.statics[env as usize].is_some() {
            return Err(SceneError::AlreadyRegistered(env));
        }
        mesh.set_tag(env);
        let bvh = Bvh::build(&mesh)?;
        self.statics[env as usize] = Some(StaticEnv { mesh, bvh });
        Ok(())
    }

    /// Appends `mesh` (entity frame) to the global dynamic mesh, tagged with
    /// `env`. The entity starts at the identity transform; the dynamic BVH is
    /// stale until the next [`SceneWorld::update_dynamic`].
    pub fn register_dynamic_entity(&mut self, env: u32, mut mesh: TriangleMesh) -> Result<EntityId, SceneError> {
        self.check_env(env)?;
        mesh.validate()?;
        mesh.set_tag(env);
        let id = EntityId(self.entities.len() as u32);
        let v0 = self.dynamic_mesh.vertices.len();
        let t0 = self.dynamic_mesh.triangle_count();
        self.dynamic_mesh.append(&mesh);
        self.local_vertices.extend_from_slice(&mesh.vertices);
        self.vertex_owner.extend(std::iter::repeat(id.0).take(mesh.vertices.len()));
        self.entities.push(DynamicEntity {
            id,
            env_id: env,
            vertex_span: v0..self.dynamic_mesh.vertices.len(),
            triangle_span: t0..self.dynamic_mesh.triangle_count(),
            local_mesh: mesh,
            transform: RigidTransform::identity(),
        });
        self.stale = true;
        self.needs_rebuild = true;
        Ok(id)
    }

    /// Moves the listed entities to their new transforms (unlisted entities
    /// keep their previous one), recomputes the global vertex buffer and
    /// refreshes the single dynamic BVH once.
    pub fn update_dynamic(&mut self, transforms: &[(EntityId, RigidTransform)], t: f64) -> Result<(), SceneError> {
        self.apply_transforms(transforms)?;
        self.sim_time = t;
        self.stats.updates += 1;
        if self.dynamic_mesh.is_empty() {
            self.stale = false;
            return Ok(());
        }
        let rebuild = self.needs_rebuild || self.maintenance == Maintenance::AlwaysRebuild;
        match (&mut self.dynamic_bvh, rebuild) {
            (Some(bvh), false) => {
                bvh.refit(&self.dynamic_mesh)?;
                self.stats.refits += 1;
                // Degraded trees stay correct, just slower; rebuild next step.
                self.needs_rebuild = bvh.surface_area_sum() > REBUILD_AREA_FACTOR * bvh.built_surface_area();
            }
            _ => {
                self.dynamic_bvh = Some(Bvh::build(&self.dynamic_mesh)?);
                self.stats.rebuilds += 1;
                self.needs_rebuild = false;
            }
        }
        self.stale = false;
        Ok(())
    }

    fn apply_transforms(&mut self, transforms: &[(EntityId, RigidTransform)]) -> Result<(), SceneError> {
        if let Some((id, _)) = transforms.iter().find(|(id, _)| id.0 as usize >= self.entities.len()) {
            return Err(SceneError::UnknownEntity(*id));
        }
        for (id, tf) in transforms {
            self.entities[id.0 as usize].transform = *tf;
        }
        let per_entity: Vec<RigidTransform> = self.entities.iter().map(|e| e.transform).collect();
        self.dynamic_mesh
            .vertices
            .par_iter_mut()
            .zip(self.local_vertices.par_iter())
            .zip(self.vertex_owner.par_iter())
            .for_each(|((v, local), &owner)| *v = per_entity[owner as usize].apply_point(local));
        Ok(())
    }

    /// Test hook: moves entities without touching the BVH, leaving it
    /// silently inconsistent. Exists so validators can prove they detect it.
    #[doc(hidden)]
    pub fn move_entities_without_refit(&mut self, transforms: &[(EntityId, RigidTransform)]) -> Result<(), SceneError> {
        self.apply_transforms(transforms)
    }

    /// Closest hit for `env`: its static mesh and its share of the global
    /// dynamic mesh. Ties prefer static geometry.
    pub fn cast(&self, env: u32, ray: &Ray) -> Result<Option<CastHit>, SceneError> {
        self.check_env(env)?;
        if self.stale {
            return Err(SceneError::StaleDynamicBvh);
        }
        let s = self.cast_static_unchecked(env, ray);
        let d = self
            .dynamic_bvh
            .as_ref()
            .and_then(|bvh| bvh.closest_hit(&self.dynamic_mesh, ray, Some(env)))
            .map(|hit| CastHit {
                hit,
                source: MeshSource::Dynamic,
            });
        Ok(closer(s, d))
    }

    /// Closest hit against the static mesh of `env` only.
    pub fn cast_static(&self, env: u32, ray: &Ray) -> Result<Option<CastHit>, SceneError> {
        self.check_env(env)?;
        Ok(self.cast_static_unchecked(env, ray))
    }

    fn cast_static_unchecked(&self, env: u32, ray: &Ray) -> Option<CastHit> {
        self.statics[env as usize].as_ref().and_then(|s| {
            s.bvh.closest_hit(&s.mesh, ray, None).map(|hit| CastHit {
                hit,
                source: MeshSource::Static,
            })
        })
    }

    /// Same contract as [`SceneWorld::cast`], answered by testing every
    /// triangle of the current vertex buffers. Never touches a BVH.
    pub fn cast_exhaustive(&self, env: u32, ray: &Ray) -> Result<Option<CastHit>, SceneError> {
        self.check_env(env)?;
        let s = self.statics[env as usize].as_ref().and_then(|s| {
            s.mesh.brute_force_closest_hit(ray, None).map(|hit| CastHit {
                hit,
                source: MeshSource::Static,
            })
        });
        let d = self
            .dynamic_mesh
            .brute_force_closest_hit(ray, Some(env))
            .map(|hit| CastHit {
                hit,
                source: MeshSource::Dynamic,
            });
        Ok(closer(s, d))
    }

    /// Bounds of everything visible to `env`, or `None` for an empty env.
    pub fn env_bounds(&self, env: u32) -> Option<Aabb> {
        let mut b = Aabb::empty();
        if let Some(s) = self.statics.get(env as usize)?.as_ref() {
            b = b.union(&s.bvh.root_bounds());
        }
        for e in self.entities.iter().filter(|e| e.env_id == env) {
            b = b.union(&Aabb::from_points(&self.dynamic_mesh.vertices[e.vertex_span.clone()]));
        }
        (!b.is_empty()).then_some(b)
    }
}

fn closer(s: Option<CastHit>, d: Option<CastHit>) -> Option<CastHit> {
    match (s, d) {
        (Some(s), Some(d)) => Some(if d.hit.t < s.hit.t { d } else { s }),
        (s, d) => s.or(d),
    }
}
