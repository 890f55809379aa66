//! JSON scene description.
//!
//! ```json
//! {
//!   "num_envs": 4,
//!   "static": [
//!     { "env": "all", "mesh": { "plane": { "height": 0.0, "half_extent": 10.0 } } },
//!     { "env": 2,     "mesh": { "obj": "terrain/rocks.obj" } }
//!   ],
//!   "dynamic": [
//!     { "env": 0, "mesh": { "cuboid": { "center": [0, 0, 0], "size": [1, 1, 1] } },
//!       "transform": { "rotation": [1, 0, 0, 0], "translation": [2, 0, 0.5] } }
//!   ]
//! }
//! ```
//!
//! `env` is an environment id or `"all"`. Several static entries for one
//! environment are merged into its single static mesh. Relative OBJ paths
//! resolve against the scene file's directory. Dynamic entities are placed
//! at their `transform` (identity if absent) at time 0, so a loaded world is
//! ready to cast.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::recipe::{EntityRecipe, SceneRecipe};
use super::{EntityId, SceneError, SceneWorld};
use crate::geometry::obj::{load_obj, ObjError};
use crate::geometry::primitives::{cuboid, icosphere, plane};
use crate::geometry::{TriangleMesh, Vec3};
use crate::transform::RigidTransform;

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scene json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("mesh {path}: {source}")]
    Obj { path: PathBuf, source: ObjError },
    #[error("scene has num_envs = 0")]
    NoEnvironments,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub num_envs: u32,
    #[serde(default, rename = "static")]
    pub statics: Vec<StaticEntry>,
    #[serde(default)]
    pub dynamic: Vec<DynamicEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticEntry {
    pub env: EnvSelector,
    pub mesh: MeshSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicEntry {
    pub env: EnvSelector,
    pub mesh: MeshSource,
    #[serde(default)]
    pub transform: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvSelector {
    One(u32),
    All(AllEnvs),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllEnvs {
    All,
}

impl EnvSelector {
    fn envs(&self, num_envs: u32) -> Vec<u32> {
        match self {
            EnvSelector::One(e) => vec![*e],
            EnvSelector::All(_) => (0..num_envs).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Obj(PathBuf),
    Plane {
        #[serde(default)]
        height: f64,
        half_extent: f64,
        #[serde(default = "one")]
        cells: usize,
    },
    Cuboid {
        center: [f64; 3],
        size: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "two")]
        subdivisions: u32,
    },
}

fn one() -> usize {
    1
}

fn two() -> u32 {
    2
}

impl MeshSource {
    pub fn load(&self, base_dir: &Path) -> Result<TriangleMesh, SceneFileError> {
        Ok(match self {
            MeshSource::Obj(p) => {
                let path = base_dir.join(p);
                load_obj(&path, 0).map_err(|source| SceneFileError::Obj { path, source })?
            }
            MeshSource::Plane {
                height,
                half_extent,
                cells,
            } => plane(*height, *half_extent, *cells, 0),
            MeshSource::Cuboid { center, size } => cuboid(Vec3::from(*center), Vec3::from(*size), 0),
            MeshSource::Sphere {
                center,
                radius,
                subdivisions,
            } => icosphere(Vec3::from(*center), *radius, *subdivisions, 0),
        })
    }
}

/// A built world plus the entity ids created for each `dynamic` entry
/// (one per selected environment, in environment order).
#[derive(Debug)]
pub struct LoadedScene {
    pub world: SceneWorld,
    pub entities: Vec<Vec<EntityId>>,
}

impl SceneDescription {
    pub fn from_path(path: impl AsRef<Path>) -> Result<(Self, PathBuf), SceneFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneFileError::Io {
            path: path.to_owned(),
            source,
        })?;
        let desc: Self = serde_json::from_str(&text)?;
        let dir = path.parent().map(Path::to_owned).unwrap_or_default();
        Ok((desc, dir))
    }

    /// Loads every mesh into an in-memory recipe. Static entries of one
    /// environment are merged in file order.
    pub fn recipe(&self, base_dir: &Path) -> Result<SceneRecipe, SceneFileError> {
        if self.num_envs == 0 {
            return Err(SceneFileError::NoEnvironments);
        }
        let check = |env: u32| {
            if env < self.num_envs {
                Ok(())
            } else {
                Err(SceneError::InvalidEnv {
                    env,
                    num_envs: self.num_envs,
                })
            }
        };
        let mut recipe = SceneRecipe::empty(self.num_envs);
        for entry in &self.statics {
            let mesh = entry.mesh.load(base_dir)?;
            for env in entry.env.envs(self.num_envs) {
                check(env)?;
                recipe.statics[env as usize].get_or_insert_with(TriangleMesh::default).append(&mesh);
            }
        }
        for entry in &self.dynamic {
            let mesh = entry.mesh.load(base_dir)?;
            for env in entry.env.envs(self.num_envs) {
                check(env)?;
                recipe.entities.push(EntityRecipe {
                    env,
                    mesh: mesh.clone(),
                    transform: entry.transform,
                });
            }
        }
        Ok(recipe)
    }

    pub fn build(&self, base_dir: &Path) -> Result<LoadedScene, SceneFileError> {
        let recipe = self.recipe(base_dir)?;
        let (world, ids) = recipe.build()?;
        let mut ids = ids.into_iter();
        let entities = self
            .dynamic
            .iter()
            .map(|e| ids.by_ref().take(e.env.envs(self.num_envs).len()).collect())
            .collect();
        Ok(LoadedScene { world, entities })
    }
}

/// Reads and builds a scene file in one go.
pub fn load_scene(path: impl AsRef<Path>) -> Result<LoadedScene, SceneFileError> {
    let (desc, dir) = SceneDescription::from_path(path)?;
    desc.build(&dir)
}
