//! Parallel LiDAR simulation for vectorized robot-learning environments.

pub mod batch;
pub mod bench;
pub mod capabilities;
pub mod frame_io;
pub mod geometry;
pub mod pattern;
pub mod perception;
pub mod reward;
pub mod scene;
pub mod sensor;
pub mod transform;
pub mod validate;

pub use geometry::{Aabb, Bvh, Hit, Ray, TriangleMesh, Vec3};
pub use scene::{EntityId, SceneError, SceneWorld};
pub use transform::RigidTransform;
