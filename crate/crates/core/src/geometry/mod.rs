//! Triangle meshes, rays, and ray/triangle intersection.
//!
//! Everything is `f64`: the oracle comparisons in this crate are made at
//! micrometre tolerances over scenes tens of metres across.

mod bvh;
pub mod obj;
pub mod primitives;

pub use bvh::{Bvh, BvhNode, LEAF_SIZE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Barycentric slack accepted on triangle edges so that rays cannot slip
/// between neighbouring triangles.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("mesh topology changed: bvh built for {expected} triangles, mesh has {actual}")]
    TopologyChanged { expected: usize, actual: usize },
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("mesh has {triangles} triangles but {tags} tags")]
    TagCountMismatch { triangles: usize, tags: usize },
    #[error("invalid ray: {0}")]
    InvalidRay(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// The empty box: the identity for [`Aabb::union`].
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    #[inline]
    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.min[i] && self.max[i] >= other.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    pub fn translated(&self, offset: &Vec3) -> Aabb {
        Aabb {
            min: self.min + offset,
            max: self.max + offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3, t_min: f64, t_max: f64) -> Result<Self, GeometryError> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(GeometryError::InvalidRay("direction must be finite and non-zero"));
        }
        if !(t_min >= 0.0 && t_min < t_max) {
            return Err(GeometryError::InvalidRay("require 0 <= t_min < t_max"));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidRay("origin must be finite"));
        }
        Ok(Self {
            origin,
            direction: direction / n,
            t_min,
            t_max,
        })
    }

    /// Unbounded ray starting at the origin.
    pub fn infinite(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        Self::new(origin, direction, 0.0, f64::INFINITY)
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle_index: usize,
    pub tag: u32,
    pub point: Vec3,
}

impl Hit {
    /// Total order used everywhere a closest hit is selected: smaller `t`
    /// first, then smaller triangle index. Makes results independent of
    /// traversal order.
    #[inline]
    pub fn closer_than(&self, t: f64, triangle_index: usize) -> bool {
        self.t < t || (self.t == t && self.triangle_index < triangle_index)
    }
}

/// Indexed triangle soup with one integer tag per triangle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub indices: Vec<[u32; 3]>,
    pub tags: Vec<u32>,
}

impl TriangleMesh {
    /// Builds a mesh with every triangle tagged `tag`.
    pub fn new(vertices: Vec<Vec3>, indices: Vec<[u32; 3]>, tag: u32) -> Result<Self, GeometryError> {
        let tags = vec![tag; indices.len()];
        Self::with_tags(vertices, indices, tags)
    }

    pub fn with_tags(
        vertices: Vec<Vec3>,
        indices: Vec<[u32; 3]>,
        tags: Vec<u32>,
    ) -> Result<Self, GeometryError> {
        let mesh = Self {
            vertices,
            indices,
            tags,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.tags.len() != self.indices.len() {
            return Err(GeometryError::TagCountMismatch {
                triangles: self.indices.len(),
                tags: self.tags.len(),
            });
        }
        let n = self.vertices.len();
        for (i, tri) in self.indices.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v as usize >= n) {
                return Err(GeometryError::IndexOutOfRange {
                    triangle: i,
                    index: bad,
                    vertex_count: n,
                });
            }
        }
        Ok(())
    }

    pub fn triangle_count(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.indices[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_bounds(&self, i: usize) -> Aabb {
        Aabb::from_points(&self.triangle(i))
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn set_tag(&mut self, tag: u32) {
        self.tags.iter_mut().for_each(|t| *t = tag);
    }

    /// Appends `other`, offsetting its indices. Tags are kept.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.indices
            .extend(other.indices.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        self.tags.extend_from_slice(&other.tags);
    }

    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(f).collect(),
            indices: self.indices.clone(),
            tags: self.tags.clone(),
        }
    }

    /// Closest hit by testing every triangle. Reference path for the BVH.
    pub fn brute_force_closest_hit(&self, ray: &Ray, tag_filter: Option<u32>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for i in 0..self.indices.len() {
            if tag_filter.is_some_and(|f| f != self.tags[i]) {
                continue;
            }
            let [a, b, c] = self.triangle(i);
            if let Some(t) = intersect_ray_triangle(ray, &a, &b, &c) {
                if best.map_or(true, |h| !h.closer_than(t, i)) {
                    best = Some(Hit {
                        t,
                        triangle_index: i,
                        tag: self.tags[i],
                        point: ray.at(t),
                    });
                }
            }
        }
        best
    }
}

/// Möller–Trumbore intersection, edge- and vertex-inclusive.
///
/// Returns the ray parameter of the intersection if it lies within
/// `[ray.t_min, ray.t_max]`. Degenerate triangles and rays parallel to the
/// triangle plane never hit.
#[inline]
pub fn intersect_ray_triangle(ray: &Ray, v0: &Vec3, v1: &Vec3, v2: &Vec3) -> Option<f64> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    // |det| = |d . (e1 x e2)|; zero for degenerate triangles and parallel rays.
    let scale = e1.norm() * e2.norm();
    if !(det.abs() > 1e-12 * scale) {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = ray.origin - v0;
    let u = s.dot(&p) * inv_det;
    if u < -EDGE_TOLERANCE || u > 1.0 + EDGE_TOLERANCE {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv_det;
    if v < -EDGE_TOLERANCE || u + v > 1.0 + EDGE_TOLERANCE {
        return None;
    }
    let t = e2.dot(&q) * inv_det;
    (t >= ray.t_min && t <= ray.t_max).then_some(t)
}
