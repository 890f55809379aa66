//! Bounding volume hierarchy over a [`TriangleMesh`].
//!
//! The tree is built once and afterwards only refit: node boxes are
//! re-tightened bottom-up when vertices move, the topology never changes.
//!
//! Build rule, in order of precedence:
//!  1. a range holding more than one tag is split at the tag boundary closest
//!     to its middle, so every subtree below some depth is tag-homogeneous and
//!     filtered queries prune whole foreign-tag subtrees;
//!  2. otherwise a range of more than [`LEAF_SIZE`] triangles is split at the
//!     median centroid along the longest axis of its centroid bounds.
//!
//! Ties are broken on triangle index so the result is a pure function of the
//! mesh.

use super::{intersect_ray_triangle, Aabb, GeometryError, Hit, Ray, TriangleMesh, Vec3};

pub const LEAF_SIZE: usize = 4;

/// A node in the flattened tree. Children are always stored after their
/// parent, which lets refit walk the array backwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub tag_lo: u32,
    pub tag_hi: u32,
    /// Leaf: offset into the triangle order. Internal: index of the left
    /// child; the right child is at `first + 1`.
    first: u32,
    /// Number of triangles for a leaf, zero for internal nodes.
    count: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }

    /// `(left, right)` child indices of an internal node.
    pub fn children(&self) -> Option<(usize, usize)> {
        (!self.is_leaf()).then(|| (self.first as usize, self.first as usize + 1))
    }

    /// Range into [`Bvh::triangle_order`] for a leaf.
    pub fn triangle_range(&self) -> Option<std::ops::Range<usize>> {
        self.is_leaf()
            .then(|| self.first as usize..(self.first + self.count) as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
    built_area: f64,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Result<Self, GeometryError> {
        mesh.validate()?;
        let n = mesh.triangle_count();
        if n == 0 {
            return Err(GeometryError::EmptyMesh);
        }
        let boxes: Vec<Aabb> = (0..n).map(|i| mesh.triangle_bounds(i)).collect();
        let centroids: Vec<Vec3> = (0..n)
            .map(|i| {
                let [a, b, c] = mesh.triangle(i);
                (a + b + c) / 3.0
            })
            .collect();

        let mut order: Vec<u32> = (0..n as u32).collect();
        // Stable: equal tags stay in index order.
        order.sort_by_key(|&i| mesh.tags[i as usize]);

        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        nodes.push(placeholder());
        let mut work = vec![(0usize, 0usize, n)];
        while let Some((node, start, end)) = work.pop() {
            let range = &mut order[start..end];
            let bounds = range
                .iter()
                .fold(Aabb::empty(), |acc, &i| acc.union(&boxes[i as usize]));
            let tag_lo = mesh.tags[range[0] as usize];
            let tag_hi = mesh.tags[range[range.len() - 1] as usize];
            let len = end - start;

            let split = if tag_lo != tag_hi {
                Some(start + tag_split(range, &mesh.tags))
            } else if len > LEAF_SIZE {
                let cb = Aabb::from_points(range.iter().map(|&i| &centroids[i as usize]));
                let axis = cb.longest_axis();
                let mid = len / 2;
                range.select_nth_unstable_by(mid, |&a, &b| {
                    centroids[a as usize][axis]
                        .total_cmp(&centroids[b as usize][axis])
                        .then(a.cmp(&b))
                });
                Some(start + mid)
            } else {
                None
            };

            nodes[node] = match split {
                Some(mid) => {
                    let left = nodes.len();
                    nodes.push(placeholder());
                    nodes.push(placeholder());
                    work.push((left + 1, mid, end));
                    work.push((left, start, mid));
                    BvhNode {
                        bounds,
                        tag_lo,
                        tag_hi,
                        first: left as u32,
                        count: 0,
                    }
                }
                None => BvhNode {
                    bounds,
                    tag_lo,
                    tag_hi,
                    first: start as u32,
                    count: len as u32,
                },
            };
        }

        let built_area = nodes.iter().map(|n| n.bounds.surface_area()).sum();
        Ok(Self {
            nodes,
            order,
            built_area,
        })
    }

    /// Re-tightens every node box around the current vertex positions.
    pub fn refit(&mut self, mesh: &TriangleMesh) -> Result<(), GeometryError> {
        if mesh.triangle_count() != self.order.len() {
            return Err(GeometryError::TopologyChanged {
                expected: self.order.len(),
                actual: mesh.triangle_count(),
            });
        }
        let order = &self.order;
        {
            use rayon::prelude::*;
            self.nodes
                .par_iter_mut()
                .filter(|n| n.is_leaf())
                .for_each(|n| {
                    let r = n.first as usize..(n.first + n.count) as usize;
                    n.bounds = order[r]
                        .iter()
                        .fold(Aabb::empty(), |acc, &i| acc.union(&mesh.triangle_bounds(i as usize)));
                });
        }
        for i in (0..self.nodes.len()).rev() {
            if let Some((l, r)) = self.nodes[i].children() {
                self.nodes[i].bounds = self.nodes[l].bounds.union(&self.nodes[r].bounds);
            }
        }
        Ok(())
    }

    /// Returns a refit copy; `self` is untouched.
    pub fn refitted(&self, mesh: &TriangleMesh) -> Result<Self, GeometryError> {
        let mut out = self.clone();
        out.refit(mesh)?;
        Ok(out)
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn triangle_order(&self) -> &[u32] {
        &self.order
    }

    pub fn triangle_count(&self) -> usize {
        self.order.len()
    }

    pub fn root_bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Sum of node surface areas: the tree-quality metric watched by callers
    /// deciding between refit and rebuild.
    pub fn surface_area_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.bounds.surface_area()).sum()
    }

    /// Surface-area sum at build time.
    pub fn built_surface_area(&self) -> f64 {
        self.built_area
    }

    /// Closest hit among triangles whose tag equals `tag_filter` (all
    /// triangles when `None`).
    pub fn closest_hit(&self, mesh: &TriangleMesh, ray: &Ray, tag_filter: Option<u32>) -> Option<Hit> {
        let slabs = Slabs::new(ray);
        let mut best: Option<(f64, usize)> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        let admits = |n: &BvhNode| tag_filter.map_or(true, |f| n.tag_lo <= f && f <= n.tag_hi);

        if !admits(&self.nodes[0]) {
            return None;
        }
        stack.push(0);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            let t_hi = best.map_or(ray.t_max, |b| b.0);
            if slabs.entry(&node.bounds, ray.t_min, t_hi).is_none() {
                continue;
            }
            match node.children() {
                None => {
                    let r = node.first as usize..(node.first + node.count) as usize;
                    for &tri in &self.order[r] {
                        let tri = tri as usize;
                        if tag_filter.is_some_and(|f| f != mesh.tags[tri]) {
                            continue;
                        }
                        let [a, b, c] = mesh.triangle(tri);
                        if let Some(t) = intersect_ray_triangle(ray, &a, &b, &c) {
                            let better = match best {
                                None => true,
                                Some((bt, bi)) => t < bt || (t == bt && tri < bi),
                            };
                            if better {
                                best = Some((t, tri));
                            }
                        }
                    }
                }
                Some((l, r)) => {
                    let (nl, nr) = (&self.nodes[l], &self.nodes[r]);
                    let tl = admits(nl).then(|| slabs.entry(&nl.bounds, ray.t_min, t_hi)).flatten();
                    let tr = admits(nr).then(|| slabs.entry(&nr.bounds, ray.t_min, t_hi)).flatten();
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            // Near child on top of the stack.
                            if a <= b {
                                stack.push(r as u32);
                                stack.push(l as u32);
                            } else {
                                stack.push(l as u32);
                                stack.push(r as u32);
                            }
                        }
                        (Some(_), None) => stack.push(l as u32),
                        (None, Some(_)) => stack.push(r as u32),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, i)| Hit {
            t,
            triangle_index: i,
            tag: mesh.tags[i],
            point: ray.at(t),
        })
    }

    /// Checks the structural invariants against `mesh`: every triangle in
    /// exactly one leaf, every box containing its descendants, tag ranges
    /// covering their triangles. Used by tests and the validator.
    pub fn check_invariants(&self, mesh: &TriangleMesh) -> Result<(), String> {
        let n = mesh.triangle_count();
        if self.order.len() != n {
            return Err(format!("bvh has {} triangles, mesh {}", self.order.len(), n));
        }
        let mut seen = vec![0u32; n];
        for (i, node) in self.nodes.iter().enumerate() {
            match node.children() {
                Some((l, r)) => {
                    if l <= i || r >= self.nodes.len() {
                        return Err(format!("node {i}: bad child indices"));
                    }
                    for c in [l, r] {
                        let child = &self.nodes[c];
                        if !node.bounds.contains(&child.bounds) {
                            return Err(format!("node {i} does not contain child {c}"));
                        }
                        if child.tag_lo < node.tag_lo || child.tag_hi > node.tag_hi {
                            return Err(format!("node {i}: child {c} tag range escapes"));
                        }
                    }
                }
                None => {
                    for &t in &self.order[node.first as usize..(node.first + node.count) as usize] {
                        let t = t as usize;
                        seen[t] += 1;
                        if !node.bounds.contains(&mesh.triangle_bounds(t)) {
                            return Err(format!("leaf {i} does not contain triangle {t}"));
                        }
                        let tag = mesh.tags[t];
                        if tag < node.tag_lo || tag > node.tag_hi {
                            return Err(format!("leaf {i}: triangle {t} tag outside range"));
                        }
                    }
                }
            }
        }
        if let Some(t) = seen.iter().position(|&c| c != 1) {
            return Err(format!("triangle {t} appears in {} leaves", seen[t]));
        }
        Ok(())
    }
}

fn placeholder() -> BvhNode {
    BvhNode {
        bounds: Aabb::empty(),
        tag_lo: 0,
        tag_hi: 0,
        first: 0,
        count: 0,
    }
}

/// Split offset within a tag-sorted, tag-mixed range: the tag boundary
/// nearest the middle.
fn tag_split(range: &[u32], tags: &[u32]) -> usize {
    let tag_of = |i: usize| tags[range[i] as usize];
    let mid = range.len() / 2;
    let t = tag_of(mid);
    let lower = range.partition_point(|&i| tags[i as usize] < t);
    let upper = range.partition_point(|&i| tags[i as usize] <= t);
    let candidates = [lower, upper].into_iter().filter(|&s| s > 0 && s < range.len());
    candidates
        .min_by_key(|&s| s.abs_diff(mid))
        .expect("mixed-tag range has an interior tag boundary")
}

/// Precomputed slab-test data for one ray.
struct Slabs {
    origin: Vec3,
    inv: Vec3,
    parallel: [bool; 3],
}

impl Slabs {
    fn new(ray: &Ray) -> Self {
        let d = ray.direction;
        Self {
            origin: ray.origin,
            inv: Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z),
            parallel: [d.x == 0.0, d.y == 0.0, d.z == 0.0],
        }
    }

    /// Entry parameter of the ray into `b` clipped to `[t_lo, t_hi]`, if any.
    /// Boxes are padded slightly so that edge-tolerant triangle hits on a
    /// box face are never culled.
    #[inline]
    fn entry(&self, b: &Aabb, t_lo: f64, t_hi: f64) -> Option<f64> {
        let scale = b.min.abs().max().max(b.max.abs().max());
        let pad = 1e-8 * (1.0 + scale);
        let mut lo = t_lo;
        let mut hi = t_hi;
        for axis in 0..3 {
            let mn = b.min[axis] - pad;
            let mx = b.max[axis] + pad;
            let o = self.origin[axis];
            if self.parallel[axis] {
                if o < mn || o > mx {
                    return None;
                }
                continue;
            }
            let inv = self.inv[axis];
            let t0 = (mn - o) * inv;
            let t1 = (mx - o) * inv;
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            lo = lo.max(near);
            hi = hi.min(far);
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}
