//! Procedural meshes used by scene presets, benchmarks and tests.

use super::{TriangleMesh, Vec3};

/// Axis-aligned box centred at `center` with full side lengths `size`.
/// 8 vertices, 12 outward-wound triangles.
pub fn cuboid(center: Vec3, size: Vec3, tag: u32) -> TriangleMesh {
    let h = size * 0.5;
    let vertices = (0..8)
        .map(|i| {
            let sx = if i & 1 == 0 { -h.x } else { h.x };
            let sy = if i & 2 == 0 { -h.y } else { h.y };
            let sz = if i & 4 == 0 { -h.z } else { h.z };
            center + Vec3::new(sx, sy, sz)
        })
        .collect();
    let indices = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    TriangleMesh {
        vertices,
        tags: vec![tag; indices.len()],
        indices,
    }
}

/// Square in the plane `z = height`, side `2 * half_extent`, split into
/// `cells × cells` quads.
pub fn plane(height: f64, half_extent: f64, cells: usize, tag: u32) -> TriangleMesh {
    heightfield(half_extent, cells, tag, |_, _| height)
}

/// Regular grid over `[-half_extent, half_extent]²` with z from `height`.
pub fn heightfield(half_extent: f64, cells: usize, tag: u32, height: impl Fn(f64, f64) -> f64) -> TriangleMesh {
    let cells = cells.max(1);
    let step = 2.0 * half_extent / cells as f64;
    let n = cells + 1;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = -half_extent + i as f64 * step;
            let y = -half_extent + j as f64 * step;
            vertices.push(Vec3::new(x, y, height(x, y)));
        }
    }
    let mut indices = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let a = (j * n + i) as u32;
            let b = a + 1;
            let c = a + n as u32;
            let d = c + 1;
            indices.push([a, b, d]);
            indices.push([a, d, c]);
        }
    }
    TriangleMesh {
        tags: vec![tag; indices.len()],
        vertices,
        indices,
    }
}

/// Geodesic sphere from a subdivided icosahedron: `20 · 4^subdivisions`
/// triangles.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: u32, tag: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints = std::collections::HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        vertices: vertices.into_iter().map(|v| center + v * radius).collect(),
        tags: vec![tag; faces.len()],
        indices: faces,
    }
}
