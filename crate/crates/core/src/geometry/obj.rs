//! Minimal Wavefront OBJ reader: `v` and `f` records only.
//!
//! Polygonal faces are fan-triangulated around their first vertex. Face
//! entries may carry texture/normal references (`f 1/2/3 ...`); only the
//! position index is used. Negative (relative) indices are resolved against
//! the vertices read so far. Every other record type is ignored.

use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use super::{TriangleMesh, Vec3};

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub fn load_obj(path: impl AsRef<Path>, tag: u32) -> Result<TriangleMesh, ObjError> {
    let file = std::fs::File::open(path)?;
    parse_obj(std::io::BufReader::new(file), tag)
}

pub fn parse_obj(reader: impl BufRead, tag: u32) -> Result<TriangleMesh, ObjError> {
    let mut vertices = Vec::new();
    let mut indices = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let err = |msg: String| ObjError::Parse { line: line_no, msg };
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in xyz.iter_mut() {
                    let f = fields.next().ok_or_else(|| err("vertex needs 3 coordinates".into()))?;
                    *c = f.parse().map_err(|e| err(format!("bad coordinate {f:?}: {e}")))?;
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for f in fields {
                    let pos = f.split('/').next().unwrap_or_default();
                    let i: i64 = pos.parse().map_err(|e| err(format!("bad face index {f:?}: {e}")))?;
                    let resolved = match i {
                        0 => return Err(err("face index 0 is invalid".into())),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(err(format!("face index {i} out of range")));
                    }
                    face.push(resolved as u32);
                }
                if face.len() < 3 {
                    return Err(err("face needs at least 3 vertices".into()));
                }
                for k in 1..face.len() - 1 {
                    indices.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let tags = vec![tag; indices.len()];
    Ok(TriangleMesh {
        vertices,
        indices,
        tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_is_fanned_into_two_triangles() {
        let src = "# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let mesh = parse_obj(src.as_bytes(), 3).unwrap();
        assert_eq!(mesh.indices, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(mesh.tags, vec![3, 3]);
    }

    #[test]
    fn relative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let mesh = parse_obj(src.as_bytes(), 0).unwrap();
        assert_eq!(mesh.indices, vec![[0, 1, 2]]);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let src = "v 0 0 0\nf 1 2 3\n";
        assert!(matches!(
            parse_obj(src.as_bytes(), 0),
            Err(ObjError::Parse { line: 2, .. })
        ));
    }
}
