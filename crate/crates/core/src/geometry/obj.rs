//! Wavefront OBJ reading and writing (`v` and `f` records, triangles only).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point3, TriMesh};
use crate::io_util::write_atomic;

/// Parses OBJ text. Closed meshes with inward winding are flipped to face outward.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| Error::ObjParse {
                        line,
                        msg: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| Error::ObjParse {
                        line,
                        msg: format!("invalid coordinate {tok:?}"),
                    })?;
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(Error::NonTriangularFace { line });
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    let first = r.split('/').next().unwrap_or("");
                    let idx: i64 = first.parse().map_err(|_| Error::ObjParse {
                        line,
                        msg: format!("invalid face index {r:?}"),
                    })?;
                    let count = vertices.len() as i64;
                    let resolved = if idx > 0 { idx - 1 } else { count + idx };
                    if idx == 0 || resolved < 0 || resolved >= count {
                        return Err(Error::IndexOutOfRange {
                            line,
                            index: idx,
                            count: vertices.len(),
                        });
                    }
                    *slot = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Ok(TriMesh::new(vertices, faces)?.oriented_outward())
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
    parse_obj(&text).map_err(|e| e.at(path))
}

/// OBJ text with shortest round-trip float formatting and 1-based indices.
pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices().len() * 32 + mesh.faces().len() * 16);
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), to_obj_string(mesh).as_bytes())
}
