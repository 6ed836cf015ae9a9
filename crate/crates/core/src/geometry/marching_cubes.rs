//! Iso-surface extraction on dense scalar grids.
//!
//! The 256-entry case table is derived once at first use instead of being typed
//! in: for every corner configuration, each cube face contributes segments that
//! run from an empty-to-solid crossing to the following solid-to-empty crossing
//! (walking the face counter-clockwise as seen from outside the cube). Chaining
//! these segments yields closed loops that are fanned into triangles. Because a
//! face's segments depend only on that face's four corners, neighbouring cells
//! always agree and the extracted surface is closed wherever it does not reach
//! the grid boundary. Triangles face away from the solid side (`value > iso`),
//! i.e. toward decreasing scalar values.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, TriMesh, Vec3};

/// Dense scalar samples on the nodes of a regular grid spanning `domain`
/// (x varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    dims: [usize; 3],
    domain: Aabb,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(dims: [usize; 3], domain: Aabb, values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidGrid(format!(
                "scalar grid must be at least 2x2x2, got {}x{}x{}",
                dims[0], dims[1], dims[2]
            )));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                dims[0] * dims[1] * dims[2],
                values.len()
            )));
        }
        Ok(ScalarGrid { dims, domain, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(dims: [usize; 3], domain: Aabb, f: impl Fn(&Point3) -> f64) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Self::new(dims, domain, Vec::new());
        }
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        let step = spacing(&domain, dims);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(&node(&domain, step, i, j, k)));
                }
            }
        }
        Self::new(dims, domain, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> Vec3 {
        spacing(&self.domain, self.dims)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Point3 {
        node(&self.domain, self.spacing(), i, j, k)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }
}

fn spacing(domain: &Aabb, dims: [usize; 3]) -> Vec3 {
    let e = domain.extent();
    Vec3::new(
        e.x / (dims[0] - 1) as f64,
        e.y / (dims[1] - 1) as f64,
        e.z / (dims[2] - 1) as f64,
    )
}

fn node(domain: &Aabb, step: Vec3, i: usize, j: usize, k: usize) -> Point3 {
    Point3::new(
        domain.min.x + i as f64 * step.x,
        domain.min.y + j as f64 * step.y,
        domain.min.z + k as f64 * step.z,
    )
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Cube faces with corners in counter-clockwise order seen from outside.
const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [3, 7, 6, 2],
    [0, 4, 7, 3],
    [1, 2, 6, 5],
];

fn edge_between(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
        .expect("face corners are cube-edge neighbours")
}

/// Triangles (as triples of cube-edge ids) for every corner configuration.
fn case_table() -> &'static [Vec<[usize; 3]>] {
    static TABLE: OnceLock<Vec<Vec<[usize; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(build_case).collect())
}

fn build_case(mask: usize) -> Vec<[usize; 3]> {
    let solid = |c: usize| mask & (1 << c) != 0;
    let mut next = [usize::MAX; 12];
    for face in &FACES {
        let mut entering = Vec::new();
        let mut crossings = Vec::new();
        for k in 0..4 {
            let (a, b) = (face[k], face[(k + 1) % 4]);
            if solid(a) != solid(b) {
                crossings.push((edge_between(a, b), solid(b)));
            }
        }
        for (idx, &(edge, enters)) in crossings.iter().enumerate() {
            if enters {
                entering.push((idx, edge));
            }
        }
        for (idx, edge) in entering {
            // The first solid-to-empty crossing after this one closes the solid run.
            let exit = (1..crossings.len())
                .map(|o| crossings[(idx + o) % crossings.len()])
                .find(|&(_, enters)| !enters)
                .expect("crossings alternate");
            next[edge] = exit.0;
        }
    }
    let mut used = [false; 12];
    let mut tris = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || used[start] {
            continue;
        }
        let mut cycle = vec![start];
        used[start] = true;
        let mut e = next[start];
        while e != start {
            used[e] = true;
            cycle.push(e);
            e = next[e];
        }
        for i in 1..cycle.len() - 1 {
            tris.push([cycle[0], cycle[i], cycle[i + 1]]);
        }
    }
    tris
}

/// Extracts the `iso` level set of `grid`. Vertices are placed by linear
/// interpolation along cell edges and shared between neighbouring cells.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> Result<TriMesh> {
    let [nx, ny, nz] = grid.dims();
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(Error::InvalidGrid("scalar grid must be at least 2x2x2".into()));
    }
    let table = case_table();
    let mut vertices: Vec<Point3> = Vec::new();
    let mut faces = Vec::new();
    let mut edge_vertex: HashMap<usize, usize> = HashMap::new();
    let node_index = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut mask = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    if grid.value(i + off[0], j + off[1], k + off[2]) > iso {
                        mask |= 1 << c;
                    }
                }
                if mask == 0 || mask == 255 {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                for tri in &table[mask] {
                    let mut face = [0usize; 3];
                    for (slot, &e) in face.iter_mut().zip(tri) {
                        if local[e] == usize::MAX {
                            let [ca, cb] = EDGES[e];
                            let (oa, ob) = (CORNERS[ca], CORNERS[cb]);
                            let (lo, hi) = if oa <= ob { (oa, ob) } else { (ob, oa) };
                            let axis = (0..3).find(|&a| lo[a] != hi[a]).unwrap();
                            let key = node_index(i + lo[0], j + lo[1], k + lo[2]) * 3 + axis;
                            local[e] = *edge_vertex.entry(key).or_insert_with(|| {
                                let pa = grid.node(i + lo[0], j + lo[1], k + lo[2]);
                                let pb = grid.node(i + hi[0], j + hi[1], k + hi[2]);
                                let va = grid.value(i + lo[0], j + lo[1], k + lo[2]);
                                let vb = grid.value(i + hi[0], j + hi[1], k + hi[2]);
                                let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
                                vertices.push(pa + (pb - pa) * t);
                                vertices.len() - 1
                            });
                        }
                        *slot = local[e];
                    }
                    faces.push(face);
                }
            }
        }
    }
    Ok(TriMesh::from_parts(vertices, faces))
}
