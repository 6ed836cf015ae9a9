//! Cubic node lattices and the rasterization of a closed cage onto them.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::predicates::triangle_box_overlap;
use crate::geometry::winding::winding_number;
use crate::geometry::{Aabb, Point3, TriMesh, Vec3};

/// `n × n × n` nodes with uniform spacing `h`.
///
/// Geometry is processed in lattice-local coordinates `(x - anchor) + offset`,
/// in which node `(i, j, k)` sits at `(i h, j h, k h)`. Computing the local frame
/// from box extents keeps results exactly invariant under (exactly representable)
/// translations of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    n: usize,
    anchor: Point3,
    offset: Vec3,
    h: f64,
}

impl Lattice {
    /// Cubic lattice around `bbox` with at least `margin` empty cells on every side.
    pub fn around(bbox: &Aabb, n: usize, margin: usize) -> Result<Self> {
        if n < 2 * margin + 2 {
            return Err(Error::InvalidGrid(format!(
                "resolution {n} is too small for a {margin}-cell margin"
            )));
        }
        let ext = bbox.extent();
        let side = ext.max();
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidGrid("degenerate bounding box".into()));
        }
        let h = side / (n - 1 - 2 * margin) as f64;
        let total = (n - 1) as f64 * h;
        let offset = (Vec3::repeat(total) - ext) * 0.5;
        Ok(Lattice {
            n,
            anchor: bbox.min,
            offset,
            h,
        })
    }

    /// Lattice whose corner nodes coincide with the corners of `domain`.
    pub fn from_domain(domain: &Aabb, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("resolution {n} < 2")));
        }
        let h = domain.extent().x / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::InvalidGrid("degenerate domain".into()));
        }
        Ok(Lattice {
            n,
            anchor: domain.min,
            offset: Vec3::zeros(),
            h,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx % self.n, (idx / self.n) % self.n, idx / (self.n * self.n)]
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.n - 1;
        i + m * (j + m * k)
    }

    pub fn node_local(&self, i: usize, j: usize, k: usize) -> Point3 {
        Point3::new(i as f64 * self.h, j as f64 * self.h, k as f64 * self.h)
    }

    pub fn node_world(&self, i: usize, j: usize, k: usize) -> Point3 {
        self.to_world(&self.node_local(i, j, k))
    }

    pub fn to_local(&self, x: &Point3) -> Point3 {
        Point3::from((x - self.anchor) + self.offset)
    }

    pub fn to_world(&self, local: &Point3) -> Point3 {
        self.anchor + (local.coords - self.offset)
    }

    /// World-space box spanned by the nodes.
    pub fn domain(&self) -> Aabb {
        let min = self.to_world(&Point3::origin());
        let max = self.to_world(&Point3::from(Vec3::repeat((self.n - 1) as f64 * self.h)));
        Aabb { min, max }
    }

    /// Mesh with vertices mapped into lattice-local coordinates.
    pub fn localize(&self, mesh: &TriMesh) -> TriMesh {
        mesh.transformed(|p| self.to_local(p))
    }

    /// Cell containing world point `x` and the fractional position inside it.
    pub fn locate(&self, x: &Point3) -> Option<([usize; 3], [f64; 3])> {
        self.locate_local(&self.to_local(x))
    }

    pub fn locate_local(&self, local: &Point3) -> Option<([usize; 3], [f64; 3])> {
        let last = (self.n - 1) as f64;
        let mut cell = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let g = local[a] / self.h;
            if !(g >= 0.0 && g <= last) {
                return None;
            }
            let c = (g.floor() as usize).min(self.n - 2);
            cell[a] = c;
            frac[a] = g - c as f64;
        }
        Some((cell, frac))
    }

    /// Chebyshev dilation of a node mask by `radius` nodes.
    pub fn dilate(&self, mask: &[bool], radius: usize) -> Vec<bool> {
        let n = self.n;
        let mut cur = mask.to_vec();
        for axis in 0..3 {
            let stride = [1, n, n * n][axis];
            let mut next = vec![false; cur.len()];
            for idx in 0..cur.len() {
                if !cur[idx] {
                    continue;
                }
                let c = self.coords(idx)[axis];
                let lo = c.saturating_sub(radius);
                let hi = (c + radius).min(n - 1);
                let base = idx - c * stride;
                for t in lo..=hi {
                    next[base + t * stride] = true;
                }
            }
            cur = next;
        }
        cur
    }
}

/// Per-node and per-cell classification of a lattice against a closed mesh.
#[derive(Debug, Clone)]
pub struct NodeClasses {
    /// Cells overlapped by at least one triangle.
    pub surface_cells: Vec<bool>,
    /// Faces overlapping each surface cell, keyed by cell index.
    pub cell_faces: HashMap<usize, Vec<usize>>,
    /// Nodes that are a corner of a surface cell.
    pub near_surface: Vec<bool>,
    /// Exact inside flag of every node.
    pub inside: Vec<bool>,
}

impl NodeClasses {
    /// Classifies `lattice` against `local_mesh` (already in lattice-local coordinates).
    ///
    /// Near-surface nodes get an exact winding-number test; every other node
    /// inherits the answer of its connected component, which cannot cross the
    /// surface without passing through a surface cell.
    pub fn compute(lattice: &Lattice, local_mesh: &TriMesh) -> Self {
        let n = lattice.n();
        let m = n - 1;
        let h = lattice.h();
        let mut surface_cells = vec![false; m * m * m];
        let mut cell_faces: HashMap<usize, Vec<usize>> = HashMap::new();
        let half = Vec3::repeat(0.5 * h * (1.0 + 1e-9));
        for fi in 0..local_mesh.faces().len() {
            let tri = local_mesh.triangle(fi);
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            let mut outside = false;
            for a in 0..3 {
                let tmin = tri[0][a].min(tri[1][a]).min(tri[2][a]) / h;
                let tmax = tri[0][a].max(tri[1][a]).max(tri[2][a]) / h;
                if tmax < 0.0 || tmin > m as f64 {
                    outside = true;
                    break;
                }
                lo[a] = ((tmin - 1e-6).floor().max(0.0) as usize).min(m - 1);
                hi[a] = ((tmax + 1e-6).floor().max(0.0) as usize).min(m - 1);
            }
            if outside {
                continue;
            }
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let ci = lattice.cell_index(i, j, k);
                        let center = Point3::new(
                            (i as f64 + 0.5) * h,
                            (j as f64 + 0.5) * h,
                            (k as f64 + 0.5) * h,
                        );
                        if triangle_box_overlap(&center, &half, &tri) {
                            surface_cells[ci] = true;
                            cell_faces.entry(ci).or_default().push(fi);
                        }
                    }
                }
            }
        }

        let mut near_surface = vec![false; lattice.len()];
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    if surface_cells[lattice.cell_index(i, j, k)] {
                        for c in 0..8 {
                            near_surface[lattice.index(i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2))] = true;
                        }
                    }
                }
            }
        }

        let mut inside = vec![false; lattice.len()];
        for idx in 0..lattice.len() {
            if near_surface[idx] {
                let [i, j, k] = lattice.coords(idx);
                inside[idx] = winding_number(local_mesh, &lattice.node_local(i, j, k)) > 0.5;
            }
        }

        let mut visited = near_surface.clone();
        let mut stack = Vec::new();
        let mut component = Vec::new();
        for seed in 0..lattice.len() {
            if visited[seed] {
                continue;
            }
            visited[seed] = true;
            stack.push(seed);
            component.clear();
            while let Some(idx) = stack.pop() {
                component.push(idx);
                let [i, j, k] = lattice.coords(idx);
                let mut visit = |ni: usize, nj: usize, nk: usize| {
                    let nidx = lattice.index(ni, nj, nk);
                    if !visited[nidx] {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                };
                if i > 0 {
                    visit(i - 1, j, k);
                }
                if i + 1 < n {
                    visit(i + 1, j, k);
                }
                if j > 0 {
                    visit(i, j - 1, k);
                }
                if j + 1 < n {
                    visit(i, j + 1, k);
                }
                if k > 0 {
                    visit(i, j, k - 1);
                }
                if k + 1 < n {
                    visit(i, j, k + 1);
                }
            }
            let [i, j, k] = lattice.coords(seed);
            let is_in = winding_number(local_mesh, &lattice.node_local(i, j, k)) > 0.5;
            if is_in {
                for &idx in &component {
                    inside[idx] = true;
                }
            }
        }

        NodeClasses {
            surface_cells,
            cell_faces,
            near_surface,
            inside,
        }
    }

    /// Faces overlapping any cell incident to node `(i, j, k)`, deduplicated.
    pub fn faces_near_node(&self, lattice: &Lattice, i: usize, j: usize, k: usize) -> Vec<usize> {
        let m = lattice.n() - 1;
        let mut out = Vec::new();
        for c in 0..8 {
            let (di, dj, dk) = (c & 1, (c >> 1) & 1, c >> 2);
            if i < di || j < dj || k < dk || i - di >= m || j - dj >= m || k - dk >= m {
                continue;
            }
            if let Some(fs) = self.cell_faces.get(&lattice.cell_index(i - di, j - dj, k - dk)) {
                out.extend_from_slice(fs);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}
