use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::coords::{eval_green, eval_mvc, face_normals, hc_grid_solve, CageWeights, CoordinateKind, NodeKind};
use crate::error::{Error, Result};
use crate::geometry::predicates::{closest_point_on_mesh, closest_point_on_triangle, distance_to_mesh};
use crate::geometry::{winding_number, CagePair, Lattice, NodeClasses, Point3, TriMesh, Vec3};

/// Smallest accepted grid resolution.
pub const MIN_GRID_RES: usize = 16;
/// Empty cells kept between the deformed cage and the grid boundary.
pub const GRID_MARGIN: usize = 2;

/// Cage weights precomputed on an `n³` lattice around the deformed cage.
#[derive(Debug)]
pub struct CoordGrid {
    pub(crate) lattice: Lattice,
    pub(crate) kind: CoordinateKind,
    pub(crate) vertex_count: usize,
    pub(crate) face_count: usize,
    pub(crate) valid: Vec<bool>,
    /// Node-major, `stride()` values per node: vertex weights then face weights.
    pub(crate) weights: Vec<f32>,
    pub(crate) evaluations: AtomicU64,
}

impl Clone for CoordGrid {
    fn clone(&self) -> Self {
        CoordGrid {
            lattice: self.lattice,
            kind: self.kind,
            vertex_count: self.vertex_count,
            face_count: self.face_count,
            valid: self.valid.clone(),
            weights: self.weights.clone(),
            evaluations: AtomicU64::new(self.evaluations()),
        }
    }
}

impl CoordGrid {
    pub fn kind(&self) -> CoordinateKind {
        self.kind
    }

    pub fn res(&self) -> usize {
        self.lattice.n()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn domain(&self) -> crate::geometry::Aabb {
        self.lattice.domain()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.face_count
    }

    pub fn stride(&self) -> usize {
        self.vertex_count + self.face_count
    }

    pub fn is_valid(&self, node: usize) -> bool {
        self.valid[node]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn node_weights(&self, node: usize) -> &[f32] {
        let s = self.stride();
        &self.weights[node * s..(node + 1) * s]
    }

    /// Closed-form weight evaluations spent filling this grid.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// Trilinear stencil of `x`: node indices and weights, or `None` when `x`
    /// is outside the grid or any stencil node is invalid.
    pub fn stencil(&self, x: &Point3) -> Option<[(usize, f64); 8]> {
        let (cell, frac) = self.lattice.locate(x)?;
        let mut out = [(0usize, 0.0); 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let (di, dj, dk) = (c & 1, (c >> 1) & 1, c >> 2);
            let node = self.lattice.index(cell[0] + di, cell[1] + dj, cell[2] + dk);
            let w = if di == 1 { frac[0] } else { 1.0 - frac[0] }
                * if dj == 1 { frac[1] } else { 1.0 - frac[1] }
                * if dk == 1 { frac[2] } else { 1.0 - frac[2] };
            if w > 0.0 && !self.valid[node] {
                return None;
            }
            *slot = (node, w);
        }
        Some(out)
    }
}

/// Trilinearly interpolated weights at `x`; `None` signals that the caller
/// must fall back (outside the grid or an invalid stencil node).
pub fn sample_weights(grid: &CoordGrid, x: &Point3) -> Option<CageWeights> {
    let stencil = grid.stencil(x)?;
    let mut acc = vec![0.0; grid.stride()];
    for (node, w) in stencil {
        if w == 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(grid.node_weights(node)) {
            *a += w * *v as f64;
        }
    }
    let face = acc.split_off(grid.vertex_count);
    Some(CageWeights { vertex: acc, face })
}

/// Point strictly inside `cage` next to the surface point closest to `x`.
pub(crate) fn inward_projection(cage: &TriMesh, x: &Point3, eps: f64) -> Point3 {
    let sp = closest_point_on_mesh(cage, x).expect("cage has faces");
    // Against the normals of every face touching the surface point, so that
    // edges and corners are left too.
    let mut normal = Vec3::zeros();
    for f in 0..cage.faces().len() {
        let [a, b, c] = cage.triangle(f);
        let (q, _) = closest_point_on_triangle(&sp.point, &a, &b, &c);
        if (q - sp.point).norm() <= eps * 1e-3 {
            normal -= cage.face_normal(f);
        }
    }
    let normal = normal.try_normalize(0.0).unwrap_or(-cage.face_normal(sp.face));
    // From outside, the way back to the surface usually points inward, but
    // it can run along a face when `x` lies on the face's extended plane.
    let toward = (sp.point - x).try_normalize(eps * 1e-3);
    let mut step = eps;
    for _ in 0..8 {
        for dir in toward.iter().chain([&normal]) {
            let y = sp.point + dir * step;
            if winding_number(cage, &y) > 0.5 && distance_to_mesh(cage, &y) > 0.25 * step {
                return y;
            }
        }
        step *= 10.0;
    }
    sp.point + normal * step
}

/// Precomputes coordinates of `kind` for the deformed cage of `pair`.
pub fn precompute_coord_grid(pair: &CagePair, kind: CoordinateKind, n: usize) -> Result<CoordGrid> {
    if n < MIN_GRID_RES {
        return Err(Error::InvalidGrid(format!("grid resolution {n} < {MIN_GRID_RES}")));
    }
    let cage = pair.deformed();
    let bbox = cage.bbox().ok_or_else(|| Error::InvalidMesh("empty cage".into()))?;
    let lattice = Lattice::around(&bbox, n, GRID_MARGIN)?;
    let vertex_count = cage.vertices().len();
    let face_count = if kind.uses_faces() { cage.faces().len() } else { 0 };
    let stride = vertex_count + face_count;
    let bytes = lattice.len() as f64 * (stride * 4 + 1) as f64;
    log::info!(
        "precomputing {kind} weights on {n}^3 nodes ({:.0} MiB)",
        bytes / (1024.0 * 1024.0)
    );

    if kind == CoordinateKind::Hc {
        let hc = hc_grid_solve(cage, &lattice)?;
        let valid: Vec<bool> = hc.kinds.iter().map(|k| *k != NodeKind::Exterior).collect();
        let weights = hc.weights.iter().map(|&w| w as f32).collect();
        return Ok(CoordGrid {
            lattice,
            kind,
            vertex_count,
            face_count,
            valid,
            weights,
            evaluations: AtomicU64::new(0),
        });
    }

    let local = lattice.localize(cage);
    let classes = NodeClasses::compute(&lattice, &local);
    let valid = lattice.dilate(&classes.inside, GRID_MARGIN);
    let eps = crate::coords::SURFACE_EPS * bbox.diagonal();
    let normals = face_normals(cage);
    let mut weights = vec![0f32; lattice.len() * stride];
    let evaluations = AtomicU64::new(0);
    weights
        .par_chunks_mut(stride * lattice.n())
        .enumerate()
        .try_for_each(|(row, chunk)| -> Result<()> {
            let mut vbuf = vec![0.0; vertex_count];
            let mut fbuf = vec![0.0; cage.faces().len()];
            for (i, out) in chunk.chunks_mut(stride).enumerate() {
                let idx = row * lattice.n() + i;
                if !valid[idx] {
                    continue;
                }
                let [a, b, c] = lattice.coords(idx);
                let x = lattice.node_world(a, b, c);
                let inside = classes.inside[idx];
                let ok = match kind {
                    CoordinateKind::Mvc => {
                        eval_mvc(cage, &x, &mut vbuf) || eval_mvc(cage, &inward_projection(cage, &x, eps), &mut vbuf)
                    }
                    _ => {
                        // Green coordinates do not continue across the surface,
                        // so exterior nodes borrow the weights of the nearest
                        // interior point.
                        let y = if inside { x } else { inward_projection(cage, &x, eps) };
                        eval_green(cage, &normals, &y, &mut vbuf, &mut fbuf)
                            || eval_green(cage, &normals, &inward_projection(cage, &y, eps), &mut vbuf, &mut fbuf)
                    }
                };
                evaluations.fetch_add(1, Ordering::Relaxed);
                if !ok {
                    return Err(Error::NearSurface);
                }
                for (o, w) in out.iter_mut().zip(vbuf.iter().chain(&fbuf[..face_count])) {
                    *o = *w as f32;
                }
            }
            Ok(())
        })?;
    Ok(CoordGrid {
        lattice,
        kind,
        vertex_count,
        face_count,
        valid,
        weights,
        evaluations,
    })
}

/// Positions every valid node of `grid` maps to under `apply`.
pub(crate) fn mapped_nodes(grid: &CoordGrid, apply: impl Fn(&[f64], &[f64]) -> Point3 + Sync) -> Vec<Point3> {
    let stride = grid.stride();
    let vc = grid.vertex_count;
    (0..grid.lattice.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; stride],
            |buf, idx| {
                if !grid.valid[idx] {
                    return Point3::from(Vec3::repeat(f64::NAN));
                }
                for (b, w) in buf.iter_mut().zip(grid.node_weights(idx)) {
                    *b = *w as f64;
                }
                apply(&buf[..vc], &buf[vc..])
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn cube_pair() -> CagePair {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        CagePair::identity(TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap()).unwrap()
    }

    #[test]
    fn node_weights_are_exact_at_nodes() {
        let g = precompute_coord_grid(&cube_pair(), CoordinateKind::Mvc, 20).unwrap();
        let node = g.lattice.index(7, 9, 11);
        let x = g.lattice.node_world(7, 9, 11);
        let w = sample_weights(&g, &x).unwrap();
        for (a, b) in w.vertex.iter().zip(g.node_weights(node)) {
            assert!((a - *b as f64).abs() < 1e-7);
        }
        assert_eq!(g.evaluations() as usize, g.valid_count());
    }

    #[test]
    fn rejects_small_resolution() {
        assert!(matches!(
            precompute_coord_grid(&cube_pair(), CoordinateKind::Mvc, 8),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn outside_points_have_no_stencil() {
        let g = precompute_coord_grid(&cube_pair(), CoordinateKind::Gc, 16).unwrap();
        assert!(sample_weights(&g, &Point3::new(3.0, 0.0, 0.0)).is_none());
        assert_eq!(sample_weights(&g, &Point3::origin()).unwrap().face.len(), 12);
    }
}
