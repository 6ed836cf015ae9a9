//! Harmonic coordinates on a node lattice.
//!
//! Each coordinate function solves the Laplace equation inside the cage with
//! the piecewise-linear hat function of its vertex as boundary data. The
//! discretization is the symmetric cut-cell 7-point stencil: along every axis
//! link that crosses the surface, the neighbour value is replaced by the hat
//! value at the crossing and the link length by the distance to it. That
//! stencil is exact for linear functions, so the solved weights keep linear
//! precision right up to the surface. The system is symmetric positive
//! definite and is solved with conjugate gradients preconditioned by modified
//! incomplete Cholesky, several vertices at a time.

use crate::error::{Error, Result};
use crate::geometry::predicates::{closest_point_on_mesh, ray_triangle};
use crate::geometry::{Lattice, NodeClasses, Point3, TriMesh, Vec3};

const NONE: u32 = u32::MAX;
const COLUMNS: usize = 8;
const MAX_ITERS: usize = 10_000;
const TOLERANCE: f64 = 1e-10;
const MIC_TAU: f64 = 0.97;
const MIC_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Outside the cage and beyond the stencil band; weights are zero.
    Exterior,
    /// On the surface or in the exterior band; weights are hat values at the
    /// closest surface point.
    Boundary,
    /// Strictly inside; weights come from the Laplace solve.
    Interior,
}

/// Solved harmonic coordinates on every node of a lattice.
#[derive(Debug, Clone)]
pub struct HarmonicGrid {
    pub lattice: Lattice,
    pub kinds: Vec<NodeKind>,
    pub vertex_count: usize,
    /// Node-major weights, `vertex_count` per node.
    pub weights: Vec<f64>,
    /// Largest `|u - weighted mean of stencil neighbours|` over interior nodes.
    pub residual: f64,
    pub iterations: usize,
}

impl HarmonicGrid {
    pub fn node_weights(&self, node: usize) -> &[f64] {
        &self.weights[node * self.vertex_count..(node + 1) * self.vertex_count]
    }
}

type Hat = [(u32, f64); 3];

fn hat(mesh: &TriMesh, face: usize, bary: [f64; 3]) -> Hat {
    let f = mesh.faces()[face];
    [(f[0] as u32, bary[0]), (f[1] as u32, bary[1]), (f[2] as u32, bary[2])]
}

fn closest_hat(mesh: &TriMesh, p: &Point3) -> (Hat, f64) {
    let s = closest_point_on_mesh(mesh, p).expect("cage has faces");
    (hat(mesh, s.face, s.barycentric), s.distance)
}

struct System {
    nodes: Vec<usize>,
    diag: Vec<f64>,
    /// Linked unknown neighbours in the order -x, +x, -y, +y, -z, +z.
    links: Vec<[u32; 6]>,
    /// Right-hand side contributions `(unknown, vertex, value)`.
    rhs: Vec<(u32, u32, f64)>,
}

/// Hits of the segment from `p` to `p + step` with the given faces, as
/// parameters in `[0, 1]` and their hat values.
fn segment_hits(mesh: &TriMesh, faces: &[usize], p: &Point3, step: &Vec3) -> Vec<(f64, Hat)> {
    let mut hits = Vec::new();
    for &fi in faces {
        let [a, b, c] = mesh.triangle(fi);
        if let Some((t, u, v)) = ray_triangle(p, step, &a, &b, &c) {
            if (-1e-12..=1.0 + 1e-12).contains(&t) {
                hits.push((t.clamp(0.0, 1.0), hat(mesh, fi, [1.0 - u - v, u, v])));
            }
        }
    }
    hits
}

/// Solves for harmonic coordinates of `cage` on `lattice`.
///
/// The cage must be watertight and keep at least one cell of clearance from
/// the lattice boundary.
pub fn hc_grid_solve(cage: &TriMesh, lattice: &Lattice) -> Result<HarmonicGrid> {
    if !cage.is_watertight() {
        return Err(Error::NotWatertight);
    }
    let n = lattice.n();
    let h = lattice.h();
    let local = lattice.localize(cage);
    let bb = local.bbox().expect("watertight cage is non-empty");
    let limit = (n - 2) as f64 * h;
    if bb.min.iter().any(|&c| c < h) || bb.max.iter().any(|&c| c > limit) {
        return Err(Error::InvalidGrid("cage surface touches the lattice boundary".into()));
    }
    let classes = NodeClasses::compute(lattice, &local);
    let vcount = cage.vertices().len();

    // Nodes lying on the surface are pinned to their hat values.
    let mut fixed: Vec<Option<Hat>> = vec![None; lattice.len()];
    for idx in 0..lattice.len() {
        if classes.near_surface[idx] {
            let [i, j, k] = lattice.coords(idx);
            let (hv, d) = closest_hat(&local, &lattice.node_local(i, j, k));
            if d < 1e-9 * h {
                fixed[idx] = Some(hv);
            }
        }
    }
    let unknown = |idx: usize| classes.inside[idx] && fixed[idx].is_none();

    let mut ids = vec![NONE; lattice.len()];
    let mut nodes = Vec::new();
    for idx in 0..lattice.len() {
        if unknown(idx) {
            ids[idx] = nodes.len() as u32;
            nodes.push(idx);
        }
    }
    let count = nodes.len();
    let mut sys = System {
        nodes,
        diag: vec![0.0; count],
        links: vec![[NONE; 6]; count],
        rhs: Vec::new(),
    };
    let strides = [1, n, n * n];
    let cut = |sys: &mut System, id: u32, theta: f64, value: Hat| {
        let c = 1.0 / theta.max(1e-9);
        sys.diag[id as usize] += c;
        for (v, w) in value {
            if w != 0.0 {
                sys.rhs.push((id, v, c * w));
            }
        }
    };
    for idx in 0..lattice.len() {
        let coords = lattice.coords(idx);
        for axis in 0..3 {
            // Link from `idx` to its + neighbour along `axis`.
            if coords[axis] + 1 >= n {
                continue;
            }
            let q = idx + strides[axis];
            let (pu, qu) = (unknown(idx), unknown(q));
            if !pu && !qu {
                continue;
            }
            let mut step = Vec3::zeros();
            step[axis] = h;
            let hits = if classes.near_surface[idx] && classes.near_surface[q] {
                let faces = classes.faces_near_node(lattice, coords[0], coords[1], coords[2]);
                let [i, j, k] = coords;
                segment_hits(&local, &faces, &lattice.node_local(i, j, k), &step)
            } else {
                Vec::new()
            };
            if pu && qu && hits.is_empty() {
                let (a, b) = (ids[idx], ids[q]);
                sys.diag[a as usize] += 1.0;
                sys.diag[b as usize] += 1.0;
                sys.links[a as usize][2 * axis + 1] = b;
                sys.links[b as usize][2 * axis] = a;
                continue;
            }
            let first = hits.iter().min_by(|a, b| a.0.total_cmp(&b.0)).copied();
            let last = hits.iter().max_by(|a, b| a.0.total_cmp(&b.0)).copied();
            if pu {
                let (theta, value) = match (first, fixed[q]) {
                    (Some((t, hv)), _) => (t, hv),
                    (None, Some(hv)) => (1.0, hv),
                    (None, None) => {
                        let [i, j, k] = lattice.coords(q);
                        (1.0, closest_hat(&local, &lattice.node_local(i, j, k)).0)
                    }
                };
                cut(&mut sys, ids[idx], theta, value);
            }
            if qu {
                let (theta, value) = match (last, fixed[idx]) {
                    (Some((t, hv)), _) => (1.0 - t, hv),
                    (None, Some(hv)) => (1.0, hv),
                    (None, None) => (1.0, closest_hat(&local, &lattice.node_local(coords[0], coords[1], coords[2])).0),
                };
                cut(&mut sys, ids[q], theta, value);
            }
        }
    }

    let mut weights = vec![0.0; lattice.len() * vcount];
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    let precon = mic0(&sys);
    let mut rhs_by_col: Vec<Vec<(u32, f64)>> = vec![Vec::new(); vcount];
    for &(id, v, w) in &sys.rhs {
        rhs_by_col[v as usize].push((id, w));
    }
    for start in (0..vcount).step_by(COLUMNS) {
        let cols = COLUMNS.min(vcount - start);
        let mut b = vec![0.0; count * cols];
        for c in 0..cols {
            for &(id, w) in &rhs_by_col[start + c] {
                b[id as usize * cols + c] += w;
            }
        }
        let (x, iters) = pcg(&sys, &precon, &b, cols)?;
        iterations = iterations.max(iters);
        residual = residual.max(max_normalized_residual(&sys, &x, &b, cols));
        for (id, &node) in sys.nodes.iter().enumerate() {
            weights[node * vcount + start..node * vcount + start + cols].copy_from_slice(&x[id * cols..(id + 1) * cols]);
        }
    }

    let band = lattice.dilate(&classes.inside, 2);
    let mut kinds = vec![NodeKind::Exterior; lattice.len()];
    for idx in 0..lattice.len() {
        if ids[idx] != NONE {
            kinds[idx] = NodeKind::Interior;
            continue;
        }
        let value = match fixed[idx] {
            Some(hv) => hv,
            None if band[idx] => {
                let [i, j, k] = lattice.coords(idx);
                closest_hat(&local, &lattice.node_local(i, j, k)).0
            }
            None => continue,
        };
        kinds[idx] = NodeKind::Boundary;
        for (v, w) in value {
            weights[idx * vcount + v as usize] += w;
        }
    }
    log::debug!("harmonic solve: {count} unknowns, {iterations} iterations, residual {residual:e}");
    Ok(HarmonicGrid {
        lattice: *lattice,
        kinds,
        vertex_count: vcount,
        weights,
        residual,
        iterations,
    })
}

fn mic0(sys: &System) -> Vec<f64> {
    let mut pc = vec![0.0; sys.diag.len()];
    for p in 0..sys.diag.len() {
        let mut e = sys.diag[p];
        for axis in 0..3 {
            let q = sys.links[p][2 * axis];
            if q == NONE {
                continue;
            }
            let ql = &sys.links[q as usize];
            let others = (0..3)
                .filter(|&a| a != axis && ql[2 * a + 1] != NONE)
                .count() as f64;
            let pq = pc[q as usize];
            e -= pq * pq * (1.0 + MIC_TAU * others);
        }
        if e < MIC_SIGMA * sys.diag[p] {
            e = sys.diag[p];
        }
        pc[p] = 1.0 / e.sqrt();
    }
    pc
}

fn apply_precon(sys: &System, pc: &[f64], r: &[f64], z: &mut [f64], cols: usize) {
    let count = pc.len();
    for p in 0..count {
        for c in 0..cols {
            let mut t = r[p * cols + c];
            for axis in 0..3 {
                let q = sys.links[p][2 * axis];
                if q != NONE {
                    t += pc[q as usize] * z[q as usize * cols + c];
                }
            }
            z[p * cols + c] = t * pc[p];
        }
    }
    for p in (0..count).rev() {
        for c in 0..cols {
            let mut t = z[p * cols + c];
            for axis in 0..3 {
                let s = sys.links[p][2 * axis + 1];
                if s != NONE {
                    t += pc[p] * z[s as usize * cols + c];
                }
            }
            z[p * cols + c] = t * pc[p];
        }
    }
}

fn matvec(sys: &System, x: &[f64], out: &mut [f64], cols: usize) {
    for p in 0..sys.diag.len() {
        for c in 0..cols {
            let mut s = sys.diag[p] * x[p * cols + c];
            for &q in &sys.links[p] {
                if q != NONE {
                    s -= x[q as usize * cols + c];
                }
            }
            out[p * cols + c] = s;
        }
    }
}

fn max_normalized_residual(sys: &System, x: &[f64], b: &[f64], cols: usize) -> f64 {
    let mut ax = vec![0.0; x.len()];
    matvec(sys, x, &mut ax, cols);
    let mut worst: f64 = 0.0;
    for p in 0..sys.diag.len() {
        for c in 0..cols {
            worst = worst.max((ax[p * cols + c] - b[p * cols + c]).abs() / sys.diag[p]);
        }
    }
    worst
}

fn column_dot(a: &[f64], b: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (ca, cb) in a.chunks_exact(cols).zip(b.chunks_exact(cols)) {
        for c in 0..cols {
            out[c] += ca[c] * cb[c];
        }
    }
    out
}

fn pcg(sys: &System, pc: &[f64], b: &[f64], cols: usize) -> Result<(Vec<f64>, usize)> {
    let len = b.len();
    let mut x = vec![0.0; len];
    let mut r = b.to_vec();
    let mut z = vec![0.0; len];
    let mut ap = vec![0.0; len];
    apply_precon(sys, pc, &r, &mut z, cols);
    let mut p = z.clone();
    let mut rz = column_dot(&r, &z, cols);
    let mut done = vec![false; cols];
    let mut worst = f64::INFINITY;
    for iter in 0..MAX_ITERS {
        worst = 0.0;
        for c in 0..cols {
            let mut m: f64 = 0.0;
            for i in 0..sys.diag.len() {
                m = m.max(r[i * cols + c].abs() / sys.diag[i]);
            }
            done[c] = done[c] || m <= TOLERANCE;
            if !done[c] {
                worst = worst.max(m);
            }
        }
        if done.iter().all(|&d| d) {
            return Ok((x, iter));
        }
        matvec(sys, &p, &mut ap, cols);
        let pap = column_dot(&p, &ap, cols);
        let alpha: Vec<f64> = (0..cols)
            .map(|c| if done[c] || pap[c] <= 0.0 { 0.0 } else { rz[c] / pap[c] })
            .collect();
        for i in 0..len {
            let c = i % cols;
            x[i] += alpha[c] * p[i];
            r[i] -= alpha[c] * ap[i];
        }
        apply_precon(sys, pc, &r, &mut z, cols);
        let rz_new = column_dot(&r, &z, cols);
        for i in 0..len {
            let c = i % cols;
            let beta = if rz[c] > 0.0 { rz_new[c] / rz[c] } else { 0.0 };
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Err(Error::NonConvergence {
        sweeps: MAX_ITERS,
        max_change: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn cube() -> TriMesh {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap()
    }

    #[test]
    fn cube_center_and_partition() {
        let c = cube();
        let l = Lattice::around(&c.bbox().unwrap(), 25, 2).unwrap();
        let g = hc_grid_solve(&c, &l).unwrap();
        let center = l.index(12, 12, 12);
        assert_eq!(g.kinds[center], NodeKind::Interior);
        let w = g.node_weights(center);
        assert!((w[0] - w[6]).abs() < 1e-8);
        for i in [2, 3, 4, 5, 7] {
            assert!((w[i] - w[1]).abs() < 1e-8);
        }
        for idx in 0..l.len() {
            if g.kinds[idx] != NodeKind::Exterior {
                let s: f64 = g.node_weights(idx).iter().sum();
                assert!((s - 1.0).abs() < 1e-6);
            }
        }
        assert!(g.residual < 1e-8);
    }

    #[test]
    fn reproduces_linear_functions() {
        let c = TriMesh::from_cells(
            [2, 2, 1],
            Point3::new(-0.5, -0.5, -0.25),
            Vec3::repeat(0.5),
            |i, j, _| !(i == 1 && j == 1),
            None,
        )
        .unwrap();
        // Rotate slightly so faces do not line up with the lattice.
        let rot = nalgebra::Rotation3::from_euler_angles(0.1, 0.2, 0.3);
        let c = c.transformed(|p| rot * p);
        let l = Lattice::around(&c.bbox().unwrap(), 24, 2).unwrap();
        let g = hc_grid_solve(&c, &l).unwrap();
        for idx in 0..l.len() {
            if g.kinds[idx] == NodeKind::Interior {
                let [i, j, k] = l.coords(idx);
                let x = l.node_world(i, j, k);
                let r: Vec3 = c.vertices().iter().zip(g.node_weights(idx)).map(|(v, w)| v.coords * *w).sum();
                assert!((r - x.coords).norm() < 1e-7, "{x:?}");
            }
        }
    }

    #[test]
    fn cage_touching_the_boundary_is_rejected() {
        let c = cube();
        let l = Lattice::around(&c.bbox().unwrap(), 16, 0).unwrap();
        assert!(matches!(hc_grid_solve(&c, &l), Err(Error::InvalidGrid(_))));
    }
}
