use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if (0..3).any(|i| !(min[i] <= max[i])) {
            return Err(Error::InvalidGrid(format!(
                "aabb min {:?} exceeds max {:?}",
                min.coords.as_slice(),
                max.coords.as_slice()
            )));
        }
        Ok(Aabb { min, max })
    }

    /// Smallest box containing all `points`; `None` for an empty slice.
    pub fn from_points(points: &[Point3]) -> Option<Self> {
        let first = points.first()?;
        let mut min = *first;
        let mut max = *first;
        for p in &points[1..] {
            min = min.inf(p);
            max = max.sup(p);
        }
        Some(Aabb { min, max })
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    /// Parametric entry/exit distances of the ray `origin + t * dir`, clipped to `t >= 0`.
    pub fn ray_interval(&self, origin: &Point3, dir: &Vec3) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            let inv = 1.0 / dir[i];
            let mut a = (self.min[i] - origin[i]) * inv;
            let mut b = (self.max[i] - origin[i]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            // NaN from 0 * inf means the ray is parallel and inside the slab.
            if !a.is_nan() {
                t0 = t0.max(a);
            }
            if !b.is_nan() {
                t1 = t1.min(b);
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }

    pub fn corners(&self) -> [Point3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(b.x, b.y, b.z),
            Point3::new(a.x, b.y, b.z),
        ]
    }
}

/// Triangle mesh with counter-clockwise (outward) face winding.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    watertight: OnceLock<bool>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl TriMesh {
    /// Builds a mesh, rejecting out-of-range or repeated face indices.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {bad} but mesh has {} vertices",
                    vertices.len()
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        Ok(Self::from_parts(vertices, faces))
    }

    pub(crate) fn from_parts(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            faces,
            watertight: OnceLock::new(),
        }
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new())
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized normal (twice the area) of face `face`.
    pub fn face_area_normal(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_normal(&self, face: usize) -> Vec3 {
        self.face_area_normal(face).normalize()
    }

    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Signed enclosed volume; positive for outward-facing winding.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (p, q, r) = (self.vertices[a].coords, self.vertices[b].coords, self.vertices[c].coords);
                p.dot(&q.cross(&r))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Returns the mesh with every face winding reversed.
    pub fn flipped(&self) -> TriMesh {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        Self::from_parts(self.vertices.clone(), faces)
    }

    /// Flips a closed mesh whose signed volume is negative so that normals face outward.
    pub fn oriented_outward(self) -> TriMesh {
        if self.is_watertight() && self.signed_volume() < 0.0 {
            self.flipped()
        } else {
            self
        }
    }

    /// Same faces, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3>) -> Result<TriMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::CageMismatch(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Self::from_parts(vertices, self.faces.clone()))
    }

    pub fn transformed(&self, f: impl Fn(&Point3) -> Point3) -> TriMesh {
        Self::from_parts(self.vertices.iter().map(f).collect(), self.faces.clone())
    }

    /// True iff every edge has exactly two incident faces with opposite orientation
    /// and all faces form a single edge-connected component.
    pub fn is_watertight(&self) -> bool {
        *self.watertight.get_or_init(|| check_watertight(&self.faces))
    }

    /// Closed box surface with `divisions[axis]` segments along each axis.
    pub fn subdivided_box(aabb: &Aabb, divisions: [usize; 3]) -> Result<TriMesh> {
        if divisions.iter().any(|&d| d == 0) {
            return Err(Error::InvalidMesh("box divisions must be positive".into()));
        }
        let dims = divisions;
        TriMesh::from_cells([1, 1, 1], aabb.min, aabb.extent(), |_, _, _| true, Some(dims))
    }

    /// Boundary surface of the occupied cells of a `dims` lattice of boxes of size
    /// `cell` anchored at `origin`. Each cell face is split into `split` segments per
    /// axis (default 1). The solid must be a single manifold component.
    pub fn from_cells(
        dims: [usize; 3],
        origin: Point3,
        cell: Vec3,
        occupied: impl Fn(usize, usize, usize) -> bool,
        split: Option<[usize; 3]>,
    ) -> Result<TriMesh> {
        let split = split.unwrap_or([1, 1, 1]);
        let occ = |i: i64, j: i64, k: i64| -> bool {
            i >= 0
                && j >= 0
                && k >= 0
                && (i as usize) < dims[0]
                && (j as usize) < dims[1]
                && (k as usize) < dims[2]
                && occupied(i as usize, j as usize, k as usize)
        };
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        let step = Vec3::new(
            cell.x / split[0] as f64,
            cell.y / split[1] as f64,
            cell.z / split[2] as f64,
        );
        let mut vid = |g: [i64; 3], vertices: &mut Vec<Point3>| -> usize {
            *index.entry(g).or_insert_with(|| {
                vertices.push(Point3::new(
                    origin.x + g[0] as f64 * step.x,
                    origin.y + g[1] as f64 * step.y,
                    origin.z + g[2] as f64 * step.z,
                ));
                vertices.len() - 1
            })
        };
        for k in 0..dims[2] as i64 {
            for j in 0..dims[1] as i64 {
                for i in 0..dims[0] as i64 {
                    if !occ(i, j, k) {
                        continue;
                    }
                    for axis in 0..3 {
                        for side in [-1i64, 1] {
                            let mut n = [i, j, k];
                            n[axis] += side;
                            if occ(n[0], n[1], n[2]) {
                                continue;
                            }
                            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                            let mut base = [
                                i * split[0] as i64,
                                j * split[1] as i64,
                                k * split[2] as i64,
                            ];
                            if side > 0 {
                                base[axis] += split[axis] as i64;
                            }
                            for a in 0..split[u] as i64 {
                                for b in 0..split[v] as i64 {
                                    let corner = |da: i64, db: i64| {
                                        let mut g = base;
                                        g[u] += a + da;
                                        g[v] += b + db;
                                        g
                                    };
                                    let q = [
                                        vid(corner(0, 0), &mut vertices),
                                        vid(corner(1, 0), &mut vertices),
                                        vid(corner(1, 1), &mut vertices),
                                        vid(corner(0, 1), &mut vertices),
                                    ];
                                    // (u, v, axis) is right-handed, so q winds around +axis.
                                    if side > 0 {
                                        faces.push([q[0], q[1], q[2]]);
                                        faces.push([q[0], q[2], q[3]]);
                                    } else {
                                        faces.push([q[0], q[2], q[1]]);
                                        faces.push([q[0], q[3], q[2]]);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("no occupied cells".into()));
        }
        let mesh = TriMesh::new(vertices, faces)?;
        if !mesh.is_watertight() {
            return Err(Error::NotWatertight);
        }
        Ok(mesh)
    }
}

fn check_watertight(faces: &[[usize; 3]]) -> bool {
    if faces.is_empty() {
        return false;
    }
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            if directed.insert((a, b), fi).is_some() {
                return false;
            }
        }
    }
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (&(a, b), &fi) in &directed {
        let Some(&fj) = directed.get(&(b, a)) else {
            return false;
        };
        let (ri, rj) = (find(&mut parent, fi), find(&mut parent, fj));
        if ri != rj {
            parent[ri] = rj;
        }
    }
    let root = find(&mut parent, 0);
    (0..faces.len()).all(|i| find(&mut parent, i) == root)
}

/// A deformed cage together with the canonical vertex positions it was edited from.
///
/// Weights are always computed against `deformed`; applying them to the canonical
/// vertices maps points from deformed space back to canonical space.
#[derive(Debug, Clone, PartialEq)]
pub struct CagePair {
    deformed: TriMesh,
    canonical: TriMesh,
}

impl CagePair {
    pub fn new(canonical: TriMesh, deformed: TriMesh) -> Result<Self> {
        if canonical.vertices().len() != deformed.vertices().len() {
            return Err(Error::CageMismatch(format!(
                "canonical cage has {} vertices, deformed cage has {}",
                canonical.vertices().len(),
                deformed.vertices().len()
            )));
        }
        if canonical.faces() != deformed.faces() {
            return Err(Error::CageMismatch("cages do not share the same face list".into()));
        }
        if !canonical.is_watertight() || !deformed.is_watertight() {
            return Err(Error::NotWatertight);
        }
        Ok(CagePair { deformed, canonical })
    }

    /// Pair whose deformed cage equals the canonical one.
    pub fn identity(cage: TriMesh) -> Result<Self> {
        Self::new(cage.clone(), cage)
    }

    pub fn deformed(&self) -> &TriMesh {
        &self.deformed
    }

    pub fn canonical(&self) -> &TriMesh {
        &self.canonical
    }

    pub fn canonical_vertices(&self) -> &[Point3] {
        self.canonical.vertices()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        self.deformed.faces()
    }

    /// Bounding box of both cages.
    pub fn bbox(&self) -> Aabb {
        let a = self.deformed.bbox().expect("cage is non-empty");
        let b = self.canonical.bbox().expect("cage is non-empty");
        a.union(&b)
    }

    /// Same canonical cage, deformed cage replaced by `deformed`.
    pub fn with_deformed(&self, deformed: TriMesh) -> Result<Self> {
        Self::new(self.canonical.clone(), deformed)
    }
}

/// Linear blend `(1 - t) * canonical + t * deformed` of the cage vertices.
pub fn interpolate_cage(pair: &CagePair, t: f64) -> Result<TriMesh> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInterpolation(t));
    }
    let vertices = pair
        .canonical_vertices()
        .iter()
        .zip(pair.deformed().vertices())
        .map(|(c, d)| Point3::from(c.coords * (1.0 - t) + d.coords * t))
        .collect();
    pair.deformed().with_vertices(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> TriMesh {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap()
    }

    #[test]
    fn cube_is_watertight_and_outward() {
        let m = unit_cube();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.faces().len(), 12);
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_cube_is_not_watertight() {
        let m = unit_cube();
        let mut faces = m.faces().to_vec();
        faces.truncate(10);
        assert!(!TriMesh::new(m.vertices().to_vec(), faces).unwrap().is_watertight());
    }

    #[test]
    fn disjoint_cubes_are_not_watertight() {
        let m = unit_cube();
        let mut vertices = m.vertices().to_vec();
        vertices.extend(m.vertices().iter().map(|p| p + Vec3::new(3.0, 0.0, 0.0)));
        let mut faces = m.faces().to_vec();
        faces.extend(m.faces().iter().map(|f| [f[0] + 8, f[1] + 8, f[2] + 8]));
        assert!(!TriMesh::new(vertices, faces).unwrap().is_watertight());
    }

    #[test]
    fn flipped_mesh_is_reoriented() {
        let m = unit_cube().flipped();
        assert!(m.signed_volume() < 0.0);
        assert!(m.oriented_outward().signed_volume() > 0.0);
    }

    #[test]
    fn subdivided_box_counts() {
        let b = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(3.0, 3.0, 2.0)).unwrap();
        let m = TriMesh::subdivided_box(&b, [3, 3, 2]).unwrap();
        assert_eq!(m.vertices().len(), 44);
        assert_eq!(m.faces().len(), 84);
        assert!((m.signed_volume() - 18.0).abs() < 1e-9);
    }

    #[test]
    fn l_shape_from_cells() {
        let m = TriMesh::from_cells(
            [2, 2, 1],
            Point3::origin(),
            Vec3::repeat(1.0),
            |i, j, _| !(i == 1 && j == 1),
            None,
        )
        .unwrap();
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let c = unit_cube();
        let d = c.transformed(|p| p + Vec3::new(1.0, 0.0, 0.0));
        let pair = CagePair::new(c.clone(), d.clone()).unwrap();
        assert_eq!(interpolate_cage(&pair, 0.0).unwrap().vertices(), c.vertices());
        assert_eq!(interpolate_cage(&pair, 1.0).unwrap().vertices(), d.vertices());
        let mid = interpolate_cage(&pair, 0.5).unwrap();
        for (m, p) in mid.vertices().iter().zip(c.vertices()) {
            assert!((m - (p + Vec3::new(0.5, 0.0, 0.0))).norm() < 1e-15);
        }
        assert!(matches!(interpolate_cage(&pair, 1.5), Err(Error::InvalidInterpolation(_))));
        assert!(matches!(interpolate_cage(&pair, -0.1), Err(Error::InvalidInterpolation(_))));
    }

    #[test]
    fn pair_rejects_topology_mismatch() {
        let c = unit_cube();
        let d = c.flipped();
        assert!(matches!(CagePair::new(c, d), Err(Error::CageMismatch(_))));
    }

    #[test]
    fn ray_interval_hits_box() {
        let b = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap();
        let (t0, t1) = b
            .ray_interval(&Point3::new(0.0, 0.0, 5.0), &Vec3::new(0.0, 0.0, -1.0))
            .unwrap();
        assert!((t0 - 4.0).abs() < 1e-12 && (t1 - 6.0).abs() < 1e-12);
        assert!(b
            .ray_interval(&Point3::new(0.0, 3.0, 5.0), &Vec3::new(0.0, 0.0, -1.0))
            .is_none());
    }
}
