//! Low-level triangle queries shared by the membership, rasterization and
//! coordinate code.

use crate::geometry::{Point3, TriMesh, Vec3};

/// Closest point on triangle `abc` to `p`, returned with its barycentric weights.
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> (Point3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Closest point on the mesh surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub point: Point3,
    pub face: usize,
    pub barycentric: [f64; 3],
    pub distance: f64,
}

/// Brute-force closest surface point; cages are small enough that this is not a bottleneck.
pub fn closest_point_on_mesh(mesh: &TriMesh, p: &Point3) -> Option<SurfacePoint> {
    let verts = mesh.vertices();
    let mut best: Option<SurfacePoint> = None;
    let mut best_d2 = f64::INFINITY;
    for (fi, f) in mesh.faces().iter().enumerate() {
        let (q, bary) = closest_point_on_triangle(p, &verts[f[0]], &verts[f[1]], &verts[f[2]]);
        let d2 = (q - p).norm_squared();
        if d2 < best_d2 {
            best_d2 = d2;
            best = Some(SurfacePoint {
                point: q,
                face: fi,
                barycentric: bary,
                distance: 0.0,
            });
        }
    }
    best.map(|mut s| {
        s.distance = best_d2.sqrt();
        s
    })
}

/// Distance from `p` to the mesh surface.
pub fn distance_to_mesh(mesh: &TriMesh, p: &Point3) -> f64 {
    closest_point_on_mesh(mesh, p).map_or(f64::INFINITY, |s| s.distance)
}

/// Möller–Trumbore intersection. Returns `(t, u, v)` with the hit at
/// `(1 - u - v) a + u b + v c`.
pub fn ray_triangle(origin: &Point3, dir: &Vec3, a: &Point3, b: &Point3, c: &Point3) -> Option<(f64, f64, f64)> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some((e2.dot(&qvec) * inv, u, v))
}

/// Signed solid angle subtended by triangle `abc` as seen from `p`
/// (Van Oosterom–Strackee).
pub fn solid_angle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let (ra, rb, rc) = (a - p, b - p, c - p);
    let (la, lb, lc) = (ra.norm(), rb.norm(), rc.norm());
    let num = ra.dot(&rb.cross(&rc));
    let den = la * lb * lc + ra.dot(&rb) * lc + rb.dot(&rc) * la + rc.dot(&ra) * lb;
    2.0 * num.atan2(den)
}

/// Separating-axis test between a triangle and an axis-aligned box.
pub fn triangle_box_overlap(center: &Point3, half: &Vec3, tri: &[Point3; 3]) -> bool {
    let v = [tri[0] - center, tri[1] - center, tri[2] - center];
    for i in 0..3 {
        let lo = v[0][i].min(v[1][i]).min(v[2][i]);
        let hi = v[0][i].max(v[1][i]).max(v[2][i]);
        if lo > half[i] || hi < -half[i] {
            return false;
        }
    }
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let normal = e[0].cross(&e[1]);
    let d = normal.dot(&v[0]);
    let r = half.x * normal.x.abs() + half.y * normal.y.abs() + half.z * normal.z.abs();
    if d.abs() > r {
        return false;
    }
    let axes = [Vec3::x(), Vec3::y(), Vec3::z()];
    for edge in &e {
        for ax in &axes {
            let a = ax.cross(edge);
            if a.norm_squared() < 1e-300 {
                continue;
            }
            let p0 = a.dot(&v[0]);
            let p1 = a.dot(&v[1]);
            let p2 = a.dot(&v[2]);
            let r = half.x * a.x.abs() + half.y * a.y.abs() + half.z * a.z.abs();
            if p0.min(p1).min(p2) > r || p0.max(p1).max(p2) < -r {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_point_regions() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let (q, w) = closest_point_on_triangle(&Point3::new(0.2, 0.2, 1.0), &a, &b, &c);
        assert!((q - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-14);
        assert!((w[0] - 0.6).abs() < 1e-14 && (w[1] - 0.2).abs() < 1e-14);
        let (q, _) = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        let (q, w) = closest_point_on_triangle(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-14);
        assert!((w[1] - 0.5).abs() < 1e-14 && (w[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn solid_angle_of_octant() {
        let p = Point3::origin();
        let o = solid_angle(&p, &Point3::new(1.0, 0.0, 0.0), &Point3::new(0.0, 1.0, 0.0), &Point3::new(0.0, 0.0, 1.0));
        assert!((o - std::f64::consts::PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn tri_box_cases() {
        let tri = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        let half = Vec3::repeat(0.1);
        assert!(triangle_box_overlap(&Point3::new(0.2, 0.2, 0.05), &half, &tri));
        assert!(!triangle_box_overlap(&Point3::new(0.2, 0.2, 0.5), &half, &tri));
        assert!(!triangle_box_overlap(&Point3::new(0.7, 0.7, 0.0), &half, &tri));
    }

    #[test]
    fn ray_hits_triangle() {
        let (t, u, v) = ray_triangle(
            &Point3::new(0.25, 0.25, 2.0),
            &Vec3::new(0.0, 0.0, -1.0),
            &Point3::new(0.0, 0.0, 0.0),
            &Point3::new(1.0, 0.0, 0.0),
            &Point3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        assert!((t - 2.0).abs() < 1e-14 && (u - 0.25).abs() < 1e-14 && (v - 0.25).abs() < 1e-14);
    }
}
