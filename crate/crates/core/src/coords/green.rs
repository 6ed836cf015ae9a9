//! Green coordinates for closed, outward-oriented triangle cages.
//!
//! Every face carries a vertex-weight contribution and a face weight that
//! multiplies the (stretch-scaled) face normal. Points are reproduced as
//! `x = Σ φ_i v_i + Σ ψ_k n_k` for the cage they were computed against.

use std::f64::consts::PI;

use crate::geometry::{Point3, Vec3};

const TINY: f64 = 1e-14;
const SLIVER: f64 = 1e-9;

/// Evaluates vertex weights into `vertex_out` and face weights into `face_out`.
///
/// `normals` are the unit outward face normals of the cage. Returns `false`
/// if `x` lies on the surface.
pub fn green_into(
    vertices: &[Point3],
    faces: &[[usize; 3]],
    normals: &[Vec3],
    x: &Point3,
    vertex_out: &mut [f64],
    face_out: &mut [f64],
) -> bool {
    vertex_out.fill(0.0);
    face_out.fill(0.0);
    for (fi, f) in faces.iter().enumerate() {
        let n = normals[fi];
        let v = [vertices[f[0]] - x, vertices[f[1]] - x, vertices[f[2]] - x];
        let plane = v[0].dot(&n);
        let mut ii = [0.0; 3];
        let mut nn = [Vec3::zeros(); 3];
        let mut sum = 0.0;
        let mut inside = true;
        for l in 0..3 {
            let (a, b) = (&v[l], &v[(l + 1) % 3]);
            let e = b - a;
            let le = e.norm();
            let q = b.cross(a);
            let qn = q.norm();
            let Some(f) = edge_log(a, b, &e, le, qn) else {
                return false;
            };
            // Signed distance of the foot of x to the edge line, inside positive.
            let t = e.cross(&n).dot(a) / le;
            inside &= t >= 0.0;
            sum += t * f;
            if qn > SLIVER * a.norm() * b.norm() {
                ii[l] = qn / le * f;
                nn[l] = q / qn;
            }
        }
        if plane.abs() < TINY && inside {
            return false;
        }
        let omega = solid_angle(&v[0], &v[1], &v[2]) / (4.0 * PI);
        // Integral of 1/r over the face: edge terms minus the plane distance
        // times the solid angle.
        let sum = sum / (4.0 * PI) - plane.abs() * omega.abs();
        let i_face = -sum.abs();
        face_out[fi] = -i_face;
        // w is the first moment of the double-layer kernel over the face and
        // omega its zeroth moment. Splitting the linear hat functions into a
        // constant and a gradient part keeps the weights stable close to the
        // face plane, where solving for them directly degenerates.
        let w = n * i_face - (nn[0] * ii[0] + nn[1] * ii[1] + nn[2] * ii[2]) / (4.0 * PI);
        for l in 0..3 {
            let (a, b, c) = (&v[l], &v[(l + 1) % 3], &v[(l + 2) % 3]);
            let g = n.cross(&(c - b));
            let scale = g.dot(&(a - b));
            if scale.abs() < TINY {
                return false;
            }
            let g = g / scale;
            vertex_out[f[l]] += g.dot(&w) - g.dot(b) * omega;
        }
    }
    vertex_out.iter().chain(face_out.iter()).all(|w| w.is_finite())
}

/// Signed solid angle of the triangle `abc` seen from the origin.
fn solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    2.0 * num.atan2(den)
}

/// `ln((|b| + b·u) / (|a| + a·u))` for the edge `a → b` with direction `u`,
/// the line integral of `1/r` along the edge. `None` if the origin lies on the edge.
fn edge_log(a: &Vec3, b: &Vec3, e: &Vec3, le: f64, qn: f64) -> Option<f64> {
    let (ra, rb) = (a.norm(), b.norm());
    let (la, lb) = (a.dot(e) / le, b.dot(e) / le);
    let f = if la >= 0.0 {
        ((rb + lb) / (ra + la)).ln()
    } else if lb <= 0.0 {
        ((ra - la) / (rb - lb)).ln()
    } else {
        // The foot of the origin lies inside the edge.
        let rho2 = (qn / le).powi(2);
        if rho2 <= (SLIVER * ra.min(rb)).powi(2) {
            return None;
        }
        ((rb + lb) * (ra - la) / rho2).ln()
    };
    Some(f)
}
