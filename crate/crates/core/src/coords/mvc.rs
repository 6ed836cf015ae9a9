//! Mean value coordinates for closed triangle meshes.
//!
//! Each face contributes the mean-value integral of its spherical projection
//! around the query point; the per-vertex contributions are normalized so that
//! the weights sum to one. The construction reproduces linear functions, so
//! `Σ w_j v_j = x`, and stays well defined outside the mesh as well.

use std::f64::consts::PI;

use crate::geometry::{Point3, Vec3};

const DEGENERATE: f64 = 1e-12;

/// Evaluates mean value weights of `x` into `out` (length = vertex count).
///
/// Returns `false` when `x` lies on the surface (on a vertex or inside a face),
/// where the coordinates are singular.
pub fn mvc_into(vertices: &[Point3], faces: &[[usize; 3]], x: &Point3, out: &mut [f64]) -> bool {
    debug_assert_eq!(out.len(), vertices.len());
    out.fill(0.0);
    let mut dist = Vec::with_capacity(vertices.len());
    let mut unit = Vec::with_capacity(vertices.len());
    for v in vertices {
        let r = v - x;
        let d = r.norm();
        if d < DEGENERATE {
            return false;
        }
        dist.push(d);
        unit.push(r / d);
    }
    for f in faces {
        let u: [&Vec3; 3] = [&unit[f[0]], &unit[f[1]], &unit[f[2]]];
        let mut theta = [0.0; 3];
        for i in 0..3 {
            let l = (u[(i + 1) % 3] - u[(i + 2) % 3]).norm();
            theta[i] = 2.0 * (0.5 * l).min(1.0).asin();
        }
        let h = 0.5 * (theta[0] + theta[1] + theta[2]);
        if PI - h < DEGENERATE {
            // x lies inside this face.
            return false;
        }
        let sin_t = [theta[0].sin(), theta[1].sin(), theta[2].sin()];
        let mut c = [0.0; 3];
        for i in 0..3 {
            c[i] = 2.0 * h.sin() * (h - theta[i]).sin() / (sin_t[(i + 1) % 3] * sin_t[(i + 2) % 3]) - 1.0;
        }
        let sign = u[0].dot(&u[1].cross(u[2])).signum();
        let mut s = [0.0; 3];
        let mut coplanar = false;
        for i in 0..3 {
            s[i] = sign * (1.0 - c[i] * c[i]).max(0.0).sqrt();
            if s[i].abs() <= DEGENERATE {
                coplanar = true;
            }
        }
        if coplanar {
            // x is in the plane of the face but outside it; no contribution.
            continue;
        }
        for i in 0..3 {
            let (ip, im) = ((i + 1) % 3, (i + 2) % 3);
            let w = (theta[i] - c[ip] * theta[im] - c[im] * theta[ip]) / (dist[f[i]] * sin_t[ip] * s[im]);
            out[f[i]] += w;
        }
    }
    let total: f64 = out.iter().sum();
    if !(total.abs() > 0.0) || !total.is_finite() {
        return false;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
    true
}
