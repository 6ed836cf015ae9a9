//! Inside/outside classification by generalized winding number.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::predicates::solid_angle;
use crate::geometry::{Point3, TriMesh};

/// Sum of signed solid angles of all faces divided by 4π: 1 inside a closed
/// outward-oriented mesh, 0 outside.
pub fn winding_number(mesh: &TriMesh, p: &Point3) -> f64 {
    let v = mesh.vertices();
    mesh.faces()
        .iter()
        .map(|f| solid_angle(p, &v[f[0]], &v[f[1]], &v[f[2]]))
        .sum::<f64>()
        / (4.0 * PI)
}

/// Membership test via winding number with a 0.5 threshold.
///
/// Points lying exactly on the surface may be reported either way.
pub fn point_in_mesh(mesh: &TriMesh, p: &Point3) -> Result<bool> {
    if !mesh.is_watertight() {
        return Err(Error::NotWatertight);
    }
    Ok(winding_number(mesh, p) > 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    #[test]
    fn unit_cube_membership() {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        let cube = TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap();
        assert!(point_in_mesh(&cube, &Point3::origin()).unwrap());
        assert!(!point_in_mesh(&cube, &Point3::new(2.0, 0.0, 0.0)).unwrap());
        assert!(point_in_mesh(&cube, &Point3::new(0.4999, 0.0, 0.0)).unwrap());
        assert!((winding_number(&cube, &Point3::new(0.1, 0.2, 0.3)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        let cube = TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap();
        let open = TriMesh::new(cube.vertices().to_vec(), cube.faces()[..11].to_vec()).unwrap();
        assert!(matches!(point_in_mesh(&open, &Point3::origin()), Err(Error::NotWatertight)));
    }
}
