use rayon::prelude::*;

use crate::field::VoxelRadianceField;
use crate::geometry::{winding_number, Point3, TriMesh};

/// Field nodes with `density >= threshold` that lie outside `cage`.
///
/// Deformation only moves what the canonical cage encloses; dense nodes left
/// outside stay where they are. Nothing enforces enclosure, this is a check
/// for hand-made cages.
pub fn unenclosed_nodes(field: &VoxelRadianceField, cage: &TriMesh, threshold: f64) -> Vec<Point3> {
    let [nx, ny, _] = field.dims();
    field
        .density()
        .par_iter()
        .enumerate()
        .filter(|(_, &s)| s as f64 >= threshold)
        .map(|(idx, _)| field.node_position(idx % nx, (idx / nx) % ny, idx / (nx * ny)))
        .filter(|p| winding_number(cage, p) < 0.5)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    #[test]
    fn counts_dense_nodes_outside() {
        let domain = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap();
        let field = VoxelRadianceField::constant([5, 5, 5], domain, 2.0, [0.5; 3]).unwrap();
        let big = TriMesh::subdivided_box(
            &Aabb::new(Point3::new(-1.5, -1.5, -1.5), Point3::new(1.5, 1.5, 1.5)).unwrap(),
            [1, 1, 1],
        )
        .unwrap();
        assert!(unenclosed_nodes(&field, &big, 1.0).is_empty());
        assert_eq!(unenclosed_nodes(&field, &big, 3.0).len(), 0);
        let small = TriMesh::subdivided_box(
            &Aabb::new(Point3::new(-0.25, -0.25, -0.25), Point3::new(0.25, 0.25, 0.25)).unwrap(),
            [1, 1, 1],
        )
        .unwrap();
        // only the center node of the 5³ lattice is inside
        assert_eq!(unenclosed_nodes(&field, &small, 1.0).len(), 124);
    }
}
