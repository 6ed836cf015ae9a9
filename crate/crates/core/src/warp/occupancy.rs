use crate::error::Result;
use crate::geometry::{winding_number, Aabb, Lattice, NodeClasses, Point3, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Outside,
    Inside,
    Surface,
}

/// Point membership for a closed mesh, accelerated by a cell grid.
///
/// Cells the surface does not touch are answered from the grid; points in
/// surface cells get an exact winding-number test. Points on the surface count
/// as inside.
#[derive(Debug, Clone)]
pub struct Occupancy {
    bbox: Aabb,
    lattice: Lattice,
    cells: Vec<Cell>,
    local: TriMesh,
}

impl Occupancy {
    pub fn new(mesh: &TriMesh, n: usize) -> Result<Self> {
        let bbox = mesh
            .bbox()
            .ok_or_else(|| crate::error::Error::InvalidMesh("empty cage".into()))?;
        let lattice = Lattice::around(&bbox, n.max(4), 1)?;
        let local = lattice.localize(mesh);
        let classes = NodeClasses::compute(&lattice, &local);
        let m = lattice.n() - 1;
        let mut cells = vec![Cell::Outside; m * m * m];
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let ci = lattice.cell_index(i, j, k);
                    cells[ci] = if classes.surface_cells[ci] {
                        Cell::Surface
                    } else if classes.inside[lattice.index(i, j, k)] {
                        Cell::Inside
                    } else {
                        Cell::Outside
                    };
                }
            }
        }
        Ok(Occupancy { bbox, lattice, cells, local })
    }

    pub fn contains(&self, x: &Point3) -> bool {
        if !self.bbox.contains(x) {
            return false;
        }
        let local = self.lattice.to_local(x);
        let Some((c, _)) = self.lattice.locate_local(&local) else {
            return false;
        };
        match self.cells[self.lattice.cell_index(c[0], c[1], c[2])] {
            Cell::Inside => true,
            Cell::Outside => false,
            Cell::Surface => winding_number(&self.local, &local) >= 0.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_in_mesh, Aabb, Vec3};

    #[test]
    fn agrees_with_exact_membership() {
        let mesh = TriMesh::from_cells(
            [2, 2, 1],
            Point3::new(-0.5, -0.5, -0.25),
            Vec3::repeat(0.5),
            |i, j, _| !(i == 1 && j == 1),
            None,
        )
        .unwrap();
        let occ = Occupancy::new(&mesh, 16).unwrap();
        let b = Aabb::new(Point3::new(-0.8, -0.8, -0.5), Point3::new(0.8, 0.8, 0.5)).unwrap();
        let mut count = 0;
        for i in 0..23 {
            for j in 0..23 {
                for k in 0..17 {
                    let p = b.min + Vec3::new(i as f64 * 0.0713, j as f64 * 0.0713, k as f64 * 0.0611);
                    assert_eq!(occ.contains(&p), point_in_mesh(&mesh, &p).unwrap(), "{p:?}");
                    count += occ.contains(&p) as usize;
                }
            }
        }
        assert!(count > 0);
    }
}
