//! Automatic coarse cage from a density grid: threshold, dilate, max-pool onto a
//! coarse lattice, then extract the 0.5 level set of the pooled occupancy.

use crate::error::{Error, Result};
use crate::geometry::marching_cubes::{marching_cubes, ScalarGrid};
use crate::geometry::{Aabb, Point3, TriMesh, Vec3};

/// Vertex budget for cages that stay fast to evaluate.
pub const CAGE_VERTEX_BUDGET: std::ops::RangeInclusive<usize> = 30..=200;

#[derive(Debug, Clone)]
pub struct GeneratedCage {
    pub mesh: TriMesh,
    /// Whether the vertex count lies in [`CAGE_VERTEX_BUDGET`].
    pub within_budget: bool,
}

impl GeneratedCage {
    pub fn vertex_count(&self) -> usize {
        self.mesh.vertices().len()
    }
}

/// Builds a watertight cage enclosing every node with `density >= threshold`.
///
/// Occupied nodes are dilated by `dilation` nodes, then pooled onto a coarse
/// lattice with `coarse_res` cells per axis (plus one empty padding node on each
/// side): a coarse node becomes solid when any dilated fine node lies in one of
/// its adjacent coarse cells. Every occupied fine node therefore sits in a coarse
/// cell whose eight corners are solid, at least half a coarse cell away from the
/// extracted surface.
pub fn generate_cage(
    density: &ScalarGrid,
    threshold: f64,
    dilation: usize,
    coarse_res: usize,
) -> Result<GeneratedCage> {
    if coarse_res == 0 {
        return Err(Error::InvalidGrid("coarse resolution must be positive".into()));
    }
    let dims = density.dims();
    let occupied: Vec<bool> = density.values().iter().map(|&v| v >= threshold).collect();
    if !occupied.iter().any(|&b| b) {
        return Err(Error::EmptyOccupancy);
    }
    let dilated = dilate(&occupied, dims, dilation);

    let domain = *density.domain();
    let cell = domain.extent() / coarse_res as f64;
    let cn = coarse_res + 3;
    let mut coarse = vec![0.0f64; cn * cn * cn];
    let fine_step = density.spacing();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                if !dilated[i + dims[0] * (j + dims[1] * k)] {
                    continue;
                }
                let local = Vec3::new(
                    i as f64 * fine_step.x,
                    j as f64 * fine_step.y,
                    k as f64 * fine_step.z,
                );
                let mut c = [0usize; 3];
                for a in 0..3 {
                    let g = if cell[a] > 0.0 { (local[a] / cell[a]).floor() } else { 0.0 };
                    c[a] = (g.max(0.0) as usize).min(coarse_res - 1) + 1;
                }
                for corner in 0..8 {
                    let (ci, cj, ck) = (c[0] + (corner & 1), c[1] + ((corner >> 1) & 1), c[2] + (corner >> 2));
                    coarse[ci + cn * (cj + cn * ck)] = 1.0;
                }
            }
        }
    }
    let coarse_domain = Aabb {
        min: Point3::from(domain.min.coords - cell),
        max: Point3::from(domain.max.coords + cell),
    };
    let grid = ScalarGrid::new([cn, cn, cn], coarse_domain, coarse)?;
    let mesh = marching_cubes(&grid, 0.5)?;
    if !mesh.is_watertight() {
        return Err(Error::InvalidMesh(
            "occupancy forms several disconnected components; cages must be a single closed surface".into(),
        ));
    }
    let mesh = mesh.oriented_outward();
    let within_budget = CAGE_VERTEX_BUDGET.contains(&mesh.vertices().len());
    if !within_budget {
        log::warn!(
            "generated cage has {} vertices, outside the recommended {}..={}",
            mesh.vertices().len(),
            CAGE_VERTEX_BUDGET.start(),
            CAGE_VERTEX_BUDGET.end()
        );
    }
    Ok(GeneratedCage { mesh, within_budget })
}

fn dilate(mask: &[bool], dims: [usize; 3], radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut cur = mask.to_vec();
    for axis in 0..3 {
        let mut next = vec![false; cur.len()];
        for (idx, &on) in cur.iter().enumerate() {
            if !on {
                continue;
            }
            let c = (idx / strides[axis]) % dims[axis];
            let base = idx - c * strides[axis];
            for t in c.saturating_sub(radius)..=(c + radius).min(dims[axis] - 1) {
                next[base + t * strides[axis]] = true;
            }
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_occupancy_is_an_error() {
        let b = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap();
        let g = ScalarGrid::from_fn([8, 8, 8], b, |_| 0.0).unwrap();
        let err = generate_cage(&g, 1.0, 2, 8).unwrap_err();
        assert_eq!(err.to_string(), "empty occupancy");
    }

    #[test]
    fn anisotropic_dilation() {
        let dims = [5, 4, 3];
        let mut mask = vec![false; 60];
        mask[2 + 5 * (1 + 4 * 1)] = true;
        let d = dilate(&mask, dims, 1);
        assert_eq!(d.iter().filter(|&&b| b).count(), 27);
    }
}
