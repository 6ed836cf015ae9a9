use crate::error::{Error, Result};
use crate::field::sh::{sh_basis_into, sh_len, SH_C0};
use crate::geometry::{Aabb, Point3, ScalarGrid, UnitDir3, Vec3};

/// Density and spherical-harmonics color on the nodes of a regular grid.
///
/// Node `(i, j, k)` sits at `domain.min + (i, j, k) * extent / (dims - 1)`, so
/// the corner nodes coincide with the domain corners. Coefficients are stored
/// per node, channel-major: `[r_0 .. r_K, g_0 .. g_K, b_0 .. b_K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelRadianceField {
    dims: [usize; 3],
    domain: Aabb,
    sh_degree: u32,
    density: Vec<f32>,
    coeffs: Vec<f32>,
}

impl VoxelRadianceField {
    pub fn new(dims: [usize; 3], domain: Aabb, sh_degree: u32, density: Vec<f32>, coeffs: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidField(format!(
                "grid must be at least 2 nodes per axis, got {}x{}x{}",
                dims[0], dims[1], dims[2]
            )));
        }
        if sh_degree > 2 {
            return Err(Error::InvalidField(format!("spherical harmonics degree {sh_degree} > 2")));
        }
        let nodes = dims[0] * dims[1] * dims[2];
        if density.len() != nodes {
            return Err(Error::InvalidField(format!("expected {nodes} densities, got {}", density.len())));
        }
        let expected = nodes * 3 * sh_len(sh_degree);
        if coeffs.len() != expected {
            return Err(Error::InvalidField(format!("expected {expected} coefficients, got {}", coeffs.len())));
        }
        if let Some(bad) = density.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidField(format!("density must be finite and non-negative, found {bad}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidField("non-finite coefficient".into()));
        }
        let e = domain.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
            return Err(Error::InvalidField("domain has zero extent".into()));
        }
        Ok(VoxelRadianceField {
            dims,
            domain,
            sh_degree,
            density,
            coeffs,
        })
    }

    /// Field with the same density and color everywhere.
    pub fn constant(dims: [usize; 3], domain: Aabb, sigma: f32, rgb: [f64; 3]) -> Result<Self> {
        let nodes = dims.iter().product::<usize>();
        let coeffs = (0..nodes).flat_map(|_| rgb.map(|c| (c / SH_C0) as f32)).collect();
        Self::new(dims, domain, 0, vec![sigma; nodes], coeffs)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn sh_degree(&self) -> u32 {
        self.sh_degree
    }

    pub fn density(&self) -> &[f32] {
        &self.density
    }

    pub fn coeffs(&self) -> &[f32] {
        &self.coeffs
    }

    pub fn node_count(&self) -> usize {
        self.density.len()
    }

    pub fn spacing(&self) -> Vec3 {
        let e = self.domain.extent();
        Vec3::new(
            e.x / (self.dims[0] - 1) as f64,
            e.y / (self.dims[1] - 1) as f64,
            e.z / (self.dims[2] - 1) as f64,
        )
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Point3 {
        let s = self.spacing();
        self.domain.min + Vec3::new(i as f64 * s.x, j as f64 * s.y, k as f64 * s.z)
    }

    /// Densities as a scalar grid, e.g. for cage generation.
    pub fn density_grid(&self) -> ScalarGrid {
        ScalarGrid::new(self.dims, self.domain, self.density.iter().map(|&d| d as f64).collect())
            .expect("field dimensions are validated")
    }

    /// Color and density at `x` seen from direction `d`; zero outside the domain.
    pub fn sample(&self, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64) {
        self.sample_inner(x, || *d, false)
    }

    /// As [`sample`](Self::sample), but where the density is zero the color is
    /// returned as zero and `d` is never asked for. Renderers use this: such
    /// samples carry no weight.
    pub fn sample_visible(&self, x: &Point3, d: impl FnOnce() -> UnitDir3) -> ([f64; 3], f64) {
        self.sample_inner(x, d, true)
    }

    fn sample_inner(&self, x: &Point3, d: impl FnOnce() -> UnitDir3, skip_empty: bool) -> ([f64; 3], f64) {
        let Some((base, frac)) = self.locate(x) else {
            return ([0.0; 3], 0.0);
        };
        let [nx, ny, _] = self.dims;
        let mut nodes = [(0usize, 0.0f64); 8];
        let mut sigma = 0.0;
        for (corner, slot) in nodes.iter_mut().enumerate() {
            let (di, dj, dk) = (corner & 1, (corner >> 1) & 1, corner >> 2);
            let w = if di == 1 { frac[0] } else { 1.0 - frac[0] }
                * if dj == 1 { frac[1] } else { 1.0 - frac[1] }
                * if dk == 1 { frac[2] } else { 1.0 - frac[2] };
            let node = (base[0] + di) + nx * ((base[1] + dj) + ny * (base[2] + dk));
            sigma += w * self.density[node] as f64;
            *slot = (node, w);
        }
        let sigma = sigma.max(0.0);
        if skip_empty && sigma == 0.0 {
            return ([0.0; 3], 0.0);
        }
        let k = sh_len(self.sh_degree);
        let mut basis = [0.0; 9];
        sh_basis_into(&d(), self.sh_degree, &mut basis);
        let mut rgb = [0.0f64; 3];
        for (node, w) in nodes {
            if w == 0.0 {
                continue;
            }
            let c = &self.coeffs[node * 3 * k..(node + 1) * 3 * k];
            for (ch, out) in rgb.iter_mut().enumerate() {
                let mut v = 0.0;
                for (b, coeff) in basis[..k].iter().zip(&c[ch * k..(ch + 1) * k]) {
                    v += b * *coeff as f64;
                }
                *out += w * v;
            }
        }
        (rgb.map(|c| c.clamp(0.0, 1.0)), sigma)
    }

    fn locate(&self, x: &Point3) -> Option<([usize; 3], [f64; 3])> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        let e = self.domain.extent();
        for a in 0..3 {
            let cells = (self.dims[a] - 1) as f64;
            let g = (x[a] - self.domain.min[a]) / e[a] * cells;
            if !(g >= 0.0 && g <= cells) {
                return None;
            }
            let c = (g.floor() as usize).min(self.dims[a] - 2);
            base[a] = c;
            frac[a] = g - c as f64;
        }
        Some((base, frac))
    }
}
