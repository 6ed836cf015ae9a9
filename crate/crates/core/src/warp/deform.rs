use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::coords::{eval_green, eval_mvc, face_normals, CageTarget, CoordinateKind, SURFACE_EPS};
use crate::error::{Error, Result};
use crate::field::VoxelRadianceField;
use crate::geometry::{Aabb, CagePair, Point3, UnitDir3, Vec3};
use crate::warp::grid::{mapped_nodes, precompute_coord_grid, CoordGrid};
use crate::warp::Occupancy;

/// Default finite-difference step as a fraction of the deformed cage diagonal.
pub const DELTA_T_FRACTION: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformConfig {
    pub kind: CoordinateKind,
    /// Coordinate grid resolution per axis.
    pub n: usize,
    /// Evaluate coordinates in closed form for every sample instead of using the grid.
    pub precise: bool,
    /// Step for the direction mapping; `None` uses the scene-relative default.
    pub delta_t: Option<f64>,
}

impl Default for DeformConfig {
    fn default() -> Self {
        DeformConfig {
            kind: CoordinateKind::Mvc,
            n: 128,
            precise: false,
            delta_t: None,
        }
    }
}

impl DeformConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precise && !self.kind.has_closed_form() {
            return Err(Error::PreciseHarmonic);
        }
        if let Some(dt) = self.delta_t {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidConfig(format!("delta_t must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

/// Which branch of the deformed-field definition applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Inside the deformed cage: sample the canonical field at the mapped point.
    Deformed,
    /// Inside the canonical cage only: emptied.
    Vacated,
    /// Outside both cages: untouched.
    Unchanged,
}

#[derive(Debug, Default)]
struct Counters {
    grid_samples: AtomicU64,
    precise_samples: AtomicU64,
    fallback_samples: AtomicU64,
    nearest_node_samples: AtomicU64,
    degenerate_directions: AtomicU64,
}

/// Snapshot of the sampling counters of a [`DeformedField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WarpCounters {
    /// Closed-form evaluations spent filling the coordinate grid.
    pub precompute_evaluations: u64,
    /// Position mappings answered by grid interpolation.
    pub grid_samples: u64,
    /// Position mappings evaluated in closed form in precise mode.
    pub precise_samples: u64,
    /// Grid mappings that fell back to closed-form evaluation.
    pub fallback_samples: u64,
    /// Grid mappings answered by the nearest valid node (no closed form available).
    pub nearest_node_samples: u64,
    /// Direction mappings whose difference vanished.
    pub degenerate_directions: u64,
}

impl WarpCounters {
    /// Closed-form weight evaluations: precompute, fallbacks and precise samples.
    pub fn closed_form_evaluations(&self) -> u64 {
        self.precompute_evaluations + self.fallback_samples + self.precise_samples
    }
}

enum Mapper {
    Grid { grid: CoordGrid, mapped: Vec<Point3> },
    Precise,
}

/// A canonical field seen through a cage deformation.
pub struct DeformedField<'a> {
    field: &'a VoxelRadianceField,
    pair: CagePair,
    target: CageTarget,
    config: DeformConfig,
    delta_t: f64,
    deformed_occ: Occupancy,
    canonical_occ: Occupancy,
    normals: Vec<Vec3>,
    surface_eps: f64,
    mapper: Mapper,
    counters: Counters,
}

impl<'a> DeformedField<'a> {
    /// Builds the deformed field, precomputing the coordinate grid unless
    /// `config.precise` is set.
    pub fn new(field: &'a VoxelRadianceField, pair: CagePair, config: DeformConfig) -> Result<Self> {
        config.validate()?;
        let grid = if config.precise {
            None
        } else {
            Some(precompute_coord_grid(&pair, config.kind, config.n)?)
        };
        Self::build(field, pair, config, grid)
    }

    /// Uses an already computed grid (e.g. loaded from a cache file).
    pub fn with_grid(field: &'a VoxelRadianceField, pair: CagePair, config: DeformConfig, grid: CoordGrid) -> Result<Self> {
        config.validate()?;
        if config.precise {
            return Err(Error::InvalidConfig("a coordinate grid was given for a precise render".into()));
        }
        crate::warp::check_grid_matches(&grid, &pair, config.kind)?;
        Self::build(field, pair, config, Some(grid))
    }

    fn build(field: &'a VoxelRadianceField, pair: CagePair, config: DeformConfig, grid: Option<CoordGrid>) -> Result<Self> {
        let diag = pair.deformed().bbox().map_or(1.0, |b| b.diagonal());
        let delta_t = config.delta_t.unwrap_or(DELTA_T_FRACTION * diag);
        let occ_res = config.n.max(16);
        let deformed_occ = Occupancy::new(pair.deformed(), occ_res)?;
        let canonical_occ = Occupancy::new(pair.canonical(), occ_res)?;
        let target = CageTarget::new(&pair);
        let mapper = match grid {
            None => Mapper::Precise,
            Some(grid) => {
                // Interpolating weights and then applying them equals
                // interpolating the mapped node positions, which is far cheaper.
                let kind = config.kind;
                let mapped = mapped_nodes(&grid, |v, f| target.apply_raw(kind, v, f));
                Mapper::Grid { grid, mapped }
            }
        };
        Ok(DeformedField {
            field,
            normals: face_normals(pair.deformed()),
            surface_eps: SURFACE_EPS * diag,
            pair,
            target,
            config,
            delta_t,
            deformed_occ,
            canonical_occ,
            mapper,
            counters: Counters::default(),
        })
    }

    pub fn field(&self) -> &VoxelRadianceField {
        self.field
    }

    pub fn pair(&self) -> &CagePair {
        &self.pair
    }

    pub fn config(&self) -> &DeformConfig {
        &self.config
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn grid(&self) -> Option<&CoordGrid> {
        match &self.mapper {
            Mapper::Grid { grid, .. } => Some(grid),
            Mapper::Precise => None,
        }
    }

    /// Box covering everything the deformed field can make visible.
    pub fn bounds(&self) -> Aabb {
        self.field.domain().union(&self.pair.bbox())
    }

    pub fn counters(&self) -> WarpCounters {
        WarpCounters {
            precompute_evaluations: self.grid().map_or(0, |g| g.evaluations()),
            grid_samples: self.counters.grid_samples.load(Ordering::Relaxed),
            precise_samples: self.counters.precise_samples.load(Ordering::Relaxed),
            fallback_samples: self.counters.fallback_samples.load(Ordering::Relaxed),
            nearest_node_samples: self.counters.nearest_node_samples.load(Ordering::Relaxed),
            degenerate_directions: self.counters.degenerate_directions.load(Ordering::Relaxed),
        }
    }

    pub fn reset_counters(&self) {
        self.counters.grid_samples.store(0, Ordering::Relaxed);
        self.counters.precise_samples.store(0, Ordering::Relaxed);
        self.counters.fallback_samples.store(0, Ordering::Relaxed);
        self.counters.nearest_node_samples.store(0, Ordering::Relaxed);
        self.counters.degenerate_directions.store(0, Ordering::Relaxed);
    }

    pub fn in_deformed(&self, x: &Point3) -> bool {
        self.deformed_occ.contains(x)
    }

    pub fn in_canonical(&self, x: &Point3) -> bool {
        self.canonical_occ.contains(x)
    }

    pub fn classify(&self, x: &Point3) -> Region {
        if self.in_deformed(x) {
            Region::Deformed
        } else if self.in_canonical(x) {
            Region::Vacated
        } else {
            Region::Unchanged
        }
    }

    /// Maps a point of the deformed cage into canonical space.
    pub fn phi_x(&self, x: &Point3) -> Result<Point3> {
        if !self.in_deformed(x) {
            return Err(Error::OutsideCage);
        }
        Ok(self.map_point(x))
    }

    /// Maps a view direction at `x` into canonical space.
    pub fn phi_d(&self, x: &Point3, d: &UnitDir3) -> Result<UnitDir3> {
        if !self.in_deformed(x) {
            return Err(Error::OutsideCage);
        }
        Ok(self.map_direction(x, &self.map_point(x), d))
    }

    fn closed_form(&self, x: &Point3) -> Option<Point3> {
        let cage = self.pair.deformed();
        let mut v = vec![0.0; cage.vertices().len()];
        match self.config.kind {
            CoordinateKind::Mvc => {
                eval_mvc(cage, x, &mut v).then(|| self.target.apply_raw(CoordinateKind::Mvc, &v, &[]))
            }
            CoordinateKind::Gc => {
                let mut f = vec![0.0; cage.faces().len()];
                let mut ok = eval_green(cage, &self.normals, x, &mut v, &mut f);
                if !ok {
                    let y = crate::warp::grid::inward_projection(cage, x, self.surface_eps);
                    ok = eval_green(cage, &self.normals, &y, &mut v, &mut f);
                }
                ok.then(|| self.target.apply_raw(CoordinateKind::Gc, &v, &f))
            }
            CoordinateKind::Hc => None,
        }
    }

    pub(crate) fn map_point(&self, x: &Point3) -> Point3 {
        match &self.mapper {
            Mapper::Precise => {
                self.counters.precise_samples.fetch_add(1, Ordering::Relaxed);
                self.closed_form(x).unwrap_or(*x)
            }
            Mapper::Grid { grid, mapped } => {
                if let Some(stencil) = grid.stencil(x) {
                    self.counters.grid_samples.fetch_add(1, Ordering::Relaxed);
                    let mut acc = Vec3::zeros();
                    for (node, w) in stencil {
                        if w > 0.0 {
                            acc += mapped[node].coords * w;
                        }
                    }
                    return Point3::from(acc);
                }
                if self.config.kind.has_closed_form() {
                    self.counters.fallback_samples.fetch_add(1, Ordering::Relaxed);
                    if let Some(p) = self.closed_form(x) {
                        return p;
                    }
                } else {
                    self.counters.nearest_node_samples.fetch_add(1, Ordering::Relaxed);
                }
                nearest_valid(grid, mapped, x).unwrap_or(*x)
            }
        }
    }

    fn map_direction(&self, x: &Point3, mapped_x: &Point3, d: &UnitDir3) -> UnitDir3 {
        let step = d.into_inner() * self.delta_t;
        let forward = x + step;
        let diff = if self.in_deformed(&forward) {
            self.map_point(&forward) - mapped_x
        } else {
            let backward = x - step;
            if !self.in_deformed(&backward) {
                return *d;
            }
            mapped_x - self.map_point(&backward)
        };
        let norm = diff.norm();
        if !(norm / self.delta_t >= 1e-12) {
            self.counters.degenerate_directions.fetch_add(1, Ordering::Relaxed);
            return *d;
        }
        UnitDir3::new_unchecked(diff / norm)
    }

    /// Color and density of the deformed scene at `x` seen along `d`.
    pub fn query(&self, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64) {
        match self.classify(x) {
            Region::Deformed => {
                let px = self.map_point(x);
                let pd = self.map_direction(x, &px, d);
                self.field.sample(&px, &pd)
            }
            Region::Vacated => ([0.0; 3], 0.0),
            Region::Unchanged => self.field.sample(x, d),
        }
    }

    /// As [`query`](Self::query), with the color zeroed wherever the density
    /// is; the view direction is then never mapped.
    pub fn query_visible(&self, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64) {
        match self.classify(x) {
            Region::Deformed => {
                let px = self.map_point(x);
                self.field.sample_visible(&px, || self.map_direction(x, &px, d))
            }
            Region::Vacated => ([0.0; 3], 0.0),
            Region::Unchanged => self.field.sample_visible(x, || *d),
        }
    }
}

/// Mapped position of the valid node closest to `x` among a small neighbourhood.
fn nearest_valid(grid: &CoordGrid, mapped: &[Point3], x: &Point3) -> Option<Point3> {
    let l = grid.lattice();
    let local = l.to_local(x);
    let n = l.n() as i64;
    let g = [local.x / l.h(), local.y / l.h(), local.z / l.h()];
    let centre = g.map(|v| v.round() as i64);
    let mut best: Option<(f64, usize)> = None;
    for r in 0..=3i64 {
        for dk in -r..=r {
            for dj in -r..=r {
                for di in -r..=r {
                    let (i, j, k) = (centre[0] + di, centre[1] + dj, centre[2] + dk);
                    if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
                        continue;
                    }
                    let idx = l.index(i as usize, j as usize, k as usize);
                    if !grid.is_valid(idx) {
                        continue;
                    }
                    let d2 = (i as f64 - g[0]).powi(2) + (j as f64 - g[1]).powi(2) + (k as f64 - g[2]).powi(2);
                    if best.map_or(true, |(b, _)| d2 < b) {
                        best = Some((d2, idx));
                    }
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    best.map(|(_, idx)| mapped[idx])
}

/// Free-function form of [`DeformedField::query`].
pub fn deformed_query(field: &DeformedField, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64) {
    field.query(x, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TriMesh;

    fn cube(offset: Vec3) -> TriMesh {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap().transformed(|p| p + offset)
    }

    fn field() -> VoxelRadianceField {
        let b = Aabb::new(Point3::new(-2.0, -2.0, -2.0), Point3::new(2.0, 2.0, 2.0)).unwrap();
        VoxelRadianceField::constant([9, 9, 9], b, 1.0, [0.5, 0.5, 0.5]).unwrap()
    }

    #[test]
    fn precise_harmonic_is_rejected() {
        let f = field();
        let pair = CagePair::identity(cube(Vec3::zeros())).unwrap();
        let cfg = DeformConfig {
            kind: CoordinateKind::Hc,
            precise: true,
            ..DeformConfig::default()
        };
        assert!(matches!(DeformedField::new(&f, pair, cfg), Err(Error::PreciseHarmonic)));
    }

    #[test]
    fn vacated_region_is_empty() {
        let f = field();
        let pair = CagePair::new(cube(Vec3::zeros()), cube(Vec3::new(1.2, 0.0, 0.0))).unwrap();
        let cfg = DeformConfig { n: 16, ..DeformConfig::default() };
        let df = DeformedField::new(&f, pair, cfg).unwrap();
        let d = UnitDir3::new_normalize(Vec3::x());
        assert_eq!(df.classify(&Point3::origin()), Region::Vacated);
        assert_eq!(df.query(&Point3::origin(), &d), ([0.0; 3], 0.0));
        assert_eq!(df.classify(&Point3::new(1.2, 0.0, 0.0)), Region::Deformed);
        let far = Point3::new(-1.5, 1.5, 0.0);
        assert_eq!(df.query(&far, &d), f.sample(&far, &d));
        let p = df.phi_x(&Point3::new(1.3, 0.1, -0.2)).unwrap();
        assert!((p - Point3::new(0.1, 0.1, -0.2)).norm() < 1e-5);
        assert!(df.phi_x(&Point3::new(3.0, 0.0, 0.0)).is_err());
    }
}
