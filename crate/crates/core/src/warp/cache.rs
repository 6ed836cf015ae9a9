//! `CWG1` coordinate-grid files (little-endian).
//!
//! ```text
//! "CWG1"  u32 n  f64 min.x min.y min.z max.x max.y max.z  u32 kind (0 mvc, 1 hc, 2 gc)
//! u32 vertex_count  u32 face_count
//! per node (x fastest): u8 valid, f32 weights[vertex_count + face_count]
//! ```

use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicU64;

use sha2::{Digest, Sha256};

use crate::coords::CoordinateKind;
use crate::error::{Error, Result};
use crate::field::{check_magic, Reader};
use crate::geometry::{Aabb, CagePair, Lattice, Point3};
use crate::io_util::write_atomic;
use crate::warp::grid::{precompute_coord_grid, CoordGrid, GRID_MARGIN};

pub const GRID_MAGIC: &[u8; 4] = b"CWG1";

fn kind_code(kind: CoordinateKind) -> u32 {
    match kind {
        CoordinateKind::Mvc => 0,
        CoordinateKind::Hc => 1,
        CoordinateKind::Gc => 2,
    }
}

pub fn coord_grid_to_bytes(grid: &CoordGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(72 + grid.valid.len() * (1 + 4 * grid.stride()));
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(grid.res() as u32).to_le_bytes());
    let d = grid.domain();
    for v in d.min.iter().chain(d.max.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&kind_code(grid.kind).to_le_bytes());
    out.extend_from_slice(&(grid.vertex_count as u32).to_le_bytes());
    out.extend_from_slice(&(grid.face_count as u32).to_le_bytes());
    for (node, &valid) in grid.valid.iter().enumerate() {
        out.push(valid as u8);
        for w in grid.node_weights(node) {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

pub fn coord_grid_from_bytes(bytes: &[u8]) -> Result<CoordGrid> {
    let mut r = Reader::new(bytes);
    check_magic(&mut r, GRID_MAGIC)?;
    let n = r.u32("resolution")? as usize;
    let mut v = [0.0; 6];
    for x in &mut v {
        *x = r.f64("domain")?;
    }
    let domain = Aabb::new(Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5]))
        .map_err(|e| Error::InvalidGrid(e.to_string()))?;
    let kind = match r.u32("kind")? {
        0 => CoordinateKind::Mvc,
        1 => CoordinateKind::Hc,
        2 => CoordinateKind::Gc,
        other => return Err(Error::InvalidGrid(format!("unknown coordinate kind code {other}"))),
    };
    let vertex_count = r.u32("vertex count")? as usize;
    let face_count = r.u32("face count")? as usize;
    if face_count != 0 && !kind.uses_faces() {
        return Err(Error::InvalidGrid(format!("{kind} grids carry no face weights")));
    }
    let lattice = Lattice::from_domain(&domain, n)?;
    let stride = vertex_count + face_count;
    let mut valid = Vec::with_capacity(lattice.len());
    let mut weights = Vec::with_capacity(lattice.len() * stride);
    for _ in 0..lattice.len() {
        valid.push(r.u8("node flag")? != 0);
        weights.extend(r.f32s(stride, "node weights")?);
    }
    if r.remaining() != 0 {
        return Err(Error::InvalidGrid(format!("{} trailing bytes", r.remaining())));
    }
    Ok(CoordGrid {
        lattice,
        kind,
        vertex_count,
        face_count,
        valid,
        weights,
        evaluations: AtomicU64::new(0),
    })
}

pub fn save_coord_grid(grid: &CoordGrid, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &coord_grid_to_bytes(grid))
}

pub fn load_coord_grid(path: impl AsRef<Path>) -> Result<CoordGrid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    coord_grid_from_bytes(&bytes).map_err(|e| e.at(path))
}

/// Content hash of the inputs that determine a grid.
pub fn cache_key(pair: &CagePair, kind: CoordinateKind, n: usize) -> String {
    let mut h = Sha256::new();
    h.update(GRID_MAGIC);
    for v in pair.deformed().vertices() {
        for c in v.iter() {
            h.update(c.to_le_bytes());
        }
    }
    for f in pair.faces() {
        for i in f {
            h.update((*i as u64).to_le_bytes());
        }
    }
    h.update(kind_code(kind).to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Checks that a loaded grid belongs to the deformed cage of `pair`.
pub fn check_grid_matches(grid: &CoordGrid, pair: &CagePair, kind: CoordinateKind) -> Result<()> {
    let cage = pair.deformed();
    let expected_faces = if kind.uses_faces() { cage.faces().len() } else { 0 };
    if grid.kind != kind || grid.vertex_count != cage.vertices().len() || grid.face_count != expected_faces {
        return Err(Error::InvalidGrid(format!(
            "grid ({} with {} vertices) does not match the {kind} cage with {} vertices",
            grid.kind,
            grid.vertex_count,
            cage.vertices().len()
        )));
    }
    let bbox = cage.bbox().ok_or_else(|| Error::InvalidMesh("empty cage".into()))?;
    let expect = Lattice::around(&bbox, grid.res(), GRID_MARGIN)?.domain();
    let got = grid.domain();
    let tol = 1e-9 * expect.diagonal();
    if (expect.min - got.min).norm() > tol || (expect.max - got.max).norm() > tol {
        return Err(Error::InvalidGrid("grid domain does not match the deformed cage".into()));
    }
    Ok(())
}

/// Loads the grid for `(pair, kind, n)` from `dir` or computes and stores it.
pub fn load_or_precompute(pair: &CagePair, kind: CoordinateKind, n: usize, dir: &Path) -> Result<CoordGrid> {
    let path: PathBuf = dir.join(format!("{}.cwg", cache_key(pair, kind, n)));
    if path.exists() {
        match load_coord_grid(&path).and_then(|g| check_grid_matches(&g, pair, kind).map(|_| g)) {
            Ok(g) => {
                log::info!("loaded cached coordinate grid {}", path.display());
                return Ok(g);
            }
            Err(e) => log::warn!("ignoring unusable cache file: {e}"),
        }
    }
    let grid = precompute_coord_grid(pair, kind, n)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
    save_coord_grid(&grid, &path)?;
    Ok(grid)
}
