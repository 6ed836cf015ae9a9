//! Cage coordinates: closed-form mean value and Green coordinates, a grid
//! solve for harmonic coordinates, and evaluation of weights against a target
//! cage.

mod green;
mod harmonic;
mod mvc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::predicates::distance_to_mesh;
use crate::geometry::winding_number;
use crate::geometry::{CagePair, Point3, TriMesh, Vec3};

pub use green::green_into;
pub use harmonic::{hc_grid_solve, HarmonicGrid, NodeKind};
pub use mvc::mvc_into;

/// Relative size of the exclusion zone around the cage surface.
pub const SURFACE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateKind {
    Mvc,
    Hc,
    Gc,
}

impl CoordinateKind {
    pub const ALL: [CoordinateKind; 3] = [CoordinateKind::Mvc, CoordinateKind::Hc, CoordinateKind::Gc];

    /// Whether per-point closed-form evaluation exists.
    pub fn has_closed_form(self) -> bool {
        !matches!(self, CoordinateKind::Hc)
    }

    /// Whether face weights are carried alongside vertex weights.
    pub fn uses_faces(self) -> bool {
        matches!(self, CoordinateKind::Gc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoordinateKind::Mvc => "mvc",
            CoordinateKind::Hc => "hc",
            CoordinateKind::Gc => "gc",
        }
    }
}

impl fmt::Display for CoordinateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoordinateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mvc" => Ok(CoordinateKind::Mvc),
            "hc" => Ok(CoordinateKind::Hc),
            "gc" => Ok(CoordinateKind::Gc),
            other => Err(Error::InvalidConfig(format!("unknown coordinate kind {other:?}"))),
        }
    }
}

/// Per-vertex weights, plus per-face weights for Green coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CageWeights {
    pub vertex: Vec<f64>,
    pub face: Vec<f64>,
}

impl CageWeights {
    pub fn vertex_sum(&self) -> f64 {
        self.vertex.iter().sum()
    }

    /// `Σ ω_j v_j + Σ ψ_k n_k` for the given vertices and (scaled) face normals.
    pub fn combine(&self, vertices: &[Point3], normals: &[Vec3]) -> Point3 {
        combine(&self.vertex, &self.face, vertices, normals)
    }
}

fn combine(vertex: &[f64], face: &[f64], vertices: &[Point3], normals: &[Vec3]) -> Point3 {
    let mut r = Vec3::zeros();
    for (v, w) in vertices.iter().zip(vertex) {
        r += v.coords * *w;
    }
    for (n, w) in normals.iter().zip(face) {
        r += n * *w;
    }
    Point3::from(r)
}

/// Unit outward normals of every face.
pub fn face_normals(mesh: &TriMesh) -> Vec<Vec3> {
    (0..mesh.faces().len()).map(|f| mesh.face_normal(f)).collect()
}

fn check_interior(cage: &TriMesh, x: &Point3) -> Result<()> {
    if !cage.is_watertight() {
        return Err(Error::NotWatertight);
    }
    let diag = cage.bbox().map_or(0.0, |b| b.diagonal());
    if distance_to_mesh(cage, x) < SURFACE_EPS * diag {
        return Err(Error::NearSurface);
    }
    if winding_number(cage, x) < 0.5 {
        return Err(Error::OutsideCage);
    }
    Ok(())
}

/// Mean value coordinates of a strict interior point.
pub fn mvc_weights(cage: &TriMesh, x: &Point3) -> Result<CageWeights> {
    check_interior(cage, x)?;
    let mut vertex = vec![0.0; cage.vertices().len()];
    if !eval_mvc(cage, x, &mut vertex) {
        return Err(Error::NearSurface);
    }
    Ok(CageWeights { vertex, face: Vec::new() })
}

/// Green coordinates of a strict interior point.
pub fn green_weights(cage: &TriMesh, x: &Point3) -> Result<CageWeights> {
    check_interior(cage, x)?;
    let normals = face_normals(cage);
    let mut vertex = vec![0.0; cage.vertices().len()];
    let mut face = vec![0.0; cage.faces().len()];
    if !eval_green(cage, &normals, x, &mut vertex, &mut face) {
        return Err(Error::NearSurface);
    }
    Ok(CageWeights { vertex, face })
}

/// Closed-form weights of the given kind; harmonic coordinates have none.
pub fn closed_form_weights(kind: CoordinateKind, cage: &TriMesh, x: &Point3) -> Result<CageWeights> {
    match kind {
        CoordinateKind::Mvc => mvc_weights(cage, x),
        CoordinateKind::Gc => green_weights(cage, x),
        CoordinateKind::Hc => Err(Error::PreciseHarmonic),
    }
}

// Query points that happen to sit on the line through a cage edge make the
// kernels divide by zero even though the coordinates are smooth there; a
// nudge far below any meaningful scale sidesteps that.
fn jitter(cage: &TriMesh, x: &Point3, attempt: usize) -> Point3 {
    let scale = cage.bbox().map_or(1.0, |b| b.diagonal()) * 1e-10 * attempt as f64;
    x + Vec3::new(0.3090169943749474, 0.5877852522924731, 0.7478944767327162) * scale
}

pub(crate) fn eval_mvc(cage: &TriMesh, x: &Point3, out: &mut [f64]) -> bool {
    (0..3).any(|a| mvc_into(cage.vertices(), cage.faces(), &jitter(cage, x, a), out))
}

// Green coordinates handle those lines themselves, and a nudge could carry a
// surface point outside where they vanish.
pub(crate) fn eval_green(cage: &TriMesh, normals: &[Vec3], x: &Point3, vout: &mut [f64], fout: &mut [f64]) -> bool {
    green_into(cage.vertices(), cage.faces(), normals, x, vout, fout)
}

/// Green stretch factors of every face going from `source` to `target`.
pub fn gc_stretch(source: &TriMesh, target: &TriMesh) -> Vec<f64> {
    source
        .faces()
        .iter()
        .map(|f| {
            let (a, b, c) = (source.vertices()[f[0]], source.vertices()[f[1]], source.vertices()[f[2]]);
            let (a2, b2, c2) = (target.vertices()[f[0]], target.vertices()[f[1]], target.vertices()[f[2]]);
            let (u, v) = (b - a, c - a);
            let (u2, v2) = (b2 - a2, c2 - a2);
            let area = 0.5 * u.cross(&v).norm();
            let num = u2.norm_squared() * v.norm_squared() - 2.0 * u2.dot(&v2) * u.dot(&v)
                + v2.norm_squared() * u.norm_squared();
            if area > 0.0 {
                num.max(0.0).sqrt() / (8f64.sqrt() * area)
            } else {
                1.0
            }
        })
        .collect()
}

/// Canonical cage geometry that weights computed on the deformed cage are
/// applied to.
#[derive(Debug, Clone)]
pub struct CageTarget {
    vertices: Vec<Point3>,
    scaled_normals: Vec<Vec3>,
}

impl CageTarget {
    pub fn new(pair: &CagePair) -> Self {
        let stretch = gc_stretch(pair.deformed(), pair.canonical());
        let scaled_normals = face_normals(pair.canonical())
            .into_iter()
            .zip(stretch)
            .map(|(n, s)| n * s)
            .collect();
        CageTarget {
            vertices: pair.canonical_vertices().to_vec(),
            scaled_normals,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.scaled_normals.len()
    }

    /// Applies raw weight slices; `face` is ignored unless the kind uses faces.
    pub fn apply_raw(&self, kind: CoordinateKind, vertex: &[f64], face: &[f64]) -> Point3 {
        if kind.uses_faces() {
            combine(vertex, face, &self.vertices, &self.scaled_normals)
        } else {
            combine(vertex, &[], &self.vertices, &[])
        }
    }

    pub fn apply(&self, weights: &CageWeights, kind: CoordinateKind) -> Result<Point3> {
        if weights.vertex.len() != self.vertices.len() {
            return Err(Error::WeightMismatch {
                expected: self.vertices.len(),
                got: weights.vertex.len(),
            });
        }
        if kind.uses_faces() && weights.face.len() != self.scaled_normals.len() {
            return Err(Error::WeightMismatch {
                expected: self.scaled_normals.len(),
                got: weights.face.len(),
            });
        }
        Ok(self.apply_raw(kind, &weights.vertex, &weights.face))
    }
}

/// Maps weights computed against `pair.deformed` onto the canonical cage.
pub fn apply_weights(weights: &CageWeights, pair: &CagePair, kind: CoordinateKind) -> Result<Point3> {
    CageTarget::new(pair).apply(weights, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn cube() -> TriMesh {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap()
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for k in CoordinateKind::ALL {
            assert_eq!(k.to_string().parse::<CoordinateKind>().unwrap(), k);
        }
        assert!("xyz".parse::<CoordinateKind>().is_err());
    }

    #[test]
    fn surface_and_outside_points_are_rejected() {
        let c = cube();
        let e = mvc_weights(&c, &Point3::new(0.5, 0.0, 0.0)).unwrap_err();
        assert_eq!(e.to_string(), "point too close to cage surface");
        assert!(matches!(green_weights(&c, &Point3::new(2.0, 0.0, 0.0)), Err(Error::OutsideCage)));
        assert!(matches!(
            closed_form_weights(CoordinateKind::Hc, &c, &Point3::origin()),
            Err(Error::PreciseHarmonic)
        ));
    }

    #[test]
    fn identity_stretch_is_one() {
        let c = cube();
        assert!(gc_stretch(&c, &c).iter().all(|s| (s - 1.0).abs() < 1e-12));
        let big = c.transformed(|p| Point3::from(p.coords * 2.0));
        assert!(gc_stretch(&c, &big).iter().all(|s| (s - 2.0).abs() < 1e-12));
    }

    #[test]
    fn translation_maps_back() {
        let canonical = cube();
        let t = Vec3::new(1.0, 0.0, 0.0);
        let deformed = canonical.transformed(|p| p + t);
        let pair = CagePair::new(canonical, deformed.clone()).unwrap();
        let x = Point3::new(1.1, 0.2, -0.3);
        for kind in [CoordinateKind::Mvc, CoordinateKind::Gc] {
            let w = closed_form_weights(kind, &deformed, &x).unwrap();
            let y = apply_weights(&w, &pair, kind).unwrap();
            assert!((y - Point3::new(0.1, 0.2, -0.3)).norm() < 1e-9, "{kind}: {y:?}");
        }
    }

    #[test]
    fn weight_count_is_checked() {
        let pair = CagePair::identity(cube()).unwrap();
        let w = CageWeights { vertex: vec![0.5; 3], face: vec![] };
        assert!(matches!(
            apply_weights(&w, &pair, CoordinateKind::Mvc),
            Err(Error::WeightMismatch { expected: 8, got: 3 })
        ));
    }
}
