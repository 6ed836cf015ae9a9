//! Analytic scenes made of spheres and boxes, baked into voxel fields.
//!
//! JSON form:
//!
//! ```json
//! {
//!   "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
//!   "primitives": [
//!     {"type": "sphere", "center": [0, 0, 0], "radius": 0.3,
//!      "density": 40, "rgb": [0.8, 0.3, 0.2],
//!      "lobe": {"axis": [0, 0, 1], "amplitude": 0.2}},
//!     {"type": "box", "min": [0.1, -0.2, -0.2], "max": [0.4, 0.2, 0.2],
//!      "density": 30, "rgb": [0.2, 0.5, 0.8]}
//!   ],
//!   "sh_degree": 1
//! }
//! ```
//!
//! `lobe` and `sh_degree` are optional. Where primitives overlap, the one
//! listed last wins.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::sh::{sh_len, SH_C0, SH_C1};
use crate::field::VoxelRadianceField;
use crate::geometry::{Aabb, Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl DomainSpec {
    pub fn aabb(&self) -> Result<Aabb> {
        Aabb::new(Point3::from(self.min), Point3::from(self.max)).map_err(|e| Error::InvalidScene(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Sphere { center: [f64; 3], radius: f64 },
    Box { min: [f64; 3], max: [f64; 3] },
}

impl Shape {
    pub fn contains(&self, p: &Point3) -> bool {
        match self {
            Shape::Sphere { center, radius } => (p - Point3::from(*center)).norm() <= *radius,
            Shape::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]),
        }
    }

    pub fn bounds(&self) -> (Point3, Point3) {
        match self {
            Shape::Sphere { center, radius } => {
                let c = Point3::from(*center);
                (c - Vec3::repeat(*radius), c + Vec3::repeat(*radius))
            }
            Shape::Box { min, max } => (Point3::from(*min), Point3::from(*max)),
        }
    }
}

/// View-dependent color term `amplitude * (axis · d) / 2` added to every channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub axis: [f64; 3],
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub density: f64,
    pub rgb: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lobe: Option<Lobe>,
}

impl Primitive {
    /// Color seen along unit direction `d`, before clamping.
    pub fn color(&self, d: &Vec3) -> [f64; 3] {
        let extra = self
            .lobe
            .map_or(0.0, |l| 0.5 * l.amplitude * Vec3::from(l.axis).normalize().dot(d));
        self.rgb.map(|c| c + extra)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSceneSpec {
    pub domain: DomainSpec,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sh_degree: Option<u32>,
}

impl AnalyticSceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: AnalyticSceneSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        Self::from_json(&text).map_err(|e| e.at(path))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene specs serialize")
    }

    /// Degree used when baking: the explicit override, else 1 if any lobe is present.
    pub fn effective_degree(&self) -> u32 {
        self.sh_degree
            .unwrap_or(if self.primitives.iter().any(|p| p.lobe.is_some()) { 1 } else { 0 })
    }

    pub fn validate(&self) -> Result<()> {
        let domain = self.domain.aabb()?;
        let degree = self.effective_degree();
        if degree > 2 {
            return Err(Error::InvalidScene(format!("sh_degree {degree} > 2")));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if !(p.density >= 0.0) || !p.density.is_finite() {
                return Err(Error::InvalidScene(format!("primitive {i}: density must be non-negative")));
            }
            if p.rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::InvalidScene(format!("primitive {i}: rgb must lie in [0, 1]")));
            }
            match p.shape {
                Shape::Sphere { radius, .. } if !(radius > 0.0) => {
                    return Err(Error::InvalidScene(format!("primitive {i}: radius must be positive")));
                }
                Shape::Box { min, max } if (0..3).any(|a| !(min[a] < max[a])) => {
                    return Err(Error::InvalidScene(format!("primitive {i}: box min must be below max")));
                }
                _ => {}
            }
            if let Some(l) = p.lobe {
                if !(Vec3::from(l.axis).norm() > 0.0) || !l.amplitude.is_finite() {
                    return Err(Error::InvalidScene(format!("primitive {i}: lobe needs a non-zero axis")));
                }
                if degree == 0 {
                    return Err(Error::InvalidScene(format!("primitive {i}: lobes need sh_degree >= 1")));
                }
            }
            let (lo, hi) = p.shape.bounds();
            if !(domain.contains(&lo) && domain.contains(&hi)) {
                return Err(Error::InvalidScene(format!("primitive {i} extends outside the domain")));
            }
        }
        Ok(())
    }

    /// The primitive that determines the scene at `p`, if any.
    pub fn primitive_at(&self, p: &Point3) -> Option<&Primitive> {
        self.primitives.iter().rev().find(|prim| prim.shape.contains(p))
    }

    /// Exact density and (unclamped) color at `p` seen along `d`.
    pub fn eval(&self, p: &Point3, d: &Vec3) -> ([f64; 3], f64) {
        match self.primitive_at(p) {
            Some(prim) => (prim.color(d), prim.density),
            None => ([0.0; 3], 0.0),
        }
    }
}

/// Samples `spec` at every node of a `dims` grid over its domain.
pub fn bake_analytic(spec: &AnalyticSceneSpec, dims: [usize; 3]) -> Result<VoxelRadianceField> {
    spec.validate()?;
    let domain = spec.domain.aabb()?;
    let degree = spec.effective_degree();
    let k = sh_len(degree);
    let nodes = dims.iter().product::<usize>();
    let mut density = vec![0f32; nodes];
    let mut coeffs = vec![0f32; nodes * 3 * k];
    let probe = VoxelRadianceField::new(dims, domain, degree, vec![0.0; nodes], vec![0.0; nodes * 3 * k])?;
    for kk in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let node = i + dims[0] * (j + dims[1] * kk);
                let Some(prim) = spec.primitive_at(&probe.node_position(i, j, kk)) else {
                    continue;
                };
                density[node] = prim.density as f32;
                let c = &mut coeffs[node * 3 * k..(node + 1) * 3 * k];
                for ch in 0..3 {
                    c[ch * k] = (prim.rgb[ch] / SH_C0) as f32;
                    if let Some(l) = prim.lobe {
                        let a = Vec3::from(l.axis).normalize() * (0.5 * l.amplitude / SH_C1);
                        c[ch * k + 1] = -a.y as f32;
                        c[ch * k + 2] = a.z as f32;
                        c[ch * k + 3] = -a.x as f32;
                    }
                }
            }
        }
    }
    VoxelRadianceField::new(dims, domain, degree, density, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitDir3;

    const SCENE: &str = r#"{
        "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
        "primitives": [
            {"type": "sphere", "center": [0, 0, 0], "radius": 0.5, "density": 10,
             "rgb": [0.5, 0.5, 0.5], "lobe": {"axis": [0, 0, 1], "amplitude": 0.2}},
            {"type": "box", "min": [0.2, -0.1, -0.1], "max": [0.6, 0.1, 0.1], "density": 3, "rgb": [0, 1, 0]}
        ]
    }"#;

    #[test]
    fn parses_and_bakes() {
        let spec = AnalyticSceneSpec::from_json(SCENE).unwrap();
        assert_eq!(spec.effective_degree(), 1);
        let f = bake_analytic(&spec, [21, 21, 21]).unwrap();
        let up = UnitDir3::new_normalize(Vec3::z());
        let down = UnitDir3::new_normalize(-Vec3::z());
        let (c1, s) = f.sample(&Point3::new(-0.1, 0.0, 0.0), &up);
        let (c2, _) = f.sample(&Point3::new(-0.1, 0.0, 0.0), &down);
        assert!((s - 10.0).abs() < 1e-5);
        assert!((c1[0] - c2[0] - 0.2).abs() < 1e-5);
        // The later box wins where it overlaps the sphere.
        let (c, s) = f.sample(&Point3::new(0.3, 0.0, 0.0), &up);
        assert!((s - 3.0).abs() < 1e-5 && (c[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_primitives() {
        let mut spec = AnalyticSceneSpec::from_json(SCENE).unwrap();
        spec.primitives[0].shape = Shape::Sphere { center: [0.8, 0.0, 0.0], radius: 0.5 };
        assert!(matches!(bake_analytic(&spec, [4, 4, 4]), Err(Error::InvalidScene(_))));
        spec.primitives[0].shape = Shape::Sphere { center: [0.0; 3], radius: 0.5 };
        spec.primitives[1].rgb = [2.0, 0.0, 0.0];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn empty_spec_bakes_to_zero() {
        let spec = AnalyticSceneSpec::from_json(r#"{"domain": {"min": [0,0,0], "max": [1,1,1]}}"#).unwrap();
        let f = bake_analytic(&spec, [5, 5, 5]).unwrap();
        assert!(f.density().iter().all(|&d| d == 0.0));
        assert!(f.coeffs().iter().all(|&c| c == 0.0));
    }
}
