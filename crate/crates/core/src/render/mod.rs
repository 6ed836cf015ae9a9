//! Emission-absorption volume rendering of canonical or deformed fields.

mod camera;
mod image;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use camera::{camera_rays, cameras_to_json, load_cameras, parse_cameras, save_cameras, Camera};
pub use image::{
    disparity_gray, encode_image, encode_png, encode_ppm, to_u8, write_disparity, write_image, write_opacity,
    ImageFormat,
};

use crate::error::{Error, Result};
use crate::field::VoxelRadianceField;
use crate::geometry::{Aabb, Point3, UnitDir3};
use crate::warp::DeformedField;

/// Anything that answers `(x, d) -> (rgb, σ)` within known bounds.
pub trait RadianceQuery: Sync {
    /// The color may be reported as zero wherever σ is zero.
    fn query(&self, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64);
    /// Region outside of which the scene is empty.
    fn bounds(&self) -> Aabb;
}

impl RadianceQuery for VoxelRadianceField {
    fn query(&self, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64) {
        self.sample_visible(x, || *d)
    }

    fn bounds(&self) -> Aabb {
        *self.domain()
    }
}

impl RadianceQuery for DeformedField<'_> {
    fn query(&self, x: &Point3, d: &UnitDir3) -> ([f64; 3], f64) {
        self.query_visible(x, d)
    }

    fn bounds(&self) -> Aabb {
        DeformedField::bounds(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Samples per ray.
    pub samples: usize,
    /// Ray start distance; defaults to 5% of the scene bounds diagonal.
    pub near: Option<f64>,
    /// Ray end distance; defaults to the farthest corner of the scene bounds.
    pub far: Option<f64>,
    pub background: [f64; 3],
    pub white_background: bool,
    /// Rays stop once transmittance drops below this value (0 disables).
    pub transmittance_cutoff: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            samples: 512,
            near: None,
            far: None,
            background: [0.0; 3],
            white_background: false,
            transmittance_cutoff: 1e-4,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidConfig(format!("samples per ray must be >= 2, got {}", self.samples)));
        }
        if let Some(n) = self.near {
            if !(n > 0.0) {
                return Err(Error::InvalidConfig(format!("near must be positive, got {n}")));
            }
        }
        if let (Some(n), Some(f)) = (self.near, self.far) {
            if !(f > n) {
                return Err(Error::InvalidConfig(format!("far ({f}) must exceed near ({n})")));
            }
        }
        if !(0.0..1.0).contains(&self.transmittance_cutoff) {
            return Err(Error::InvalidConfig("transmittance cutoff must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn background_color(&self) -> [f64; 3] {
        if self.white_background {
            [1.0; 3]
        } else {
            self.background
        }
    }

    /// Near and far distances for `camera` looking at `bounds`.
    pub fn ray_range(&self, camera: &Camera, bounds: &Aabb) -> Result<(f64, f64)> {
        let near = self.near.unwrap_or(0.05 * bounds.diagonal());
        let o = camera.origin();
        let far = self
            .far
            .unwrap_or_else(|| bounds.corners().iter().map(|c| (c - o).norm()).fold(0.0, f64::max));
        if !(far > near) {
            return Err(Error::InvalidConfig(format!("far ({far}) must exceed near ({near})")));
        }
        Ok((near, far))
    }
}

/// Result of marching one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayResult {
    pub rgb: [f64; 3],
    pub opacity: f64,
    pub disparity: f64,
    pub depth: f64,
    /// Σ w_i over the samples taken.
    pub weight_sum: f64,
    /// Transmittance left at the end of the ray.
    pub transmittance: f64,
}

/// Midpoint quadrature of the emission-absorption integral along
/// `origin + t d`, `t ∈ [near, far]`.
pub fn volume_render_ray(
    query: impl Fn(&Point3, &UnitDir3) -> ([f64; 3], f64),
    origin: &Point3,
    dir: &UnitDir3,
    near: f64,
    far: f64,
    config: &RenderConfig,
) -> Result<RayResult> {
    let m = config.samples;
    let delta = (far - near) / m as f64;
    let mut t_acc = 1.0f64;
    let mut rgb = [0.0; 3];
    let mut weight_sum = 0.0;
    let mut depth_sum = 0.0;
    for i in 0..m {
        let t = near + (i as f64 + 0.5) * delta;
        let x = origin + dir.into_inner() * t;
        let (c, sigma) = query(&x, dir);
        if !sigma.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { x: x.x, y: x.y, z: x.z });
        }
        if sigma <= 0.0 {
            continue;
        }
        let alpha = 1.0 - (-sigma * delta).exp();
        let w = t_acc * alpha;
        for (o, ci) in rgb.iter_mut().zip(c) {
            *o += w * ci;
        }
        weight_sum += w;
        depth_sum += w * t;
        t_acc *= 1.0 - alpha;
        if t_acc < config.transmittance_cutoff {
            break;
        }
    }
    let bg = config.background_color();
    for (o, b) in rgb.iter_mut().zip(bg) {
        *o += t_acc * b;
    }
    let opacity = 1.0 - t_acc;
    let depth = depth_sum / weight_sum.max(1e-10);
    let disparity = if opacity < 1e-3 || depth <= 0.0 { 0.0 } else { opacity / depth };
    Ok(RayResult {
        rgb,
        opacity,
        disparity,
        depth,
        weight_sum,
        transmittance: t_acc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels in `[0, 1]`.
    pub rgb: Vec<[f64; 3]>,
    pub disparity: Vec<f64>,
    pub opacity: Vec<f64>,
}

/// Renders every pixel of `camera`; rows are processed in parallel and the
/// result does not depend on the number of worker threads.
pub fn render_image(scene: &impl RadianceQuery, camera: &Camera, config: &RenderConfig) -> Result<RenderOutput> {
    config.validate()?;
    let (near, far) = config.ray_range(camera, &scene.bounds())?;
    let origin = camera.origin();
    let rows: Vec<Result<Vec<RayResult>>> = (0..camera.height)
        .into_par_iter()
        .map(|j| {
            (0..camera.width)
                .map(|i| {
                    let dir = camera.ray_direction(i, j);
                    volume_render_ray(|x, d| scene.query(x, d), &origin, &dir, near, far, config)
                })
                .collect()
        })
        .collect();
    let n = camera.width * camera.height;
    let mut out = RenderOutput {
        width: camera.width,
        height: camera.height,
        rgb: Vec::with_capacity(n),
        disparity: Vec::with_capacity(n),
        opacity: Vec::with_capacity(n),
    };
    for row in rows {
        for r in row? {
            out.rgb.push(r.rgb.map(|c| c.clamp(0.0, 1.0)));
            out.disparity.push(r.disparity);
            out.opacity.push(r.opacity);
        }
    }
    Ok(out)
}

/// Peak signal-to-noise ratio in dB for images with values in `[0, 1]`.
pub fn psnr(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    assert_eq!(a.len(), b.len(), "images differ in size");
    let mut se = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        for c in 0..3 {
            se += (pa[c] - pb[c]).powi(2);
        }
    }
    let mse = se / (3 * a.len()) as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn slab_opacity_matches_analytic() {
        let cfg = RenderConfig {
            samples: 512,
            transmittance_cutoff: 0.0,
            ..RenderConfig::default()
        };
        let slab = |x: &Point3, _: &UnitDir3| if x.z > 1.0 && x.z < 2.0 { ([1.0, 0.0, 0.0], 1.0) } else { ([0.0; 3], 0.0) };
        let dir = UnitDir3::new_normalize(Vec3::z());
        let r = volume_render_ray(slab, &Point3::origin(), &dir, 0.5, 2.5, &cfg).unwrap();
        assert!((r.opacity - (1.0 - (-1.0f64).exp())).abs() < 1e-3);
        assert!((r.weight_sum + r.transmittance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ray_shows_background() {
        let cfg = RenderConfig {
            background: [0.1, 0.2, 0.3],
            ..RenderConfig::default()
        };
        let dir = UnitDir3::new_normalize(Vec3::x());
        let r = volume_render_ray(|_, _| ([0.0; 3], 0.0), &Point3::origin(), &dir, 0.1, 1.0, &cfg).unwrap();
        assert_eq!((r.rgb, r.opacity, r.disparity), ([0.1, 0.2, 0.3], 0.0, 0.0));
    }

    #[test]
    fn non_finite_sample_is_an_error() {
        let dir = UnitDir3::new_normalize(Vec3::x());
        let r = volume_render_ray(|_, _| ([0.0; 3], f64::NAN), &Point3::origin(), &dir, 0.1, 1.0, &RenderConfig::default());
        assert!(matches!(r, Err(Error::NonFiniteSample { .. })));
    }
}
