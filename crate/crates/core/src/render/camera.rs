use std::path::Path;

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitDir3, Vec3};
use crate::io_util::write_atomic;

/// Pinhole camera looking along its local −z axis with +y up.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Camera-to-world transform.
    pub c2w: Matrix4<f64>,
}

/// Largest deviation of `r` from an orthonormal matrix.
fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

impl Camera {
    pub fn new(width: usize, height: usize, fx: f64, fy: f64, cx: f64, cy: f64, c2w: Matrix4<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera("image size must be positive".into()));
        }
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::InvalidCamera(format!("focal lengths must be positive, got {fx}, {fy}")));
        }
        if c2w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite pose".into()));
        }
        let r: Matrix3<f64> = c2w.fixed_view::<3, 3>(0, 0).into();
        let err = orthonormality_error(&r);
        if err > 1e-6 {
            return Err(Error::InvalidCamera(format!("rotation is not orthonormal (error {err:.2e})")));
        }
        Ok(Camera {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
            c2w,
        })
    }

    /// Camera with horizontal field of view `angle_x` and the principal point at the image center.
    pub fn from_fov(width: usize, height: usize, angle_x: f64, c2w: Matrix4<f64>) -> Result<Self> {
        if !(angle_x > 0.0 && angle_x < std::f64::consts::PI) {
            return Err(Error::InvalidCamera(format!("camera_angle_x {angle_x} outside (0, π)")));
        }
        let f = width as f64 / (2.0 * (0.5 * angle_x).tan());
        Self::new(width, height, f, f, width as f64 / 2.0, height as f64 / 2.0, c2w)
    }

    /// Camera at `eye` looking at `target`.
    pub fn look_at(width: usize, height: usize, angle_x: f64, eye: Point3, target: Point3, up: Vec3) -> Result<Self> {
        let back = (eye - target)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("eye and target coincide".into()))?;
        let right = up
            .cross(&back)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("up is parallel to the view direction".into()))?;
        let true_up = back.cross(&right);
        let mut m = Matrix4::identity();
        for r in 0..3 {
            m[(r, 0)] = right[r];
            m[(r, 1)] = true_up[r];
            m[(r, 2)] = back[r];
            m[(r, 3)] = eye[r];
        }
        Self::from_fov(width, height, angle_x, m)
    }

    pub fn origin(&self) -> Point3 {
        Point3::new(self.c2w[(0, 3)], self.c2w[(1, 3)], self.c2w[(2, 3)])
    }

    pub fn angle_x(&self) -> f64 {
        2.0 * (self.width as f64 / (2.0 * self.fx)).atan()
    }

    /// Unit direction through the center of pixel `(i, j)` (column, row).
    pub fn ray_direction(&self, i: usize, j: usize) -> UnitDir3 {
        let local = Vec3::new(
            (i as f64 + 0.5 - self.cx) / self.fx,
            -(j as f64 + 0.5 - self.cy) / self.fy,
            -1.0,
        );
        let r = self.c2w.fixed_view::<3, 3>(0, 0);
        UnitDir3::new_normalize(r * local)
    }
}

/// Origin and direction of every pixel ray, row by row.
pub fn camera_rays(camera: &Camera) -> Vec<(Point3, UnitDir3)> {
    let o = camera.origin();
    (0..camera.height)
        .flat_map(|j| (0..camera.width).map(move |i| (o, camera.ray_direction(i, j))))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraFile {
    camera_angle_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<usize>,
    frames: Vec<Frame>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Frame {
    transform_matrix: [[f64; 4]; 4],
}

/// Parses a camera document. `size` gives the image size unless the document
/// carries `w`/`h` keys.
pub fn parse_cameras(text: &str, size: Option<(usize, usize)>) -> Result<Vec<Camera>> {
    let file: CameraFile = serde_json::from_str(text)?;
    let (w, h) = match (file.w, file.h, size) {
        (_, _, Some(s)) => s,
        (Some(w), Some(h), None) => (w, h),
        _ => (800, 800),
    };
    file.frames
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let mut m = Matrix4::zeros();
            for r in 0..4 {
                for c in 0..4 {
                    m[(r, c)] = f.transform_matrix[r][c];
                }
            }
            let rot: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
            let err = orthonormality_error(&rot);
            if !(err <= 1e-4) {
                return Err(Error::InvalidCamera(format!(
                    "frame {idx}: rotation is not orthonormal (error {err:.2e})"
                )));
            }
            // Snap small rounding errors in stored poses back to a rotation.
            let svd = rot.svd(true, true);
            let snapped = svd.u.unwrap() * svd.v_t.unwrap();
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&snapped);
            Camera::from_fov(w, h, file.camera_angle_x, m).map_err(|e| match e {
                Error::InvalidCamera(msg) => Error::InvalidCamera(format!("frame {idx}: {msg}")),
                other => other,
            })
        })
        .collect()
}

pub fn load_cameras(path: impl AsRef<Path>, size: Option<(usize, usize)>) -> Result<Vec<Camera>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
    parse_cameras(&text, size).map_err(|e| e.at(path))
}

/// Serializes cameras sharing one field of view and image size.
pub fn cameras_to_json(cameras: &[Camera]) -> Result<String> {
    let first = cameras
        .first()
        .ok_or_else(|| Error::InvalidCamera("no cameras to save".into()))?;
    let file = CameraFile {
        camera_angle_x: first.angle_x(),
        w: Some(first.width),
        h: Some(first.height),
        frames: cameras
            .iter()
            .map(|c| {
                let mut t = [[0.0; 4]; 4];
                for (r, row) in t.iter_mut().enumerate() {
                    for (col, v) in row.iter_mut().enumerate() {
                        *v = c.c2w[(r, col)];
                    }
                }
                Frame { transform_matrix: t }
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn save_cameras(cameras: &[Camera], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), cameras_to_json(cameras)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_and_off_axis_rays() {
        let c = Camera::new(4, 4, 4.0, 4.0, 2.0, 2.0, Matrix4::identity()).unwrap();
        // Pixel centers straddle the principal point; check one focal length off-axis instead.
        let cam = Camera::new(9, 9, 4.0, 4.0, 4.5, 4.5, Matrix4::identity()).unwrap();
        assert!((cam.ray_direction(4, 4).into_inner() - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        let d = Camera::new(3, 1, 1.0, 1.0, -0.5, 0.5, Matrix4::identity()).unwrap().ray_direction(0, 0);
        assert!((d.z.abs().acos() - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        for (_, r) in camera_rays(&c) {
            assert!((r.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fov_and_round_trip() {
        let c = Camera::look_at(800, 600, std::f64::consts::FRAC_PI_2, Point3::new(2.0, 1.0, 3.0), Point3::origin(), Vec3::y())
            .unwrap();
        assert!((c.fx - 400.0).abs() < 1e-9);
        let back = parse_cameras(&cameras_to_json(&[c.clone()]).unwrap(), None).unwrap();
        assert_eq!(back[0].width, 800);
        assert!((back[0].c2w - c.c2w).abs().max() < 1e-9);
        let dir = c.ray_direction(400, 300).into_inner();
        assert!((dir + Vec3::new(2.0, 1.0, 3.0).normalize()).norm() < 3e-3);
    }

    #[test]
    fn skewed_pose_is_rejected() {
        let text = r#"{"camera_angle_x": 1.0, "frames": [{"transform_matrix":
            [[1, 0.1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]}]}"#;
        assert!(matches!(parse_cameras(text, Some((4, 4))), Err(Error::InvalidCamera(_))));
    }
}
