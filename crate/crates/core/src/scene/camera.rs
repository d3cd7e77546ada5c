//! Pinhole camera: pixel intrinsics plus a world-to-camera rigid pose.

use serde::{Deserialize, Serialize};

use crate::{Mat3, Vec3};

/// Camera convention: `x_cam = rotation * x_world + translation`, camera
/// looks down +z, pixel (0,0) is the top-left corner, pixel centers sit at
/// half-integer coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation, orthonormal.
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Camera {
    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    /// Unit world-space direction of the ray through image point (px, py).
    pub fn ray_dir(&self, px: f64, py: f64) -> Vec3 {
        let dir_cam = Vec3::new((px - self.cx) / self.fx, (py - self.cy) / self.fy, 1.0);
        (self.rotation.transpose() * dir_cam).normalize()
    }

    /// Ray through the center of pixel (x, y).
    pub fn pixel_ray(&self, x: usize, y: usize) -> (Vec3, Vec3) {
        (self.center(), self.ray_dir(x as f64 + 0.5, y as f64 + 0.5))
    }

    /// Project a world point to image coordinates and camera-space depth.
    /// Returns `None` behind the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let pc = self.rotation * p + self.translation;
        if pc.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * pc.x / pc.z + self.cx,
            self.fy * pc.y / pc.z + self.cy,
            pc.z,
        ))
    }

    /// A camera at `eye` looking at `target` with the given up hint.
    pub fn look_at(
        width: usize,
        height: usize,
        fov_y_deg: f64,
        eye: Vec3,
        target: Vec3,
        up: Vec3,
    ) -> Self {
        let fwd = (target - eye).normalize();
        let right = fwd.cross(&up).normalize();
        let down = fwd.cross(&right).normalize();
        // rows of world-to-camera rotation: x right, y down, z forward
        let rotation = Mat3::from_rows(&[
            right.transpose(),
            down.transpose(),
            fwd.transpose(),
        ]);
        let translation = -(rotation * eye);
        let fy = height as f64 / (2.0 * (fov_y_deg.to_radians() / 2.0).tan());
        Camera {
            width,
            height,
            fx: fy,
            fy,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            rotation,
            translation,
        }
    }
}
