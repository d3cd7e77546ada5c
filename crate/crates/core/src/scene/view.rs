//! Training views and point clouds.

use crate::img::{ImageGray, ImageRgb};
use crate::{Error, Result, Vec3};

use super::camera::Camera;

/// One calibrated training image with optional clay target and mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainView {
    pub camera: Camera,
    pub rgb: ImageRgb,
    /// Reflection-free clay target, when supplied.
    pub clay: Option<ImageRgb>,
    /// Foreground mask (1 = object), when supplied.
    pub mask: Option<ImageGray>,
}

impl TrainView {
    pub fn validate(&self) -> Result<()> {
        if self.rgb.width != self.camera.width || self.rgb.height != self.camera.height {
            return Err(Error::Dimension(format!(
                "rgb {}x{} does not match camera {}x{}",
                self.rgb.width, self.rgb.height, self.camera.width, self.camera.height
            )));
        }
        if let Some(clay) = &self.clay {
            self.rgb.same_dims(clay)?;
        }
        if let Some(mask) = &self.mask {
            if mask.width != self.rgb.width || mask.height != self.rgb.height {
                return Err(Error::Dimension("mask does not match rgb".into()));
            }
        }
        Ok(())
    }
}

/// Point set with optional per-point unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            v.push("non-finite point coordinate".to_string());
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.points.len() {
                v.push("normal count does not match point count".to_string());
            }
            if normals.iter().any(|n| (n.norm() - 1.0).abs() > 1e-5) {
                v.push("non-unit normal".to_string());
            }
        }
        v
    }
}
