//! Quantitative evaluation: Chamfer distance, normal angular error, PSNR.

pub mod chamfer;
pub mod extract;
pub mod ply;

pub use chamfer::{chamfer_l1, KdTree};
pub use extract::extract_points;
pub use ply::{read_ply, write_ply};

use serde::Serialize;

use crate::img::{ImageGray, ImageRgb};
use crate::{Error, Result, Vec3};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Aggregate metrics for one evaluated scene.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub chamfer_l1: f64,
    /// Mean angular error of normals in degrees, when normal ground truth
    /// was available.
    pub normal_mae_deg: Option<f64>,
    pub psnr_db: f64,
    pub ssim: f64,
    pub per_view: Vec<ViewMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViewMetrics {
    pub view: usize,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "chamfer_l1,normal_mae_deg,psnr_db,ssim";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.8},{},{:.4},{:.6}",
            self.chamfer_l1,
            self.normal_mae_deg
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default(),
            self.psnr_db,
            self.ssim
        )
    }
}

/// Peak signal-to-noise ratio in dB over [0,1] images, capped for
/// identical inputs.
pub fn psnr(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    a.same_dims(b)?;
    let mse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

/// Mean angular error between unit-normal images over masked pixels, in
/// degrees. Pixels are Vec3 normals stored as images.
pub fn normal_mae(pred: &[Vec3], gt: &[Vec3], mask: &ImageGray) -> Result<f64> {
    if pred.len() != gt.len() || pred.len() != mask.data.len() {
        return Err(Error::Dimension("normal image sizes disagree".into()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..pred.len() {
        if mask.data[i] <= 0.5 {
            continue;
        }
        let cos = pred[i].dot(&gt[i]).clamp(-1.0, 1.0);
        sum += cos.acos().to_degrees();
        count += 1;
    }
    if count == 0 {
        return Err(Error::Dimension("normal MAE over an empty mask".into()));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psnr_closed_forms() {
        // MSE = 0.01 -> 20 dB
        let a = ImageRgb::new(10, 10);
        let mut b = ImageRgb::new(10, 10);
        for v in &mut b.data {
            *v = 0.1;
        }
        assert_relative_eq!(psnr(&a, &b).unwrap(), 20.0, epsilon = 1e-12);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
    }

    #[test]
    fn psnr_of_seeded_noise_matches_prediction() {
        let mut a = ImageRgb::new(32, 32);
        for v in &mut a.data {
            *v = 0.5;
        }
        let mut b = a.clone();
        // deterministic +-sigma alternation: exact MSE = sigma^2
        let sigma = 0.05;
        for (i, v) in b.data.iter_mut().enumerate() {
            *v += if i % 2 == 0 { sigma } else { -sigma };
        }
        let expect = -10.0 * (sigma * sigma).log10();
        assert_relative_eq!(psnr(&a, &b).unwrap(), expect, epsilon = 0.2);
    }

    #[test]
    fn mae_closed_forms() {
        let n = 16;
        let mask = {
            let mut m = ImageGray::new(n, 1);
            for v in &mut m.data {
                *v = 1.0;
            }
            m
        };
        let up = vec![Vec3::y(); n];
        assert_relative_eq!(normal_mae(&up, &up, &mask).unwrap(), 0.0, epsilon = 1e-12);
        let right = vec![Vec3::x(); n];
        assert_relative_eq!(normal_mae(&up, &right, &mask).unwrap(), 90.0, epsilon = 1e-9);
    }

    #[test]
    fn mae_constructed_rotation() {
        // normals orthogonal to the rotation axis, rotated by 10 degrees
        let n = 64;
        let axis = Vec3::z();
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            10.0f64.to_radians(),
        );
        let mut pred = Vec::new();
        let mut gt = Vec::new();
        for i in 0..n {
            let angle = i as f64 / n as f64 * std::f64::consts::TAU;
            let v = Vec3::new(angle.cos(), angle.sin(), 0.0);
            gt.push(v);
            pred.push(rot * v);
        }
        let mask = {
            let mut m = ImageGray::new(n, 1);
            for v in &mut m.data {
                *v = 1.0;
            }
            m
        };
        assert_relative_eq!(
            normal_mae(&pred, &gt, &mask).unwrap(),
            10.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn mae_empty_mask_is_error() {
        let mask = ImageGray::new(4, 1);
        let v = vec![Vec3::y(); 4];
        assert!(normal_mae(&v, &v, &mask).is_err());
    }

    #[test]
    fn mae_rotation_invariance() {
        let mut pred = Vec::new();
        let mut gt = Vec::new();
        let mut s = 5u64;
        let mut next = move || {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..32 {
            pred.push(Vec3::new(next() - 0.5, next() - 0.5, next() - 0.5).normalize());
            gt.push(Vec3::new(next() - 0.5, next() - 0.5, next() - 0.5).normalize());
        }
        let mask = {
            let mut m = ImageGray::new(32, 1);
            for v in &mut m.data {
                *v = 1.0;
            }
            m
        };
        let base = normal_mae(&pred, &gt, &mask).unwrap();
        let rot = nalgebra::Rotation3::from_euler_angles(1.0, 0.5, -0.3);
        let rp: Vec<Vec3> = pred.iter().map(|v| rot * v).collect();
        let rg: Vec<Vec3> = gt.iter().map(|v| rot * v).collect();
        let rotated = normal_mae(&rp, &rg, &mask).unwrap();
        assert_relative_eq!(base, rotated, epsilon = 1e-6);
    }
}
