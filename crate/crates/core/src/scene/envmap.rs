//! Latitude-longitude radiance grids.
//!
//! Mapping (y-up): theta = acos(y) indexes rows over [0, pi], phi =
//! atan2(x, z) indexes columns over [-pi, pi). Columns wrap, rows clamp.

use std::path::Path;

use crate::img::{read_pfm_rgb, write_pfm_rgb, ImageRgb};
use crate::{Error, Result, Vec3};

/// One lat-long radiance grid (the base environment map or one prefiltered
/// mip level).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvGrid {
    pub width: usize,
    pub height: usize,
    /// `3 * (row * width + col) + channel`
    pub data: Vec<f64>,
}

/// Bilinear tap footprint of one directional sample, reused by the
/// backward passes: four (texel, weight) pairs plus the derivative of the
/// continuous texel coordinates w.r.t. the direction.
#[derive(Debug, Clone, Copy)]
pub struct EnvTapGrad {
    pub taps: [(usize, f64); 4],
    pub dfu_ddir: Vec3,
    pub dfv_ddir: Vec3,
    /// d(sample)/d(fu), d(sample)/d(fv) per channel.
    pub dval_dfu: Vec3,
    pub dval_dfv: Vec3,
}

impl EnvGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn constant(width: usize, height: usize, radiance: Vec3) -> Self {
        let mut g = Self::new(width, height);
        for t in 0..width * height {
            g.data[t * 3] = radiance.x;
            g.data[t * 3 + 1] = radiance.y;
            g.data[t * 3 + 2] = radiance.z;
        }
        g
    }

    #[inline]
    pub fn texel(&self, col: usize, row: usize) -> Vec3 {
        let i = 3 * (row * self.width + col);
        Vec3::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set_texel(&mut self, col: usize, row: usize, v: Vec3) {
        let i = 3 * (row * self.width + col);
        self.data[i] = v.x;
        self.data[i + 1] = v.y;
        self.data[i + 2] = v.z;
    }

    /// Unit direction of the texel center (col, row).
    pub fn texel_dir(&self, col: usize, row: usize) -> Vec3 {
        let u = (col as f64 + 0.5) / self.width as f64;
        let v = (row as f64 + 0.5) / self.height as f64;
        dir_from_uv(u, v)
    }

    /// Solid angle subtended by texels in `row`.
    pub fn texel_solid_angle(&self, row: usize) -> f64 {
        let theta = (row as f64 + 0.5) / self.height as f64 * std::f64::consts::PI;
        theta.sin() * (std::f64::consts::PI / self.height as f64)
            * (2.0 * std::f64::consts::PI / self.width as f64)
    }

    /// Continuous texel coordinates of a unit direction.
    #[inline]
    fn uv(&self, dir: Vec3) -> (f64, f64) {
        let phi = dir.x.atan2(dir.z);
        let theta = dir.y.clamp(-1.0, 1.0).acos();
        let u = phi / (2.0 * std::f64::consts::PI) + 0.5;
        let v = theta / std::f64::consts::PI;
        (
            u * self.width as f64 - 0.5,
            v * self.height as f64 - 0.5,
        )
    }

    #[inline]
    fn tap_indices(&self, fu: f64, fv: f64) -> ([(usize, f64); 4], f64, f64) {
        let w = self.width as isize;
        let h = self.height as isize;
        let c0 = fu.floor() as isize;
        let r0f = fv.floor();
        let wu = fu - c0 as f64;
        let wv = fv - r0f;
        let r0 = (r0f as isize).clamp(0, h - 1);
        let r1 = (r0f as isize + 1).clamp(0, h - 1);
        let cwrap = |c: isize| -> usize { c.rem_euclid(w) as usize };
        let (c0w, c1w) = (cwrap(c0), cwrap(c0 + 1));
        let idx = |c: usize, r: isize| r as usize * self.width + c;
        (
            [
                (idx(c0w, r0), (1.0 - wu) * (1.0 - wv)),
                (idx(c1w, r0), wu * (1.0 - wv)),
                (idx(c0w, r1), (1.0 - wu) * wv),
                (idx(c1w, r1), wu * wv),
            ],
            wu,
            wv,
        )
    }

    /// Bilinear radiance lookup along a unit direction.
    pub fn sample(&self, dir: Vec3) -> Vec3 {
        let (fu, fv) = self.uv(dir);
        let (taps, _, _) = self.tap_indices(fu, fv);
        let mut out = Vec3::zeros();
        for (t, w) in taps {
            out += Vec3::new(self.data[3 * t], self.data[3 * t + 1], self.data[3 * t + 2]) * w;
        }
        out
    }

    /// Lookup plus everything the backward pass needs: tap weights for the
    /// texel gradient and coordinate derivatives for the direction gradient.
    pub fn sample_with_grad(&self, dir: Vec3) -> (Vec3, EnvTapGrad) {
        let (fu, fv) = self.uv(dir);
        let (taps, wu, wv) = self.tap_indices(fu, fv);
        let v = |k: usize| {
            let t = taps[k].0;
            Vec3::new(self.data[3 * t], self.data[3 * t + 1], self.data[3 * t + 2])
        };
        let (v00, v10, v01, v11) = (v(0), v(1), v(2), v(3));
        let value = v00 * taps[0].1 + v10 * taps[1].1 + v01 * taps[2].1 + v11 * taps[3].1;
        let dval_dfu = (v10 - v00) * (1.0 - wv) + (v11 - v01) * wv;
        let dval_dfv = (v01 - v00) * (1.0 - wu) + (v11 - v10) * wu;

        // fu = (atan2(x,z)/(2pi) + 0.5) * W - 0.5
        let denom = (dir.x * dir.x + dir.z * dir.z).max(1e-12);
        let ku = self.width as f64 / (2.0 * std::f64::consts::PI);
        let dfu_ddir = Vec3::new(dir.z / denom, 0.0, -dir.x / denom) * ku;
        // fv = (acos(y)/pi) * H - 0.5
        let sin_theta = (1.0 - dir.y * dir.y).max(1e-12).sqrt();
        let kv = self.height as f64 / std::f64::consts::PI;
        let dfv_ddir = Vec3::new(0.0, -kv / sin_theta, 0.0);

        (
            value,
            EnvTapGrad {
                taps,
                dfu_ddir,
                dfv_ddir,
                dval_dfu,
                dval_dfv,
            },
        )
    }

    /// Total radiant energy, sum of texel radiance times solid angle.
    pub fn total_energy(&self) -> Vec3 {
        let mut e = Vec3::zeros();
        for row in 0..self.height {
            let sa = self.texel_solid_angle(row);
            for col in 0..self.width {
                e += self.texel(col, row) * sa;
            }
        }
        e
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (i, x) in self.data.iter().enumerate() {
            if !x.is_finite() {
                v.push(format!("non-finite radiance at flat index {i}"));
                break;
            }
            if *x < 0.0 {
                v.push(format!("negative radiance {x} at flat index {i}"));
                break;
            }
        }
        v
    }

    pub fn to_image(&self) -> ImageRgb {
        ImageRgb {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    pub fn from_image(img: &ImageRgb) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.data.clone(),
        }
    }

    pub fn save_pfm(&self, path: &Path) -> Result<()> {
        write_pfm_rgb(path, &self.to_image())
    }

    pub fn load_pfm(path: &Path) -> Result<Self> {
        let img = read_pfm_rgb(path)?;
        let env = Self::from_image(&img);
        if let Some(msg) = env.validate().into_iter().next() {
            return Err(Error::Invariant(format!(
                "environment map {}: {msg}",
                path.display()
            )));
        }
        Ok(env)
    }
}

/// Direction from normalized (u, v) in [0,1]^2.
pub fn dir_from_uv(u: f64, v: f64) -> Vec3 {
    let phi = (u - 0.5) * 2.0 * std::f64::consts::PI;
    let theta = v * std::f64::consts::PI;
    Vec3::new(
        theta.sin() * phi.sin(),
        theta.cos(),
        theta.sin() * phi.cos(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn texel_dir_round_trips_through_sampling() {
        let mut g = EnvGrid::new(16, 8);
        g.set_texel(5, 3, Vec3::new(1.0, 2.0, 3.0));
        let d = g.texel_dir(5, 3);
        // sampling exactly at a texel center returns that texel
        assert_relative_eq!(g.sample(d).x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(g.sample(d).z, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn solid_angles_sum_to_sphere() {
        let g = EnvGrid::new(32, 16);
        let total: f64 = (0..16).map(|r| g.texel_solid_angle(r) * 32.0).sum();
        assert_relative_eq!(total, 4.0 * std::f64::consts::PI, max_relative = 5e-3);
    }

    #[test]
    fn constant_map_samples_constant() {
        let g = EnvGrid::constant(12, 6, Vec3::new(0.25, 0.5, 0.75));
        for &dir in &[
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0).normalize(),
            Vec3::new(-0.3, 0.4, 0.8).normalize(),
        ] {
            let s = g.sample(dir);
            assert_relative_eq!(s.x, 0.25, epsilon = 1e-12);
            assert_relative_eq!(s.y, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_grad_direction_derivative_matches_fd() {
        let mut g = EnvGrid::new(24, 12);
        // smooth pattern so bilinear facets stay nearly colinear
        for r in 0..12 {
            for c in 0..24 {
                let d = g.texel_dir(c, r);
                g.set_texel(
                    c,
                    r,
                    Vec3::new(
                        0.5 + 0.3 * d.x,
                        0.5 + 0.2 * d.y,
                        0.5 + 0.1 * d.z * d.x,
                    ),
                );
            }
        }
        let dir = Vec3::new(0.4, 0.5, 0.77).normalize();
        let (_, grad) = g.sample_with_grad(dir);
        let h = 1e-7;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (g.sample(dir + e) - g.sample(dir - e)) / (2.0 * h);
            let analytic = grad.dval_dfu * grad.dfu_ddir[k] + grad.dval_dfv * grad.dfv_ddir[k];
            for c in 0..3 {
                assert_relative_eq!(analytic[c], fd[c], epsilon = 1e-4, max_relative = 1e-3);
            }
        }
    }
}
