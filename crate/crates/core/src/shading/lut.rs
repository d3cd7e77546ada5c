//! Split-sum BRDF lookup table.
//!
//! Texel (i, j) holds the scale/bias pair (A, B) of the view- and
//! roughness-dependent specular integral, so that the first split-sum
//! factor is approximately F0 * A + B. Indexed by cos(theta_v) along x and
//! roughness along y, sampled at texel centers.

use rayon::prelude::*;

use crate::{Error, Result, Vec3};

use super::ggx::{hammersley, sample_ggx_half_vector, smith_g_from_cos};

#[derive(Debug, Clone, PartialEq)]
pub struct BrdfLut {
    pub resolution: usize,
    /// Row-major (roughness-major) pairs (A, B).
    pub data: Vec<(f64, f64)>,
}

/// Value and partial derivatives of one LUT lookup.
#[derive(Debug, Clone, Copy)]
pub struct LutSample {
    pub a: f64,
    pub b: f64,
    pub da_dcos: f64,
    pub db_dcos: f64,
    pub da_drough: f64,
    pub db_drough: f64,
}

/// Integrate the split-sum scale/bias for one (cos_v, roughness) pair.
pub fn integrate_brdf(cos_v: f64, roughness: f64, samples: u32) -> (f64, f64) {
    let cos_v = cos_v.clamp(1e-4, 1.0);
    let n = Vec3::z();
    let v = Vec3::new((1.0 - cos_v * cos_v).max(0.0).sqrt(), 0.0, cos_v);
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..samples {
        let h = sample_ggx_half_vector(hammersley(i, samples), n, roughness);
        let l = h * (2.0 * v.dot(&h)) - v;
        let cos_l = l.z;
        if cos_l <= 0.0 {
            continue;
        }
        let cos_h = h.z.max(1e-9);
        let v_dot_h = v.dot(&h).max(1e-9);
        let g = smith_g_from_cos(cos_l, cos_v, roughness);
        // importance weight: pdf(h) = D cos_h, change of measure 4 v.h
        let g_vis = g * v_dot_h / (cos_h * cos_v);
        let fc = (1.0 - v_dot_h).powi(5);
        a += (1.0 - fc) * g_vis;
        b += fc * g_vis;
    }
    (a / samples as f64, b / samples as f64)
}

/// Bake the full table with importance-sampled GGX quadrature.
pub fn bake_brdf_lut(resolution: usize, samples: u32) -> Result<BrdfLut> {
    if resolution < 16 {
        return Err(Error::Config(format!(
            "LUT resolution {resolution} below the minimum of 16"
        )));
    }
    let data: Vec<(f64, f64)> = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let i = idx % resolution;
            let j = idx / resolution;
            let cos_v = (i as f64 + 0.5) / resolution as f64;
            let roughness = (j as f64 + 0.5) / resolution as f64;
            integrate_brdf(cos_v, roughness, samples)
        })
        .collect();
    Ok(BrdfLut { resolution, data })
}

impl BrdfLut {
    /// Bilinear lookup with clamped borders.
    pub fn lookup(&self, cos_v: f64, roughness: f64) -> (f64, f64) {
        let s = self.lookup_with_grad(cos_v, roughness);
        (s.a, s.b)
    }

    pub fn lookup_with_grad(&self, cos_v: f64, roughness: f64) -> LutSample {
        let r = self.resolution;
        let fx = (cos_v * r as f64 - 0.5).clamp(0.0, (r - 1) as f64);
        let fy = (roughness * r as f64 - 0.5).clamp(0.0, (r - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(r - 1);
        let y1 = (y0 + 1).min(r - 1);
        let wx = fx - x0 as f64;
        let wy = fy - y0 as f64;
        let at = |x: usize, y: usize| self.data[y * r + x];
        let (a00, b00) = at(x0, y0);
        let (a10, b10) = at(x1, y0);
        let (a01, b01) = at(x0, y1);
        let (a11, b11) = at(x1, y1);
        let lerp2 = |v00: f64, v10: f64, v01: f64, v11: f64| {
            v00 * (1.0 - wx) * (1.0 - wy) + v10 * wx * (1.0 - wy) + v01 * (1.0 - wx) * wy
                + v11 * wx * wy
        };
        let dfdx = |v00: f64, v10: f64, v01: f64, v11: f64| {
            (v10 - v00) * (1.0 - wy) + (v11 - v01) * wy
        };
        let dfdy = |v00: f64, v10: f64, v01: f64, v11: f64| {
            (v01 - v00) * (1.0 - wx) + (v11 - v10) * wx
        };
        // chain through the texel-coordinate mapping (zero where clamped)
        let kx = if (0.0..((r - 1) as f64)).contains(&(cos_v * r as f64 - 0.5)) {
            r as f64
        } else {
            0.0
        };
        let ky = if (0.0..((r - 1) as f64)).contains(&(roughness * r as f64 - 0.5)) {
            r as f64
        } else {
            0.0
        };
        LutSample {
            a: lerp2(a00, a10, a01, a11),
            b: lerp2(b00, b10, b01, b11),
            da_dcos: dfdx(a00, a10, a01, a11) * kx,
            db_dcos: dfdx(b00, b10, b01, b11) * kx,
            da_drough: dfdy(a00, a10, a01, a11) * ky,
            db_drough: dfdy(b00, b10, b01, b11) * ky,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, (a, b)) in self.data.iter().enumerate() {
            if !(0.0..=1.5).contains(a) || !(0.0..=1.5).contains(b) {
                out.push(format!("LUT entry {i} = ({a}, {b}) outside [0, 1.5]"));
                break;
            }
        }
        out
    }
}
